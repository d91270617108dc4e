import random

import pytest

from plcclone import kernels
from plcclone.kernels import _pure


def build_encoding(rng: random.Random, max_nodes: int = 12):
    """Preorder encoding with correct child indices."""
    labels = []
    kids = []
    sizes = []

    def build(budget: int) -> int:
        index = len(labels)
        labels.append(rng.choice(("a", "b", "c", "d")))
        kids.append([])
        sizes.append(0)
        total = 1
        while budget - total > 0 and rng.random() < 0.55:
            child_index = len(labels)
            kids[index].append(child_index)
            total += build(budget - total)
        kids[index] = tuple(kids[index])
        sizes[index] = total
        return total

    build(max_nodes)
    return tuple(labels), tuple(kids), tuple(sizes)


def test_levenshtein_basics():
    assert _pure.levenshtein("", "") == 0
    assert _pure.levenshtein("abc", "abc") == 0
    assert _pure.levenshtein("abc", "abd") == 1
    assert _pure.levenshtein("kitten", "sitting") == 3
    assert _pure.levenshtein("", "xyz") == 3


def test_tree_distance_identity_and_relabel():
    enc = (("a", "b"), ((1,), ()), (2, 1))
    other = (("a", "c"), ((1,), ()), (2, 1))
    assert _pure.tree_distance(*enc, *enc) == 0
    assert _pure.tree_distance(*enc, *other) == 1


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
def test_compiled_matches_pure_on_random_trees():
    from plcclone.kernels import _speed

    rng = random.Random(11)
    for _ in range(400):
        a = build_encoding(rng)
        b = build_encoding(rng)
        assert _speed.tree_distance(*a, *b) == _pure.tree_distance(*a, *b)


@pytest.mark.skipif("compiled" not in kernels.available_backends(), reason="extension not built")
def test_compiled_matches_pure_levenshtein():
    from plcclone.kernels import _speed

    rng = random.Random(5)
    alphabet = "abcdef"
    for _ in range(500):
        a = "".join(rng.choice(alphabet) for _ in range(rng.randrange(12)))
        b = "".join(rng.choice(alphabet) for _ in range(rng.randrange(12)))
        assert _speed.levenshtein(a, b) == _pure.levenshtein(a, b)


def test_backend_switching():
    original = kernels.backend()
    try:
        assert kernels.set_backend("pure") == "pure"
        assert kernels.backend() == "pure"
        name = kernels.set_backend("auto")
        assert name in kernels.available_backends()
        with pytest.raises(ValueError):
            kernels.set_backend("nonsense")
    finally:
        kernels.set_backend(original)
