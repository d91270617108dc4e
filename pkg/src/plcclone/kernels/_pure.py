"""Pure-Python distance kernels.

Reference implementations of the hot inner-loop routines; the compiled
module in ``_speed.pyx`` mirrors them exactly and must return identical
values for identical inputs.
"""

from __future__ import annotations


def levenshtein(a: str, b: str) -> int:
    """Classic edit distance between two strings."""
    if a == b:
        return 0
    la, lb = len(a), len(b)
    if la == 0:
        return lb
    if lb == 0:
        return la
    previous = list(range(lb + 1))
    for i in range(1, la + 1):
        current = [i] + [0] * lb
        ca = a[i - 1]
        for j in range(1, lb + 1):
            cost = 0 if ca == b[j - 1] else 1
            current[j] = min(previous[j] + 1, current[j - 1] + 1, previous[j - 1] + cost)
        previous = current
    return previous[lb]


def tree_distance(
    labels_a: tuple,
    kids_a: tuple,
    sizes_a: tuple,
    labels_b: tuple,
    kids_b: tuple,
    sizes_b: tuple,
) -> int:
    """Hierarchy-preserving tree edit distance.

    Trees are given in preorder encoding: node labels, per-node child index
    tuples, per-node subtree sizes.  Relabeling a node costs 1; inserting or
    deleting a subtree costs its size.  Children are aligned in order with a
    Levenshtein-style DP, so the distance never exceeds the sum of both tree
    sizes and is zero exactly for equal trees.
    """
    memo: dict[tuple[int, int], int] = {}

    def subtree(ia: int, ib: int) -> int:
        key = (ia, ib)
        cached = memo.get(key)
        if cached is not None:
            return cached
        base = 0 if labels_a[ia] == labels_b[ib] else 1
        ca = kids_a[ia]
        cb = kids_b[ib]
        m, n = len(ca), len(cb)
        if m == 0 and n == 0:
            memo[key] = base
            return base
        row = [0] * (n + 1)
        for j in range(1, n + 1):
            row[j] = row[j - 1] + sizes_b[cb[j - 1]]
        for i in range(1, m + 1):
            diagonal = row[0]
            row[0] = row[0] + sizes_a[ca[i - 1]]
            for j in range(1, n + 1):
                replace = diagonal + subtree(ca[i - 1], cb[j - 1])
                delete = row[j] + sizes_a[ca[i - 1]]
                insert = row[j - 1] + sizes_b[cb[j - 1]]
                diagonal = row[j]
                row[j] = min(replace, delete, insert)
        result = base + row[n]
        memo[key] = result
        return result

    return subtree(0, 0)
