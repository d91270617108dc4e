"""Greedy approximation of a maximum-weight independent edge set.

Each option in the similarity tree yields a complete weighted bipartite
graph over the child artifacts of both sides; this module filters it down
to a matching.  The greedy rule sorts edges by descending similarity with
a total lexicographic tie-break, so results are independent of input order
and mirror under exchanging the two sides.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Hashable, Iterable, Sequence

Edge = tuple[Hashable, Hashable, float]


@dataclass(frozen=True)
class MatchResult:
    selected: tuple[Edge, ...]
    unmatched_left: tuple[Hashable, ...]
    unmatched_right: tuple[Hashable, ...]


def greedy_match(
    pairs: Iterable[Edge],
    left: Sequence[Hashable] = (),
    right: Sequence[Hashable] = (),
) -> MatchResult:
    """Select an independent edge set greedily by similarity.

    ``left``/``right`` list all elements per side (defaults to the endpoint
    sets of ``pairs``); elements never selected come back as unmatched.
    Edges with similarity 0 are never selected, so fully dissimilar
    elements stay unmatched.
    """
    edges = list(pairs)
    left_elements = list(left) if left else _endpoint_order(edges, 0)
    right_elements = list(right) if right else _endpoint_order(edges, 1)
    edges.sort(key=lambda edge: (-edge[2], edge[0], edge[1]))
    used_left: set[Hashable] = set()
    used_right: set[Hashable] = set()
    selected: list[Edge] = []
    for left_key, right_key, similarity in edges:
        if similarity <= 0.0:
            break
        if left_key in used_left or right_key in used_right:
            continue
        used_left.add(left_key)
        used_right.add(right_key)
        selected.append((left_key, right_key, similarity))
    return MatchResult(
        selected=tuple(selected),
        unmatched_left=tuple(e for e in left_elements if e not in used_left),
        unmatched_right=tuple(e for e in right_elements if e not in used_right),
    )


def _endpoint_order(edges: list[Edge], side: int) -> list[Hashable]:
    seen: dict[Hashable, None] = {}
    for edge in edges:
        seen.setdefault(edge[side], None)
    return list(seen)
