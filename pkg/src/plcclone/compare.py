"""Recursive, metric-driven pairwise comparison producing a similarity tree.

The forward pass (:func:`compare`) mirrors the comparison algorithm: for
every sub-option all child pairs are compared recursively and attribute
leaves are evaluated.  The backward pass (:func:`propagate`) matches each
option's pair set bottom-up into an independent edge set and folds weighted
similarities upward.

Similarity semantics:

* attribute leaves hold the raw attribute value in [0, 1];
* an option's similarity is the matched pair sum divided by the larger
  child count (1.0 when both sides are empty — the option is then marked
  inapplicable and excluded from its parent's weighted combination, which
  keeps self-similarity at exactly 1.0 and prevents languages absent from
  both artifacts from inflating the score);
* a pair's similarity is the weight-normalized sum over its attribute
  children and applicable option children (1.0 if none apply).
"""

from __future__ import annotations

import itertools
from collections import Counter
from dataclasses import dataclass, field
from typing import Iterator, Optional, Union

from .attributes import ATTRIBUTES, FEATURE_EXTRACTORS
from .matching import MatchResult, greedy_match
from .metrics import Metric, MetricOption
from .model import ArtifactPath, Project, ROOT_PATH, children_with_keys

__all__ = [
    "ArtifactPairNode",
    "AttributeNode",
    "CompareError",
    "CompareStats",
    "OptionNode",
    "compare",
    "compare_inter",
    "compare_intra",
    "compare_pair",
    "count_pairs",
    "intra_pou_option",
    "iter_pair_nodes",
    "propagate",
]


class CompareError(Exception):
    pass


@dataclass
class AttributeNode:
    attribute_id: str
    weight: float
    similarity: float


@dataclass
class OptionNode:
    type_tag: str
    label: str
    weight: float
    left_paths: tuple[ArtifactPath, ...]
    right_paths: tuple[ArtifactPath, ...]
    children: list["ArtifactPairNode"] = field(default_factory=list)
    similarity: Optional[float] = None
    match: Optional[MatchResult] = None
    matched_indices: Optional[tuple[int, ...]] = None

    @property
    def left_count(self) -> int:
        return len(self.left_paths)

    @property
    def right_count(self) -> int:
        return len(self.right_paths)

    @property
    def applicable(self) -> bool:
        return bool(self.left_paths or self.right_paths)


@dataclass
class ArtifactPairNode:
    type_tag: str
    x: ArtifactPath
    y: ArtifactPath
    children: list[Union[OptionNode, AttributeNode]] = field(default_factory=list)
    similarity: Optional[float] = None

    def option_children(self) -> list[OptionNode]:
        return [c for c in self.children if isinstance(c, OptionNode)]

    def attribute_children(self) -> list[AttributeNode]:
        return [c for c in self.children if isinstance(c, AttributeNode)]


# --------------------------------------------------------------------------
# Forward pass


def compare(
    x: object,
    y: object,
    option: MetricOption,
    metric: Optional[Metric] = None,
    x_path: ArtifactPath = ROOT_PATH,
    y_path: ArtifactPath = ROOT_PATH,
) -> ArtifactPairNode:
    """Build the similarity tree for one artifact pair (attributes only
    evaluated; option and pair similarities stay unset until propagation)."""
    if metric is None:
        metric = Metric(name="anonymous", root=option)
    extract = FEATURE_EXTRACTORS[option.type_tag]
    return _compare_node(x, y, extract(x), extract(y), option, metric, x_path, y_path)


def _compare_node(
    x: object,
    y: object,
    fx: object,
    fy: object,
    option: MetricOption,
    metric: Metric,
    x_path: ArtifactPath,
    y_path: ArtifactPath,
) -> ArtifactPairNode:
    resolved = metric.resolve(option)
    node = ArtifactPairNode(type_tag=option.type_tag, x=x_path, y=y_path)
    for sub_option in resolved.options:
        left = children_with_keys(x, sub_option.type_tag)
        right = children_with_keys(y, sub_option.type_tag)
        extract = FEATURE_EXTRACTORS[sub_option.type_tag]
        left_features = [extract(c) for _, c in left]
        right_features = [extract(c) for _, c in right]
        option_node = OptionNode(
            type_tag=sub_option.type_tag,
            label=sub_option.display_label(),
            weight=sub_option.weight,
            left_paths=tuple(x_path.child(sub_option.type_tag, k) for k, _ in left),
            right_paths=tuple(y_path.child(sub_option.type_tag, k) for k, _ in right),
        )
        for (li, (kx, cx)), (ri, (ky, cy)) in itertools.product(enumerate(left), enumerate(right)):
            option_node.children.append(
                _compare_node(
                    cx,
                    cy,
                    left_features[li],
                    right_features[ri],
                    sub_option,
                    metric,
                    option_node.left_paths[li],
                    option_node.right_paths[ri],
                )
            )
        node.children.append(option_node)
    for attribute in resolved.attributes:
        definition = ATTRIBUTES[attribute.attribute_id]
        node.children.append(
            AttributeNode(
                attribute_id=attribute.attribute_id,
                weight=attribute.weight,
                similarity=definition.compare(fx, fy),
            )
        )
    return node


# --------------------------------------------------------------------------
# Backward pass: matching + upward propagation


def propagate(node: ArtifactPairNode) -> ArtifactPairNode:
    """Fill in option and pair similarities bottom-up (matching included)."""
    weight_total = 0.0
    weighted_sum = 0.0
    for child in node.children:
        if isinstance(child, AttributeNode):
            weight_total += child.weight
            weighted_sum += child.weight * child.similarity
            continue
        _propagate_option(child)
        if child.applicable:
            weight_total += child.weight
            weighted_sum += child.weight * child.similarity
    node.similarity = weighted_sum / weight_total if weight_total > 0.0 else 1.0
    return node


def _propagate_option(option_node: OptionNode) -> None:
    for pair in option_node.children:
        propagate(pair)
    if option_node.left_count == 0 and option_node.right_count == 0:
        option_node.similarity = 1.0
        option_node.match = MatchResult((), (), ())
        option_node.matched_indices = ()
        return
    edges = [(pair.x, pair.y, pair.similarity) for pair in option_node.children]
    result = greedy_match(edges, option_node.left_paths, option_node.right_paths)
    selected = {(lx, ry) for lx, ry, _ in result.selected}
    option_node.match = result
    option_node.matched_indices = tuple(
        index
        for index, pair in enumerate(option_node.children)
        if (pair.x, pair.y) in selected
    )
    matched_sum = sum(similarity for _, _, similarity in result.selected)
    option_node.similarity = matched_sum / max(option_node.left_count, option_node.right_count)


def compare_pair(
    x: object,
    y: object,
    option: MetricOption,
    metric: Optional[Metric] = None,
    x_path: ArtifactPath = ROOT_PATH,
    y_path: ArtifactPath = ROOT_PATH,
) -> ArtifactPairNode:
    """Compare and propagate in one go."""
    return propagate(compare(x, y, option, metric, x_path, y_path))


# --------------------------------------------------------------------------
# Entry points


def compare_inter(a: Project, b: Project, metric: Metric) -> ArtifactPairNode:
    """Compare two project variants under the metric's root option."""
    if metric.root.type_tag == "pou":
        raise CompareError("inter-variant comparison needs a project-rooted metric")
    return compare_pair(a, b, metric.root, metric)


def intra_pou_option(metric: Metric) -> MetricOption:
    """POU option for in-project clone search.

    POU names are unique within one project, so any clone necessarily has a
    different name; the pou-name attribute is dropped to compare content
    only (a verbatim copy then scores exactly 1).
    """
    option = metric.pou_option()
    return MetricOption(
        type_tag=option.type_tag,
        weight=option.weight,
        options=option.options,
        attributes=tuple(a for a in option.attributes if a.attribute_id != "pou-name"),
        label=option.label,
    )


def _intra_pair(project: Project, metric: Metric, left: int, right: int) -> ArtifactPairNode:
    option = intra_pou_option(metric)
    pou_a, pou_b = project.pous[left], project.pous[right]
    return compare_pair(
        pou_a,
        pou_b,
        option,
        metric,
        ROOT_PATH.child("pou", pou_a.name),
        ROOT_PATH.child("pou", pou_b.name),
    )


def compare_intra(project: Project, metric: Metric, jobs: int = 1) -> list[ArtifactPairNode]:
    """One propagated root pair per unordered POU pair (self-pairs excluded).

    With ``jobs > 1`` the independent pairs run in worker processes; the
    result list is identical for any job count.
    """
    indices = list(itertools.combinations(range(len(project.pous)), 2))
    if jobs > 1 and len(indices) > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [pool.submit(_intra_pair, project, metric, i, j) for i, j in indices]
            return [future.result() for future in futures]
    return [_intra_pair(project, metric, i, j) for i, j in indices]


# --------------------------------------------------------------------------
# Pair statistics


@dataclass
class CompareStats:
    pair_counts: Counter = field(default_factory=Counter)
    attribute_evaluations: int = 0

    @property
    def total_pairs(self) -> int:
        return sum(self.pair_counts.values())

    def merge(self, other: "CompareStats") -> None:
        self.pair_counts.update(other.pair_counts)
        self.attribute_evaluations += other.attribute_evaluations


def iter_pair_nodes(root: ArtifactPairNode) -> Iterator[ArtifactPairNode]:
    yield root
    for option_node in root.option_children():
        for pair in option_node.children:
            yield from iter_pair_nodes(pair)


def count_pairs(root: ArtifactPairNode) -> CompareStats:
    """Pair counts per artifact type plus total attribute evaluations."""
    stats = CompareStats()
    for pair in iter_pair_nodes(root):
        stats.pair_counts[pair.type_tag] += 1
        stats.attribute_evaluations += len(pair.attribute_children())
    return stats


# --------------------------------------------------------------------------
# Allocation-light fused comparison (used by the benchmark)


def _child_sort_key(key) -> tuple:
    return (0, key, "") if isinstance(key, int) else (1, -1, key)


def compare_light(
    x: object,
    y: object,
    option: MetricOption,
    metric: Metric,
    stats: CompareStats,
) -> float:
    """Similarity of one pair without building the tree.

    Produces exactly the same value as compare + propagate; only the
    similarity and the pair statistics are retained.
    """
    extract = FEATURE_EXTRACTORS[option.type_tag]
    return _compare_light_node(x, y, extract(x), extract(y), option, metric, stats)


def _compare_light_node(
    x: object,
    y: object,
    fx: object,
    fy: object,
    option: MetricOption,
    metric: Metric,
    stats: CompareStats,
) -> float:
    resolved = metric.resolve(option)
    stats.pair_counts[option.type_tag] += 1
    stats.attribute_evaluations += len(resolved.attributes)
    # accumulate options first, then attributes: the same float addition
    # order the tree-building engine uses, so both produce identical values
    weight_total = 0.0
    weighted_sum = 0.0
    for sub_option in resolved.options:
        left = children_with_keys(x, sub_option.type_tag)
        right = children_with_keys(y, sub_option.type_tag)
        if not left and not right:
            continue
        extract = FEATURE_EXTRACTORS[sub_option.type_tag]
        left_keys = [_child_sort_key(k) for k, _ in left]
        right_keys = [_child_sort_key(k) for k, _ in right]
        left_features = [extract(c) for _, c in left]
        right_features = [extract(c) for _, c in right]
        edges = []
        for li, (_, cx) in enumerate(left):
            for ri, (_, cy) in enumerate(right):
                similarity = _compare_light_node(
                    cx, cy, left_features[li], right_features[ri], sub_option, metric, stats
                )
                edges.append((-similarity, left_keys[li], right_keys[ri], li, ri))
        edges.sort()
        used_left: set[int] = set()
        used_right: set[int] = set()
        matched_sum = 0.0
        for negated, _, _, li, ri in edges:
            if negated >= 0.0:
                break
            if li in used_left or ri in used_right:
                continue
            used_left.add(li)
            used_right.add(ri)
            matched_sum -= negated
        option_similarity = matched_sum / max(len(left), len(right))
        weight_total += sub_option.weight
        weighted_sum += sub_option.weight * option_similarity
    for attribute in resolved.attributes:
        definition = ATTRIBUTES[attribute.attribute_id]
        weight_total += attribute.weight
        weighted_sum += attribute.weight * definition.compare(fx, fy)
    return weighted_sum / weight_total if weight_total > 0.0 else 1.0


def compare_inter_light(a: Project, b: Project, metric: Metric) -> tuple[float, CompareStats]:
    stats = CompareStats()
    similarity = compare_light(a, b, metric.root, metric, stats)
    return similarity, stats
