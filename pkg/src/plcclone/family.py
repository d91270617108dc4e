"""Family model construction and reporting.

A propagated similarity tree is folded into a family model: matched pairs
become nodes present in both variants and are mandatory (similarity >= λ)
or alternative (0 < similarity < λ); unmatched artifacts become optional
nodes present on one side only.  Reports are emitted as JSON, as an
indented text tree using the markers ``!`` (mandatory), ``?`` (optional)
and ``<->`` (alternative), or as a DOT graph.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Iterator, Optional

from .attributes import NAME_ATTRIBUTE_IDS
from .compare import ArtifactPairNode, OptionNode
from .model import ArtifactPath, artifact_label, resolve_path

MANDATORY = "mandatory"
ALTERNATIVE = "alternative"
OPTIONAL = "optional"

DEFAULT_LAMBDA = 1.0
DEFAULT_CLONE_THRESHOLD = 0.70


class FamilyModelError(Exception):
    pass


@dataclass
class FmNode:
    name: str
    category: str  # mandatory | alternative | optional
    origin: str  # both | leftOnly | rightOnly
    similarity: float
    type_tag: str
    left_ref: Optional[str] = None
    right_ref: Optional[str] = None
    children: list["FmNode"] = field(default_factory=list)

    def walk(self) -> Iterator["FmNode"]:
        yield self
        for child in self.children:
            yield from child.walk()


@dataclass
class FamilyModel:
    root: FmNode
    lam: float

    def walk(self) -> Iterator[FmNode]:
        return self.root.walk()


def _categorize(similarity: float, lam: float) -> str:
    return MANDATORY if similarity >= lam else ALTERNATIVE


def build_family_model(
    root: ArtifactPairNode,
    lam: float,
    left_root: object,
    right_root: object,
) -> FamilyModel:
    """Fold a matched, propagated similarity tree into a family model.

    ``left_root``/``right_root`` are the compared artifacts (projects or
    POUs); they are only needed to resolve display labels.
    """
    if not 0.0 < lam <= 1.0:
        raise FamilyModelError(f"lambda {lam} outside (0, 1]")
    if root.similarity is None:
        raise FamilyModelError("similarity tree must be propagated first")
    return FamilyModel(root=_pair_to_node(root, lam, left_root, right_root), lam=lam)


def _label(root: object, path: ArtifactPath) -> str:
    return artifact_label(resolve_path(root, path))


def _pair_to_node(
    pair: ArtifactPairNode, lam: float, left_root: object, right_root: object
) -> FmNode:
    node = FmNode(
        name=_label(left_root, pair.x),
        category=_categorize(pair.similarity, lam),
        origin="both",
        similarity=pair.similarity,
        type_tag=pair.type_tag,
        left_ref=str(pair.x),
        right_ref=str(pair.y),
    )
    for option_node in pair.option_children():
        node.children.extend(_option_to_nodes(option_node, lam, left_root, right_root))
    return node


def _option_to_nodes(
    option_node: OptionNode, lam: float, left_root: object, right_root: object
) -> list[FmNode]:
    if option_node.match is None:
        raise FamilyModelError("similarity tree must be propagated first")
    nodes = []
    matched = set(option_node.matched_indices or ())
    for index in sorted(matched):
        nodes.append(_pair_to_node(option_node.children[index], lam, left_root, right_root))
    for path in option_node.match.unmatched_left:
        nodes.append(
            FmNode(
                name=_label(left_root, path),
                category=OPTIONAL,
                origin="leftOnly",
                similarity=0.0,
                type_tag=option_node.type_tag,
                left_ref=str(path),
            )
        )
    for path in option_node.match.unmatched_right:
        nodes.append(
            FmNode(
                name=_label(right_root, path),
                category=OPTIONAL,
                origin="rightOnly",
                similarity=0.0,
                type_tag=option_node.type_tag,
                right_ref=str(path),
            )
        )
    return nodes


# --------------------------------------------------------------------------
# Clone candidates


IDENTICAL = "identical"
RENAMED_ONLY = "renamedOnly"
STRUCTURAL = "structural"


@dataclass(frozen=True)
class CloneCandidate:
    left_pou: str
    right_pou: str
    similarity: float
    label: str  # identical | renamedOnly | structural


def _collect_differences(pair: ArtifactPairNode) -> tuple[set[str], bool]:
    """Attribute ids scoring < 1 in the subtree, plus an unmatched flag."""
    attribute_ids: set[str] = set()
    unmatched = False
    for attribute in pair.attribute_children():
        if attribute.similarity < 1.0:
            attribute_ids.add(attribute.attribute_id)
    for option_node in pair.option_children():
        if option_node.match is not None and (
            option_node.match.unmatched_left or option_node.match.unmatched_right
        ):
            unmatched = True
        for index in option_node.matched_indices or ():
            sub_ids, sub_unmatched = _collect_differences(option_node.children[index])
            attribute_ids |= sub_ids
            unmatched = unmatched or sub_unmatched
    return attribute_ids, unmatched


def classify_pair(pair: ArtifactPairNode) -> str:
    if pair.similarity == 1.0:
        return IDENTICAL
    attribute_ids, unmatched = _collect_differences(pair)
    if not unmatched and attribute_ids and attribute_ids <= NAME_ATTRIBUTE_IDS:
        return RENAMED_ONLY
    return STRUCTURAL


def classify_clones(
    pou_pairs: list[ArtifactPairNode],
    reporting_threshold: float = DEFAULT_CLONE_THRESHOLD,
) -> list[CloneCandidate]:
    """Clone candidates among propagated POU pairs, best first."""
    candidates = []
    for pair in pou_pairs:
        if pair.similarity is None:
            raise FamilyModelError("similarity tree must be propagated first")
        if pair.similarity >= reporting_threshold:
            candidates.append(
                CloneCandidate(
                    left_pou=str(pair.x),
                    right_pou=str(pair.y),
                    similarity=pair.similarity,
                    label=classify_pair(pair),
                )
            )
    candidates.sort(key=lambda c: (-c.similarity, c.left_pou, c.right_pou))
    return candidates


# --------------------------------------------------------------------------
# Report emission

_MARKERS = {MANDATORY: "!", OPTIONAL: "?", ALTERNATIVE: "<->"}
_SIDES = {"leftOnly": " (left only)", "rightOnly": " (right only)", "both": ""}

FORMATS = ("structuredDoc", "textTree", "graphDoc")


def _node_to_dict(node: FmNode) -> dict:
    return {
        "name": node.name,
        "category": node.category,
        "origin": node.origin,
        "similarity": round(node.similarity, 6),
        "type": node.type_tag,
        "sourceRefs": {"left": node.left_ref, "right": node.right_ref},
        "children": [_node_to_dict(child) for child in node.children],
    }


def _node_from_dict(data: dict) -> FmNode:
    return FmNode(
        name=data["name"],
        category=data["category"],
        origin=data["origin"],
        similarity=float(data["similarity"]),
        type_tag=data["type"],
        left_ref=data["sourceRefs"]["left"],
        right_ref=data["sourceRefs"]["right"],
        children=[_node_from_dict(child) for child in data["children"]],
    )


def emit_report(fm: FamilyModel, output_format: str) -> bytes:
    if output_format == "structuredDoc":
        document = {"schema": "plcclone-family/1", "lambda": fm.lam, "root": _node_to_dict(fm.root)}
        return (json.dumps(document, indent=2) + "\n").encode("utf-8")
    if output_format == "textTree":
        lines = [f"family model (lambda={fm.lam:.4f})"]
        _emit_text(fm.root, 0, lines)
        return ("\n".join(lines) + "\n").encode("utf-8")
    if output_format == "graphDoc":
        return _emit_dot(fm)
    raise FamilyModelError(f"unknown report format {output_format!r}; expected one of {FORMATS}")


def parse_report(data: bytes | str) -> FamilyModel:
    document = json.loads(data)
    return FamilyModel(root=_node_from_dict(document["root"]), lam=float(document["lambda"]))


def _emit_text(node: FmNode, depth: int, lines: list[str]) -> None:
    marker = _MARKERS[node.category]
    lines.append(
        f"{'  ' * depth}{marker} {node.name} [{node.similarity:.4f}]{_SIDES[node.origin]}"
    )
    for child in node.children:
        _emit_text(child, depth + 1, lines)


_DOT_COLORS = {MANDATORY: "palegreen", ALTERNATIVE: "khaki", OPTIONAL: "lightblue"}


def _emit_dot(fm: FamilyModel) -> bytes:
    lines = ["digraph family_model {", "  node [shape=box, style=filled];"]
    counter = 0

    def visit(node: FmNode) -> str:
        nonlocal counter
        identifier = f"n{counter}"
        counter += 1
        text = node.name.replace("\\", "\\\\").replace('"', '\\"')
        lines.append(
            f'  {identifier} [label="{_MARKERS[node.category]} {text}\\n{node.similarity:.4f}", '
            f"fillcolor={_DOT_COLORS[node.category]}];"
        )
        for child in node.children:
            child_id = visit(child)
            lines.append(f"  {identifier} -> {child_id};")
        return identifier

    visit(fm.root)
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")
