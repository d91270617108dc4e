"""Comparison metric: a weighted hierarchy of options and attributes.

An option selects which child artifacts to compare; an attribute is an
atomic similarity function over one artifact type.  Options may point to a
named sub-metric instead of carrying their own children; pointers are how
language nesting (and statement recursion) is expressed, so cycles through
them are legal and terminate because the model is finite.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Optional

from .attributes import ATTRIBUTES
from .model import ARTIFACT_TYPES

OPTION_TYPES = ("project",) + ARTIFACT_TYPES


class MetricValidationError(Exception):
    """Base class for metric validation failures; names the offending node."""

    def __init__(self, node: str, message: str):
        super().__init__(f"{node}: {message}")
        self.node = node


class UnknownAttributeError(MetricValidationError):
    pass


class WeightRangeError(MetricValidationError):
    pass


class TypePairingError(MetricValidationError):
    pass


class DanglingPointerError(MetricValidationError):
    pass


@dataclass(frozen=True)
class MetricAttribute:
    attribute_id: str
    weight: float


@dataclass(frozen=True)
class MetricOption:
    type_tag: str
    weight: float = 1.0
    options: tuple["MetricOption", ...] = ()
    attributes: tuple[MetricAttribute, ...] = ()
    nested_ref: Optional[str] = None
    label: Optional[str] = None

    def display_label(self) -> str:
        return self.label or self.type_tag


@dataclass(frozen=True)
class Metric:
    name: str
    root: MetricOption
    sub_metrics: tuple[tuple[str, MetricOption], ...] = ()

    def sub_metric(self, name: str) -> MetricOption:
        for key, option in self.sub_metrics:
            if key == name:
                return option
        raise KeyError(name)

    def resolve(self, option: MetricOption) -> MetricOption:
        """Follow a nesting pointer to the option that carries the children."""
        if option.nested_ref is None:
            return option
        return self.sub_metric(option.nested_ref)

    def pou_option(self) -> MetricOption:
        """The option under which POU pairs are compared (intra mode entry)."""
        if self.root.type_tag == "pou":
            return self.root
        for option in self.resolve(self.root).options:
            if option.type_tag == "pou":
                return self.resolve(option)
        raise MetricValidationError(self.name, "metric has no POU option")


# --------------------------------------------------------------------------
# Validation


def validate_metric(metric: Metric) -> None:
    if metric.root.type_tag not in ("project", "pou"):
        raise TypePairingError("root", "root option must have type project or pou")
    names = [name for name, _ in metric.sub_metrics]
    if len(names) != len(set(names)):
        raise MetricValidationError("subMetrics", "duplicate sub-metric names")
    for name, option in metric.sub_metrics:
        _validate_option(metric, option, f"subMetrics/{name}")
    _validate_option(metric, metric.root, "root")


def _validate_option(metric: Metric, option: MetricOption, where: str) -> None:
    if option.type_tag not in OPTION_TYPES:
        raise TypePairingError(where, f"unknown artifact type {option.type_tag!r}")
    if not 0.0 <= option.weight <= 1.0:
        raise WeightRangeError(where, f"option weight {option.weight} outside [0,1]")
    if option.nested_ref is not None:
        if option.options or option.attributes:
            raise DanglingPointerError(
                where, "an option with a nesting pointer must not carry its own children"
            )
        try:
            target = metric.sub_metric(option.nested_ref)
        except KeyError:
            raise DanglingPointerError(
                where, f"nesting pointer to unknown sub-metric {option.nested_ref!r}"
            ) from None
        if target.type_tag != option.type_tag:
            raise TypePairingError(
                where,
                f"pointer target type {target.type_tag!r} does not match {option.type_tag!r}",
            )
        return
    for attribute in option.attributes:
        definition = ATTRIBUTES.get(attribute.attribute_id)
        if definition is None:
            raise UnknownAttributeError(
                where, f"unknown attribute id {attribute.attribute_id!r}"
            )
        if definition.artifact_type != option.type_tag:
            raise TypePairingError(
                where,
                f"attribute {attribute.attribute_id} applies to "
                f"{definition.artifact_type!r}, not {option.type_tag!r}",
            )
        if not 0.0 <= attribute.weight <= 1.0:
            raise WeightRangeError(
                where, f"attribute {attribute.attribute_id} weight {attribute.weight} outside [0,1]"
            )
    total = sum(o.weight for o in option.options) + sum(a.weight for a in option.attributes)
    if (option.options or option.attributes) and total <= 0.0:
        raise WeightRangeError(where, "children weights must sum to a positive value")
    for index, sub_option in enumerate(option.options):
        _validate_option(metric, sub_option, f"{where}/options[{index}]")


# --------------------------------------------------------------------------
# Serialization (JSON document)


def _option_to_dict(option: MetricOption) -> dict:
    node: dict = {"type": option.type_tag, "weight": option.weight}
    if option.label:
        node["label"] = option.label
    if option.nested_ref is not None:
        node["nestedRef"] = option.nested_ref
        return node
    node["options"] = [_option_to_dict(o) for o in option.options]
    node["attributes"] = [
        {"id": a.attribute_id, "weight": a.weight} for a in option.attributes
    ]
    return node


def _option_from_dict(node: dict, where: str) -> MetricOption:
    if not isinstance(node, dict) or "type" not in node:
        raise MetricValidationError(where, "metric node must be an object with a 'type'")
    try:
        weight = float(node.get("weight", 1.0))
    except (TypeError, ValueError):
        raise WeightRangeError(where, f"weight {node.get('weight')!r} is not a number") from None
    return MetricOption(
        type_tag=node["type"],
        weight=weight,
        options=tuple(
            _option_from_dict(sub, f"{where}/options[{i}]")
            for i, sub in enumerate(node.get("options", ()))
        ),
        attributes=tuple(
            MetricAttribute(entry["id"], float(entry.get("weight", 1.0)))
            for entry in node.get("attributes", ())
        ),
        nested_ref=node.get("nestedRef"),
        label=node.get("label"),
    )


def dump_metric(metric: Metric) -> bytes:
    document = {
        "name": metric.name,
        "root": _option_to_dict(metric.root),
        "subMetrics": {name: _option_to_dict(option) for name, option in metric.sub_metrics},
    }
    return (json.dumps(document, indent=2, sort_keys=False) + "\n").encode("utf-8")


def load_metric(data: bytes | str) -> Metric:
    """Parse and fully validate a metric document."""
    try:
        document = json.loads(data)
    except json.JSONDecodeError as exc:
        raise MetricValidationError("document", f"not valid JSON: {exc}") from None
    if not isinstance(document, dict) or "root" not in document:
        raise MetricValidationError("document", "metric document needs a 'root' node")
    metric = Metric(
        name=str(document.get("name", "metric")),
        root=_option_from_dict(document["root"], "root"),
        sub_metrics=tuple(
            (name, _option_from_dict(node, f"subMetrics/{name}"))
            for name, node in document.get("subMetrics", {}).items()
        ),
    )
    validate_metric(metric)
    return metric


def unweighted(metric: Metric) -> Metric:
    """A copy of the metric with every sibling weight equalized (the
    'compare unweighted' mode: only the selection of options and
    attributes matters, not their priorities)."""

    def strip(option: MetricOption) -> MetricOption:
        return MetricOption(
            type_tag=option.type_tag,
            weight=1.0,
            options=tuple(strip(o) for o in option.options),
            attributes=tuple(
                MetricAttribute(a.attribute_id, 1.0) for a in option.attributes
            ),
            nested_ref=option.nested_ref,
            label=option.label,
        )

    return Metric(
        name=f"{metric.name}-unweighted",
        root=strip(metric.root),
        sub_metrics=tuple((name, strip(option)) for name, option in metric.sub_metrics),
    )


# --------------------------------------------------------------------------
# Builtin metrics


def _attr(attribute_id: str, weight: float) -> MetricAttribute:
    return MetricAttribute(attribute_id, weight)


def _pointer(type_tag: str, weight: float, ref: str, label: str) -> MetricOption:
    return MetricOption(type_tag=type_tag, weight=weight, nested_ref=ref, label=label)


_VARIABLE_ATTRIBUTES = (
    _attr("var-name", 0.3),
    _attr("var-type", 0.3),
    _attr("var-section", 0.2),
    _attr("var-initial-value", 0.2),
)

#: pointer options that dispatch a body-owning artifact into per-language
#: sub-metrics; inapplicable languages compare empty child sets
_IMPLEMENTATION_POINTERS = (
    _pointer("statement", 0.40, "st-statements", "ST implementation"),
    _pointer("step", 0.25, "sfc-steps", "SFC steps"),
    _pointer("transition", 0.15, "sfc-transitions", "SFC transitions"),
    _pointer("network", 0.40, "diagram-networks", "LD/FBD networks"),
)


def _fine_sub_metrics() -> tuple[tuple[str, MetricOption], ...]:
    st = MetricOption(
        type_tag="statement",
        weight=1.0,
        label="ST statements",
        attributes=(
            _attr("statement-kind", 0.15),
            _attr("assignment-target-name", 0.15),
            _attr("expression-structure", 0.25),
            _attr("condition-structure", 0.15),
            _attr("call-name", 0.10),
            _attr("call-arg-count", 0.05),
            _attr("literal-value", 0.05),
            _attr("operator-equal", 0.05),
            _attr("var-ref-name", 0.05),
        ),
        options=(_pointer("statement", 0.30, "st-statements", "nested statements"),),
    )
    steps = MetricOption(
        type_tag="step",
        weight=1.0,
        label="SFC steps",
        attributes=(
            _attr("step-name", 0.4),
            _attr("step-initial-flag", 0.2),
            _attr("action-qualifier", 0.4),
        ),
    )
    transitions = MetricOption(
        type_tag="transition",
        weight=1.0,
        label="SFC transitions",
        attributes=(_attr("transition-condition-structure", 1.0),),
    )
    networks = MetricOption(
        type_tag="network",
        weight=1.0,
        label="LD/FBD networks",
        attributes=(
            _attr("network-label", 0.10),
            _attr("connection-count", 0.20),
            _attr("jump-target", 0.10),
        ),
        options=(
            MetricOption(
                type_tag="contact",
                weight=0.30,
                label="contacts",
                attributes=(_attr("contact-variable", 0.6), _attr("contact-negation", 0.4)),
            ),
            MetricOption(
                type_tag="coil",
                weight=0.30,
                label="coils",
                attributes=(_attr("coil-variable", 0.6), _attr("coil-storage-kind", 0.4)),
            ),
            MetricOption(
                type_tag="block",
                weight=0.40,
                label="blocks",
                attributes=(
                    _attr("block-type-name", 0.5),
                    _attr("block-instance-name", 0.3),
                    _attr("block-port-count", 0.2),
                ),
            ),
            _pointer("statement", 0.40, "st-statements", "nested ST"),
        ),
    )
    return (
        ("st-statements", st),
        ("sfc-steps", steps),
        ("sfc-transitions", transitions),
        ("diagram-networks", networks),
    )


def builtin_metric(kind: str) -> Metric:
    """The two shipped metrics: ``coarse`` (count attributes only) and
    ``fine`` (per-artifact attributes plus nesting pointers)."""
    if kind == "fine":
        pou = MetricOption(
            type_tag="pou",
            weight=0.8,
            label="POUs",
            attributes=(
                _attr("pou-name", 0.10),
                _attr("pou-kind", 0.05),
                _attr("pou-return-type", 0.05),
            ),
            options=(
                MetricOption(
                    type_tag="variable",
                    weight=0.20,
                    label="POU variables",
                    attributes=_VARIABLE_ATTRIBUTES,
                ),
                MetricOption(
                    type_tag="action",
                    weight=0.30,
                    label="actions",
                    options=_IMPLEMENTATION_POINTERS,
                ),
            )
            + _IMPLEMENTATION_POINTERS,
        )
        root = MetricOption(
            type_tag="project",
            weight=1.0,
            label="project",
            options=(
                MetricOption(
                    type_tag="variable",
                    weight=0.2,
                    label="global variables",
                    attributes=_VARIABLE_ATTRIBUTES,
                ),
                pou,
            ),
        )
        metric = Metric(name="fine", root=root, sub_metrics=_fine_sub_metrics())
    elif kind == "coarse":
        pou = MetricOption(
            type_tag="pou",
            weight=0.8,
            label="POUs",
            attributes=(
                _attr("st-statement-count", 1.0),
                _attr("st-max-nesting-depth", 1.0),
                _attr("sfc-step-count", 1.0),
                _attr("sfc-action-count", 1.0),
                _attr("ld-network-count", 1.0),
                _attr("fbd-network-count", 1.0),
            ),
            options=(
                MetricOption(type_tag="variable", weight=1.0, label="POU variables"),
                MetricOption(type_tag="action", weight=1.0, label="actions"),
            ),
        )
        root = MetricOption(
            type_tag="project",
            weight=1.0,
            label="project",
            options=(
                MetricOption(type_tag="variable", weight=0.2, label="global variables"),
                pou,
            ),
        )
        metric = Metric(name="coarse", root=root, sub_metrics=())
    else:
        raise ValueError(f"unknown builtin metric {kind!r} (expected 'coarse' or 'fine')")
    validate_metric(metric)
    return metric
