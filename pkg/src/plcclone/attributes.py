"""Atomic similarity attributes over pairs of model artifacts.

Every attribute maps a pair of artifacts of one type to a value in [0, 1]
and is symmetric and reflexive.  Exact-match attributes return 0 or 1;
ratio attributes return min/max of two counts (1 when both are zero);
structure attributes derive from a tree edit distance over expressions.

Feature extraction is cached per artifact *value* (the model is hashable),
so repeated comparisons of equal artifacts are cheap.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cache
from typing import Callable, NamedTuple, Optional

from . import kernels
from .model import (
    BinaryOp,
    Contact,
    Coil,
    Expression,
    FbdBlock,
    FbdBody,
    FbdNetwork,
    FuncCall,
    LdBody,
    LdNetwork,
    Literal,
    NamedAction,
    Pou,
    SfcBody,
    StBody,
    Statement,
    Step,
    Transition,
    UnaryOp,
    VariableDecl,
    VarRef,
    expression_children,
    statement_expressions,
    statement_sub_statements,
)


class AttributeError_(Exception):
    """Raised when an attribute is applied to artifacts of the wrong type."""


# --------------------------------------------------------------------------
# Expression encoding and tree similarity

TreeEncoding = tuple[tuple, tuple, tuple]  # labels, child index tuples, sizes


def _expr_label(expr: Expression, named: bool) -> str:
    # Statement structure attributes use name-blind variable labels so a
    # pure identifier rename leaves them at 1.0 (renames are the business
    # of the name attributes); transition conditions carry no separate
    # name attribute, so their encoding keeps the identifiers.
    if isinstance(expr, BinaryOp):
        return f"op:{expr.operator}"
    if isinstance(expr, UnaryOp):
        return f"u:{expr.operator}"
    if isinstance(expr, Literal):
        return f"lit:{expr.type_name}:{expr.value}"
    if isinstance(expr, VarRef):
        return f"var:{expr.name}" if named else "var"
    if isinstance(expr, FuncCall):
        return f"call:{expr.name}"
    raise AttributeError_(f"not an expression: {expr!r}")


def _encode_into(expr: Expression, labels: list, kids: list, sizes: list, named: bool) -> int:
    index = len(labels)
    labels.append(_expr_label(expr, named))
    kids.append(None)
    sizes.append(0)
    child_indices = []
    total = 1
    for child in expression_children(expr):
        child_index = _encode_into(child, labels, kids, sizes, named)
        child_indices.append(child_index)
        total += sizes[child_index]
    kids[index] = tuple(child_indices)
    sizes[index] = total
    return index


@cache
def encode_expression(expr: Expression) -> TreeEncoding:
    labels: list = []
    kids: list = []
    sizes: list = []
    _encode_into(expr, labels, kids, sizes, named=False)
    return tuple(labels), tuple(kids), tuple(sizes)


@cache
def encode_expression_named(expr: Expression) -> TreeEncoding:
    labels: list = []
    kids: list = []
    sizes: list = []
    _encode_into(expr, labels, kids, sizes, named=True)
    return tuple(labels), tuple(kids), tuple(sizes)


@cache
def encode_expression_group(exprs: tuple[Expression, ...]) -> TreeEncoding:
    """Encode several expressions under one synthetic root (name-blind)."""
    labels: list = ["exprs"]
    kids: list = [None]
    sizes: list = [0]
    child_indices = []
    total = 1
    for expr in exprs:
        child_index = _encode_into(expr, labels, kids, sizes, named=False)
        child_indices.append(child_index)
        total += sizes[child_index]
    kids[0] = tuple(child_indices)
    sizes[0] = total
    return tuple(labels), tuple(kids), tuple(sizes)


_ted_memo: dict[tuple[int, int], float] = {}


def tree_similarity(enc_a: Optional[TreeEncoding], enc_b: Optional[TreeEncoding]) -> float:
    """1 - editDistance/maxSize over two encoded trees, clamped to [0, 1].

    ``None`` encodes an absent tree: both absent compare as 1, one absent
    as 0.  Encodings come from the value-keyed caches above, so equal trees
    share one tuple object and the identity-keyed memo below is sound.
    """
    if enc_a is None or enc_b is None:
        return 1.0 if enc_a is enc_b else 0.0
    if enc_a is enc_b:
        return 1.0
    key = (id(enc_a), id(enc_b)) if id(enc_a) <= id(enc_b) else (id(enc_b), id(enc_a))
    cached = _ted_memo.get(key)
    if cached is not None:
        return cached
    distance = kernels.tree_distance(*enc_a, *enc_b)
    max_size = max(enc_a[2][0], enc_b[2][0])
    similarity = 1.0 - distance / max_size
    if similarity < 0.0:
        similarity = 0.0
    _ted_memo[key] = similarity
    return similarity


def clear_caches() -> None:
    """Drop all value caches (used when benchmarking kernel backends)."""
    _ted_memo.clear()
    encode_expression.cache_clear()
    encode_expression_named.cache_clear()
    encode_expression_group.cache_clear()
    statement_features.cache_clear()
    pou_counts.cache_clear()
    step_features.cache_clear()
    network_features.cache_clear()
    transition_condition.cache_clear()


# --------------------------------------------------------------------------
# Cached feature extraction


class StmtFeatures(NamedTuple):
    kind: str
    target: Optional[str]
    callee: Optional[str]
    arg_count: int
    condition: Optional[TreeEncoding]
    expressions: TreeEncoding
    literals: tuple[str, ...]
    operators: tuple[str, ...]
    var_refs: tuple[str, ...]


def _walk_expr(expr: Expression, literals: list, operators: list, var_refs: list) -> None:
    if isinstance(expr, Literal):
        literals.append(f"{expr.type_name}:{expr.value}")
    elif isinstance(expr, VarRef):
        var_refs.append(expr.name)
    elif isinstance(expr, BinaryOp):
        operators.append(expr.operator)
    elif isinstance(expr, UnaryOp):
        operators.append(expr.operator)
    for child in expression_children(expr):
        _walk_expr(child, literals, operators, var_refs)


@cache
def statement_features(stmt: Statement) -> StmtFeatures:
    exprs = statement_expressions(stmt)
    literals: list = []
    operators: list = []
    var_refs: list = []
    if stmt.target is not None and stmt.kind == "forStmt":
        var_refs.append(stmt.target)
    for expr in exprs:
        _walk_expr(expr, literals, operators, var_refs)
    for branch in stmt.branches:
        literals.extend(f"{lit.type_name}:{lit.value}" for lit in branch.labels)
    return StmtFeatures(
        kind=stmt.kind,
        target=stmt.target if stmt.kind == "assignment" else None,
        callee=stmt.callee,
        arg_count=len(stmt.args),
        condition=encode_expression(stmt.condition) if stmt.condition is not None else None,
        expressions=encode_expression_group(exprs),
        literals=tuple(literals),
        operators=tuple(operators),
        var_refs=tuple(var_refs),
    )


class PouCounts(NamedTuple):
    st_statements: int
    st_max_depth: int
    sfc_steps: int
    sfc_actions: int
    ld_networks: int
    fbd_networks: int


def _count_statements(statements: tuple[Statement, ...], depth: int) -> tuple[int, int]:
    count = 0
    max_depth = 0
    for stmt in statements:
        count += 1
        max_depth = max(max_depth, depth)
        sub_count, sub_depth = _count_statements(statement_sub_statements(stmt), depth + 1)
        count += sub_count
        max_depth = max(max_depth, sub_depth)
    return count, max_depth


@cache
def pou_counts(pou: Pou) -> PouCounts:
    """Deep per-language element counts over the POU body and action bodies."""
    bodies = [pou.body] + [action.body for action in pou.actions]
    statements = 0
    max_depth = 0
    steps = 0
    ld_networks = 0
    fbd_networks = 0
    for body in bodies:
        if isinstance(body, StBody):
            count, depth = _count_statements(body.statements, 1)
            statements += count
            max_depth = max(max_depth, depth)
        elif isinstance(body, SfcBody):
            steps += len(body.steps)
        elif isinstance(body, LdBody):
            ld_networks += len(body.networks)
        elif isinstance(body, FbdBody):
            fbd_networks += len(body.networks)
            for network in body.networks:
                if network.nested_st is not None:
                    count, depth = _count_statements(network.nested_st.statements, 1)
                    statements += count
                    max_depth = max(max_depth, depth)
    return PouCounts(statements, max_depth, steps, len(pou.actions), ld_networks, fbd_networks)


class StepFeatures(NamedTuple):
    name: str
    is_initial: bool
    associations: tuple[tuple[str, str], ...]


@cache
def step_features(step: Step) -> StepFeatures:
    return StepFeatures(
        step.name,
        step.is_initial,
        tuple((a.qualifier, a.action_ref) for a in step.associations),
    )


class NetworkFeatures(NamedTuple):
    label: Optional[str]
    connection_count: int
    jumps: tuple[str, ...]


@cache
def network_features(network) -> NetworkFeatures:
    if isinstance(network, FbdNetwork):
        return NetworkFeatures(network.label, len(network.connections), network.jumps)
    if isinstance(network, LdNetwork):
        return NetworkFeatures(network.label, len(network.wiring), ())
    raise AttributeError_(f"not a network: {network!r}")


@cache
def transition_condition(transition: Transition) -> Optional[TreeEncoding]:
    if transition.condition is not None:
        return encode_expression_named(transition.condition)
    if transition.body_ref is not None:
        # reference-style condition: compare by referenced body name
        return encode_expression_named(VarRef(f"@{transition.body_ref}"))
    return None


# --------------------------------------------------------------------------
# Attribute definitions


def _equal(a, b) -> float:
    return 1.0 if a == b else 0.0


def _ratio(a: int, b: int) -> float:
    if a == b:
        return 1.0
    return min(a, b) / max(a, b) if max(a, b) > 0 else 1.0


@dataclass(frozen=True)
class AttributeDef:
    """One atomic similarity attribute.

    ``compare`` operates on per-artifact features produced by the type's
    extractor (see FEATURE_EXTRACTORS); the comparison engine extracts
    features once per child scope so pairwise evaluation stays cheap.
    """

    attribute_id: str
    artifact_type: str
    compare: Callable[[object, object], float]
    coarse: bool = False  # count-style attribute used by the coarse metric


def _identity(artifact: object) -> object:
    return artifact


#: per-type feature extraction applied once per compared child
FEATURE_EXTRACTORS: dict[str, Callable[[object], object]] = {}


def _defs() -> list[AttributeDef]:
    defs = [
        # POU
        AttributeDef("pou-name", "pou", lambda x, y: _equal(x.name, y.name)),
        AttributeDef("pou-kind", "pou", lambda x, y: _equal(x.kind, y.kind)),
        AttributeDef("pou-return-type", "pou", lambda x, y: _equal(x.return_type, y.return_type)),
        AttributeDef(
            "st-statement-count", "pou",
            lambda x, y: _ratio(pou_counts(x).st_statements, pou_counts(y).st_statements),
            coarse=True,
        ),
        AttributeDef(
            "st-max-nesting-depth", "pou",
            lambda x, y: _ratio(pou_counts(x).st_max_depth, pou_counts(y).st_max_depth),
            coarse=True,
        ),
        AttributeDef(
            "sfc-step-count", "pou",
            lambda x, y: _ratio(pou_counts(x).sfc_steps, pou_counts(y).sfc_steps),
            coarse=True,
        ),
        AttributeDef(
            "sfc-action-count", "pou",
            lambda x, y: _ratio(pou_counts(x).sfc_actions, pou_counts(y).sfc_actions),
            coarse=True,
        ),
        AttributeDef(
            "ld-network-count", "pou",
            lambda x, y: _ratio(pou_counts(x).ld_networks, pou_counts(y).ld_networks),
            coarse=True,
        ),
        AttributeDef(
            "fbd-network-count", "pou",
            lambda x, y: _ratio(pou_counts(x).fbd_networks, pou_counts(y).fbd_networks),
            coarse=True,
        ),
        # Variable
        AttributeDef("var-name", "variable", lambda x, y: _equal(x.name, y.name)),
        AttributeDef("var-type", "variable", lambda x, y: _equal(x.data_type, y.data_type)),
        AttributeDef("var-section", "variable", lambda x, y: _equal(x.section, y.section)),
        AttributeDef(
            "var-initial-value", "variable", lambda x, y: _equal(x.initial_value, y.initial_value)
        ),
        AttributeDef("identifier-levenshtein", "variable", _identifier_levenshtein),
        # Statement (features: StmtFeatures)
        AttributeDef("statement-kind", "statement", lambda x, y: _equal(x.kind, y.kind)),
        AttributeDef(
            "assignment-target-name", "statement", lambda x, y: _equal(x.target, y.target)
        ),
        AttributeDef(
            "expression-structure", "statement",
            lambda x, y: tree_similarity(x.expressions, y.expressions),
        ),
        AttributeDef("call-name", "statement", lambda x, y: _equal(x.callee, y.callee)),
        AttributeDef(
            "call-arg-count", "statement", lambda x, y: _ratio(x.arg_count, y.arg_count)
        ),
        AttributeDef(
            "condition-structure", "statement",
            lambda x, y: tree_similarity(x.condition, y.condition),
        ),
        AttributeDef("literal-value", "statement", lambda x, y: _equal(x.literals, y.literals)),
        AttributeDef("operator-equal", "statement", lambda x, y: _equal(x.operators, y.operators)),
        AttributeDef("var-ref-name", "statement", lambda x, y: _equal(x.var_refs, y.var_refs)),
        # SFC (step features: StepFeatures; transition features: encoding)
        AttributeDef("step-name", "step", lambda x, y: _equal(x.name, y.name)),
        AttributeDef(
            "step-initial-flag", "step", lambda x, y: _equal(x.is_initial, y.is_initial)
        ),
        AttributeDef(
            "action-qualifier", "step", lambda x, y: _equal(x.associations, y.associations)
        ),
        AttributeDef("transition-condition-structure", "transition", tree_similarity),
        # LD
        AttributeDef("contact-variable", "contact", lambda x, y: _equal(x.variable, y.variable)),
        AttributeDef("contact-negation", "contact", lambda x, y: _equal(x.negated, y.negated)),
        AttributeDef("coil-variable", "coil", lambda x, y: _equal(x.variable, y.variable)),
        AttributeDef(
            "coil-storage-kind", "coil", lambda x, y: _equal(x.storage_kind, y.storage_kind)
        ),
        # FBD / network (network features: NetworkFeatures)
        AttributeDef("block-type-name", "block", lambda x, y: _equal(x.type_name, y.type_name)),
        AttributeDef(
            "block-instance-name", "block", lambda x, y: _equal(x.instance_name, y.instance_name)
        ),
        AttributeDef(
            "block-port-count", "block",
            lambda x, y: _ratio(
                len(x.input_ports) + len(x.output_ports),
                len(y.input_ports) + len(y.output_ports),
            ),
        ),
        AttributeDef("network-label", "network", lambda x, y: _equal(x.label, y.label)),
        AttributeDef(
            "connection-count", "network",
            lambda x, y: _ratio(x.connection_count, y.connection_count),
        ),
        AttributeDef("jump-target", "network", lambda x, y: _equal(x.jumps, y.jumps)),
    ]
    return defs


def _identifier_levenshtein(x: VariableDecl, y: VariableDecl) -> float:
    a, b = x.name, y.name
    if a == b:
        return 1.0
    longest = max(len(a), len(b))
    if longest == 0:
        return 1.0
    return max(0.0, 1.0 - kernels.levenshtein(a, b) / longest)


ATTRIBUTES: dict[str, AttributeDef] = {d.attribute_id: d for d in _defs()}

FEATURE_EXTRACTORS.update(
    {
        "pou": _identity,
        "variable": _identity,
        "statement": statement_features,
        "step": step_features,
        "transition": transition_condition,
        "action": _identity,
        "network": network_features,
        "contact": _identity,
        "coil": _identity,
        "block": _identity,
        "expression": _identity,
        "project": _identity,
    }
)

#: attributes whose mismatch indicates a pure rename (Type II signal)
NAME_ATTRIBUTE_IDS = frozenset(
    {
        "pou-name",
        "var-name",
        "assignment-target-name",
        "var-ref-name",
        "call-name",
        "step-name",
        "block-instance-name",
        "contact-variable",
        "coil-variable",
    }
)

_TYPE_CHECKS = {
    "pou": Pou,
    "variable": VariableDecl,
    "statement": Statement,
    "step": Step,
    "transition": Transition,
    "action": NamedAction,
    "network": (LdNetwork, FbdNetwork),
    "contact": Contact,
    "coil": Coil,
    "block": FbdBlock,
}


def eval_attribute(attribute_id: str, x: object, y: object) -> float:
    """Evaluate one attribute on a pair of artifacts of its type."""
    definition = ATTRIBUTES.get(attribute_id)
    if definition is None:
        raise AttributeError_(f"unknown attribute id {attribute_id!r}")
    expected = _TYPE_CHECKS[definition.artifact_type]
    if not isinstance(x, expected) or not isinstance(y, expected):
        raise AttributeError_(
            f"attribute {attribute_id} applies to {definition.artifact_type} artifacts"
        )
    extract = FEATURE_EXTRACTORS[definition.artifact_type]
    return definition.compare(extract(x), extract(y))
