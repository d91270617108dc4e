"""In-memory model of an IEC 61131-3 project.

The model is a tree of frozen dataclasses rooted at :class:`Project`.  All
collections are tuples, so every node is hashable and structurally
comparable; two sources that differ only in whitespace or comments parse to
equal values.  Nodes never carry parent links; positions are expressed as
:class:`ArtifactPath` values.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator, Optional, Union

POU_KINDS = frozenset({"program", "function", "functionBlock"})
VAR_SECTIONS = frozenset({"input", "output", "inOut", "local", "global", "temp"})
STATEMENT_KINDS = frozenset({"ifStmt", "caseStmt", "forStmt", "whileStmt", "assignment", "call"})
BINARY_OPERATORS = frozenset(
    {"AND", "OR", "XOR", "=", "<>", "<", "<=", ">", ">=", "+", "-", "*", "/", "MOD", "**"}
)
UNARY_OPERATORS = frozenset({"NOT", "-"})
COIL_STORAGE_KINDS = frozenset({"normal", "set", "reset"})
ACTION_QUALIFIERS = frozenset({"N", "P", "entry", "exit"})

#: artifact type tags understood by childrenOf / the comparison metric
ARTIFACT_TYPES = (
    "pou",
    "variable",
    "statement",
    "step",
    "transition",
    "action",
    "network",
    "contact",
    "coil",
    "block",
    "expression",
)


class ModelError(Exception):
    """Raised when a model value violates a structural invariant."""


# --------------------------------------------------------------------------
# Expressions


@dataclass(frozen=True, slots=True)
class Literal:
    value: str
    type_name: str


@dataclass(frozen=True, slots=True)
class VarRef:
    name: str


@dataclass(frozen=True, slots=True)
class UnaryOp:
    operator: str
    operand: "Expression"


@dataclass(frozen=True, slots=True)
class BinaryOp:
    operator: str
    left: "Expression"
    right: "Expression"


@dataclass(frozen=True, slots=True)
class FuncCall:
    name: str
    args: tuple["Expression", ...]


Expression = Union[Literal, VarRef, UnaryOp, BinaryOp, FuncCall]


def expression_children(expr: Expression) -> tuple[Expression, ...]:
    if isinstance(expr, BinaryOp):
        return (expr.left, expr.right)
    if isinstance(expr, UnaryOp):
        return (expr.operand,)
    if isinstance(expr, FuncCall):
        return expr.args
    return ()


# --------------------------------------------------------------------------
# Structured Text


@dataclass(frozen=True, slots=True)
class CaseBranch:
    labels: tuple[Literal, ...]
    body: tuple["Statement", ...]


@dataclass(frozen=True, slots=True)
class Statement:
    """One ST statement.  ``kind`` selects which optional fields apply.

    assignment: target, value.  call: callee, args.  ifStmt/whileStmt:
    condition, children (+ else_children for if).  forStmt: target (loop
    variable), loop_from/loop_to/loop_by, children.  caseStmt: condition
    (selector), branches, else_children.
    """

    kind: str
    condition: Optional[Expression] = None
    target: Optional[str] = None
    value: Optional[Expression] = None
    callee: Optional[str] = None
    args: tuple[Expression, ...] = ()
    children: tuple["Statement", ...] = ()
    else_children: tuple["Statement", ...] = ()
    branches: tuple[CaseBranch, ...] = ()
    loop_from: Optional[Expression] = None
    loop_to: Optional[Expression] = None
    loop_by: Optional[Expression] = None


def statement_sub_statements(stmt: Statement) -> tuple[Statement, ...]:
    """Direct child statements in model order: body, case branches, else."""
    parts: list[Statement] = list(stmt.children)
    for branch in stmt.branches:
        parts.extend(branch.body)
    parts.extend(stmt.else_children)
    return tuple(parts)


def statement_expressions(stmt: Statement) -> tuple[Expression, ...]:
    """Direct expressions of a statement (no descent into sub-statements)."""
    parts: list[Expression] = []
    if stmt.condition is not None:
        parts.append(stmt.condition)
    for e in (stmt.loop_from, stmt.loop_to, stmt.loop_by):
        if e is not None:
            parts.append(e)
    if stmt.value is not None:
        parts.append(stmt.value)
    parts.extend(stmt.args)
    return tuple(parts)


@dataclass(frozen=True, slots=True)
class StBody:
    statements: tuple[Statement, ...] = ()


# --------------------------------------------------------------------------
# Sequential Function Chart


@dataclass(frozen=True, slots=True)
class ActionAssociation:
    qualifier: str
    action_ref: str


@dataclass(frozen=True, slots=True)
class Step:
    name: str
    is_initial: bool = False
    associations: tuple[ActionAssociation, ...] = ()


@dataclass(frozen=True, slots=True)
class Transition:
    from_steps: tuple[str, ...]
    to_steps: tuple[str, ...]
    condition: Optional[Expression] = None
    body_ref: Optional[str] = None


@dataclass(frozen=True, slots=True)
class SfcBody:
    steps: tuple[Step, ...] = ()
    transitions: tuple[Transition, ...] = ()


# --------------------------------------------------------------------------
# Ladder Diagram / Function Block Diagram


@dataclass(frozen=True, slots=True)
class Contact:
    variable: str
    negated: bool = False


@dataclass(frozen=True, slots=True)
class Coil:
    variable: str
    storage_kind: str = "normal"


@dataclass(frozen=True, slots=True)
class FbdBlock:
    type_name: str
    instance_name: Optional[str] = None
    input_ports: tuple[str, ...] = ()
    output_ports: tuple[str, ...] = ()


@dataclass(frozen=True, slots=True)
class EmbeddedBlock:
    block: FbdBlock


LdElement = Union[Contact, Coil, EmbeddedBlock]


@dataclass(frozen=True, slots=True)
class LdNetwork:
    label: Optional[str] = None
    elements: tuple[LdElement, ...] = ()
    wiring: tuple[tuple[int, int], ...] = ()


@dataclass(frozen=True, slots=True)
class FbdNetwork:
    label: Optional[str] = None
    blocks: tuple[FbdBlock, ...] = ()
    endpoints: tuple[Expression, ...] = ()
    connections: tuple[tuple[str, str], ...] = ()
    jumps: tuple[str, ...] = ()
    nested_st: Optional[StBody] = None


@dataclass(frozen=True, slots=True)
class LdBody:
    networks: tuple[LdNetwork, ...] = ()


@dataclass(frozen=True, slots=True)
class FbdBody:
    networks: tuple[FbdNetwork, ...] = ()


LanguageBody = Union[StBody, SfcBody, LdBody, FbdBody]

EMPTY_ST_BODY = StBody(())


def body_language(body: Optional[LanguageBody]) -> Optional[str]:
    if isinstance(body, StBody):
        return "st"
    if isinstance(body, SfcBody):
        return "sfc"
    if isinstance(body, LdBody):
        return "ld"
    if isinstance(body, FbdBody):
        return "fbd"
    return None


# --------------------------------------------------------------------------
# POUs and projects


@dataclass(frozen=True, slots=True)
class NamedAction:
    name: str
    body: LanguageBody


@dataclass(frozen=True, slots=True)
class VariableDecl:
    name: str
    data_type: str
    section: str = "local"
    initial_value: Optional[Literal] = None


@dataclass(frozen=True, slots=True)
class Pou:
    name: str
    kind: str
    variables: tuple[VariableDecl, ...] = ()
    body: LanguageBody = EMPTY_ST_BODY
    actions: tuple[NamedAction, ...] = ()
    return_type: Optional[str] = None


@dataclass(frozen=True, slots=True)
class Project:
    name: str
    global_variables: tuple[VariableDecl, ...] = ()
    pous: tuple[Pou, ...] = ()
    metadata: tuple[tuple[str, str], ...] = ()


# --------------------------------------------------------------------------
# Paths

PathSegment = tuple[str, Union[str, int]]


@dataclass(frozen=True, slots=True)
class ArtifactPath:
    """Stable address of one artifact inside a Project.

    Segments are (role, key) pairs where the key is the artifact name for
    named containers (POUs, variables, actions, steps) and the position
    within :func:`children_of` order otherwise.
    """

    segments: tuple[PathSegment, ...] = ()

    def child(self, role: str, key: Union[str, int]) -> "ArtifactPath":
        return ArtifactPath(self.segments + ((role, key),))

    def sort_key(self) -> tuple:
        return tuple(
            (role, 0, key, "") if isinstance(key, int) else (role, 1, -1, key)
            for role, key in self.segments
        )

    def __lt__(self, other: "ArtifactPath") -> bool:
        return self.sort_key() < other.sort_key()

    def __le__(self, other: "ArtifactPath") -> bool:
        return self.sort_key() <= other.sort_key()

    def __str__(self) -> str:
        return "/".join(f"{role}:{key}" for role, key in self.segments)

    @classmethod
    def parse(cls, text: str) -> "ArtifactPath":
        segments: list[PathSegment] = []
        if text:
            for part in text.split("/"):
                role, _, key = part.partition(":")
                segments.append((role, int(key) if key.lstrip("-").isdigit() else key))
        return cls(tuple(segments))


ROOT_PATH = ArtifactPath()


def _pou_statements(body: LanguageBody) -> tuple[Statement, ...]:
    return body.statements if isinstance(body, StBody) else ()


def _networks(body: LanguageBody) -> tuple:
    return body.networks if isinstance(body, (LdBody, FbdBody)) else ()


def _variable_keys(variables: tuple[VariableDecl, ...]) -> list[Union[str, int]]:
    # Variable names are only unique per section; qualify duplicates.
    names = [v.name for v in variables]
    return [
        v.name if names.count(v.name) == 1 else f"{v.section}:{v.name}" for v in variables
    ]


def children_with_keys(node: object, type_tag: str) -> list[tuple[Union[str, int], object]]:
    """Direct children of ``node`` having ``type_tag``, with their path keys.

    Unknown or inapplicable tags yield an empty list (metric validation
    rejects unknown tags before comparison ever runs).
    """
    if isinstance(node, Project):
        if type_tag == "pou":
            return [(p.name, p) for p in node.pous]
        if type_tag == "variable":
            return list(zip(_variable_keys(node.global_variables), node.global_variables))
        return []
    if isinstance(node, Pou):
        if type_tag == "variable":
            return list(zip(_variable_keys(node.variables), node.variables))
        if type_tag == "action":
            return [(a.name, a) for a in node.actions]
        return _body_children(node.body, type_tag)
    if isinstance(node, NamedAction):
        return _body_children(node.body, type_tag)
    if isinstance(node, Statement):
        if type_tag == "statement":
            return list(enumerate(statement_sub_statements(node)))
        if type_tag == "expression":
            return list(enumerate(statement_expressions(node)))
        return []
    if isinstance(node, Transition):
        if type_tag == "expression" and node.condition is not None:
            return [(0, node.condition)]
        return []
    if isinstance(node, LdNetwork):
        if type_tag == "contact":
            return list(enumerate(e for e in node.elements if isinstance(e, Contact)))
        if type_tag == "coil":
            return list(enumerate(e for e in node.elements if isinstance(e, Coil)))
        if type_tag == "block":
            return list(
                enumerate(e.block for e in node.elements if isinstance(e, EmbeddedBlock))
            )
        return []
    if isinstance(node, FbdNetwork):
        if type_tag == "block":
            return list(enumerate(node.blocks))
        if type_tag == "statement" and node.nested_st is not None:
            return list(enumerate(node.nested_st.statements))
        if type_tag == "expression":
            return list(enumerate(node.endpoints))
        return []
    if isinstance(node, (Literal, VarRef, UnaryOp, BinaryOp, FuncCall)):
        if type_tag == "expression":
            return list(enumerate(expression_children(node)))
        return []
    return []


def _body_children(body: LanguageBody, type_tag: str) -> list[tuple[Union[str, int], object]]:
    if type_tag == "statement":
        return list(enumerate(_pou_statements(body)))
    if type_tag == "step" and isinstance(body, SfcBody):
        return [(s.name, s) for s in body.steps]
    if type_tag == "transition" and isinstance(body, SfcBody):
        return list(enumerate(body.transitions))
    if type_tag == "network":
        return list(enumerate(_networks(body)))
    return []


def children_of(node: object, type_tag: str) -> list:
    """Direct children of the given artifact type, in model order."""
    return [child for _, child in children_with_keys(node, type_tag)]


_CHILD_TAGS = {
    Project: ("pou", "variable"),
    Pou: ("variable", "action", "statement", "step", "transition", "network"),
    NamedAction: ("statement", "step", "transition", "network"),
    Statement: ("statement", "expression"),
    Transition: ("expression",),
    LdNetwork: ("contact", "coil", "block"),
    FbdNetwork: ("block", "statement", "expression"),
    Literal: ("expression",),
    VarRef: ("expression",),
    UnaryOp: ("expression",),
    BinaryOp: ("expression",),
    FuncCall: ("expression",),
}


def iter_artifacts(root: object, path: ArtifactPath = ROOT_PATH) -> Iterator[tuple[ArtifactPath, object]]:
    """Yield (path, node) for every addressable node under ``root``."""
    yield path, root
    for tag in _CHILD_TAGS.get(type(root), ()):
        for key, child in children_with_keys(root, tag):
            yield from iter_artifacts(child, path.child(tag, key))


def path_of(root: object, artifact: object) -> ArtifactPath:
    """Path of ``artifact`` within the tree rooted at ``root``.

    Identity-based: the exact node object must occur in the tree.
    """
    for path, node in iter_artifacts(root):
        if node is artifact:
            return path
    raise ModelError("artifact is not attached to the given root")


def resolve_path(root: object, path: ArtifactPath) -> object:
    node = root
    for role, key in path.segments:
        for child_key, child in children_with_keys(node, role):
            if child_key == key:
                node = child
                break
        else:
            raise ModelError(f"path {path} does not resolve (missing {role}:{key})")
    return node


# --------------------------------------------------------------------------
# Validation


def _nested_st_bodies(body: LanguageBody, context: str) -> list[tuple[str, LanguageBody]]:
    found: list[tuple[str, LanguageBody]] = []
    if isinstance(body, FbdBody):
        for i, net in enumerate(body.networks):
            if net.nested_st is not None:
                found.append((f"{context}/network {i} nested ST", net.nested_st))
    return found


def validate_project(project: Project) -> None:
    """Check every structural invariant; raise ModelError on the first hit."""
    if not project.name:
        raise ModelError("project name must be a non-empty identifier")
    seen_pous: set[str] = set()
    for pou in project.pous:
        if pou.name in seen_pous:
            raise ModelError(f"duplicate POU name {pou.name!r}")
        seen_pous.add(pou.name)
        _validate_pou(pou)
    _validate_variables(project.global_variables, "global")


def _validate_variables(variables: tuple[VariableDecl, ...], context: str) -> None:
    per_section: dict[str, set[str]] = {}
    for var in variables:
        if var.section not in VAR_SECTIONS:
            raise ModelError(f"{context}: unknown variable section {var.section!r}")
        names = per_section.setdefault(var.section, set())
        if var.name in names:
            raise ModelError(f"{context}: duplicate variable {var.name!r} in section {var.section}")
        names.add(var.name)


def _validate_pou(pou: Pou) -> None:
    ctx = f"pou {pou.name}"
    if pou.kind not in POU_KINDS:
        raise ModelError(f"{ctx}: unknown POU kind {pou.kind!r}")
    if (pou.return_type is not None) != (pou.kind == "function"):
        raise ModelError(f"{ctx}: returnType must be present iff kind is function")
    _validate_variables(pou.variables, ctx)
    action_names = set()
    for action in pou.actions:
        if action.name in action_names:
            raise ModelError(f"{ctx}: duplicate action name {action.name!r}")
        action_names.add(action.name)
    for where, body in _all_bodies(pou):
        _validate_body(body, where, action_names)


def _all_bodies(pou: Pou) -> list[tuple[str, LanguageBody]]:
    bodies = [(f"pou {pou.name}", pou.body)]
    bodies.extend((f"pou {pou.name}/action {a.name}", a.body) for a in pou.actions)
    extra: list[tuple[str, LanguageBody]] = []
    for where, body in bodies:
        extra.extend(_nested_st_bodies(body, where))
    return bodies + extra


def _validate_body(body: LanguageBody, ctx: str, action_names: set[str]) -> None:
    if isinstance(body, StBody):
        for stmt in body.statements:
            _validate_statement(stmt, ctx)
    elif isinstance(body, SfcBody):
        initials = [s for s in body.steps if s.is_initial]
        if len(initials) != 1:
            raise ModelError(f"{ctx}: SFC body must have exactly one initial step")
        step_names = {s.name for s in body.steps}
        if len(step_names) != len(body.steps):
            raise ModelError(f"{ctx}: duplicate step names")
        for step in body.steps:
            for assoc in step.associations:
                if assoc.qualifier not in ACTION_QUALIFIERS:
                    raise ModelError(f"{ctx}: unknown qualifier {assoc.qualifier!r}")
                if assoc.action_ref not in action_names:
                    raise ModelError(
                        f"{ctx}: step {step.name} references unknown action {assoc.action_ref!r}"
                    )
        for i, tr in enumerate(body.transitions):
            for name in tr.from_steps + tr.to_steps:
                if name not in step_names:
                    raise ModelError(f"{ctx}: transition {i} references unknown step {name!r}")
    elif isinstance(body, LdBody):
        for i, net in enumerate(body.networks):
            n = len(net.elements)
            sources = set()
            for a, b in net.wiring:
                if not (0 <= a < n and 0 <= b < n):
                    raise ModelError(f"{ctx}: network {i} wiring index out of range")
                sources.add(a)
            for j, element in enumerate(net.elements):
                if isinstance(element, Coil) and j in sources:
                    raise ModelError(f"{ctx}: network {i} coil {j} must be a sink")
    elif isinstance(body, FbdBody):
        labels = {net.label for net in body.networks if net.label}
        for i, net in enumerate(body.networks):
            ports = {f"{b.instance_name or b.type_name}.{p}" for b in net.blocks
                     for p in b.input_ports + b.output_ports}
            ports |= {f"endpoint.{j}" for j in range(len(net.endpoints))}
            for src, sink in net.connections:
                if src not in ports or sink not in ports:
                    raise ModelError(f"{ctx}: network {i} connection {src}->{sink} dangling")
            for target in net.jumps:
                if target not in labels:
                    raise ModelError(f"{ctx}: network {i} jump to unknown label {target!r}")
    else:
        raise ModelError(f"{ctx}: unknown body type {type(body).__name__}")


def _validate_statement(stmt: Statement, ctx: str) -> None:
    if stmt.kind not in STATEMENT_KINDS:
        raise ModelError(f"{ctx}: unknown statement kind {stmt.kind!r}")
    if stmt.kind == "assignment" and (stmt.target is None or stmt.value is None):
        raise ModelError(f"{ctx}: assignment needs target and value")
    if stmt.kind == "call" and stmt.callee is None:
        raise ModelError(f"{ctx}: call needs a callee")
    if stmt.kind in ("ifStmt", "whileStmt", "caseStmt") and stmt.condition is None:
        raise ModelError(f"{ctx}: {stmt.kind} needs a condition")
    if stmt.kind == "forStmt" and (
        stmt.target is None or stmt.loop_from is None or stmt.loop_to is None
    ):
        raise ModelError(f"{ctx}: forStmt needs loop variable and bounds")
    for sub in statement_sub_statements(stmt):
        _validate_statement(sub, ctx)
    for expr in statement_expressions(stmt):
        _validate_expression(expr, ctx)


def _validate_expression(expr: Expression, ctx: str) -> None:
    if isinstance(expr, BinaryOp):
        if expr.operator not in BINARY_OPERATORS:
            raise ModelError(f"{ctx}: unknown binary operator {expr.operator!r}")
    elif isinstance(expr, UnaryOp):
        if expr.operator not in UNARY_OPERATORS:
            raise ModelError(f"{ctx}: unknown unary operator {expr.operator!r}")
    elif not isinstance(expr, (Literal, VarRef, FuncCall)):
        raise ModelError(f"{ctx}: not an expression: {expr!r}")
    for sub in expression_children(expr):
        _validate_expression(sub, ctx)


# --------------------------------------------------------------------------
# Display labels (used by reports)


def render_expression(expr: Expression) -> str:
    if isinstance(expr, Literal):
        return expr.value
    if isinstance(expr, VarRef):
        return expr.name
    if isinstance(expr, UnaryOp):
        return f"{expr.operator} {render_expression(expr.operand)}"
    if isinstance(expr, BinaryOp):
        return f"({render_expression(expr.left)} {expr.operator} {render_expression(expr.right)})"
    if isinstance(expr, FuncCall):
        return f"{expr.name}({', '.join(render_expression(a) for a in expr.args)})"
    return repr(expr)


def artifact_label(node: object) -> str:
    if isinstance(node, Project):
        return f"project {node.name}"
    if isinstance(node, Pou):
        return f"{node.kind} {node.name}"
    if isinstance(node, VariableDecl):
        return f"{node.name} : {node.data_type}"
    if isinstance(node, NamedAction):
        return f"action {node.name}"
    if isinstance(node, Statement):
        if node.kind == "assignment":
            return f"{node.target} := {render_expression(node.value)}"
        if node.kind == "call":
            return f"{node.callee}(...)" if node.args else f"{node.callee}()"
        if node.kind == "ifStmt":
            return f"IF {render_expression(node.condition)}"
        if node.kind == "whileStmt":
            return f"WHILE {render_expression(node.condition)}"
        if node.kind == "forStmt":
            return f"FOR {node.target}"
        return f"CASE {render_expression(node.condition)}"
    if isinstance(node, Step):
        return f"step {node.name}" + (" (initial)" if node.is_initial else "")
    if isinstance(node, Transition):
        cond = render_expression(node.condition) if node.condition else node.body_ref or "?"
        return f"transition {','.join(node.from_steps)} -> {','.join(node.to_steps)} [{cond}]"
    if isinstance(node, LdNetwork):
        return f"LD network{f' {node.label}' if node.label else ''}"
    if isinstance(node, FbdNetwork):
        return f"FBD network{f' {node.label}' if node.label else ''}"
    if isinstance(node, Contact):
        return f"contact {'NOT ' if node.negated else ''}{node.variable}"
    if isinstance(node, Coil):
        return f"coil {node.variable}" + ("" if node.storage_kind == "normal" else f" ({node.storage_kind})")
    if isinstance(node, FbdBlock):
        return f"block {node.type_name}" + (f" {node.instance_name}" if node.instance_name else "")
    if isinstance(node, (Literal, VarRef, UnaryOp, BinaryOp, FuncCall)):
        return render_expression(node)
    return repr(node)


def artifact_type_of(node: object) -> Optional[str]:
    if isinstance(node, Pou):
        return "pou"
    if isinstance(node, VariableDecl):
        return "variable"
    if isinstance(node, Statement):
        return "statement"
    if isinstance(node, Step):
        return "step"
    if isinstance(node, Transition):
        return "transition"
    if isinstance(node, NamedAction):
        return "action"
    if isinstance(node, (LdNetwork, FbdNetwork)):
        return "network"
    if isinstance(node, Contact):
        return "contact"
    if isinstance(node, Coil):
        return "coil"
    if isinstance(node, FbdBlock):
        return "block"
    if isinstance(node, (Literal, VarRef, UnaryOp, BinaryOp, FuncCall)):
        return "expression"
    if isinstance(node, Project):
        return "project"
    return None
