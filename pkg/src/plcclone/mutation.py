"""Mutation framework: ground-truth clone pairs and detector scoring.

Eleven operators produce structurally valid mutants of a seed project.
Category T2 covers renames and value/operator changes, category T3 covers
insertions and deletions.  Every performed change is recorded as
(origin, mutant, operator) at the innermost artifact the fine metric can
flag; the records double as ground truth for precision/recall scoring.

Site preconditions keep the ground truth well defined: statements changed
or removed in place must be content-unique among their siblings (greedy
matching cannot attribute a change among identical twins), removed
variables may be referenced from ST statements only, and renamed actions
must be referenced by at least one step.
"""

from __future__ import annotations

import json
import random
import time
from dataclasses import dataclass, field, replace
from typing import Callable, Optional

from .compare import ArtifactPairNode, compare_inter
from .metrics import Metric
from .model import (
    ActionAssociation,
    ArtifactPath,
    BinaryOp,
    Coil,
    Contact,
    EmbeddedBlock,
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
    Project,
    ROOT_PATH,
    SfcBody,
    Statement,
    StBody,
    Step,
    Transition,
    UnaryOp,
    VariableDecl,
    VarRef,
    CaseBranch,
    children_with_keys,
    expression_children,
    resolve_path,
    statement_expressions,
    statement_sub_statements,
    validate_project,
)

T2 = "T2"
T3 = "T3"

T2_OPERATORS = (
    "rename-variable",
    "rename-pou",
    "rename-step-or-action",
    "change-literal-value",
    "change-binary-operator",
)
T3_OPERATORS = (
    "add-statement",
    "remove-statement",
    "add-variable",
    "remove-variable",
    "add-sfc-step",
    "remove-sfc-step",
)

OPERATORS_BY_CATEGORY = {T2: T2_OPERATORS, T3: T3_OPERATORS}
ALL_OPERATORS = T2_OPERATORS + T3_OPERATORS


class MutationError(Exception):
    pass


@dataclass(frozen=True)
class MutationRecord:
    operator_id: str
    origin_path: Optional[ArtifactPath]  # absent for insertions
    mutant_path: Optional[ArtifactPath]  # absent for deletions


@dataclass(frozen=True)
class MutationContext:
    seed_name: str
    rng_seed: int
    category: str
    records: tuple[MutationRecord, ...]


PathMap = Callable[[ArtifactPath], Optional[ArtifactPath]]


def _identity(path: ArtifactPath) -> Optional[ArtifactPath]:
    return path


@dataclass
class _Edit:
    """One applied mutation: the new project, its records (paths in the
    coordinates of the project the edit was applied to / produced), and
    path maps between the two coordinate systems."""

    project: Project
    records: list[MutationRecord]
    forward: PathMap = _identity  # pre-edit path -> post-edit path
    backward: PathMap = _identity  # post-edit path -> pre-edit path


# --------------------------------------------------------------------------
# Path map helpers


def _key_rename_maps(prefix: tuple, role: str, old_key, new_key) -> tuple[PathMap, PathMap]:
    position = len(prefix)

    def remap(path: ArtifactPath, source, target) -> Optional[ArtifactPath]:
        segments = path.segments
        if (
            len(segments) > position
            and segments[:position] == prefix
            and segments[position] == (role, source)
        ):
            return ArtifactPath(segments[:position] + ((role, target),) + segments[position + 1 :])
        return path

    return (
        lambda path: remap(path, old_key, new_key),
        lambda path: remap(path, new_key, old_key),
    )


def _index_shift_maps(
    owner: ArtifactPath, role: str, removed: tuple[int, ...] = (), inserted: tuple[int, ...] = ()
) -> tuple[PathMap, PathMap]:
    """Maps for index-keyed children of one owner after removals/insertions.

    ``removed`` holds pre-edit indices, ``inserted`` post-edit indices.
    """
    position = len(owner.segments)

    def forward(path: ArtifactPath) -> Optional[ArtifactPath]:
        segments = path.segments
        if not (
            len(segments) > position
            and segments[:position] == owner.segments
            and segments[position][0] == role
            and isinstance(segments[position][1], int)
        ):
            return path
        index = segments[position][1]
        if index in removed:
            return None
        index -= sum(1 for r in removed if r < index)
        index += sum(1 for i in inserted if i <= index)
        return ArtifactPath(segments[:position] + ((role, index),) + segments[position + 1 :])

    def backward(path: ArtifactPath) -> Optional[ArtifactPath]:
        segments = path.segments
        if not (
            len(segments) > position
            and segments[:position] == owner.segments
            and segments[position][0] == role
            and isinstance(segments[position][1], int)
        ):
            return path
        index = segments[position][1]
        if index in inserted:
            return None
        index -= sum(1 for i in inserted if i < index)
        index += sum(1 for r in removed if r <= index)
        return ArtifactPath(segments[:position] + ((role, index),) + segments[position + 1 :])

    return forward, backward


def _compose(maps: list[PathMap]) -> PathMap:
    def combined(path: ArtifactPath) -> Optional[ArtifactPath]:
        current: Optional[ArtifactPath] = path
        for mapper in maps:
            if current is None:
                return None
            current = mapper(current)
        return current

    return combined


# --------------------------------------------------------------------------
# Structural surgery


def _replace_child(parent: object, role: str, key, new_child: Optional[object]) -> object:
    """Rebuild ``parent`` with one child replaced (or removed when None)."""
    if isinstance(parent, Project):
        if role == "pou":
            pous = []
            for pou in parent.pous:
                if pou.name == key:
                    if new_child is not None:
                        pous.append(new_child)
                else:
                    pous.append(pou)
            return replace(parent, pous=tuple(pous))
        if role == "variable":
            return replace(
                parent,
                global_variables=_edit_keyed(parent.global_variables, key, new_child, _var_keys),
            )
    if isinstance(parent, Pou):
        if role == "variable":
            return replace(parent, variables=_edit_keyed(parent.variables, key, new_child, _var_keys))
        if role == "action":
            return replace(
                parent, actions=_edit_keyed(parent.actions, key, new_child, lambda items: [a.name for a in items])
            )
        return replace(parent, body=_replace_in_body(parent.body, role, key, new_child))
    if isinstance(parent, NamedAction):
        return replace(parent, body=_replace_in_body(parent.body, role, key, new_child))
    if isinstance(parent, Statement):
        if role != "statement":
            raise MutationError(f"cannot edit {role} under a statement")
        return _rebuild_statement_flat(parent, key, new_child)
    if isinstance(parent, FbdNetwork):
        if role == "statement" and parent.nested_st is not None:
            return replace(parent, nested_st=StBody(_edit_indexed(parent.nested_st.statements, key, new_child)))
    raise MutationError(f"cannot edit {role}:{key} under {type(parent).__name__}")


def _var_keys(variables) -> list:
    names = [v.name for v in variables]
    return [v.name if names.count(v.name) == 1 else f"{v.section}:{v.name}" for v in variables]


def _edit_keyed(items: tuple, key, new_item, key_fn) -> tuple:
    keys = key_fn(items)
    if key not in keys:
        raise MutationError(f"no child with key {key!r}")
    index = keys.index(key)
    if new_item is None:
        return items[:index] + items[index + 1 :]
    return items[:index] + (new_item,) + items[index + 1 :]


def _edit_indexed(items: tuple, index: int, new_item) -> tuple:
    if not 0 <= index < len(items):
        raise MutationError(f"index {index} out of range")
    if new_item is None:
        return items[:index] + items[index + 1 :]
    return items[:index] + (new_item,) + items[index + 1 :]


def _replace_in_body(body, role: str, key, new_child):
    if role == "statement" and isinstance(body, StBody):
        return StBody(_edit_indexed(body.statements, key, new_child))
    if role == "step" and isinstance(body, SfcBody):
        return replace(body, steps=_edit_keyed(body.steps, key, new_child, lambda items: [s.name for s in items]))
    if role == "transition" and isinstance(body, SfcBody):
        return replace(body, transitions=_edit_indexed(body.transitions, key, new_child))
    if role == "network" and isinstance(body, (LdBody, FbdBody)):
        return replace(body, networks=_edit_indexed(body.networks, key, new_child))
    raise MutationError(f"cannot edit {role} in {type(body).__name__}")


def _statement_segments(stmt: Statement) -> list[tuple[str, int, tuple[Statement, ...]]]:
    """Flat-index segmentation of a statement's sub-statement list."""
    segments = [("children", -1, stmt.children)]
    for index, branch in enumerate(stmt.branches):
        segments.append(("branch", index, branch.body))
    segments.append(("else", -1, stmt.else_children))
    return segments


def _rebuild_statement_flat(stmt: Statement, flat_index: int, new_child) -> Statement:
    offset = 0
    for segment, branch_index, items in _statement_segments(stmt):
        if flat_index < offset + len(items):
            local = flat_index - offset
            edited = _edit_indexed(items, local, new_child)
            if segment == "children":
                return replace(stmt, children=edited)
            if segment == "else":
                return replace(stmt, else_children=edited)
            branches = list(stmt.branches)
            branches[branch_index] = CaseBranch(branches[branch_index].labels, edited)
            return replace(stmt, branches=tuple(branches))
        offset += len(items)
    raise MutationError(f"flat statement index {flat_index} out of range")


def _insert_statement(project: Project, owner_path: ArtifactPath, flat_index: int, stmt: Statement) -> Project:
    owner = resolve_path(project, owner_path)
    if isinstance(owner, (Pou, NamedAction)):
        body = owner.body
        if not isinstance(body, StBody):
            raise MutationError("owner body is not ST")
        statements = body.statements[:flat_index] + (stmt,) + body.statements[flat_index:]
        new_owner = replace(owner, body=StBody(statements))
    elif isinstance(owner, FbdNetwork):
        nested = owner.nested_st or StBody(())
        statements = nested.statements[:flat_index] + (stmt,) + nested.statements[flat_index:]
        new_owner = replace(owner, nested_st=StBody(statements))
    elif isinstance(owner, Statement):
        # insertion goes into the plain children segment
        if flat_index > len(owner.children):
            raise MutationError("insertion outside the children segment")
        children = owner.children[:flat_index] + (stmt,) + owner.children[flat_index:]
        new_owner = replace(owner, children=children)
    else:
        raise MutationError(f"cannot insert a statement under {type(owner).__name__}")
    return _rebuild_at(project, owner_path, new_owner)


def _rebuild_at(project: Project, path: ArtifactPath, new_node: Optional[object]) -> Project:
    """Replace (or remove, when None) the node at ``path``."""
    if not path.segments:
        raise MutationError("cannot replace the project root")

    def rebuild(node: object, segments: tuple) -> object:
        role, key = segments[0]
        if len(segments) == 1:
            return _replace_child(node, role, key, new_node)
        for child_key, child in children_with_keys(node, role):
            if child_key == key:
                return _replace_child(node, role, key, rebuild(child, segments[1:]))
        raise MutationError(f"path segment {role}:{key} not found")

    rebuilt = rebuild(project, path.segments)
    assert isinstance(rebuilt, Project)
    return rebuilt


# --------------------------------------------------------------------------
# Expression / statement rewriting for renames


def _rewrite_expr(expr: Expression, rewrite_ref, rewrite_call) -> Expression:
    if isinstance(expr, VarRef):
        new_name = rewrite_ref(expr.name)
        return VarRef(new_name) if new_name != expr.name else expr
    if isinstance(expr, FuncCall):
        args = tuple(_rewrite_expr(a, rewrite_ref, rewrite_call) for a in expr.args)
        new_name = rewrite_call(expr.name)
        if new_name != expr.name or any(a is not b for a, b in zip(args, expr.args)):
            return FuncCall(new_name, args)
        return expr
    if isinstance(expr, UnaryOp):
        operand = _rewrite_expr(expr.operand, rewrite_ref, rewrite_call)
        return UnaryOp(expr.operator, operand) if operand is not expr.operand else expr
    if isinstance(expr, BinaryOp):
        left = _rewrite_expr(expr.left, rewrite_ref, rewrite_call)
        right = _rewrite_expr(expr.right, rewrite_ref, rewrite_call)
        if left is not expr.left or right is not expr.right:
            return BinaryOp(expr.operator, left, right)
        return expr
    return expr


@dataclass
class _Renamer:
    """Identifier substitution applied across a scope; collects the paths
    of all artifacts whose own compared content changed.

    ``rewrite_ref`` covers variable references (and block instance names),
    ``rewrite_target`` write targets, ``rewrite_callee`` call-statement
    callees (FB instance calls are variables, function calls are POUs),
    ``rewrite_call_expr`` function names inside expressions and block type
    names.
    """

    rewrite_ref: Callable[[str], str]
    rewrite_target: Callable[[str], str]
    rewrite_callee: Callable[[str], str]
    rewrite_call_expr: Callable[[str], str]
    changed: list[ArtifactPath] = field(default_factory=list)

    def statement(self, stmt: Statement, path: ArtifactPath) -> Statement:
        own_changed = False
        updates: dict = {}
        if stmt.target is not None:
            fn = self.rewrite_target if stmt.kind == "assignment" else self.rewrite_ref
            new_target = fn(stmt.target)
            if new_target != stmt.target:
                updates["target"] = new_target
                own_changed = True
        if stmt.callee is not None:
            new_callee = self.rewrite_callee(stmt.callee)
            if new_callee != stmt.callee:
                updates["callee"] = new_callee
                own_changed = True
        for field_name in ("condition", "value", "loop_from", "loop_to", "loop_by"):
            expr = getattr(stmt, field_name)
            if expr is not None:
                new_expr = _rewrite_expr(expr, self.rewrite_ref, self.rewrite_call_expr)
                if new_expr is not expr:
                    updates[field_name] = new_expr
                    own_changed = True
        new_args = tuple(
            _rewrite_expr(a, self.rewrite_ref, self.rewrite_call_expr) for a in stmt.args
        )
        if any(a is not b for a, b in zip(new_args, stmt.args)):
            updates["args"] = new_args
            own_changed = True

        flat = 0

        def do_list(items: tuple[Statement, ...]) -> tuple[Statement, ...]:
            nonlocal flat
            out = []
            for child in items:
                out.append(self.statement(child, path.child("statement", flat)))
                flat += 1
            return tuple(out)

        new_children = do_list(stmt.children)
        new_branches = tuple(CaseBranch(b.labels, do_list(b.body)) for b in stmt.branches)
        new_else = do_list(stmt.else_children)
        if (
            any(a is not b for a, b in zip(new_children, stmt.children))
            or any(a is not b for a, b in zip(new_branches, stmt.branches))
            or any(a is not b for a, b in zip(new_else, stmt.else_children))
        ):
            updates["children"] = new_children
            updates["branches"] = new_branches
            updates["else_children"] = new_else
        if own_changed:
            self.changed.append(path)
        return replace(stmt, **updates) if updates else stmt

    def statement_list(self, stmts: tuple[Statement, ...], owner: ArtifactPath) -> tuple[Statement, ...]:
        return tuple(
            self.statement(stmt, owner.child("statement", index))
            for index, stmt in enumerate(stmts)
        )

    def body(self, body, owner: ArtifactPath):
        if isinstance(body, StBody):
            return StBody(self.statement_list(body.statements, owner))
        if isinstance(body, SfcBody):
            new_transitions = []
            for index, transition in enumerate(body.transitions):
                new_transition = transition
                if transition.condition is not None:
                    new_condition = _rewrite_expr(
                        transition.condition, self.rewrite_ref, self.rewrite_call_expr
                    )
                    if new_condition is not transition.condition:
                        new_transition = replace(transition, condition=new_condition)
                        self.changed.append(owner.child("transition", index))
                new_transitions.append(new_transition)
            return replace(body, transitions=tuple(new_transitions))
        if isinstance(body, LdBody):
            return LdBody(
                tuple(
                    self.ld_network(network, owner.child("network", index))
                    for index, network in enumerate(body.networks)
                )
            )
        if isinstance(body, FbdBody):
            return FbdBody(
                tuple(
                    self.fbd_network(network, owner.child("network", index))
                    for index, network in enumerate(body.networks)
                )
            )
        return body

    def ld_network(self, network: LdNetwork, path: ArtifactPath) -> LdNetwork:
        elements = []
        contact_index = 0
        coil_index = 0
        block_index = 0
        changed_any = False
        for element in network.elements:
            if isinstance(element, Contact):
                new_name = self.rewrite_ref(element.variable)
                if new_name != element.variable:
                    element = replace(element, variable=new_name)
                    self.changed.append(path.child("contact", contact_index))
                    changed_any = True
                contact_index += 1
            elif isinstance(element, Coil):
                new_name = self.rewrite_target(element.variable)
                if new_name != element.variable:
                    element = replace(element, variable=new_name)
                    self.changed.append(path.child("coil", coil_index))
                    changed_any = True
                coil_index += 1
            elif isinstance(element, EmbeddedBlock):
                new_block = self.block(element.block, path.child("block", block_index))
                if new_block is not element.block:
                    element = EmbeddedBlock(new_block)
                    changed_any = True
                block_index += 1
            elements.append(element)
        return replace(network, elements=tuple(elements)) if changed_any else network

    def fbd_network(self, network: FbdNetwork, path: ArtifactPath) -> FbdNetwork:
        updates: dict = {}
        new_blocks = tuple(
            self.block(block, path.child("block", index))
            for index, block in enumerate(network.blocks)
        )
        if any(a is not b for a, b in zip(new_blocks, network.blocks)):
            updates["blocks"] = new_blocks
        # endpoint renames are invisible to the attribute catalog: rewrite
        # them for consistency, but do not record them as ground truth
        new_endpoints = tuple(
            _rewrite_expr(e, self.rewrite_ref, self.rewrite_call_expr) for e in network.endpoints
        )
        if any(a is not b for a, b in zip(new_endpoints, network.endpoints)):
            updates["endpoints"] = new_endpoints
        if network.nested_st is not None:
            new_nested = StBody(self.statement_list(network.nested_st.statements, path))
            if new_nested != network.nested_st:
                updates["nested_st"] = new_nested
        return replace(network, **updates) if updates else network

    def block(self, block: FbdBlock, path: ArtifactPath) -> FbdBlock:
        updates: dict = {}
        if block.instance_name:
            new_name = self.rewrite_ref(block.instance_name)
            if new_name != block.instance_name:
                updates["instance_name"] = new_name
        new_type = self.rewrite_call_expr(block.type_name)
        if new_type != block.type_name:
            updates["type_name"] = new_type
        if updates:
            self.changed.append(path)
            return replace(block, **updates)
        return block


def _ref_rewriter(old: str, new: str) -> Callable[[str], str]:
    prefix = old + "."

    def rewrite(name: str) -> str:
        if name == old:
            return new
        if name.startswith(prefix):
            return new + name[len(old) :]
        return name

    return rewrite


def _no_rewrite(name: str) -> str:
    return name


# --------------------------------------------------------------------------
# Site discovery helpers

_SIMPLE_TYPES = ("BOOL", "INT", "DINT", "REAL", "TIME")


def _used_identifiers(project: Project) -> set[str]:
    used = {project.name}
    used.update(v.name for v in project.global_variables)
    for pou in project.pous:
        used.add(pou.name)
        used.update(v.name for v in pou.variables)
        used.update(a.name for a in pou.actions)
        for _, body in _sfc_scopes_of(pou):
            used.update(s.name for s in body.steps)
    return used


def _fresh_name(project: Project, prefix: str) -> str:
    used = _used_identifiers(project)
    number = 1
    while f"{prefix}{number}" in used:
        number += 1
    return f"{prefix}{number}"


def _pou_path(pou: Pou) -> ArtifactPath:
    return ROOT_PATH.child("pou", pou.name)


def _sfc_scopes_of(pou: Pou) -> list[tuple[ArtifactPath, SfcBody]]:
    scopes = []
    base = _pou_path(pou)
    if isinstance(pou.body, SfcBody):
        scopes.append((base, pou.body))
    for action in pou.actions:
        if isinstance(action.body, SfcBody):
            scopes.append((base.child("action", action.name), action.body))
    return scopes


def _sfc_scopes(project: Project) -> list[tuple[ArtifactPath, SfcBody]]:
    scopes = []
    for pou in project.pous:
        scopes.extend(_sfc_scopes_of(pou))
    return scopes


def _statement_scopes(project: Project) -> list[tuple[ArtifactPath, tuple[Statement, ...]]]:
    """Every flat statement scope: ST bodies, nested bodies and compound
    statements, with the scope owner's path."""
    scopes: list[tuple[ArtifactPath, tuple[Statement, ...]]] = []

    def visit_statement(stmt: Statement, path: ArtifactPath) -> None:
        subs = statement_sub_statements(stmt)
        if subs:
            scopes.append((path, subs))
        for index, sub in enumerate(subs):
            visit_statement(sub, path.child("statement", index))

    def visit_list(owner_path: ArtifactPath, statements: tuple[Statement, ...]) -> None:
        if statements:
            scopes.append((owner_path, statements))
        for index, stmt in enumerate(statements):
            visit_statement(stmt, owner_path.child("statement", index))

    for pou in project.pous:
        base = _pou_path(pou)
        if isinstance(pou.body, StBody):
            visit_list(base, pou.body.statements)
        for action in pou.actions:
            if isinstance(action.body, StBody):
                visit_list(base.child("action", action.name), action.body.statements)
        if isinstance(pou.body, FbdBody):
            for index, network in enumerate(pou.body.networks):
                if network.nested_st is not None:
                    visit_list(base.child("network", index), network.nested_st.statements)
    return scopes


def _scope_variables(project: Project, pou: Optional[Pou]) -> list[VariableDecl]:
    if pou is None:
        return list(project.global_variables)
    local_names = {v.name for v in pou.variables}
    return list(pou.variables) + [
        v for v in project.global_variables if v.name not in local_names
    ]


def _section_unique(variables: tuple[VariableDecl, ...], name: str) -> bool:
    return sum(1 for v in variables if v.name == name) == 1


def _own_references(stmt: Statement, name: str) -> bool:
    prefix = name + "."

    def refers(identifier: Optional[str]) -> bool:
        return identifier is not None and (identifier == name or identifier.startswith(prefix))

    if stmt.kind == "assignment" and refers(stmt.target):
        return True
    if stmt.kind == "forStmt" and refers(stmt.target):
        return True
    if refers(stmt.callee):
        return True

    def in_expr(expr: Expression) -> bool:
        if isinstance(expr, VarRef) and refers(expr.name):
            return True
        return any(in_expr(child) for child in expression_children(expr))

    return any(in_expr(expr) for expr in statement_expressions(stmt))


def _expr_references(expr: Expression, name: str) -> bool:
    prefix = name + "."
    if isinstance(expr, VarRef) and (expr.name == name or expr.name.startswith(prefix)):
        return True
    return any(_expr_references(child, name) for child in expression_children(expr))


def _literal_positions(exprs: tuple[Expression, ...]) -> int:
    count = 0

    def walk(expr: Expression) -> None:
        nonlocal count
        if isinstance(expr, Literal):
            count += 1
        for child in expression_children(expr):
            walk(child)

    for expr in exprs:
        walk(expr)
    return count


def _family_operator_positions(exprs: tuple[Expression, ...]) -> int:
    count = 0

    def walk(expr: Expression) -> None:
        nonlocal count
        if isinstance(expr, BinaryOp) and _operator_family(expr.operator) is not None:
            count += 1
        for child in expression_children(expr):
            walk(child)

    for expr in exprs:
        walk(expr)
    return count


_OPERATOR_FAMILIES = (
    ("AND", "OR", "XOR"),
    ("=", "<>", "<", "<=", ">", ">="),
    ("+", "-", "*", "/", "MOD"),
)


def _operator_family(operator: str) -> Optional[tuple[str, ...]]:
    for family in _OPERATOR_FAMILIES:
        if operator in family:
            return family
    return None


# --------------------------------------------------------------------------
# Expression surgery for value/operator changes


def _mutate_literal(literal: Literal, rng: random.Random) -> Literal:
    kind = literal.type_name.upper()
    if kind == "BOOL":
        return Literal("FALSE" if literal.value.upper() == "TRUE" else "TRUE", literal.type_name)
    if kind == "TIME":
        digits = "".join(ch for ch in literal.value if ch.isdigit()) or "0"
        new_number = int(digits) + rng.randrange(1, 9)
        return Literal(f"T#{new_number}S", literal.type_name)
    if kind in ("REAL", "LREAL"):
        try:
            value = float(literal.value)
        except ValueError:
            value = 0.0
        return Literal(f"{value + rng.randrange(1, 9)}.0".replace(".0.0", ".0"), literal.type_name)
    if kind == "STRING":
        return Literal(literal.value + "X", literal.type_name)
    try:
        value = int(literal.value)
    except ValueError:
        return Literal(literal.value + "1", literal.type_name)
    return Literal(str(value + rng.randrange(1, 9)), literal.type_name)


def _replace_nth_literal(expr: Expression, counter: list[int], make_new) -> Expression:
    if isinstance(expr, Literal):
        counter[0] -= 1
        if counter[0] == -1:
            return make_new(expr)
        return expr
    if isinstance(expr, UnaryOp):
        return replace(expr, operand=_replace_nth_literal(expr.operand, counter, make_new))
    if isinstance(expr, BinaryOp):
        left = _replace_nth_literal(expr.left, counter, make_new)
        right = _replace_nth_literal(expr.right, counter, make_new)
        return BinaryOp(expr.operator, left, right)
    if isinstance(expr, FuncCall):
        return FuncCall(
            expr.name, tuple(_replace_nth_literal(a, counter, make_new) for a in expr.args)
        )
    return expr


def _replace_nth_operator(expr: Expression, counter: list[int], rng: random.Random) -> Expression:
    if isinstance(expr, BinaryOp):
        operator = expr.operator
        if _operator_family(operator) is not None:
            counter[0] -= 1
            if counter[0] == -1:
                family = _operator_family(operator)
                choices = [op for op in family if op != operator]
                operator = choices[rng.randrange(len(choices))]
        left = _replace_nth_operator(expr.left, counter, rng)
        right = _replace_nth_operator(expr.right, counter, rng)
        return BinaryOp(operator, left, right)
    if isinstance(expr, UnaryOp):
        return replace(expr, operand=_replace_nth_operator(expr.operand, counter, rng))
    if isinstance(expr, FuncCall):
        return FuncCall(
            expr.name, tuple(_replace_nth_operator(a, counter, rng) for a in expr.args)
        )
    return expr


_EXPR_FIELD_ORDER = ("condition", "loop_from", "loop_to", "loop_by", "value")


def _rewrite_statement_exprs(stmt: Statement, rewriter) -> Statement:
    """Apply ``rewriter`` across the statement's direct expressions, in
    statement_expressions order (condition, loop bounds, value, args)."""
    updates: dict = {}
    for field_name in _EXPR_FIELD_ORDER:
        expr = getattr(stmt, field_name)
        if expr is not None:
            updates[field_name] = rewriter(expr)
    if stmt.args:
        updates["args"] = tuple(rewriter(a) for a in stmt.args)
    return replace(stmt, **updates)


# --------------------------------------------------------------------------
# Operators


def _sites_rename_variable(project: Project) -> list:
    sites = []
    for variable in project.global_variables:
        if _section_unique(project.global_variables, variable.name):
            sites.append((None, variable.name))
    for pou in project.pous:
        for variable in pou.variables:
            if _section_unique(pou.variables, variable.name):
                sites.append((pou.name, variable.name))
    return sites


def _rename_pou_scope(
    pou: Pou, renamer: _Renamer, new_variables: Optional[tuple[VariableDecl, ...]] = None
) -> Pou:
    base = _pou_path(pou)
    new_body = renamer.body(pou.body, base)
    new_actions = tuple(
        replace(action, body=renamer.body(action.body, base.child("action", action.name)))
        for action in pou.actions
    )
    return replace(
        pou,
        variables=new_variables if new_variables is not None else pou.variables,
        body=new_body,
        actions=new_actions,
    )


def _apply_rename_variable(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    scope_pou_name, old = site
    new = _fresh_name(project, "VAR")
    sub = _ref_rewriter(old, new)
    renamer = _Renamer(rewrite_ref=sub, rewrite_target=sub, rewrite_callee=sub, rewrite_call_expr=_no_rewrite)

    if scope_pou_name is None:
        global_variables = tuple(
            replace(v, name=new) if v.name == old else v for v in project.global_variables
        )
        pous = tuple(
            pou if any(v.name == old for v in pou.variables) else _rename_pou_scope(pou, renamer)
            for pou in project.pous
        )
        mutated = replace(project, global_variables=global_variables, pous=pous)
        prefix: tuple = ()
    else:
        pous = []
        for pou in project.pous:
            if pou.name != scope_pou_name:
                pous.append(pou)
                continue
            new_variables = tuple(replace(v, name=new) if v.name == old else v for v in pou.variables)
            pous.append(_rename_pou_scope(pou, renamer, new_variables))
        mutated = replace(project, pous=tuple(pous))
        prefix = (("pou", scope_pou_name),)

    decl_prefix = ArtifactPath(prefix)
    records = [
        MutationRecord(
            "rename-variable",
            origin_path=decl_prefix.child("variable", old),
            mutant_path=decl_prefix.child("variable", new),
        )
    ]
    records.extend(
        MutationRecord("rename-variable", origin_path=path, mutant_path=path)
        for path in renamer.changed
    )
    forward, backward = _key_rename_maps(prefix, "variable", old, new)
    return _Edit(mutated, records, forward, backward)


def _sites_rename_pou(project: Project) -> list:
    return [pou.name for pou in project.pous]


def _apply_rename_pou(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    old = site
    new = _fresh_name(project, "POU")
    exact = lambda name: new if name == old else name
    renamer = _Renamer(
        rewrite_ref=_no_rewrite, rewrite_target=_no_rewrite, rewrite_callee=exact, rewrite_call_expr=exact
    )
    records = []
    pous = []
    for pou in project.pous:
        base = _pou_path(pou)
        new_variables = []
        for variable in pou.variables:
            if variable.data_type == old:
                new_variables.append(replace(variable, data_type=new))
                key = _var_keys(pou.variables)[pou.variables.index(variable)]
                path = base.child("variable", key)
                records.append(MutationRecord("rename-pou", origin_path=path, mutant_path=path))
            else:
                new_variables.append(variable)
        updated = _rename_pou_scope(pou, renamer, tuple(new_variables))
        if pou.name == old:
            updated = replace(updated, name=new)
        pous.append(updated)
    mutated = replace(project, pous=tuple(pous))
    records.insert(
        0,
        MutationRecord(
            "rename-pou",
            origin_path=ROOT_PATH.child("pou", old),
            mutant_path=ROOT_PATH.child("pou", new),
        ),
    )
    records.extend(
        MutationRecord("rename-pou", origin_path=path, mutant_path=path)
        for path in renamer.changed
    )
    forward, backward = _key_rename_maps((), "pou", old, new)
    return _Edit(mutated, records, forward, backward)


def _sites_rename_step_or_action(project: Project) -> list:
    sites = []
    for owner_path, body in _sfc_scopes(project):
        for step in body.steps:
            sites.append(("step", owner_path.segments, step.name))
    for pou in project.pous:
        referenced = set()
        for _, body in _sfc_scopes_of(pou):
            for step in body.steps:
                referenced.update(a.action_ref for a in step.associations)
        for action in pou.actions:
            if action.name in referenced:
                sites.append(("action", pou.name, action.name))
    return sites


def _apply_rename_step_or_action(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    if site[0] == "step":
        _, owner_segments, old = site
        owner_path = ArtifactPath(owner_segments)
        new = _fresh_name(project, "STEP")
        owner = resolve_path(project, owner_path)
        body = owner.body
        assert isinstance(body, SfcBody)
        new_steps = tuple(replace(s, name=new) if s.name == old else s for s in body.steps)
        new_transitions = tuple(
            replace(
                t,
                from_steps=tuple(new if n == old else n for n in t.from_steps),
                to_steps=tuple(new if n == old else n for n in t.to_steps),
            )
            for t in body.transitions
        )
        new_owner = replace(owner, body=replace(body, steps=new_steps, transitions=new_transitions))
        mutated = _rebuild_at(project, owner_path, new_owner)
        records = [
            MutationRecord(
                "rename-step-or-action",
                origin_path=owner_path.child("step", old),
                mutant_path=owner_path.child("step", new),
            )
        ]
        forward, backward = _key_rename_maps(owner_segments, "step", old, new)
        return _Edit(mutated, records, forward, backward)

    _, pou_name, old = site
    new = _fresh_name(project, "ACT")
    pou = next(p for p in project.pous if p.name == pou_name)
    base = _pou_path(pou)
    records = [
        MutationRecord(
            "rename-step-or-action",
            origin_path=base.child("action", old),
            mutant_path=base.child("action", new),
        )
    ]
    new_actions = tuple(replace(a, name=new) if a.name == old else a for a in pou.actions)

    def rename_in_body(body, owner_path):
        if not isinstance(body, SfcBody):
            return body
        new_steps = []
        for step in body.steps:
            if any(a.action_ref == old for a in step.associations):
                new_steps.append(
                    replace(
                        step,
                        associations=tuple(
                            ActionAssociation(a.qualifier, new if a.action_ref == old else a.action_ref)
                            for a in step.associations
                        ),
                    )
                )
                path = owner_path.child("step", step.name)
                records.append(
                    MutationRecord("rename-step-or-action", origin_path=path, mutant_path=path)
                )
            else:
                new_steps.append(step)
        return replace(body, steps=tuple(new_steps))

    new_pou = replace(
        pou,
        actions=tuple(
            replace(a, body=rename_in_body(a.body, base.child("action", a.name)))
            for a in new_actions
        ),
        body=rename_in_body(pou.body, base),
    )
    mutated = _rebuild_at(project, base, new_pou)
    forward, backward = _key_rename_maps(base.segments, "action", old, new)
    return _Edit(mutated, records, forward, backward)


def _unique_in(stmts: tuple[Statement, ...], index: int) -> bool:
    return stmts.count(stmts[index]) == 1


def _sites_change_literal(project: Project) -> list:
    sites = []
    for owner_path, stmts in _statement_scopes(project):
        for index, stmt in enumerate(stmts):
            if _literal_positions(statement_expressions(stmt)) and _unique_in(stmts, index):
                sites.append(("stmt", owner_path.segments, index))
    for owner_path, body in _sfc_scopes(project):
        for index, transition in enumerate(body.transitions):
            if (
                transition.condition is not None
                and _literal_positions((transition.condition,))
                and body.transitions.count(transition) == 1
            ):
                sites.append(("transition", owner_path.segments, index))
    for pou in project.pous:
        keys = _var_keys(pou.variables)
        for key, variable in zip(keys, pou.variables):
            if variable.initial_value is not None:
                sites.append(("variable", _pou_path(pou).segments, key))
    keys = _var_keys(project.global_variables)
    for key, variable in zip(keys, project.global_variables):
        if variable.initial_value is not None:
            sites.append(("variable", (), key))
    return sites


def _apply_change_literal(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    kind, owner_segments, key = site
    owner_path = ArtifactPath(owner_segments)
    if kind == "variable":
        path = owner_path.child("variable", key)
        variable = resolve_path(project, path)
        new_variable = replace(variable, initial_value=_mutate_literal(variable.initial_value, rng))
        mutated = _rebuild_at(project, path, new_variable)
        return _Edit(mutated, [MutationRecord("change-literal-value", path, path)])
    if kind == "transition":
        path = owner_path.child("transition", key)
        transition = resolve_path(project, path)
        count = _literal_positions((transition.condition,))
        counter = [rng.randrange(count)]
        new_condition = _replace_nth_literal(
            transition.condition, counter, lambda lit: _mutate_literal(lit, rng)
        )
        body = resolve_path(project, owner_path).body
        new_transition = replace(transition, condition=new_condition)
        if body.transitions.count(new_transition):
            return None
        mutated = _rebuild_at(project, path, new_transition)
        return _Edit(mutated, [MutationRecord("change-literal-value", path, path)])
    path = owner_path.child("statement", key)
    stmt = resolve_path(project, path)
    siblings = _flat_siblings(project, owner_path)
    count = _literal_positions(statement_expressions(stmt))
    for _ in range(20):
        counter = [rng.randrange(count)]
        new_stmt = _rewrite_statement_exprs(
            stmt, lambda e: _replace_nth_literal(e, counter, lambda lit: _mutate_literal(lit, rng))
        )
        if new_stmt != stmt and siblings.count(new_stmt) == 0:
            mutated = _rebuild_at(project, path, new_stmt)
            return _Edit(mutated, [MutationRecord("change-literal-value", path, path)])
    return None


def _flat_siblings(project: Project, owner_path: ArtifactPath) -> tuple[Statement, ...]:
    owner = resolve_path(project, owner_path)
    if isinstance(owner, Statement):
        return statement_sub_statements(owner)
    if isinstance(owner, FbdNetwork):
        return owner.nested_st.statements if owner.nested_st else ()
    body = owner.body
    return body.statements if isinstance(body, StBody) else ()


def _sites_change_operator(project: Project) -> list:
    sites = []
    for owner_path, stmts in _statement_scopes(project):
        for index, stmt in enumerate(stmts):
            if _family_operator_positions(statement_expressions(stmt)) and _unique_in(stmts, index):
                sites.append(("stmt", owner_path.segments, index))
    for owner_path, body in _sfc_scopes(project):
        for index, transition in enumerate(body.transitions):
            if (
                transition.condition is not None
                and _family_operator_positions((transition.condition,))
                and body.transitions.count(transition) == 1
            ):
                sites.append(("transition", owner_path.segments, index))
    return sites


def _apply_change_operator(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    kind, owner_segments, key = site
    owner_path = ArtifactPath(owner_segments)
    if kind == "transition":
        path = owner_path.child("transition", key)
        transition = resolve_path(project, path)
        count = _family_operator_positions((transition.condition,))
        counter = [rng.randrange(count)]
        new_transition = replace(
            transition, condition=_replace_nth_operator(transition.condition, counter, rng)
        )
        body = resolve_path(project, owner_path).body
        if body.transitions.count(new_transition):
            return None
        mutated = _rebuild_at(project, path, new_transition)
        return _Edit(mutated, [MutationRecord("change-binary-operator", path, path)])
    path = owner_path.child("statement", key)
    stmt = resolve_path(project, path)
    siblings = _flat_siblings(project, owner_path)
    count = _family_operator_positions(statement_expressions(stmt))
    for _ in range(20):
        counter = [rng.randrange(count)]
        new_stmt = _rewrite_statement_exprs(stmt, lambda e: _replace_nth_operator(e, counter, rng))
        if new_stmt != stmt and siblings.count(new_stmt) == 0:
            mutated = _rebuild_at(project, path, new_stmt)
            return _Edit(mutated, [MutationRecord("change-binary-operator", path, path)])
    return None


def _insertion_scopes(project: Project) -> list[tuple[tuple, str]]:
    """Statement containers that can take a fresh assignment: POU/action ST
    bodies, FBD nested bodies and compound statements' children."""
    scopes: list[tuple[tuple, str]] = []

    def visit_statement(stmt: Statement, path: ArtifactPath) -> None:
        if stmt.kind in ("ifStmt", "whileStmt", "forStmt"):
            scopes.append((path.segments, "children"))
        for index, sub in enumerate(statement_sub_statements(stmt)):
            visit_statement(sub, path.child("statement", index))

    for pou in project.pous:
        base = _pou_path(pou)
        if isinstance(pou.body, StBody):
            scopes.append((base.segments, "body"))
            for index, stmt in enumerate(pou.body.statements):
                visit_statement(stmt, base.child("statement", index))
        for action in pou.actions:
            if isinstance(action.body, StBody):
                action_path = base.child("action", action.name)
                scopes.append((action_path.segments, "body"))
                for index, stmt in enumerate(action.body.statements):
                    visit_statement(stmt, action_path.child("statement", index))
        if isinstance(pou.body, FbdBody):
            for index, network in enumerate(pou.body.networks):
                if network.nested_st is not None:
                    scopes.append((base.child("network", index).segments, "body"))
    return scopes


def _enclosing_pou(project: Project, path: ArtifactPath) -> Optional[Pou]:
    if path.segments and path.segments[0][0] == "pou":
        for pou in project.pous:
            if pou.name == path.segments[0][1]:
                return pou
    return None


def _sites_add_statement(project: Project) -> list:
    sites = []
    for segments, slot in _insertion_scopes(project):
        pou = _enclosing_pou(project, ArtifactPath(segments))
        if any(v.data_type in _SIMPLE_TYPES for v in _scope_variables(project, pou)):
            sites.append((segments, slot))
    return sites


def _default_literal(data_type: str, rng: random.Random) -> Literal:
    if data_type == "BOOL":
        return Literal("TRUE" if rng.randrange(2) else "FALSE", "BOOL")
    if data_type == "TIME":
        return Literal(f"T#{rng.randrange(1, 60)}S", "TIME")
    if data_type == "REAL":
        return Literal(f"{rng.randrange(1, 1000)}.0", "REAL")
    return Literal(str(rng.randrange(1, 1_000_000)), "INT")


def _apply_add_statement(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    owner_segments, slot = site
    owner_path = ArtifactPath(owner_segments)
    owner = resolve_path(project, owner_path)
    pou = _enclosing_pou(project, owner_path)
    candidates = [v for v in _scope_variables(project, pou) if v.data_type in _SIMPLE_TYPES]
    if not candidates:
        return None
    siblings = _flat_siblings(project, owner_path)
    if slot == "children":
        limit = len(owner.children) + 1
    else:
        limit = len(siblings) + 1
    index = rng.randrange(limit)
    for _ in range(50):
        target = candidates[rng.randrange(len(candidates))]
        stmt = Statement(
            kind="assignment", target=target.name, value=_default_literal(target.data_type, rng)
        )
        if siblings.count(stmt) == 0:
            mutated = _insert_statement(project, owner_path, index, stmt)
            forward, backward = _index_shift_maps(owner_path, "statement", inserted=(index,))
            return _Edit(
                mutated,
                [
                    MutationRecord(
                        "add-statement",
                        origin_path=None,
                        mutant_path=owner_path.child("statement", index),
                    )
                ],
                forward,
                backward,
            )
    return None


def _sites_remove_statement(project: Project) -> list:
    sites = []
    for owner_path, stmts in _statement_scopes(project):
        for index in range(len(stmts)):
            if _unique_in(stmts, index):
                sites.append((owner_path.segments, index))
    return sites


def _apply_remove_statement(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    owner_segments, index = site
    owner_path = ArtifactPath(owner_segments)
    path = owner_path.child("statement", index)
    mutated = _rebuild_at(project, path, None)
    forward, backward = _index_shift_maps(owner_path, "statement", removed=(index,))
    return _Edit(
        mutated,
        [MutationRecord("remove-statement", origin_path=path, mutant_path=None)],
        forward,
        backward,
    )


def _sites_add_variable(project: Project) -> list:
    return [None] + [pou.name for pou in project.pous]


def _apply_add_variable(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    name = _fresh_name(project, "VAR")
    data_type = _SIMPLE_TYPES[rng.randrange(len(_SIMPLE_TYPES))]
    initial = _default_literal(data_type, rng) if rng.randrange(2) else None
    if site is None:
        variable = VariableDecl(name=name, data_type=data_type, section="global", initial_value=initial)
        mutated = replace(project, global_variables=project.global_variables + (variable,))
        path = ROOT_PATH.child("variable", name)
    else:
        variable = VariableDecl(name=name, data_type=data_type, section="local", initial_value=initial)
        pou = next(p for p in project.pous if p.name == site)
        mutated = _rebuild_at(
            project, _pou_path(pou), replace(pou, variables=pou.variables + (variable,))
        )
        path = _pou_path(pou).child("variable", name)
    return _Edit(mutated, [MutationRecord("add-variable", origin_path=None, mutant_path=path)])


def _non_statement_references(pou: Pou, name: str) -> bool:
    """True if the POU references the variable anywhere outside plain ST
    statements (transitions, contacts, coils, blocks, FBD endpoints)."""
    prefix = name + "."

    def refers(identifier: Optional[str]) -> bool:
        return identifier is not None and (identifier == name or identifier.startswith(prefix))

    for _, body in (("", pou.body),) + tuple(("", a.body) for a in pou.actions):
        if isinstance(body, SfcBody):
            for transition in body.transitions:
                if transition.condition is not None and _expr_references(transition.condition, name):
                    return True
        elif isinstance(body, LdBody):
            for network in body.networks:
                for element in network.elements:
                    if isinstance(element, (Contact, Coil)) and refers(element.variable):
                        return True
                    if isinstance(element, EmbeddedBlock) and refers(element.block.instance_name):
                        return True
        elif isinstance(body, FbdBody):
            for network in body.networks:
                for block in network.blocks:
                    if refers(block.instance_name):
                        return True
                for endpoint in network.endpoints:
                    if _expr_references(endpoint, name):
                        return True
    return False


def _sites_remove_variable(project: Project) -> list:
    sites = []
    for variable in project.global_variables:
        if not _section_unique(project.global_variables, variable.name):
            continue
        if any(
            _non_statement_references(pou, variable.name)
            for pou in project.pous
            if not any(v.name == variable.name for v in pou.variables)
        ):
            continue
        sites.append((None, variable.name))
    for pou in project.pous:
        for variable in pou.variables:
            if not _section_unique(pou.variables, variable.name):
                continue
            if _non_statement_references(pou, variable.name):
                continue
            sites.append((pou.name, variable.name))
    return sites


def _top_level_referencing_statements(
    project: Project, pous: list[Pou], name: str
) -> list[ArtifactPath]:
    """Paths of the top-most statements whose own content references the
    variable (descendants of a removed statement vanish with it)."""
    removal: list[ArtifactPath] = []

    def visit(stmt: Statement, path: ArtifactPath) -> None:
        if _own_references(stmt, name):
            removal.append(path)
            return
        for index, sub in enumerate(statement_sub_statements(stmt)):
            visit(sub, path.child("statement", index))

    for pou in pous:
        base = _pou_path(pou)
        if isinstance(pou.body, StBody):
            for index, stmt in enumerate(pou.body.statements):
                visit(stmt, base.child("statement", index))
        for action in pou.actions:
            if isinstance(action.body, StBody):
                for index, stmt in enumerate(action.body.statements):
                    visit(stmt, base.child("action", action.name).child("statement", index))
        if isinstance(pou.body, FbdBody):
            for net_index, network in enumerate(pou.body.networks):
                if network.nested_st is not None:
                    for index, stmt in enumerate(network.nested_st.statements):
                        visit(stmt, base.child("network", net_index).child("statement", index))
    return removal


def _apply_remove_variable(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    scope_pou_name, name = site
    if scope_pou_name is None:
        affected = [
            pou for pou in project.pous if not any(v.name == name for v in pou.variables)
        ]
        decl_prefix = ROOT_PATH
    else:
        affected = [pou for pou in project.pous if pou.name == scope_pou_name]
        decl_prefix = ROOT_PATH.child("pou", scope_pou_name)

    removal_paths = _top_level_referencing_statements(project, affected, name)
    records = [
        MutationRecord(
            "remove-variable", origin_path=decl_prefix.child("variable", name), mutant_path=None
        )
    ]
    maps_forward: list[PathMap] = []
    maps_backward: list[PathMap] = []

    mutated = project
    # remove deeper paths first so shallower flat indices stay valid
    by_owner: dict[tuple, list[int]] = {}
    for path in removal_paths:
        by_owner.setdefault(path.segments[:-1], []).append(path.segments[-1][1])
        records.append(MutationRecord("remove-variable", origin_path=path, mutant_path=None))
    for owner_segments in sorted(by_owner, key=len, reverse=True):
        indices = sorted(by_owner[owner_segments], reverse=True)
        for index in indices:
            mutated = _rebuild_at(
                mutated, ArtifactPath(owner_segments).child("statement", index), None
            )
        forward, backward = _index_shift_maps(
            ArtifactPath(owner_segments), "statement", removed=tuple(sorted(indices))
        )
        maps_forward.append(forward)
        maps_backward.insert(0, backward)

    # drop the declaration itself
    decl_path = decl_prefix.child("variable", name)
    mutated = _rebuild_at(mutated, decl_path, None)

    def decl_forward(path: ArtifactPath) -> Optional[ArtifactPath]:
        if path == decl_path or str(path).startswith(str(decl_path) + "/"):
            return None
        return path

    maps_forward.append(decl_forward)
    return _Edit(mutated, records, _compose(maps_forward), _compose(maps_backward))


def _sites_add_sfc_step(project: Project) -> list:
    return [
        owner_path.segments for owner_path, body in _sfc_scopes(project) if body.steps
    ]


def _apply_add_sfc_step(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    owner_path = ArtifactPath(site)
    owner = resolve_path(project, owner_path)
    body = owner.body
    assert isinstance(body, SfcBody)
    name = _fresh_name(project, "STEP")
    source = body.steps[rng.randrange(len(body.steps))]
    new_step = Step(name=name, is_initial=False)
    new_transition = Transition(
        from_steps=(source.name,), to_steps=(name,), condition=Literal("TRUE", "BOOL")
    )
    new_body = replace(
        body, steps=body.steps + (new_step,), transitions=body.transitions + (new_transition,)
    )
    mutated = _rebuild_at(project, owner_path, replace(owner, body=new_body))
    records = [
        MutationRecord("add-sfc-step", origin_path=None, mutant_path=owner_path.child("step", name)),
        MutationRecord(
            "add-sfc-step",
            origin_path=None,
            mutant_path=owner_path.child("transition", len(body.transitions)),
        ),
    ]
    return _Edit(mutated, records)


def _sites_remove_sfc_step(project: Project) -> list:
    sites = []
    for owner_path, body in _sfc_scopes(project):
        for step in body.steps:
            if step.is_initial:
                continue
            incoming = [
                i for i, t in enumerate(body.transitions) if step.name in t.to_steps
            ]
            outgoing = [
                i for i, t in enumerate(body.transitions) if step.name in t.from_steps
            ]
            if len(incoming) != 1 or len(outgoing) != 1 or incoming[0] == outgoing[0]:
                continue
            t_in = body.transitions[incoming[0]]
            t_out = body.transitions[outgoing[0]]
            if t_in.to_steps != (step.name,) or t_out.from_steps != (step.name,):
                continue
            if t_in.condition is None or t_out.condition is None:
                continue
            # conditions must be unique or matching could misattribute
            conditions = [t.condition for t in body.transitions]
            if conditions.count(t_in.condition) != 1 or conditions.count(t_out.condition) != 1:
                continue
            merged = BinaryOp("AND", t_in.condition, t_out.condition)
            if merged in conditions:
                continue
            sites.append((owner_path.segments, step.name, incoming[0], outgoing[0]))
    return sites


def _apply_remove_sfc_step(project: Project, site, rng: random.Random) -> Optional[_Edit]:
    owner_segments, step_name, in_index, out_index = site
    owner_path = ArtifactPath(owner_segments)
    owner = resolve_path(project, owner_path)
    body = owner.body
    assert isinstance(body, SfcBody)
    t_in = body.transitions[in_index]
    t_out = body.transitions[out_index]
    merged = replace(
        t_in,
        to_steps=t_out.to_steps,
        condition=BinaryOp("AND", t_in.condition, t_out.condition),
    )
    new_transitions = tuple(
        transition
        for index, transition in enumerate(body.transitions)
        if index != out_index
    )
    merged_index = in_index - (1 if out_index < in_index else 0)
    new_transitions = new_transitions[:merged_index] + (merged,) + new_transitions[merged_index + 1 :]
    new_steps = tuple(step for step in body.steps if step.name != step_name)
    new_body = replace(body, steps=new_steps, transitions=new_transitions)
    mutated = _rebuild_at(project, owner_path, replace(owner, body=new_body))
    records = [
        MutationRecord(
            "remove-sfc-step", origin_path=owner_path.child("step", step_name), mutant_path=None
        ),
        MutationRecord(
            "remove-sfc-step", origin_path=owner_path.child("transition", out_index), mutant_path=None
        ),
        MutationRecord(
            "remove-sfc-step",
            origin_path=owner_path.child("transition", in_index),
            mutant_path=owner_path.child("transition", merged_index),
        ),
    ]
    transition_forward, transition_backward = _index_shift_maps(
        owner_path, "transition", removed=(out_index,)
    )
    step_path = owner_path.child("step", step_name)

    def forward(path: ArtifactPath) -> Optional[ArtifactPath]:
        if path == step_path or str(path).startswith(str(step_path) + "/"):
            return None
        return transition_forward(path)

    return _Edit(mutated, records, forward, transition_backward)


_OPERATOR_IMPLS = {
    "rename-variable": (_sites_rename_variable, _apply_rename_variable),
    "rename-pou": (_sites_rename_pou, _apply_rename_pou),
    "rename-step-or-action": (_sites_rename_step_or_action, _apply_rename_step_or_action),
    "change-literal-value": (_sites_change_literal, _apply_change_literal),
    "change-binary-operator": (_sites_change_operator, _apply_change_operator),
    "add-statement": (_sites_add_statement, _apply_add_statement),
    "remove-statement": (_sites_remove_statement, _apply_remove_statement),
    "add-variable": (_sites_add_variable, _apply_add_variable),
    "remove-variable": (_sites_remove_variable, _apply_remove_variable),
    "add-sfc-step": (_sites_add_sfc_step, _apply_add_sfc_step),
    "remove-sfc-step": (_sites_remove_sfc_step, _apply_remove_sfc_step),
}


# --------------------------------------------------------------------------
# Mutation driver


def mutate(
    seed: Project, category: str, count: int, rng_seed: int
) -> tuple[Project, MutationContext]:
    """Copy the seed and inject ``count`` random mutations of one category.

    Deterministic: the same (seed, category, count, rng_seed) yields the
    same mutant and context.  If conflicting draws exhaust the retry
    budget, fewer mutations are applied and recorded.
    """
    if category not in OPERATORS_BY_CATEGORY:
        raise MutationError(f"unknown category {category!r} (expected T2 or T3)")
    if count < 1:
        raise MutationError("count must be a positive integer")
    rng = random.Random(rng_seed)
    current = seed
    records: list[MutationRecord] = []
    backward_maps: list[PathMap] = []
    applied = 0
    attempts = 0
    while applied < count and attempts < 20 * count:
        attempts += 1
        applicable = []
        for operator_id in OPERATORS_BY_CATEGORY[category]:
            find_sites, _ = _OPERATOR_IMPLS[operator_id]
            sites = find_sites(current)
            if sites:
                applicable.append((operator_id, sites))
        if not applicable:
            if applied:
                break
            pool = ", ".join(OPERATORS_BY_CATEGORY[category])
            raise MutationError(f"seed has no mutable sites for any of: {pool}")
        operator_id, sites = applicable[rng.randrange(len(applicable))]
        site = sites[rng.randrange(len(sites))]
        _, apply = _OPERATOR_IMPLS[operator_id]
        edit = apply(current, site, rng)
        if edit is None:
            continue
        # rebase earlier records onto the new mutant coordinates
        rebased = []
        conflict = False
        for record in records:
            mutant_path = record.mutant_path
            if mutant_path is not None:
                mutant_path = edit.forward(mutant_path)
                if mutant_path is None:
                    conflict = True
                    break
            rebased.append(replace(record, mutant_path=mutant_path))
        if conflict:
            continue  # this draw destroyed an earlier record; redraw
        records = rebased
        # express new records' origin paths in seed coordinates
        to_seed = _compose(list(reversed(backward_maps)))
        for record in edit.records:
            origin = record.origin_path
            if origin is not None:
                origin = to_seed(origin)
                if origin is None:
                    raise MutationError("internal error: origin path lost during rebase")
            records.append(replace(record, origin_path=origin))
        backward_maps.append(edit.backward)
        current = edit.project
        applied += 1

    validate_project(current)
    context = MutationContext(
        seed_name=seed.name, rng_seed=rng_seed, category=category, records=tuple(records)
    )
    _check_context(seed, current, context)
    return current, context


def _check_context(seed: Project, mutant: Project, context: MutationContext) -> None:
    for record in context.records:
        if record.origin_path is not None:
            resolve_path(seed, record.origin_path)
        if record.mutant_path is not None:
            resolve_path(mutant, record.mutant_path)
        if record.origin_path is None and record.mutant_path is None:
            raise MutationError("record must carry an origin or a mutant path")


# --------------------------------------------------------------------------
# Detection scoring


@dataclass(frozen=True)
class EvalOutcome:
    tp: int
    fp: int
    fn: int

    @property
    def precision(self) -> float:
        return self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0

    @property
    def recall(self) -> float:
        return self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0


DetectionKey = tuple[str, str]  # ('seed'|'mutant', path string)
DetectionItem = frozenset  # keys of one changed artifact (pair or unmatched)


def detected_changes(root: ArtifactPairNode) -> list[DetectionItem]:
    """The detector's changed artifacts.

    A matched pair whose own attributes show a difference is one changed
    artifact addressed on both sides; an unmatched artifact is one changed
    artifact addressed on its side only.  Pairs whose similarity dropped
    only through their children are not themselves changed; the changed
    descendants carry the signal.
    """
    items: list[DetectionItem] = []

    def visit(pair: ArtifactPairNode) -> None:
        if any(attribute.similarity < 1.0 for attribute in pair.attribute_children()):
            items.append(frozenset({("seed", str(pair.x)), ("mutant", str(pair.y))}))
        for option_node in pair.option_children():
            if option_node.match is None:
                raise MutationError("similarity tree must be propagated before scoring")
            for index in option_node.matched_indices or ():
                visit(option_node.children[index])
            for path in option_node.match.unmatched_left:
                items.append(frozenset({("seed", str(path))}))
            for path in option_node.match.unmatched_right:
                items.append(frozenset({("mutant", str(path))}))

    visit(root)
    return items


def record_keys(record: MutationRecord) -> DetectionItem:
    keys = set()
    if record.origin_path is not None:
        keys.add(("seed", str(record.origin_path)))
    if record.mutant_path is not None:
        keys.add(("mutant", str(record.mutant_path)))
    return frozenset(keys)


def score_detection(
    items: list[DetectionItem], records: tuple[MutationRecord, ...]
) -> tuple[EvalOutcome, dict[str, EvalOutcome]]:
    """Artifact-level scoring: a record is detected when some detection
    item addresses it; an item is spurious when it addresses no record."""
    all_truth_keys: set[DetectionKey] = set()
    for record in records:
        all_truth_keys |= record_keys(record)
    detected_keys: set[DetectionKey] = set()
    fp = 0
    for item in items:
        if item & all_truth_keys:
            detected_keys |= item
        else:
            fp += 1
    per_operator: dict[str, list[int]] = {}
    tp = fn = 0
    for record in records:
        counts = per_operator.setdefault(record.operator_id, [0, 0, 0])
        if record_keys(record) & detected_keys:
            tp += 1
            counts[0] += 1
        else:
            fn += 1
            counts[2] += 1
    if fp and per_operator:
        per_operator[sorted(per_operator)[0]][1] += fp
    return (
        EvalOutcome(tp=tp, fp=fp, fn=fn),
        {op: EvalOutcome(tp=c[0], fp=c[1], fn=c[2]) for op, c in sorted(per_operator.items())},
    )


def evaluate_detection(
    seed: Project,
    mutant: Project,
    context: MutationContext,
    metric: Metric,
    lam: float = 1.0,
) -> EvalOutcome:
    """Score the detector against the mutation ground truth.

    ``lam`` tags the run configuration in reports; the changed-artifact set
    itself is threshold-free (any attribute difference or unmatched
    artifact counts as a detection).
    """
    del lam
    if context.seed_name != seed.name:
        raise MutationError(
            f"context was recorded for seed {context.seed_name!r}, not {seed.name!r}"
        )
    _check_context(seed, mutant, context)
    items = detected_changes(compare_inter(seed, mutant, metric))
    outcome, _ = score_detection(items, context.records)
    return outcome


def evaluate_per_operator(
    seed: Project, mutant: Project, context: MutationContext, metric: Metric
) -> tuple[EvalOutcome, dict[str, EvalOutcome]]:
    """Outcome plus a per-operator TP/FN split (FPs follow the iteration)."""
    items = detected_changes(compare_inter(seed, mutant, metric))
    return score_detection(items, context.records)


# --------------------------------------------------------------------------
# Campaign


@dataclass
class CampaignResult:
    iterations: int
    category: str
    metric_name: str
    rng_seed: int
    outcome: EvalOutcome
    per_operator: dict[str, EvalOutcome]
    wall_clock_seconds: float


def derive_iteration_seed(rng_seed: int, iteration: int) -> int:
    return (rng_seed * 1_000_003 + iteration * 7_919 + 1) & 0x7FFFFFFF


def run_iteration(
    seeds: list[Project], iteration: int, category: str, metric: Metric, rng_seed: int
) -> tuple[EvalOutcome, dict[str, EvalOutcome]]:
    seed = seeds[iteration % len(seeds)]
    mutant, context = mutate(seed, category, 1, derive_iteration_seed(rng_seed, iteration))
    return evaluate_per_operator(seed, mutant, context, metric)


def run_campaign(
    seeds: list[Project],
    iterations: int,
    category: str,
    metric: Metric,
    lam: float = 1.0,
    rng_seed: int = 1,
    jobs: int = 1,
) -> CampaignResult:
    """Mutate/compare/score ``iterations`` times and aggregate the counts."""
    del lam
    if not seeds:
        raise MutationError("campaign needs at least one seed project")
    if iterations < 1:
        raise MutationError("iterations must be >= 1")
    started = time.perf_counter()
    outcomes: list[tuple[EvalOutcome, dict[str, EvalOutcome]]] = []
    if jobs > 1:
        from concurrent.futures import ProcessPoolExecutor

        with ProcessPoolExecutor(max_workers=jobs) as pool:
            futures = [
                pool.submit(run_iteration, seeds, i, category, metric, rng_seed)
                for i in range(iterations)
            ]
            outcomes = [f.result() for f in futures]
    else:
        outcomes = [
            run_iteration(seeds, i, category, metric, rng_seed) for i in range(iterations)
        ]
    tp = fp = fn = 0
    per_operator: dict[str, list[int]] = {}
    for outcome, by_operator in outcomes:
        tp += outcome.tp
        fp += outcome.fp
        fn += outcome.fn
        for operator_id, op_outcome in by_operator.items():
            counts = per_operator.setdefault(operator_id, [0, 0, 0])
            counts[0] += op_outcome.tp
            counts[1] += op_outcome.fp
            counts[2] += op_outcome.fn
    return CampaignResult(
        iterations=iterations,
        category=category,
        metric_name=metric.name,
        rng_seed=rng_seed,
        outcome=EvalOutcome(tp=tp, fp=fp, fn=fn),
        per_operator={
            op: EvalOutcome(tp=c[0], fp=c[1], fn=c[2]) for op, c in sorted(per_operator.items())
        },
        wall_clock_seconds=time.perf_counter() - started,
    )


# --------------------------------------------------------------------------
# Context serialization


def dump_context(context: MutationContext) -> bytes:
    document = {
        "seedName": context.seed_name,
        "rngSeed": context.rng_seed,
        "category": context.category,
        "records": [
            {
                "origin": str(r.origin_path) if r.origin_path is not None else None,
                "mutant": str(r.mutant_path) if r.mutant_path is not None else None,
                "operator": r.operator_id,
            }
            for r in context.records
        ],
    }
    return (json.dumps(document, indent=2) + "\n").encode("utf-8")


def load_context(data: bytes | str) -> MutationContext:
    document = json.loads(data)
    return MutationContext(
        seed_name=document["seedName"],
        rng_seed=int(document["rngSeed"]),
        category=document["category"],
        records=tuple(
            MutationRecord(
                operator_id=entry["operator"],
                origin_path=ArtifactPath.parse(entry["origin"]) if entry["origin"] else None,
                mutant_path=ArtifactPath.parse(entry["mutant"]) if entry["mutant"] else None,
            )
            for entry in document["records"]
        ),
    )


def campaign_report_dict(result: CampaignResult) -> dict:
    return {
        "iterations": result.iterations,
        "category": result.category,
        "metric": result.metric_name,
        "rngSeed": result.rng_seed,
        "truePositives": result.outcome.tp,
        "falsePositives": result.outcome.fp,
        "falseNegatives": result.outcome.fn,
        "precision": round(result.outcome.precision, 4),
        "recall": round(result.outcome.recall, 4),
        "perOperator": {
            op: {
                "truePositives": o.tp,
                "falsePositives": o.fp,
                "falseNegatives": o.fn,
                "recall": round(o.recall, 4),
            }
            for op, o in result.per_operator.items()
        },
        "wallClockSeconds": round(result.wall_clock_seconds, 3),
    }


def campaign_report_text(result: CampaignResult) -> str:
    lines = [
        f"mutation campaign: {result.iterations} iterations, category {result.category}, "
        f"metric {result.metric_name}, seed {result.rng_seed}",
        f"  TP {result.outcome.tp}  FP {result.outcome.fp}  FN {result.outcome.fn}",
        f"  precision {result.outcome.precision:.4f}  recall {result.outcome.recall:.4f}",
        "  per operator:",
    ]
    for operator_id, outcome in result.per_operator.items():
        lines.append(
            f"    {operator_id:24s} tp {outcome.tp:6d}  fn {outcome.fn:6d}  "
            f"recall {outcome.recall:.4f}"
        )
    lines.append(f"  wall clock: {result.wall_clock_seconds:.3f}s")
    return "\n".join(lines) + "\n"
