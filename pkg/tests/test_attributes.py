import random

import pytest

from plcclone.attributes import (
    ATTRIBUTES,
    AttributeError_,
    encode_expression,
    eval_attribute,
    tree_similarity,
)
from plcclone.model import (
    BinaryOp,
    Literal,
    Pou,
    Statement,
    StBody,
    UnaryOp,
    VariableDecl,
    VarRef,
    expression_children,
)
from plcclone.stparser import parse_expression, parse_structured_text


def make_pou(name, statement_count):
    statements = tuple(
        Statement(kind="assignment", target="x", value=Literal(str(i), "INT"))
        for i in range(statement_count)
    )
    return Pou(
        name=name, kind="program", variables=(VariableDecl("x", "INT"),), body=StBody(statements)
    )


def test_var_name_exact_match():
    a = VariableDecl("A", "BOOL")
    b = VariableDecl("B", "BOOL")
    assert eval_attribute("var-name", a, a) == 1.0
    assert eval_attribute("var-name", a, b) == 0.0


def test_statement_count_ratio_93_95():
    x = make_pou("X", 93)
    y = make_pou("Y", 95)
    value = eval_attribute("st-statement-count", x, y)
    assert value == 93 / 95
    assert abs(value - 0.9789) < 0.0001


def test_identifier_levenshtein():
    assert eval_attribute("identifier-levenshtein", VariableDecl("ABC", "INT"), VariableDecl("ABC", "INT")) == 1.0
    assert eval_attribute("identifier-levenshtein", VariableDecl("ABC", "INT"), VariableDecl("ABD", "INT")) == pytest.approx(2 / 3)


def test_ratio_zero_conventions():
    empty = make_pou("E", 0)
    full = make_pou("F", 5)
    assert eval_attribute("st-statement-count", empty, empty) == 1.0
    assert eval_attribute("st-statement-count", full, empty) == 0.0


def test_type_mismatch_raises():
    with pytest.raises(AttributeError_):
        eval_attribute("var-name", make_pou("X", 1), make_pou("Y", 1))
    with pytest.raises(AttributeError_):
        eval_attribute("no-such-attribute", VariableDecl("A", "INT"), VariableDecl("A", "INT"))


def test_catalog_size_and_grouping():
    # 36 cataloged attributes plus identifier-levenshtein
    assert len(ATTRIBUTES) == 37
    by_type = {}
    for definition in ATTRIBUTES.values():
        by_type.setdefault(definition.artifact_type, []).append(definition.attribute_id)
    assert len(by_type["pou"]) == 9  # 3 + the 6 per-language count attributes
    assert len(by_type["variable"]) == 5
    assert len(by_type["statement"]) == 9
    assert len(by_type["step"]) == 3
    assert len(by_type["transition"]) == 1
    assert len(by_type["network"]) == 3
    assert len(by_type["contact"]) == 2
    assert len(by_type["coil"]) == 2
    assert len(by_type["block"]) == 3


# --- tree edit distance -----------------------------------------------------


def naive_tree_distance(a, b) -> int:
    """Independent oracle: direct recursion on expression trees."""

    def size(node):
        return 1 + sum(size(child) for child in expression_children(node))

    def label(node):
        if isinstance(node, BinaryOp):
            return ("op", node.operator)
        if isinstance(node, UnaryOp):
            return ("u", node.operator)
        if isinstance(node, Literal):
            return ("lit", node.type_name, node.value)
        if isinstance(node, VarRef):
            return ("var",)  # statement structure encoding is name-blind
        return ("call", node.name)

    def align(xs, ys):
        if not xs:
            return sum(size(y) for y in ys)
        if not ys:
            return sum(size(x) for x in xs)
        return min(
            dist(xs[0], ys[0]) + align(xs[1:], ys[1:]),
            size(xs[0]) + align(xs[1:], ys),
            size(ys[0]) + align(xs, ys[1:]),
        )

    def dist(x, y):
        base = 0 if label(x) == label(y) else 1
        return base + align(expression_children(x), expression_children(y))

    return dist(a, b)


def ted_similarity(text_a: str, text_b: str) -> float:
    a = parse_expression(text_a)
    b = parse_expression(text_b)
    return tree_similarity(encode_expression(a), encode_expression(b))


def test_tree_similarity_hand_computed():
    # A AND B vs A AND (B OR C): relabel B->OR (1) + insert two leaves (2),
    # sizes 3 and 5 -> 1 - 3/5
    assert ted_similarity("A AND B", "A AND (B OR C)") == pytest.approx(0.4)
    assert ted_similarity("A AND B", "A AND B") == 1.0
    # one extra literal: X + 1 vs X + 1 + 1: dist 3 (relabel + via oracle), sizes 3/5
    assert ted_similarity("x + 1", "x + 1 + 1") == pytest.approx(
        1 - naive_tree_distance(parse_expression("x + 1"), parse_expression("x + 1 + 1")) / 5
    )


def random_expression(rng: random.Random, depth: int):
    choice = rng.randrange(5 if depth > 0 else 2)
    if choice == 0:
        return Literal(str(rng.randrange(4)), "INT")
    if choice == 1:
        return VarRef(rng.choice("abcd"))
    if choice == 2:
        return UnaryOp("NOT", random_expression(rng, depth - 1))
    if choice == 3:
        return BinaryOp(
            rng.choice(("AND", "OR", "+")),
            random_expression(rng, depth - 1),
            random_expression(rng, depth - 1),
        )
    return BinaryOp("=", random_expression(rng, depth - 1), Literal("0", "INT"))


def test_tree_distance_matches_naive_oracle():
    from plcclone import kernels

    rng = random.Random(2024)
    for _ in range(300):
        a = random_expression(rng, 3)
        b = random_expression(rng, 3)
        enc_a, enc_b = encode_expression(a), encode_expression(b)
        assert kernels.tree_distance(*enc_a, *enc_b) == naive_tree_distance(a, b)


def random_statement(rng: random.Random) -> Statement:
    kind = rng.choice(("assignment", "call", "ifStmt"))
    if kind == "assignment":
        return Statement(kind="assignment", target=rng.choice("xyz"), value=random_expression(rng, 2))
    if kind == "call":
        return Statement(
            kind="call",
            callee=rng.choice(("F", "G")),
            args=tuple(random_expression(rng, 1) for _ in range(rng.randrange(3))),
        )
    return Statement(
        kind="ifStmt",
        condition=random_expression(rng, 2),
        children=(Statement(kind="assignment", target="x", value=Literal("1", "INT")),),
    )


def test_statement_attributes_symmetric_and_reflexive():
    rng = random.Random(99)
    statement_attrs = [d for d in ATTRIBUTES.values() if d.artifact_type == "statement"]
    for _ in range(200):
        x = random_statement(rng)
        y = random_statement(rng)
        for definition in statement_attrs:
            xy = eval_attribute(definition.attribute_id, x, y)
            yx = eval_attribute(definition.attribute_id, y, x)
            xx = eval_attribute(definition.attribute_id, x, x)
            assert 0.0 <= xy <= 1.0
            assert xy == yx
            assert xx == 1.0


def test_variable_attributes_symmetric_and_reflexive():
    rng = random.Random(7)
    variable_attrs = [d for d in ATTRIBUTES.values() if d.artifact_type == "variable"]
    for _ in range(200):
        x = VariableDecl(
            name=rng.choice(("A", "B", "Long")),
            data_type=rng.choice(("BOOL", "INT")),
            section=rng.choice(("local", "input")),
            initial_value=rng.choice((None, Literal("1", "INT"))),
        )
        y = VariableDecl(
            name=rng.choice(("A", "B", "Longer")),
            data_type=rng.choice(("BOOL", "INT")),
            section=rng.choice(("local", "input")),
            initial_value=rng.choice((None, Literal("2", "INT"))),
        )
        for definition in variable_attrs:
            xy = eval_attribute(definition.attribute_id, x, y)
            assert 0.0 <= xy <= 1.0
            assert xy == eval_attribute(definition.attribute_id, y, x)
            assert eval_attribute(definition.attribute_id, x, x) == 1.0


def test_rename_blind_structure_but_named_transition_condition():
    body_a = parse_structured_text("IF Run THEN Speed := Speed + 1; END_IF")
    body_b = parse_structured_text("IF Go THEN Speed := Speed + 1; END_IF")
    stmt_a, stmt_b = body_a.statements[0], body_b.statements[0]
    # a pure identifier rename leaves structure attributes at 1.0 ...
    assert eval_attribute("condition-structure", stmt_a, stmt_b) == 1.0
    assert eval_attribute("expression-structure", stmt_a, stmt_b) == 1.0
    # ... and is carried by the name attributes instead
    assert eval_attribute("var-ref-name", stmt_a, stmt_b) == 0.0
    # transitions have no separate name attribute, so their condition
    # structure keeps identifiers
    from plcclone.model import Transition

    t_a = Transition(("S1",), ("S2",), condition=parse_expression("Run"))
    t_b = Transition(("S1",), ("S2",), condition=parse_expression("Go"))
    assert eval_attribute("transition-condition-structure", t_a, t_b) == 0.0


def test_every_attribute_symmetric_reflexive_bounded():
    # drive every cataloged attribute over real artifacts from the samples
    from plcclone.model import iter_artifacts, artifact_type_of
    from plcclone.samples import CORE_SAMPLES, load_sample

    by_type = {}
    for name in CORE_SAMPLES:
        project, _ = load_sample(name)
        for _, node in iter_artifacts(project):
            tag = artifact_type_of(node)
            if tag:
                by_type.setdefault(tag, []).append(node)

    rng = random.Random(13)
    for definition in ATTRIBUTES.values():
        pool = by_type.get(definition.artifact_type, [])
        if not pool:
            continue
        for _ in range(60):
            x = pool[rng.randrange(len(pool))]
            y = pool[rng.randrange(len(pool))]
            xy = eval_attribute(definition.attribute_id, x, y)
            assert 0.0 <= xy <= 1.0, definition.attribute_id
            assert xy == eval_attribute(definition.attribute_id, y, x), definition.attribute_id
            assert eval_attribute(definition.attribute_id, x, x) == 1.0, definition.attribute_id
