import pytest

from plcclone.model import BinaryOp, FuncCall, Literal, UnaryOp, VarRef
from plcclone.stparser import StSyntaxError, parse_expression, parse_structured_text


def test_listing_style_if_with_nested_expression():
    body = parse_structured_text("IF A THEN D := A AND (B OR C); END_IF")
    assert len(body.statements) == 1
    if_stmt = body.statements[0]
    assert if_stmt.kind == "ifStmt"
    assert if_stmt.condition == VarRef("A")
    (assign,) = if_stmt.children
    assert assign.target == "D"
    assert assign.value == BinaryOp("AND", VarRef("A"), BinaryOp("OR", VarRef("B"), VarRef("C")))


def test_empty_body():
    assert parse_structured_text("").statements == ()


def test_comment_and_whitespace_normalization():
    a = parse_structured_text("x := 1; (*c*) x := 1;")
    b = parse_structured_text("x:=1;\n\nx := 1;")
    c = parse_structured_text("// leading comment\nX := 1; x := 1;")
    assert a == b
    assert a != c  # identifiers stay case-sensitive


def test_keywords_case_insensitive():
    a = parse_structured_text("if A then B := false; end_if")
    b = parse_structured_text("IF A THEN B := FALSE; END_IF")
    assert a == b


# precedence oracle: expression -> fully parenthesized rendering, derived
# from the IEC operator table (one combined comparison tier)
@pytest.mark.parametrize(
    "text,expected",
    [
        ("A AND (B OR C)", BinaryOp("AND", VarRef("A"), BinaryOp("OR", VarRef("B"), VarRef("C")))),
        ("A", VarRef("A")),
        ("A OR B AND C", BinaryOp("OR", VarRef("A"), BinaryOp("AND", VarRef("B"), VarRef("C")))),
        ("A AND B OR C", BinaryOp("OR", BinaryOp("AND", VarRef("A"), VarRef("B")), VarRef("C"))),
        ("A XOR B OR C", BinaryOp("OR", BinaryOp("XOR", VarRef("A"), VarRef("B")), VarRef("C"))),
        (
            "1 + 2 * 3",
            BinaryOp("+", Literal("1", "INT"), BinaryOp("*", Literal("2", "INT"), Literal("3", "INT"))),
        ),
        (
            "a < b AND c > d",
            BinaryOp("AND", BinaryOp("<", VarRef("a"), VarRef("b")), BinaryOp(">", VarRef("c"), VarRef("d"))),
        ),
        (
            "x = y OR NOT z",
            BinaryOp("OR", BinaryOp("=", VarRef("x"), VarRef("y")), UnaryOp("NOT", VarRef("z"))),
        ),
        ("-a * b", BinaryOp("*", UnaryOp("-", VarRef("a")), VarRef("b"))),
        (
            "2 ** 3 ** 2",
            BinaryOp("**", BinaryOp("**", Literal("2", "INT"), Literal("3", "INT")), Literal("2", "INT")),
        ),
        ("NOT a AND b", BinaryOp("AND", UnaryOp("NOT", VarRef("a")), VarRef("b"))),
        (
            "a MOD 2 = 0",
            BinaryOp("=", BinaryOp("MOD", VarRef("a"), Literal("2", "INT")), Literal("0", "INT")),
        ),
    ],
)
def test_expression_precedence(text, expected):
    assert parse_expression(text) == expected


def test_expression_literals():
    assert parse_expression("TRUE") == Literal("TRUE", "BOOL")
    assert parse_expression("3.5") == Literal("3.5", "REAL")
    assert parse_expression("T#5s") == Literal("T#5S", "TIME")
    assert parse_expression("INT#42") == Literal("42", "INT")
    assert parse_expression("'hello'") == Literal("hello", "STRING")


def test_function_call_expression():
    assert parse_expression("MAX(a, b + 1)") == FuncCall(
        "MAX", (VarRef("a"), BinaryOp("+", VarRef("b"), Literal("1", "INT")))
    )


def test_call_statement_with_named_arguments():
    body = parse_structured_text("T1(IN := Enable, PT := T#5S);")
    (call,) = body.statements
    assert call.kind == "call"
    assert call.callee == "T1"
    assert call.args == (VarRef("Enable"), Literal("T#5S", "TIME"))


def test_elsif_desugars_to_nested_if():
    body = parse_structured_text(
        "IF a THEN x := 1; ELSIF b THEN x := 2; ELSE x := 3; END_IF"
    )
    (outer,) = body.statements
    assert outer.kind == "ifStmt"
    assert len(outer.children) == 1
    (nested,) = outer.else_children
    assert nested.kind == "ifStmt"
    assert nested.condition == VarRef("b")
    assert nested.else_children[0].value == Literal("3", "INT")


def test_case_statement():
    body = parse_structured_text(
        "CASE sel OF 0: x := 1; 1, 2: x := 2; ELSE x := 3; END_CASE"
    )
    (case,) = body.statements
    assert case.kind == "caseStmt"
    assert case.condition == VarRef("sel")
    assert [b.labels for b in case.branches] == [
        (Literal("0", "INT"),),
        (Literal("1", "INT"), Literal("2", "INT")),
    ]
    assert len(case.else_children) == 1


def test_for_and_while():
    body = parse_structured_text(
        "FOR i := 0 TO 10 BY 2 DO x := x + i; END_FOR WHILE x > 0 DO x := x - 1; END_WHILE"
    )
    for_stmt, while_stmt = body.statements
    assert for_stmt.kind == "forStmt"
    assert for_stmt.target == "i"
    assert for_stmt.loop_by == Literal("2", "INT")
    assert while_stmt.kind == "whileStmt"
    assert len(while_stmt.children) == 1


def test_repeat_is_a_fatal_error_naming_the_construct():
    with pytest.raises(StSyntaxError, match="REPEAT"):
        parse_structured_text("REPEAT x := 1; UNTIL b END_REPEAT")


def test_syntax_error_reports_position():
    with pytest.raises(StSyntaxError, match="line 2"):
        parse_structured_text("x := 1;\ny := ;")


def test_unbalanced_parenthesis():
    with pytest.raises(StSyntaxError):
        parse_expression("A AND (B OR C")
