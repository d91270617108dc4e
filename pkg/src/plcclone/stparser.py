"""Recursive-descent parser for the Structured Text subset.

Supported statements: assignment, call, IF/ELSIF/ELSE, CASE, FOR, WHILE.
Comments ``(* ... *)`` and ``// ...`` and all whitespace are discarded by
the lexer, so formatting-only variants parse to equal model values.
Keywords are case-insensitive; identifiers keep their case.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Optional

from .model import (
    BinaryOp,
    CaseBranch,
    Expression,
    FuncCall,
    Literal,
    Statement,
    StBody,
    UnaryOp,
    VarRef,
)


class StSyntaxError(Exception):
    """Raised on any ST lexing or parsing failure; carries the position."""

    def __init__(self, message: str, position: int, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.position = position
        self.line = line
        self.column = column


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # ident, int, real, string, time, typedlit, op
    text: str
    position: int


_KEYWORDS = {
    "IF", "THEN", "ELSIF", "ELSE", "END_IF",
    "CASE", "OF", "END_CASE",
    "FOR", "TO", "BY", "DO", "END_FOR",
    "WHILE", "END_WHILE",
    "AND", "OR", "XOR", "NOT", "MOD",
    "TRUE", "FALSE",
}

_UNSUPPORTED = {"REPEAT", "UNTIL", "END_REPEAT", "EXIT", "RETURN", "GOTO"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<comment>\(\*.*?\*\)|//[^\n]*)
  | (?P<time>(?:TIME|T)\#[0-9][0-9a-zA-Z_.]*)
  | (?P<typedlit>[A-Za-z_][A-Za-z0-9_]*\#[A-Za-z0-9_.\-]+)
  | (?P<real>[0-9][0-9_]*\.[0-9][0-9_]*(?:[eE][+-]?[0-9]+)?)
  | (?P<int>[0-9][0-9_]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_.]*)
  | (?P<string>'[^']*')
  | (?P<op>:=|<=|>=|<>|\*\*|[-+*/=<>(),;:])
    """,
    re.VERBOSE | re.DOTALL | re.IGNORECASE,
)


def _line_col(text: str, position: int) -> tuple[int, int]:
    line = text.count("\n", 0, position) + 1
    column = position - (text.rfind("\n", 0, position) + 1) + 1
    return line, column


def tokenize(text: str) -> list[Token]:
    tokens: list[Token] = []
    position = 0
    while position < len(text):
        match = _TOKEN_RE.match(text, position)
        if not match:
            line, column = _line_col(text, position)
            raise StSyntaxError(f"unexpected character {text[position]!r}", position, line, column)
        kind = match.lastgroup
        if kind not in ("ws", "comment"):
            tokens.append(Token(kind, match.group(), position))
        position = match.end()
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.text = text
        self.tokens = tokenize(text)
        self.index = 0

    # ---- token utilities

    def _error(self, message: str) -> StSyntaxError:
        position = self.tokens[self.index].position if self.index < len(self.tokens) else len(self.text)
        line, column = _line_col(self.text, position)
        return StSyntaxError(message, position, line, column)

    def peek(self) -> Optional[Token]:
        return self.tokens[self.index] if self.index < len(self.tokens) else None

    def at_keyword(self, *words: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "ident" and tok.text.upper() in words

    def take_keyword(self, word: str) -> None:
        if not self.at_keyword(word):
            raise self._error(f"expected {word}")
        self.index += 1

    def at_op(self, text: str) -> bool:
        tok = self.peek()
        return tok is not None and tok.kind == "op" and tok.text == text

    def take_op(self, text: str) -> None:
        if not self.at_op(text):
            raise self._error(f"expected {text!r}")
        self.index += 1

    def take(self) -> Token:
        tok = self.peek()
        if tok is None:
            raise self._error("unexpected end of input")
        self.index += 1
        return tok

    # ---- statements

    def parse_body(self) -> StBody:
        statements = self.parse_statements(())
        if self.peek() is not None:
            raise self._error(f"unexpected token {self.peek().text!r}")
        return StBody(tuple(statements))

    def parse_statements(self, stop_words: tuple[str, ...]) -> list[Statement]:
        statements: list[Statement] = []
        while self.peek() is not None:
            if stop_words and self.at_keyword(*stop_words):
                break
            statements.append(self.parse_statement())
        return statements

    def parse_statement(self) -> Statement:
        tok = self.peek()
        if tok is None:
            raise self._error("expected a statement")
        if tok.kind == "ident":
            word = tok.text.upper()
            if word in _UNSUPPORTED:
                raise self._error(f"unsupported statement form {word}")
            if word == "IF":
                return self.parse_if()
            if word == "CASE":
                return self.parse_case()
            if word == "FOR":
                return self.parse_for()
            if word == "WHILE":
                return self.parse_while()
            if word not in _KEYWORDS:
                return self.parse_assignment_or_call()
        raise self._error(f"expected a statement, found {tok.text!r}")

    def parse_assignment_or_call(self) -> Statement:
        name = self.take().text
        if self.at_op(":="):
            self.take_op(":=")
            value = self.parse_expression()
            self.take_op(";")
            return Statement(kind="assignment", target=name, value=value)
        if self.at_op("("):
            self.take_op("(")
            args: list[Expression] = []
            if not self.at_op(")"):
                while True:
                    args.append(self.parse_call_argument())
                    if self.at_op(","):
                        self.take_op(",")
                        continue
                    break
            self.take_op(")")
            self.take_op(";")
            return Statement(kind="call", callee=name, args=tuple(args))
        raise self._error("expected ':=' or '(' after identifier")

    def parse_call_argument(self) -> Expression:
        # named parameter: IDENT := expr — the value is kept, the name dropped
        tok = self.peek()
        if (
            tok is not None
            and tok.kind == "ident"
            and self.index + 1 < len(self.tokens)
            and self.tokens[self.index + 1].kind == "op"
            and self.tokens[self.index + 1].text == ":="
        ):
            self.index += 2
        return self.parse_expression()

    def parse_if(self) -> Statement:
        stmt = self._parse_if_chain()
        self.take_keyword("END_IF")
        if self.at_op(";"):
            self.take_op(";")
        return stmt

    def _parse_if_chain(self) -> Statement:
        self.take_keyword("IF")
        condition = self.parse_expression()
        self.take_keyword("THEN")
        children = self.parse_statements(("ELSIF", "ELSE", "END_IF"))
        if self.at_keyword("ELSIF"):
            # ELSIF desugars to a nested ifStmt in the else branch
            self.tokens[self.index] = Token("ident", "IF", self.tokens[self.index].position)
            nested = self._parse_if_chain()
            return Statement(
                kind="ifStmt",
                condition=condition,
                children=tuple(children),
                else_children=(nested,),
            )
        else_children: list[Statement] = []
        if self.at_keyword("ELSE"):
            self.take_keyword("ELSE")
            else_children = self.parse_statements(("END_IF",))
        return Statement(
            kind="ifStmt",
            condition=condition,
            children=tuple(children),
            else_children=tuple(else_children),
        )

    def parse_case(self) -> Statement:
        self.take_keyword("CASE")
        selector = self.parse_expression()
        self.take_keyword("OF")
        branches: list[CaseBranch] = []
        else_children: list[Statement] = []
        while not self.at_keyword("END_CASE"):
            if self.at_keyword("ELSE"):
                self.take_keyword("ELSE")
                else_children = self.parse_statements(("END_CASE",))
                break
            labels = [self.parse_case_label()]
            while self.at_op(","):
                self.take_op(",")
                labels.append(self.parse_case_label())
            self.take_op(":")
            branches.append(CaseBranch(tuple(labels), tuple(self.parse_case_branch_body())))
        self.take_keyword("END_CASE")
        if self.at_op(";"):
            self.take_op(";")
        return Statement(
            kind="caseStmt",
            condition=selector,
            branches=tuple(branches),
            else_children=tuple(else_children),
        )

    def parse_case_branch_body(self) -> list[Statement]:
        # a branch body ends at ELSE/END_CASE or at the next label, which
        # starts with a literal (statements always start with an identifier)
        statements: list[Statement] = []
        while True:
            tok = self.peek()
            if tok is None or self.at_keyword("ELSE", "END_CASE", "TRUE", "FALSE"):
                break
            if tok.kind != "ident":
                break
            statements.append(self.parse_statement())
        return statements

    def parse_case_label(self) -> Literal:
        expr = self.parse_unary()
        if isinstance(expr, Literal):
            return expr
        if isinstance(expr, UnaryOp) and expr.operator == "-" and isinstance(expr.operand, Literal):
            return Literal(f"-{expr.operand.value}", expr.operand.type_name)
        raise self._error("case labels must be literals")

    def parse_for(self) -> Statement:
        self.take_keyword("FOR")
        tok = self.take()
        if tok.kind != "ident" or tok.text.upper() in _KEYWORDS:
            raise self._error("expected loop variable")
        self.take_op(":=")
        loop_from = self.parse_expression()
        self.take_keyword("TO")
        loop_to = self.parse_expression()
        loop_by = None
        if self.at_keyword("BY"):
            self.take_keyword("BY")
            loop_by = self.parse_expression()
        self.take_keyword("DO")
        children = self.parse_statements(("END_FOR",))
        self.take_keyword("END_FOR")
        if self.at_op(";"):
            self.take_op(";")
        return Statement(
            kind="forStmt",
            target=tok.text,
            loop_from=loop_from,
            loop_to=loop_to,
            loop_by=loop_by,
            children=tuple(children),
        )

    def parse_while(self) -> Statement:
        self.take_keyword("WHILE")
        condition = self.parse_expression()
        self.take_keyword("DO")
        children = self.parse_statements(("END_WHILE",))
        self.take_keyword("END_WHILE")
        if self.at_op(";"):
            self.take_op(";")
        return Statement(kind="whileStmt", condition=condition, children=tuple(children))

    # ---- expressions, precedence climbing (high to low):
    # **, unary NOT/-, * / MOD, + -, comparisons, AND, XOR, OR

    def parse_expression(self) -> Expression:
        return self.parse_or()

    def _binary_level(self, sub, ops: tuple[str, ...]) -> Expression:
        left = sub()
        while True:
            tok = self.peek()
            if tok is None:
                return left
            text = tok.text.upper()
            if (tok.kind == "op" and text in ops) or (tok.kind == "ident" and text in ops):
                self.index += 1
                left = BinaryOp(text, left, sub())
            else:
                return left

    def parse_or(self) -> Expression:
        return self._binary_level(self.parse_xor, ("OR",))

    def parse_xor(self) -> Expression:
        return self._binary_level(self.parse_and, ("XOR",))

    def parse_and(self) -> Expression:
        return self._binary_level(self.parse_comparison, ("AND",))

    def parse_comparison(self) -> Expression:
        return self._binary_level(self.parse_additive, ("=", "<>", "<", "<=", ">", ">="))

    def parse_additive(self) -> Expression:
        return self._binary_level(self.parse_multiplicative, ("+", "-"))

    def parse_multiplicative(self) -> Expression:
        return self._binary_level(self.parse_unary, ("*", "/", "MOD"))

    def parse_unary(self) -> Expression:
        if self.at_keyword("NOT"):
            self.take()
            return UnaryOp("NOT", self.parse_unary())
        if self.at_op("-"):
            self.take()
            return UnaryOp("-", self.parse_unary())
        return self.parse_power()

    def parse_power(self) -> Expression:
        # '**' binds left-to-right, like the other binary levels
        left = self.parse_atom()
        while self.at_op("**"):
            self.take()
            left = BinaryOp("**", left, self.parse_atom())
        return left

    def parse_atom(self) -> Expression:
        tok = self.peek()
        if tok is None:
            raise self._error("expected an expression")
        if tok.kind == "op" and tok.text == "(":
            self.take()
            inner = self.parse_expression()
            self.take_op(")")
            return inner
        if tok.kind == "int":
            self.take()
            return Literal(tok.text.replace("_", ""), "INT")
        if tok.kind == "real":
            self.take()
            return Literal(tok.text.replace("_", ""), "REAL")
        if tok.kind == "string":
            self.take()
            return Literal(tok.text[1:-1], "STRING")
        if tok.kind == "time":
            self.take()
            return Literal(tok.text.upper(), "TIME")
        if tok.kind == "typedlit":
            self.take()
            type_name, _, value = tok.text.partition("#")
            return Literal(value.upper(), type_name.upper())
        if tok.kind == "ident":
            word = tok.text.upper()
            if word in ("TRUE", "FALSE"):
                self.take()
                return Literal(word, "BOOL")
            if word in _KEYWORDS or word in _UNSUPPORTED:
                raise self._error(f"unexpected keyword {tok.text}")
            self.take()
            if self.at_op("("):
                self.take_op("(")
                args: list[Expression] = []
                if not self.at_op(")"):
                    while True:
                        args.append(self.parse_call_argument())
                        if self.at_op(","):
                            self.take_op(",")
                            continue
                        break
                self.take_op(")")
                return FuncCall(tok.text, tuple(args))
            return VarRef(tok.text)
        raise self._error(f"unexpected token {tok.text!r}")


def parse_structured_text(text: str) -> StBody:
    """Parse an ST implementation into an ordered statement list."""
    return _Parser(text).parse_body()


def parse_expression(text: str) -> Expression:
    """Parse a single ST expression."""
    parser = _Parser(text)
    expr = parser.parse_expression()
    if parser.peek() is not None:
        raise parser._error(f"unexpected token {parser.peek().text!r}")
    return expr
