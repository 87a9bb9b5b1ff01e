"""Custom-metric expression language: arithmetic over numeric features.

Grammar (left associative, * and / bind tighter than + and -):

    expr    := term  (("+" | "-") term)*
    term    := factor (("*" | "/") factor)*
    factor  := "-" factor | primary
    primary := NUMBER | IDENT | QUOTED | "(" expr ")"

Feature names are bare identifiers or double-quoted strings (for names with
spaces). The unicode times/divide signs are accepted as aliases for * and /.
"""
from __future__ import annotations

import difflib
import math
import re
from dataclasses import dataclass

from .data import CATEGORICAL, NUMERIC, DataTable, bin_numeric
from .errors import ValidationError

# --- AST -------------------------------------------------------------------


class ExprAst:
    """Base class; concrete nodes are Num, Ref, Neg, Bin and Group."""


@dataclass(frozen=True)
class Num(ExprAst):
    value: float


@dataclass(frozen=True)
class Ref(ExprAst):
    name: str


@dataclass(frozen=True)
class Neg(ExprAst):
    operand: ExprAst


@dataclass(frozen=True)
class Bin(ExprAst):
    op: str  # one of + - * /
    left: ExprAst
    right: ExprAst


@dataclass(frozen=True)
class Group(ExprAst):
    """Explicit user parentheses, kept so printing can reproduce them."""

    inner: ExprAst


def strip_groups(node: ExprAst) -> ExprAst:
    """Erase Group wrappers; grouping is presentation, not structure."""
    if isinstance(node, Group):
        return strip_groups(node.inner)
    if isinstance(node, Neg):
        return Neg(strip_groups(node.operand))
    if isinstance(node, Bin):
        return Bin(node.op, strip_groups(node.left), strip_groups(node.right))
    return node


def equivalent(a: ExprAst, b: ExprAst) -> bool:
    """Structural equality modulo explicit grouping."""
    return strip_groups(a) == strip_groups(b)


def references(node: ExprAst):
    """Feature names referenced anywhere in the tree."""
    if isinstance(node, Ref):
        return {node.name}
    if isinstance(node, Neg):
        return references(node.operand)
    if isinstance(node, Group):
        return references(node.inner)
    if isinstance(node, Bin):
        return references(node.left) | references(node.right)
    return set()


# --- lexer / parser --------------------------------------------------------


class ExprSyntaxError(ValidationError):
    """Positioned parse failure; offset counts bytes of the UTF-8 source."""

    def __init__(self, message, offset, expected=()):
        super().__init__(message)
        self.offset = offset
        self.expected = frozenset(expected)


_NUMBER = re.compile(r"\d+(\.\d+)?([eE][+-]?\d+)?")
_IDENT = re.compile(r"[A-Za-z_][A-Za-z0-9_]*")
_OP_ALIASES = {"×": "*", "÷": "/", "−": "-"}


@dataclass(frozen=True)
class _Token:
    kind: str  # NUMBER IDENT QUOTED OP LPAREN RPAREN EOF
    text: str
    offset: int  # byte offset into the source


def _byte_offset(text: str, char_index: int) -> int:
    return len(text[:char_index].encode("utf-8"))


def _tokenize(text: str):
    tokens = []
    i, n = 0, len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        off = _byte_offset(text, i)
        if ch.isdigit():
            m = _NUMBER.match(text, i)
            tokens.append(_Token("NUMBER", m.group(0), off))
            i = m.end()
        elif ch.isalpha() or ch == "_":
            m = _IDENT.match(text, i)
            tokens.append(_Token("IDENT", m.group(0), off))
            i = m.end()
        elif ch == '"':
            end = text.find('"', i + 1)
            if end < 0:
                raise ExprSyntaxError("unterminated quoted name",
                                      _byte_offset(text, n), {'"'})
            if end == i + 1:
                raise ExprSyntaxError("empty quoted name", off, {"feature name"})
            tokens.append(_Token("QUOTED", text[i + 1:end], off))
            i = end + 1
        elif ch in "+-*/" or ch in _OP_ALIASES:
            tokens.append(_Token("OP", _OP_ALIASES.get(ch, ch), off))
            i += 1
        elif ch == "(":
            tokens.append(_Token("LPAREN", ch, off))
            i += 1
        elif ch == ")":
            tokens.append(_Token("RPAREN", ch, off))
            i += 1
        else:
            raise ExprSyntaxError(f"unknown character {ch!r}", off)
    tokens.append(_Token("EOF", "", _byte_offset(text, n)))
    return tokens


class _Parser:
    def __init__(self, tokens):
        self.tokens = tokens
        self.pos = 0

    def peek(self):
        return self.tokens[self.pos]

    def advance(self):
        tok = self.tokens[self.pos]
        self.pos += 1
        return tok

    def fail(self, expected):
        tok = self.peek()
        what = "end of input" if tok.kind == "EOF" else repr(tok.text)
        raise ExprSyntaxError(
            f"unexpected {what}, expected one of: {', '.join(sorted(expected))}",
            tok.offset, expected)

    def expr(self):
        node = self.term()
        while self.peek().kind == "OP" and self.peek().text in "+-":
            op = self.advance().text
            node = Bin(op, node, self.term())
        return node

    def term(self):
        node = self.factor()
        while self.peek().kind == "OP" and self.peek().text in "*/":
            op = self.advance().text
            node = Bin(op, node, self.factor())
        return node

    def factor(self):
        tok = self.peek()
        if tok.kind == "OP" and tok.text == "-":
            self.advance()
            return Neg(self.factor())
        return self.primary()

    def primary(self):
        tok = self.peek()
        if tok.kind == "NUMBER":
            self.advance()
            return Num(float(tok.text))
        if tok.kind in ("IDENT", "QUOTED"):
            self.advance()
            return Ref(tok.text)
        if tok.kind == "LPAREN":
            self.advance()
            inner = self.expr()
            if self.peek().kind != "RPAREN":
                self.fail({")"})
            self.advance()
            return Group(inner)
        self.fail({"number", "feature name", "(", "-"})


def parse(text: str) -> ExprAst:
    """Parse source text to an AST; raises ExprSyntaxError with the byte
    offset and the expected-token set on malformed input."""
    parser = _Parser(_tokenize(text))
    node = parser.expr()
    if parser.peek().kind != "EOF":
        parser.fail({"+", "-", "*", "/", "end of input"})
    return node


# --- printing --------------------------------------------------------------

_PRECEDENCE = {"+": 1, "-": 1, "*": 2, "/": 2}


def _prec(node: ExprAst) -> int:
    if isinstance(node, Bin):
        return _PRECEDENCE[node.op]
    if isinstance(node, Neg):
        return 3
    return 4


def _fmt_value(v: float) -> str:
    if float(v).is_integer() and abs(v) < 1e16:
        return str(int(v))
    return repr(float(v))


def print_expr(node: ExprAst) -> str:
    """Canonical text: minimal parentheses, explicit Groups preserved."""
    if isinstance(node, Num):
        return _fmt_value(node.value)
    if isinstance(node, Ref):
        if _IDENT.fullmatch(node.name):
            return node.name
        return f'"{node.name}"'
    if isinstance(node, Group):
        return f"({print_expr(node.inner)})"
    if isinstance(node, Neg):
        inner = print_expr(node.operand)
        if _prec(node.operand) < 3:
            inner = f"({inner})"
        return f"-{inner}"
    if isinstance(node, Bin):
        left = print_expr(node.left)
        if _prec(node.left) < _PRECEDENCE[node.op]:
            left = f"({left})"
        right = print_expr(node.right)
        # left-associative grammar: equal precedence on the right needs parens
        if _prec(node.right) <= _PRECEDENCE[node.op]:
            right = f"({right})"
        return f"{left} {node.op} {right}"
    raise TypeError(f"not an ExprAst node: {node!r}")


# --- binding and evaluation -------------------------------------------------


def bind(node: ExprAst, table: DataTable) -> None:
    """Check that every referenced feature exists and is numeric."""
    names = {s.name: s for s in table.schema}
    for ref in sorted(references(node)):
        if ref not in names:
            candidates = difflib.get_close_matches(ref, names, n=3, cutoff=0.4)
            hint = f"; did you mean: {', '.join(candidates)}" if candidates else ""
            raise ValidationError(f"unknown feature {ref!r}{hint}")
        if names[ref].kind != NUMERIC:
            raise ValidationError(
                f"feature {ref!r} is {CATEGORICAL}; expressions use numeric features only")


def evaluate_row(node: ExprAst, row: dict) -> float | None:
    """Evaluate against one row's {feature: value} map.

    Missing inputs, division by zero and non-finite results all yield None.
    """
    v = _eval(node, row)
    if v is not None and not math.isfinite(v):
        return None
    return v


def _eval(node, row):
    if isinstance(node, Num):
        return node.value
    if isinstance(node, Ref):
        v = row.get(node.name)
        return None if v is None else float(v)
    if isinstance(node, Group):
        return _eval(node.inner, row)
    if isinstance(node, Neg):
        v = _eval(node.operand, row)
        return None if v is None else -v
    if isinstance(node, Bin):
        left = _eval(node.left, row)
        right = _eval(node.right, row)
        if left is None or right is None:
            return None
        if node.op == "+":
            return left + right
        if node.op == "-":
            return left - right
        if node.op == "*":
            return left * right
        if right == 0.0:
            return None
        return left / right
    raise TypeError(f"not an ExprAst node: {node!r}")


def evaluate_column(node: ExprAst, table: DataTable, k_max: int = 10):
    """Per-row evaluation over the whole table plus the derived column's
    BinSpec, so the result can join summaries like any numeric feature."""
    bind(node, table)
    refs = sorted(references(node))
    cells = []
    for i in range(table.n_rows):
        row = {r: table.columns[r][i] for r in refs}
        cells.append(evaluate_row(node, row))
    if all(c is None for c in cells):
        raise ValidationError("expression is undefined on every row")
    probe = DataTable.build(["derived"], {"derived": NUMERIC}, {"derived": cells})
    return cells, bin_numeric(probe, "derived", k_max)


@dataclass(frozen=True)
class CustomMetricDef:
    """A named derived attribute; the source text is the wire format."""

    name: str
    source_text: str

    def ast(self) -> ExprAst:
        return parse(self.source_text)

    def to_json(self) -> dict:
        return {"name": self.name, "source_text": self.source_text}
