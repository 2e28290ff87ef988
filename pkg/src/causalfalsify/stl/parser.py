"""Recursive-descent parser and printer for the textual STL syntax.

Grammar (whitespace insignificant)::

    formula  := or
    or       := and ('||' and)*
    and      := until ('&&' until)*
    until    := unary ('U' [interval] unary)*
    unary    := '!' unary
              | ('G' | 'F') [interval] unary
              | '(' formula ')'
              | atom
    interval := '[' number ',' (number | 'inf') ']'
    atom     := expr ('<' | '<=' | '>' | '>=') expr
    expr     := ['+'|'-'] term (('+'|'-') term)*
    term     := number ['*' ident] | ident ['*' number]

``G``, ``F`` and ``U`` without an interval (or with ``inf`` as the upper
bound) run to the end of the trace.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

from .formula import HORIZON, Always, And, Atom, Eventually, Formula, Interval, Not, Or, Until

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>\s+)
  | (?P<number>(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<op>&&|\|\||<=|>=|[<>!()\[\],+\-*])
    """,
    re.VERBOSE,
)
_TEMPORAL = {"G", "F", "U"}
_COMPARATORS = {"<", "<=", ">", ">="}


class ParseError(ValueError):
    def __init__(self, message: str, line: int, column: int):
        super().__init__(f"{message} (line {line}, column {column})")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class _Tok:
    kind: str
    text: str
    line: int
    col: int


def _tokenize(text: str) -> list[_Tok]:
    tokens = []
    pos, line, line_start = 0, 1, 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        col = pos - line_start + 1
        if m is None:
            bad = re.match(r"[^\sA-Za-z0-9_.()\[\],]+", text[pos:])
            sym = bad.group(0) if bad else text[pos]
            raise ParseError(f"unknown operator {sym!r}", line, col)
        kind = m.lastgroup
        if kind == "ws":
            chunk = m.group(0)
            nl = chunk.count("\n")
            if nl:
                line += nl
                line_start = pos + chunk.rfind("\n") + 1
        else:
            tokens.append(_Tok(kind, m.group(0), line, col))
        pos = m.end()
    tokens.append(_Tok("eof", "", line, pos - line_start + 1))
    return tokens


class _Parser:
    def __init__(self, text: str):
        self.toks = _tokenize(text)
        self.i = 0

    @property
    def tok(self) -> _Tok:
        return self.toks[self.i]

    def error(self, message: str, tok: _Tok | None = None) -> ParseError:
        tok = tok or self.tok
        return ParseError(message, tok.line, tok.col)

    def advance(self) -> _Tok:
        tok = self.tok
        self.i += 1
        return tok

    def at(self, text: str) -> bool:
        return self.tok.kind in ("op", "ident") and self.tok.text == text

    def expect(self, text: str, what: str) -> _Tok:
        if not self.at(text):
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise self.error(f"expected {text!r} {what}, found {found}")
        return self.advance()

    def parse(self) -> Formula:
        f = self.or_()
        if self.tok.kind != "eof":
            raise self.error(f"unexpected {self.tok.text!r}")
        return f

    def or_(self) -> Formula:
        f = self.and_()
        while self.at("||"):
            self.advance()
            f = Or(f, self.and_())
        return f

    def and_(self) -> Formula:
        f = self.until()
        while self.at("&&"):
            self.advance()
            f = And(f, self.until())
        return f

    def until(self) -> Formula:
        f = self.unary()
        while self.at("U"):
            self.advance()
            interval = self.interval()
            f = Until(interval, f, self.unary())
        return f

    def unary(self) -> Formula:
        tok = self.tok
        if self.at("!"):
            self.advance()
            return Not(self.unary())
        if tok.kind == "ident" and tok.text in ("G", "F"):
            self.advance()
            interval = self.interval()
            arg = self.unary()
            return Always(interval, arg) if tok.text == "G" else Eventually(interval, arg)
        if self.at("("):
            self.advance()
            f = self.or_()
            self.expect(")", "to close '('")
            return f
        if tok.kind in ("number", "ident") or self.at("-") or self.at("+"):
            return self.atom()
        if tok.kind == "eof":
            raise self.error("unexpected end of input")
        raise self.error(f"unexpected {tok.text!r}")

    def interval(self) -> Interval:
        if not self.at("["):
            return Interval(0.0, HORIZON)
        start = self.advance()
        lo = self.number("as interval lower bound")
        self.expect(",", "in interval")
        if self.tok.kind == "ident" and self.tok.text == "inf":
            self.advance()
            hi = HORIZON
        else:
            hi = self.number("as interval upper bound")
        self.expect("]", "to close interval")
        try:
            return Interval(lo, hi)
        except ValueError as exc:
            raise self.error(f"malformed interval: {exc}", start) from None

    def number(self, what: str) -> float:
        neg = False
        if self.at("-"):
            self.advance()
            neg = True
        if self.tok.kind != "number":
            found = "end of input" if self.tok.kind == "eof" else repr(self.tok.text)
            raise self.error(f"expected number {what}, found {found}")
        value = float(self.advance().text)
        return -value if neg else value

    def atom(self) -> Atom:
        left = self.expr()
        tok = self.tok
        if not (tok.kind == "op" and tok.text in _COMPARATORS):
            found = "end of input" if tok.kind == "eof" else repr(tok.text)
            raise self.error(f"expected comparison operator, found {found}")
        self.advance()
        right = self.expr()
        if tok.text in ("<", "<="):
            coeffs, const = _sub(right, left)
        else:
            coeffs, const = _sub(left, right)
        try:
            return Atom(coeffs, const, strict=tok.text in ("<", ">"))
        except ValueError as exc:
            raise self.error(str(exc), tok) from None

    def expr(self) -> tuple[dict, float]:
        coeffs: dict[str, float] = {}
        const = 0.0
        sign = 1.0
        if self.at("-") or self.at("+"):
            sign = -1.0 if self.advance().text == "-" else 1.0
        while True:
            name, value = self.term()
            if name is None:
                const += sign * value
            else:
                coeffs[name] = coeffs.get(name, 0.0) + sign * value
            if self.at("+") or self.at("-"):
                sign = -1.0 if self.advance().text == "-" else 1.0
            else:
                return coeffs, const

    def term(self) -> tuple[str | None, float]:
        tok = self.tok
        if tok.kind == "number":
            value = float(self.advance().text)
            if self.at("*"):
                self.advance()
                return self.ident(), value
            return None, value
        if tok.kind == "ident":
            name = self.ident()
            if self.at("*"):
                self.advance()
                if self.tok.kind != "number":
                    raise self.error("expected number after '*'")
                return name, float(self.advance().text)
            return name, 1.0
        found = "end of input" if tok.kind == "eof" else repr(tok.text)
        raise self.error(f"expected number or variable, found {found}")

    def ident(self) -> str:
        tok = self.tok
        if tok.kind != "ident":
            raise self.error("expected variable name")
        if tok.text in _TEMPORAL or tok.text == "inf":
            raise self.error(f"{tok.text!r} is reserved and cannot name a variable")
        return self.advance().text


def _sub(a: tuple[dict, float], b: tuple[dict, float]) -> tuple[dict, float]:
    coeffs = dict(a[0])
    for k, v in b[0].items():
        coeffs[k] = coeffs.get(k, 0.0) - v
    return coeffs, a[1] - b[1]


def parse_formula(text: str) -> Formula:
    """Parse STL text into a formula tree. Raises :class:`ParseError`."""
    return _Parser(text).parse()


def _num(v: float) -> str:
    if v.is_integer() and abs(v) < 1e15:
        return str(int(v))
    return repr(v)


def _expr(atom: Atom) -> str:
    parts = []
    for name, c in atom.coefficients:
        mag = abs(c)
        body = name if mag == 1.0 else f"{_num(mag)}*{name}"
        parts.append(("-" if c < 0 else "+", body))
    if atom.constant != 0.0 or not parts:
        parts.append(("-" if atom.constant < 0 else "+", _num(abs(atom.constant))))
    sign, body = parts[0]
    out = ("-" if sign == "-" else "") + body
    for sign, body in parts[1:]:
        out += f" {sign} {body}"
    return out


def _interval(iv: Interval) -> str:
    if iv.unbounded:
        return "" if iv.lo == 0 else f"[{_num(iv.lo)},inf]"
    return f"[{_num(iv.lo)},{_num(iv.hi)}]"


def format_formula(f: Formula) -> str:
    """Canonical text for ``f``; ``parse_formula(format_formula(f)) == f``."""
    if isinstance(f, Atom):
        return f"({_expr(f)} {'>' if f.strict else '>='} 0)"
    if isinstance(f, Not):
        return f"!{format_formula(f.arg)}"
    if isinstance(f, And):
        return f"({format_formula(f.left)} && {format_formula(f.right)})"
    if isinstance(f, Or):
        return f"({format_formula(f.left)} || {format_formula(f.right)})"
    if isinstance(f, Until):
        return f"({format_formula(f.left)} U{_interval(f.interval)} {format_formula(f.right)})"
    if isinstance(f, Always):
        return f"G{_interval(f.interval)} {format_formula(f.arg)}"
    if isinstance(f, Eventually):
        return f"F{_interval(f.interval)} {format_formula(f.arg)}"
    raise TypeError(f"not a formula: {f!r}")
