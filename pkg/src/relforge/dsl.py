"""A small relational-logic language over a single binary ``edge`` relation.

Grammar (precedence: not > and > or > implies > iff; ``implies`` is
right-associative, the other binary connectives left-associative)::

    formula := quant | bin
    quant   := ("all" | "some") var ("," var)* "|" formula
    bin     := unary (("and" | "or" | "implies" | "iff") unary)*
    unary   := "not" unary | "(" formula ")" | atom | quant
    atom    := "edge" "(" var "," var ")" | var ("=" | "!=") var

A quantifier in operand position swallows everything to its right, so the
pretty printer always parenthesises one unless it is the last thing printed.
Comments run from ``#`` or ``//`` to the end of the line.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union


class DslError(ValueError):
    def __init__(self, message: str, line: int = 0, col: int = 0) -> None:
        self.line = line
        self.col = col
        self.message = message
        where = f"{line}:{col}: " if line else ""
        super().__init__(f"{where}{message}")


class LexError(DslError):
    pass


class ParseError(DslError):
    pass


class UnboundVariableError(DslError):
    pass


# --- AST ---------------------------------------------------------------------


@dataclass(frozen=True, slots=True)
class Forall:
    vars: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Exists:
    vars: tuple[str, ...]
    body: Formula


@dataclass(frozen=True, slots=True)
class Not:
    f: Formula


@dataclass(frozen=True, slots=True)
class And:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Or:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Implies:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class Iff:
    left: Formula
    right: Formula


@dataclass(frozen=True, slots=True)
class EdgeAtom:
    u: str
    v: str


@dataclass(frozen=True, slots=True)
class EqAtom:
    u: str
    v: str


@dataclass(frozen=True, slots=True)
class NeqAtom:
    u: str
    v: str


Formula = Union[Forall, Exists, Not, And, Or, Implies, Iff, EdgeAtom, EqAtom, NeqAtom]
Quantifier = (Forall, Exists)
Binary = (And, Or, Implies, Iff)
Atom = (EdgeAtom, EqAtom, NeqAtom)


def conjoin(*parts: Formula) -> Formula:
    """Left-nested conjunction of one or more formulas."""
    if not parts:
        raise ValueError("conjoin needs at least one formula")
    out = parts[0]
    for p in parts[1:]:
        out = And(out, p)
    return out


def free_vars(f: Formula) -> set[str]:
    if isinstance(f, Atom):
        return {f.u, f.v}
    if isinstance(f, Quantifier):
        return free_vars(f.body) - set(f.vars)
    if isinstance(f, Not):
        return free_vars(f.f)
    return free_vars(f.left) | free_vars(f.right)


def size(f: Formula) -> int:
    """Number of AST nodes."""
    if isinstance(f, Atom):
        return 1
    if isinstance(f, Quantifier):
        return 1 + size(f.body)
    if isinstance(f, Not):
        return 1 + size(f.f)
    return 1 + size(f.left) + size(f.right)


# --- lexer -------------------------------------------------------------------

KEYWORDS = {"all", "some", "not", "and", "or", "implies", "iff", "edge"}

_TOKEN_RE = re.compile(
    r"""
    (?P<ws>[ \t\r]+)
  | (?P<nl>\n)
  | (?P<comment>(?:\#|//)[^\n]*)
  | (?P<ident>[A-Za-z_][A-Za-z0-9_]*)
  | (?P<neq>!=)
  | (?P<punct>[(),|=])
    """,
    re.VERBOSE,
)


@dataclass(frozen=True, slots=True)
class Token:
    kind: str  # "ident", keyword text, punctuation text, or "eof"
    text: str
    line: int
    col: int


def tokenize(source: str) -> list[Token]:
    tokens: list[Token] = []
    pos = 0
    line, line_start = 1, 0
    while pos < len(source):
        m = _TOKEN_RE.match(source, pos)
        if m is None:
            raise LexError(f"unexpected character {source[pos]!r}", line, pos - line_start + 1)
        kind = m.lastgroup
        text = m.group()
        col = pos - line_start + 1
        if kind == "nl":
            line += 1
            line_start = m.end()
        elif kind == "ident":
            tokens.append(Token(text if text in KEYWORDS else "ident", text, line, col))
        elif kind in ("neq", "punct"):
            tokens.append(Token(text, text, line, col))
        pos = m.end()
    tokens.append(Token("eof", "", line, pos - line_start + 1))
    return tokens


# --- parser ------------------------------------------------------------------


class _Parser:
    def __init__(self, tokens: list[Token]) -> None:
        self.tokens = tokens
        self.pos = 0
        self.scope: list[str] = []

    @property
    def tok(self) -> Token:
        return self.tokens[self.pos]

    def advance(self) -> Token:
        t = self.tokens[self.pos]
        self.pos += 1
        return t

    def expect(self, kind: str) -> Token:
        t = self.tok
        if t.kind != kind:
            found = "end of input" if t.kind == "eof" else repr(t.text)
            raise ParseError(f"expected {kind!r}, found {found}", t.line, t.col)
        return self.advance()

    def var_ref(self) -> str:
        t = self.expect("ident")
        if t.text not in self.scope:
            raise UnboundVariableError(f"unbound variable {t.text!r}", t.line, t.col)
        return t.text

    def formula(self) -> Formula:
        if self.tok.kind in ("all", "some"):
            return self.quant()
        return self.iff()

    def quant(self) -> Formula:
        kw = self.advance()
        names = [self.expect("ident")]
        while self.tok.kind == ",":
            self.advance()
            names.append(self.expect("ident"))
        seen: set[str] = set()
        for t in names:
            if t.text in seen:
                raise ParseError(f"variable {t.text!r} bound twice", t.line, t.col)
            seen.add(t.text)
        self.expect("|")
        vars_ = tuple(t.text for t in names)
        self.scope.extend(vars_)
        try:
            body = self.formula()
        finally:
            del self.scope[-len(vars_):]
        return Forall(vars_, body) if kw.kind == "all" else Exists(vars_, body)

    def iff(self) -> Formula:
        left = self.implies()
        while self.tok.kind == "iff":
            self.advance()
            left = Iff(left, self.implies())
        return left

    def implies(self) -> Formula:
        left = self.or_()
        if self.tok.kind == "implies":
            self.advance()
            return Implies(left, self.implies())
        return left

    def or_(self) -> Formula:
        left = self.and_()
        while self.tok.kind == "or":
            self.advance()
            left = Or(left, self.and_())
        return left

    def and_(self) -> Formula:
        left = self.unary()
        while self.tok.kind == "and":
            self.advance()
            left = And(left, self.unary())
        return left

    def unary(self) -> Formula:
        t = self.tok
        if t.kind == "not":
            self.advance()
            return Not(self.unary())
        if t.kind in ("all", "some"):
            return self.quant()
        if t.kind == "(":
            self.advance()
            inner = self.formula()
            self.expect(")")
            return inner
        if t.kind == "edge":
            self.advance()
            self.expect("(")
            u = self.var_ref()
            self.expect(",")
            v = self.var_ref()
            self.expect(")")
            return EdgeAtom(u, v)
        if t.kind == "ident":
            u = self.var_ref()
            op = self.tok
            if op.kind == "=":
                self.advance()
                return EqAtom(u, self.var_ref())
            if op.kind == "!=":
                self.advance()
                return NeqAtom(u, self.var_ref())
            raise ParseError(f"expected '=' or '!=' after variable {u!r}", op.line, op.col)
        found = "end of input" if t.kind == "eof" else repr(t.text)
        raise ParseError(f"unexpected {found}", t.line, t.col)


def parse(source: str) -> Formula:
    """Parse a closed formula; raises a :class:`DslError` subclass on failure."""
    if not source.strip():
        raise ParseError("empty formula", 1, 1)
    p = _Parser(tokenize(source))
    f = p.formula()
    if p.tok.kind != "eof":
        raise ParseError(f"unexpected trailing {p.tok.text!r}", p.tok.line, p.tok.col)
    return f


# --- pretty printer ----------------------------------------------------------

# binding strength; larger binds tighter
_PREC = {Iff: 1, Implies: 2, Or: 3, And: 4}
_OPS = {Iff: "iff", Implies: "implies", Or: "or", And: "and"}


def pretty(f: Formula) -> str:
    return _pp(f, 0, tail=True)


def _pp(f: Formula, ctx: int, tail: bool) -> str:
    # ctx: minimum precedence the context accepts without parentheses.
    # tail: nothing follows this text, so an unparenthesised quantifier is safe.
    if isinstance(f, EdgeAtom):
        return f"edge({f.u}, {f.v})"
    if isinstance(f, EqAtom):
        return f"{f.u} = {f.v}"
    if isinstance(f, NeqAtom):
        return f"{f.u} != {f.v}"
    if isinstance(f, Quantifier):
        kw = "all" if isinstance(f, Forall) else "some"
        text = f"{kw} {', '.join(f.vars)} | {_pp(f.body, 0, True)}"
        return text if tail and ctx == 0 else f"({text})"
    if isinstance(f, Not):
        return "not " + _pp(f.f, 5, tail)
    prec = _PREC[type(f)]
    if isinstance(f, Implies):
        left = _pp(f.left, prec + 1, False)
        right = _pp(f.right, prec, tail)
    else:
        left = _pp(f.left, prec, False)
        right = _pp(f.right, prec + 1, tail)
    text = f"{left} {_OPS[type(f)]} {right}"
    return text if prec >= ctx else f"({text})"


def walk(f: Formula) -> Iterator[Formula]:
    yield f
    if isinstance(f, Quantifier):
        yield from walk(f.body)
    elif isinstance(f, Not):
        yield from walk(f.f)
    elif isinstance(f, Binary):
        yield from walk(f.left)
        yield from walk(f.right)
