"""Signatures, terms and identities, with a small prefix-notation parser.

Grammar (whitespace insignificant)::

    term  := ident "(" term ("," term)* ")" | ident

The identifier ``1`` is the distinguished constant; ``x<digits>`` is a
variable.  Any other identifier must be an operation symbol of the signature.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterator, Union

from .errors import TermSyntaxError, ValidationError

UNIT = "1"
_VAR_RE = re.compile(r"x(\d+)\Z")
_IDENT_RE = re.compile(r"[A-Za-z0-9_]+")


@dataclass(frozen=True)
class Signature:
    operations: tuple[tuple[str, int], ...]
    unit_symbol: str = UNIT

    def __post_init__(self):
        symbols = [s for s, _ in self.operations]
        if len(set(symbols)) != len(symbols):
            raise ValidationError(f"duplicate operation symbols in {symbols}")
        for s, k in self.operations:
            if k < 0:
                raise ValidationError(f"negative arity for {s!r}")
            if _VAR_RE.match(s):
                raise ValidationError(f"operation symbol {s!r} clashes with variable syntax")
        constants = [s for s, k in self.operations if k == 0]
        if constants != [self.unit_symbol]:
            raise ValidationError(
                f"a pointed signature needs exactly one constant {self.unit_symbol!r}, got {constants}"
            )

    @property
    def symbols(self) -> tuple[str, ...]:
        return tuple(s for s, _ in self.operations)

    def arity(self, symbol: str) -> int:
        for s, k in self.operations:
            if s == symbol:
                return k
        raise ValidationError(f"unknown operation symbol {symbol!r}")

    def __contains__(self, symbol: str) -> bool:
        return any(s == symbol for s, _ in self.operations)


GROUP_SIGNATURE = Signature((("mul", 2), ("inv", 1), (UNIT, 0)))
LOOP_SIGNATURE = Signature((("mul", 2), ("ldiv", 2), ("rdiv", 2), (UNIT, 0)))


@dataclass(frozen=True)
class Var:
    index: int

    def __str__(self):
        return f"x{self.index}"


@dataclass(frozen=True)
class Apply:
    symbol: str
    args: tuple["Term", ...] = ()

    def __str__(self):
        return format_term(self)


Term = Union[Var, Apply]


def unit_term(sig: Signature | None = None) -> Apply:
    return Apply(sig.unit_symbol if sig else UNIT)


@dataclass(frozen=True)
class Identity:
    lhs: Term
    rhs: Term

    @property
    def arity(self) -> int:
        return max(arity(self.lhs), arity(self.rhs))

    def __str__(self):
        return f"{format_term(self.lhs)} = {format_term(self.rhs)}"


def format_term(t: Term) -> str:
    if isinstance(t, Var):
        return f"x{t.index}"
    if not t.args:
        return t.symbol
    return f"{t.symbol}({', '.join(format_term(a) for a in t.args)})"


def variables(t: Term) -> set[int]:
    if isinstance(t, Var):
        return {t.index}
    out: set[int] = set()
    for a in t.args:
        out |= variables(a)
    return out


def arity(t: Term) -> int:
    """Number of positional variables a term consumes: 1 + the largest index."""
    vs = variables(t)
    return max(vs) + 1 if vs else 0


def depth(t: Term) -> int:
    if isinstance(t, Var) or not t.args:
        return 0
    return 1 + max(depth(a) for a in t.args)


def subterms(t: Term) -> Iterator[Term]:
    yield t
    if isinstance(t, Apply):
        for a in t.args:
            yield from subterms(a)


def check_term(t: Term, sig: Signature) -> None:
    for s in subterms(t):
        if isinstance(s, Apply) and sig.arity(s.symbol) != len(s.args):
            raise ValidationError(
                f"{s.symbol!r} expects {sig.arity(s.symbol)} arguments, got {len(s.args)}"
            )


class _Parser:
    def __init__(self, src: str, sig: Signature):
        self.src = src
        self.sig = sig
        self.pos = 0

    def error(self, message: str, pos: int | None = None):
        # positions are reported 1-based
        raise TermSyntaxError(message, (self.pos if pos is None else pos) + 1)

    def skip(self):
        while self.pos < len(self.src) and self.src[self.pos].isspace():
            self.pos += 1

    def peek(self) -> str:
        self.skip()
        return self.src[self.pos] if self.pos < len(self.src) else ""

    def expect(self, ch: str):
        if self.peek() != ch:
            found = repr(self.peek()) if self.peek() else "end of input"
            self.error(f"expected {ch!r}, found {found}")
        self.pos += 1

    def term(self) -> Term:
        self.skip()
        start = self.pos
        m = _IDENT_RE.match(self.src, self.pos)
        if not m:
            found = repr(self.src[self.pos]) if self.pos < len(self.src) else "end of input"
            self.error(f"expected identifier, found {found}")
        ident = m.group(0)
        self.pos = m.end()
        args: list[Term] = []
        if self.peek() == "(":
            self.pos += 1
            args.append(self.term())
            while self.peek() == ",":
                self.pos += 1
                args.append(self.term())
            self.expect(")")
        v = _VAR_RE.match(ident)
        if v:
            if args:
                self.error(f"variable {ident} cannot take arguments", start)
            return Var(int(v.group(1)))
        if ident not in self.sig:
            self.error(f"unknown symbol {ident!r}", start)
        k = self.sig.arity(ident)
        if k != len(args):
            self.error(f"arity mismatch: {ident!r} expects {k} arguments, got {len(args)}", start)
        return Apply(ident, tuple(args))


def parse_term(src: str, sig: Signature) -> Term:
    p = _Parser(src, sig)
    t = p.term()
    if p.peek():
        p.error(f"unexpected trailing input {p.src[p.pos:]!r}")
    return t


def parse_identity(lhs: str, rhs: str, sig: Signature) -> Identity:
    return Identity(parse_term(lhs, sig), parse_term(rhs, sig))


def random_term(sig: Signature, rng, max_depth: int = 3, n_vars: int = 3) -> Term:
    """A random term over ``sig``; ``rng`` is a ``numpy.random.Generator``."""
    ops = [(s, k) for s, k in sig.operations if k > 0]
    if max_depth == 0 or rng.random() < 0.3:
        if rng.random() < 0.15:
            return Apply(sig.unit_symbol)
        return Var(int(rng.integers(n_vars)))
    s, k = ops[int(rng.integers(len(ops)))]
    return Apply(s, tuple(random_term(sig, rng, max_depth - 1, n_vars) for _ in range(k)))
