"""Finite pointed algebras, homomorphisms, products and subalgebras.

Elements are dense indices ``0..n-1``.  Every algebra exposes ``apply``, which
evaluates an operation on integer arrays elementwise; all higher-level code
(congruence generation, radicals, commutators) only talks to ``apply`` so that
table-backed algebras and lazily evaluated subpowers are interchangeable.
"""

from __future__ import annotations

import hashlib
import itertools
from functools import cached_property
from typing import Iterable, Sequence

import numpy as np

from .errors import HomomorphismError, ValidationError
from .terms import Identity, Signature, Term, Var, arity

# environments per vectorised chunk when enumerating n**r tuples
CHUNK = 1 << 21


class Algebra:
    """Common surface of :class:`FiniteAlgebra` and :class:`Subpower`."""

    name: str
    signature: Signature
    size: int
    unit: int

    def apply(self, symbol: str, *args) -> np.ndarray:
        raise NotImplementedError

    def element_name(self, i: int) -> str:
        raise NotImplementedError

    @property
    def key(self) -> str:
        raise NotImplementedError

    @property
    def elements(self) -> list[str]:
        return [self.element_name(i) for i in range(self.size)]

    def names(self, members: Iterable[int]) -> list[str]:
        return [self.element_name(i) for i in sorted(members)]

    def operations(self):
        return self.signature.operations

    def __len__(self):
        return self.size

    def __repr__(self):
        return f"<{type(self).__name__} {self.name} |{self.size}|>"


class FiniteAlgebra(Algebra):
    """A finite pointed algebra given by operation tables.

    ``tables[symbol]`` is a ``k``-dimensional integer array for an operation of
    arity ``k``; the constant's table is a 0-dimensional array holding ``unit``.
    """

    def __init__(
        self,
        name: str,
        signature: Signature,
        elements: Sequence[str],
        unit: int,
        tables: dict[str, np.ndarray],
        embedding: np.ndarray | None = None,
    ):
        self.name = name
        self.signature = signature
        self._elements = [str(e) for e in elements]
        self.size = len(self._elements)
        self.unit = int(unit)
        self.tables = {s: np.asarray(t, dtype=np.int64) for s, t in tables.items()}
        # indices in the parent algebra when built by ``restrict``
        self.embedding = embedding
        self._validate()
        self._index = {e: i for i, e in enumerate(self._elements)}

    def _validate(self):
        n = self.size
        if n < 1:
            raise ValidationError(f"{self.name}: empty carrier")
        if len(set(self._elements)) != n:
            dup = [e for e in self._elements if self._elements.count(e) > 1][0]
            raise ValidationError(f"{self.name}: duplicate element name {dup!r}")
        if not 0 <= self.unit < n:
            raise ValidationError(f"{self.name}: unit index {self.unit} out of range")
        for sym, k in self.signature.operations:
            if sym not in self.tables:
                raise ValidationError(f"{self.name}: missing table for {sym!r}")
            t = self.tables[sym]
            if t.shape != (n,) * k:
                raise ValidationError(
                    f"{self.name}: table for {sym!r} has shape {t.shape}, expected {(n,) * k}"
                )
            if t.size and (t.min() < 0 or t.max() >= n):
                raise ValidationError(f"{self.name}: table for {sym!r} has out-of-range entries")
        extra = set(self.tables) - set(self.signature.symbols)
        if extra:
            raise ValidationError(f"{self.name}: tables for unknown symbols {sorted(extra)}")
        if int(self.tables[self.signature.unit_symbol]) != self.unit:
            raise ValidationError(f"{self.name}: constant table does not return the unit")

    def apply(self, symbol, *args):
        return self.tables[symbol][tuple(np.asarray(a) for a in args)]

    def element_name(self, i):
        return self._elements[i]

    @property
    def elements(self):
        return list(self._elements)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise ValidationError(f"{self.name}: no element named {name!r}") from None

    @cached_property
    def key(self) -> str:
        h = hashlib.sha1()
        h.update(repr(self.signature.operations).encode())
        h.update(str((self.size, self.unit)).encode())
        for sym, _ in self.signature.operations:
            h.update(np.ascontiguousarray(self.tables[sym]).tobytes())
        return h.hexdigest()

    def renamed(self, name: str) -> "FiniteAlgebra":
        return FiniteAlgebra(name, self.signature, self._elements, self.unit, self.tables)


def _encode(rows: np.ndarray, n: int) -> np.ndarray:
    code = np.zeros(rows.shape[:-1], dtype=np.int64)
    for c in range(rows.shape[-1]):
        code = code * n + rows[..., c]
    return code


class Subpower(Algebra):
    """A subalgebra of ``base**k`` stored as a sorted array of tuples.

    Operations are evaluated componentwise in ``base`` and looked up again, so no
    table of size ``|S|**arity`` is ever built.  Element order is lexicographic.
    """

    def __init__(self, base: FiniteAlgebra, rows: np.ndarray, name: str | None = None,
                 check_closed: bool = False):
        rows = np.asarray(rows, dtype=np.int64)
        if rows.ndim != 2:
            raise ValueError("rows must be a 2-d array of tuples")
        self.base = base
        self.k = rows.shape[1]
        n = base.size
        if self.k * np.log2(max(n, 2)) > 62:
            raise ValidationError("subpower too wide for 64-bit tuple codes")
        codes = _encode(rows, n)
        order = np.argsort(codes, kind="stable")
        codes = codes[order]
        keep = np.ones(len(codes), dtype=bool)
        keep[1:] = codes[1:] != codes[:-1]
        self.rows = rows[order][keep]
        self.codes = codes[keep]
        self.size = len(self.codes)
        self.signature = base.signature
        self.name = name or f"{base.name}^{self.k}-sub"
        u = self.lookup(np.full((1, self.k), base.unit))
        if u[0] < 0:
            raise ValidationError(f"{self.name}: does not contain the unit tuple")
        self.unit = int(u[0])
        if check_closed:
            closed = subalgebra_generate(self, range(self.size))
            if len(closed) != self.size:
                raise ValidationError(f"{self.name}: tuple set is not closed under the operations")

    def lookup(self, rows: np.ndarray) -> np.ndarray:
        """Indices of tuples, ``-1`` where a tuple is not a member."""
        codes = _encode(np.asarray(rows, dtype=np.int64), self.base.size)
        pos = np.searchsorted(self.codes, codes)
        pos = np.minimum(pos, self.size - 1)
        return np.where(self.codes[pos] == codes, pos, -1)

    def apply(self, symbol, *args):
        if not args:
            return np.asarray(self.unit)
        comps = [self.rows[np.asarray(a)] for a in args]
        out = np.stack(
            [self.base.apply(symbol, *(c[..., j] for c in comps)) for j in range(self.k)],
            axis=-1,
        )
        idx = self.lookup(out)
        if (idx < 0).any():
            raise ValidationError(f"{self.name}: not closed under {symbol!r}")
        return idx

    def component(self, j: int) -> np.ndarray:
        return self.rows[:, j]

    def element_name(self, i):
        return "(" + ",".join(self.base.element_name(int(x)) for x in self.rows[i]) + ")"

    @cached_property
    def key(self) -> str:
        h = hashlib.sha1(self.base.key.encode())
        h.update(str(self.k).encode())
        h.update(self.codes.tobytes())
        return h.hexdigest()


def power(A: FiniteAlgebra, k: int) -> Subpower:
    grid = np.indices((A.size,) * k).reshape(k, -1).T
    return Subpower(A, grid, name=f"{A.name}^{k}")


class Homomorphism:
    """A map between algebras of the same signature, stored as an index array.

    The constructor does not check commutation; use :func:`hom_check` for that.
    """

    def __init__(self, domain: Algebra, codomain: Algebra, mapping):
        self.domain = domain
        self.codomain = codomain
        self.map = np.asarray(mapping, dtype=np.int64)

    def __call__(self, x):
        return self.map[x]

    @property
    def is_surjective(self) -> bool:
        return len(np.unique(self.map)) == self.codomain.size

    @property
    def is_injective(self) -> bool:
        return len(np.unique(self.map)) == self.domain.size

    def image(self, members: Iterable[int] | None = None) -> frozenset[int]:
        if members is None:
            return frozenset(self.map.tolist())
        return frozenset(self.map[sorted(members)].tolist()) if members else frozenset()

    def preimage(self, members: Iterable[int]) -> frozenset[int]:
        mask = np.isin(self.map, list(members))
        return frozenset(np.flatnonzero(mask).tolist())

    def compose(self, first: "Homomorphism") -> "Homomorphism":
        """``self ∘ first``."""
        return Homomorphism(first.domain, self.codomain, self.map[first.map])

    def __repr__(self):
        return f"<Homomorphism {self.domain.name} -> {self.codomain.name}>"


def identity_hom(A: Algebra) -> Homomorphism:
    return Homomorphism(A, A, np.arange(A.size))


def _all_tuples(n: int, k: int):
    """Yield chunks of the lexicographically ordered tuples of ``range(n)**k``."""
    if k == 0:
        yield ()
        return
    total = n**k
    step = max(1, CHUNK)
    for start in range(0, total, step):
        flat = np.arange(start, min(total, start + step), dtype=np.int64)
        yield tuple(np.unravel_index(flat, (n,) * k))


def hom_check(mapping, A: Algebra, B: Algebra) -> Homomorphism:
    """Validate a candidate map; raises naming the first failing operation and tuple."""
    f = np.asarray(mapping, dtype=np.int64)
    if A.signature != B.signature:
        raise HomomorphismError(f"signature mismatch between {A.name} and {B.name}")
    if f.shape != (A.size,):
        raise HomomorphismError(f"map has length {len(f)}, expected {A.size}")
    if f.size and (f.min() < 0 or f.max() >= B.size):
        raise HomomorphismError("map has entries outside the codomain")
    if f[A.unit] != B.unit:
        raise HomomorphismError(
            f"unit not preserved: {A.element_name(A.unit)} -> {B.element_name(int(f[A.unit]))}",
            A.signature.unit_symbol,
        )
    for sym, k in A.signature.operations:
        for args in _all_tuples(A.size, k):
            lhs = f[A.apply(sym, *args)]
            rhs = B.apply(sym, *(f[a] for a in args))
            bad = np.flatnonzero(np.atleast_1d(lhs != rhs))
            if bad.size:
                i = bad[0]
                witness = tuple(int(np.atleast_1d(a)[i]) for a in args)
                shown = ",".join(A.element_name(x) for x in witness)
                raise HomomorphismError(
                    f"map does not commute with {sym}({shown})", sym, witness
                )
    return Homomorphism(A, B, f)


def product(A: FiniteAlgebra, B: FiniteAlgebra, name: str | None = None):
    """Direct product with its projections; element ``(a, b)`` has index ``a*|B| + b``."""
    if A.signature != B.signature:
        raise ValidationError(f"cannot multiply {A.name} and {B.name}: signatures differ")
    nA, nB = A.size, B.size
    tables = {}
    for sym, k in A.signature.operations:
        if k == 0:
            tables[sym] = np.asarray(A.unit * nB + B.unit)
            continue
        grid = np.indices((nA * nB,) * k)
        a_args = [g // nB for g in grid]
        b_args = [g % nB for g in grid]
        tables[sym] = A.apply(sym, *a_args) * nB + B.apply(sym, *b_args)
    names = [f"({a},{b})" for a in A.elements for b in B.elements]
    P = FiniteAlgebra(name or f"{A.name}x{B.name}", A.signature, names,
                      A.unit * nB + B.unit, tables)
    idx = np.arange(nA * nB)
    return P, Homomorphism(P, A, idx // nB), Homomorphism(P, B, idx % nB)


def pairing(f: Homomorphism, g: Homomorphism, P: FiniteAlgebra) -> Homomorphism:
    """The map ``x -> (f x, g x)`` into ``P = product(f.codomain, g.codomain)``."""
    return Homomorphism(f.domain, P, f.map * g.codomain.size + g.map)


def subalgebra_generate(A: Algebra, gens: Iterable[int]) -> frozenset[int]:
    """Smallest subset containing ``gens`` and the unit, closed under every operation."""
    member = np.zeros(A.size, dtype=bool)
    member[A.unit] = True
    member[list(gens)] = True
    new = np.flatnonzero(member)
    while new.size:
        cur = np.flatnonzero(member)
        old = cur[~np.isin(cur, new)]
        found = []
        for sym, k in A.signature.operations:
            if k == 0:
                continue
            # every tuple with at least one fresh coordinate; j is the first fresh slot
            for j in range(k):
                pools = [old] * j + [new] + [cur] * (k - j - 1)
                if any(p.size == 0 for p in pools):
                    continue
                shape = [1] * k
                args = []
                for pos, p in enumerate(pools):
                    s = list(shape)
                    s[pos] = p.size
                    args.append(p.reshape(s))
                found.append(np.asarray(A.apply(sym, *args)).ravel())
        if not found:
            break
        vals = np.unique(np.concatenate(found))
        vals = vals[~member[vals]]
        member[vals] = True
        new = vals
    return frozenset(np.flatnonzero(member).tolist())


def restrict(A: Algebra, members: Iterable[int], name: str | None = None) -> Algebra:
    """The subalgebra on ``members`` (must be closed), carrying ``embedding`` into ``A``."""
    mem = np.array(sorted(set(members)), dtype=np.int64)
    if len(mem) == A.size:
        return A
    closed = subalgebra_generate(A, mem.tolist())
    if len(closed) != len(mem):
        raise ValidationError(f"{A.name}: subset is not a subalgebra")
    name = name or f"{A.name}|{len(mem)}"
    if isinstance(A, Subpower):
        sub = Subpower(A.base, A.rows[mem], name=name)
        sub.embedding = mem
        return sub
    where = np.full(A.size, -1, dtype=np.int64)
    where[mem] = np.arange(len(mem))
    tables = {}
    for sym, k in A.signature.operations:
        tables[sym] = where[A.tables[sym][np.ix_(*([mem] * k))]] if k else where[A.unit]
    return FiniteAlgebra(name, A.signature, [A.element_name(i) for i in mem],
                         int(where[A.unit]), tables, embedding=mem)


def materialize(S: Algebra, name: str | None = None) -> FiniteAlgebra:
    """Turn any algebra into a table-backed :class:`FiniteAlgebra`."""
    if isinstance(S, FiniteAlgebra):
        return S
    n = S.size
    tables = {}
    for sym, k in S.signature.operations:
        tables[sym] = np.asarray(S.apply(sym, *np.indices((n,) * k))) if k else np.asarray(S.unit)
    return FiniteAlgebra(name or S.name, S.signature, S.elements, S.unit, tables,
                         embedding=getattr(S, "embedding", None))


# --- terms ---------------------------------------------------------------------

def eval_array(t: Term, A: Algebra, env: Sequence) -> np.ndarray:
    """Evaluate ``t`` with variable ``i`` bound to the (broadcastable) array ``env[i]``."""
    if isinstance(t, Var):
        if t.index >= len(env):
            raise ValidationError(f"unbound variable x{t.index}")
        return np.asarray(env[t.index])
    if not t.args:
        return np.asarray(A.unit)
    return A.apply(t.symbol, *(eval_array(a, A, env) for a in t.args))


def eval_term(t: Term, A: Algebra, env: Sequence[int]) -> int:
    return int(eval_array(t, A, [np.asarray(e) for e in env]))


def term_function(t: Term, A: Algebra, r: int | None = None) -> np.ndarray:
    """The table of ``t`` on ``A**r`` (shape ``(n,)*r``)."""
    r = arity(t) if r is None else r
    grid = np.indices((A.size,) * r) if r else []
    return np.broadcast_to(eval_array(t, A, list(grid)), (A.size,) * r)


def identity_instances(ident: Identity, A: Algebra, pool: np.ndarray | None = None):
    """Yield ``(lhs_values, rhs_values)`` over all environments drawn from ``pool``."""
    pool = np.arange(A.size) if pool is None else np.asarray(pool)
    r = ident.arity
    for args in _all_tuples(len(pool), r):
        env = [pool[a] for a in args]
        size = len(env[0]) if env else 1
        lhs = np.broadcast_to(eval_array(ident.lhs, A, env), (size,))
        rhs = np.broadcast_to(eval_array(ident.rhs, A, env), (size,))
        yield lhs, rhs, env


def counterexample(A: Algebra, identities: Iterable[Identity]):
    """First ``(identity, env)`` violated in ``A``, or ``None``."""
    for ident in identities:
        for lhs, rhs, env in identity_instances(ident, A):
            bad = np.flatnonzero(lhs != rhs)
            if bad.size:
                i = bad[0]
                return ident, tuple(int(np.atleast_1d(e)[i]) for e in env)
    return None


def satisfies(A: Algebra, identities: Iterable[Identity]) -> bool:
    return counterexample(A, identities) is None


def is_group(A: Algebra) -> bool:
    sig = A.signature
    if not ("mul" in sig and "inv" in sig and sig.arity("mul") == 2 and sig.arity("inv") == 1):
        return False
    n = np.arange(A.size)
    x, y, z = np.ix_(n, n, n)
    assoc = A.apply("mul", A.apply("mul", x, y), z) == A.apply("mul", x, A.apply("mul", y, z))
    unit = (A.apply("mul", n, A.unit) == n).all() and (A.apply("mul", A.unit, n) == n).all()
    inv = (A.apply("mul", n, A.apply("inv", n)) == A.unit).all()
    return bool(assoc.all() and unit and inv)


def is_loop(A: Algebra) -> bool:
    sig = A.signature
    if not all(s in sig and sig.arity(s) == 2 for s in ("mul", "ldiv", "rdiv")):
        return False
    n = np.arange(A.size)
    x, y = np.ix_(n, n)
    ok = (A.apply("mul", n, A.unit) == n).all() and (A.apply("mul", A.unit, n) == n).all()
    ok = ok and (A.apply("mul", x, A.apply("ldiv", x, y)) == y).all()
    ok = ok and (A.apply("ldiv", x, A.apply("mul", x, y)) == y).all()
    ok = ok and (A.apply("mul", A.apply("rdiv", y, x), x) == y).all()
    ok = ok and (A.apply("rdiv", A.apply("mul", y, x), x) == y).all()
    return bool(ok)


def all_tuples(n: int, k: int):
    return itertools.product(range(n), repeat=k)


_GROUP_CACHE: dict[str, bool] = {}


def has_group_structure(A: Algebra) -> bool:
    """Cached :func:`is_group`; a (closed) subpower of a group is a group."""
    if isinstance(A, Subpower):
        return has_group_structure(A.base)
    key = A.key
    if key not in _GROUP_CACHE:
        _GROUP_CACHE[key] = is_group(A)
    return _GROUP_CACHE[key]


def group_closure(A: Algebra, gens) -> np.ndarray:
    """Membership mask of the subgroup generated by ``gens`` (``A`` must be a finite group)."""
    gens = np.unique(np.asarray(list(gens), dtype=np.int64))
    member = np.zeros(A.size, dtype=bool)
    member[A.unit] = True
    member[gens] = True
    frontier = np.flatnonzero(member)
    while frontier.size and gens.size:
        vals = np.unique(A.apply("mul", frontier[:, None], gens[None, :]))
        frontier = vals[~member[vals]]
        member[frontier] = True
    return member


_CONSTANTS_CACHE: dict[str, np.ndarray] = {}


def translation_constants(A: Algebra) -> np.ndarray:
    """Constants needed for elementary translations in congruence closure.

    In a group, translations by a generating set together with inversion already
    generate every translation, so a small generating set is enough.  Otherwise
    every element is used.
    """
    key = A.key
    hit = _CONSTANTS_CACHE.get(key)
    if hit is not None:
        return hit
    if has_group_structure(A):
        gens: list[int] = []
        member = np.zeros(A.size, dtype=bool)
        member[A.unit] = True
        while not member.all():
            gens.append(int(np.flatnonzero(~member)[-1]))
            member = group_closure(A, gens)
        out = np.array(gens, dtype=np.int64)
    else:
        out = np.arange(A.size)
    _CONSTANTS_CACHE[key] = out
    return out


def generate_subpower(base: FiniteAlgebra, gens, name: str | None = None) -> Subpower:
    """Subalgebra of ``base**k`` generated by the tuples ``gens`` (plus the unit tuple)."""
    gens = np.asarray(gens, dtype=np.int64)
    k = gens.shape[1]
    n = base.size
    unit = np.full((1, k), base.unit, dtype=np.int64)
    rows = np.unique(np.concatenate([unit, gens]), axis=0)
    codes = np.sort(_encode(rows, n))

    def fresh(cand):
        c = _encode(cand, n)
        c, first = np.unique(c, return_index=True)
        keep = ~np.isin(c, codes)
        return cand[first[keep]], c[keep]

    def apply_rows(sym, *arg_rows):
        return np.stack([base.apply(sym, *(a[..., j] for a in arg_rows)) for j in range(k)],
                        axis=-1)

    if has_group_structure(base):
        # a finite submonoid of a group is a subgroup: multiply by generators only
        frontier = rows
        while len(frontier):
            out = []
            for lo in range(0, len(frontier), max(1, CHUNK // max(len(gens), 1))):
                f = frontier[lo:lo + CHUNK // max(len(gens), 1)]
                out.append(apply_rows("mul", f[:, None, :], gens[None, :, :]).reshape(-1, k))
            frontier, new_codes = fresh(np.concatenate(out))
            codes = np.sort(np.concatenate([codes, new_codes]))
            rows = np.concatenate([rows, frontier])
        return Subpower(base, rows, name=name)

    new = rows
    while len(new):
        found = []
        for sym, ar in base.signature.operations:
            if ar == 0:
                continue
            old = rows[: len(rows) - len(new)]
            for j in range(ar):
                pools = [old] * j + [new] + [rows] * (ar - j - 1)
                if any(len(p) == 0 for p in pools):
                    continue
                idx = np.indices(tuple(len(p) for p in pools)).reshape(ar, -1)
                for lo in range(0, idx.shape[1], CHUNK):
                    sl = idx[:, lo:lo + CHUNK]
                    found.append(apply_rows(sym, *(p[i] for p, i in zip(pools, sl))))
        if not found:
            break
        new, new_codes = fresh(np.concatenate(found))
        codes = np.sort(np.concatenate([codes, new_codes]))
        rows = np.concatenate([rows, new])
    return Subpower(base, rows, name=name)
