"""Relative commutators of normal subobjects, by several independent routes.

* ``commutator_categorical``: the radical of the double relation ``R_M □ R_N``.
* ``commutator_words``: the two-dimensional word formula over a finite scheme.
* ``froehlich_commutator``: ``[K, A]_B`` for an extension, categorical and by words.
* ``higgins_commutator``: all binary words up to a depth bound.
* ``huq_commutator``: the cooperator test, plus a lattice brute force.
* ``smith_commutator``: the term-condition matrix fixpoint on congruences.

Commutator values are returned as :class:`Commutator`, whose members are
indices of the ambient algebra ``A`` even though the value is normal in ``M ∨ N``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .algebra import (
    CHUNK,
    Algebra,
    FiniteAlgebra,
    Homomorphism,
    Subpower,
    eval_array,
    generate_subpower,
    has_group_structure,
    is_loop,
    materialize,
    restrict,
)
from .birkhoff import VarietySpec, radical_members
from .congruence import (
    Congruence,
    NormalSubobject,
    cg_generate,
    discrete,
    join_normal,
    kernel,
    kernel_pair,
    normal_closure,
    normals_enumerate,
    quotient_by,
    direct_image,
)
from .errors import CrossCheckError, StructureError, ValidationError
from .terms import Apply, Term, Var, arity


@dataclass(frozen=True, eq=False)
class Commutator:
    """A commutator value: ``members`` index ``algebra``; ``join`` is ``M ∨ N`` there."""

    algebra: Algebra
    join: frozenset[int]
    members: frozenset[int]
    method: str

    def __eq__(self, other):
        return isinstance(other, Commutator) and self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def __len__(self):
        return len(self.members)

    def is_trivial(self) -> bool:
        return len(self.members) == 1

    def names(self) -> list[str]:
        return self.algebra.names(self.members)

    def in_join(self) -> NormalSubobject:
        """The value as a (validated) normal subobject of the algebra ``M ∨ N``."""
        base, emb = _join_algebra(self.algebra, self.join)
        where = {int(a): i for i, a in enumerate(emb)}
        return NormalSubobject(base, [where[m] for m in self.members])

    def as_normal(self) -> NormalSubobject:
        """The value as a normal subobject of the ambient algebra (validated)."""
        return NormalSubobject(self.algebra, self.members)


def _join_algebra(A: Algebra, join: frozenset[int]):
    emb = np.array(sorted(join), dtype=np.int64)
    base = restrict(A, emb.tolist(), name=f"{A.name}[{len(emb)}]")
    if not isinstance(base, FiniteAlgebra):
        base = materialize(base)
    return base, emb


def _check_pair(M: NormalSubobject, N: NormalSubobject) -> Algebra:
    if M.algebra is not N.algebra and M.algebra.key != N.algebra.key:
        raise ValidationError("normal subobjects live in different algebras")
    return M.algebra


# --- the double relation --------------------------------------------------------

@dataclass
class DoubleRelation:
    """``R_M □ R_N`` on ``base = M ∨ N``; quad ``(x, y, z, t)`` has columns in ``R_M``, rows in ``R_N``."""

    ambient: Algebra
    base: FiniteAlgebra
    embedding: np.ndarray
    algebra: Subpower

    @property
    def quads(self) -> np.ndarray:
        return self.algebra.rows

    # projections as pair arrays
    @property
    def p0(self) -> np.ndarray:
        return self.quads[:, [0, 2]]

    @property
    def p1(self) -> np.ndarray:
        return self.quads[:, [1, 3]]

    @property
    def r0(self) -> np.ndarray:
        return self.quads[:, [0, 1]]

    @property
    def r1(self) -> np.ndarray:
        return self.quads[:, [2, 3]]


def double_relation(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> DoubleRelation:
    _check_pair(M, N)
    J = join_normal(M, N)
    base, emb = _join_algebra(A, J.members)
    lm = M.congruence.labels[emb]
    ln = N.congruence.labels[emb]
    n = len(emb)
    ys_of = [np.flatnonzero(ln == ln[x]) for x in range(n)]
    zs_of = [np.flatnonzero(lm == lm[x]) for x in range(n)]
    quads = []
    for x in range(n):
        ys, zs = ys_of[x], zs_of[x]
        # t must share the M-class of y and the N-class of z
        ok = (lm[ys][:, None, None] == lm[None, None, :]) & (ln[zs][None, :, None] == ln[None, None, :])
        yi, zi, t = np.nonzero(ok)
        quads.append(np.stack([np.full(len(t), x), ys[yi], zs[zi], t], axis=1))
    D = Subpower(base, np.concatenate(quads), name=f"R_M□R_N({A.name})")
    return DoubleRelation(A, base, emb, D)


# --- categorical commutator ----------------------------------------------------

_CAT_CACHE: dict[tuple, frozenset[int]] = {}


def commutator_categorical(A: Algebra, M: NormalSubobject, N: NormalSubobject,
                           B: VarietySpec) -> Commutator:
    """``{t : (1,1,1,t) ∈ [R_M □ R_N]_B}``, read back into ``A``."""
    _check_pair(M, N)
    if not B.applies_to(A):
        raise ValidationError(f"variety {B.name} does not match the signature of {A.name}")
    J = join_normal(M, N)
    key = (A.key, M.members, N.members, B.key)
    hit = _CAT_CACHE.get(key)
    if hit is not None:
        return Commutator(A, J.members, hit, "categorical")
    D = double_relation(A, M, N)
    U = np.array(sorted(radical_members(D.algebra, B)), dtype=np.int64)
    rows = D.quads[U]
    u = D.base.unit
    sel = (rows[:, 0] == u) & (rows[:, 1] == u) & (rows[:, 2] == u)
    members = frozenset(D.embedding[rows[sel, 3]].tolist())
    if not members <= (M.members & N.members):
        raise CrossCheckError(
            f"{A.name}: commutator {A.names(members)} is not contained in M ∧ N"
        )
    _CAT_CACHE[key] = members
    return Commutator(A, J.members, members, "categorical")


# --- word formulas ---------------------------------------------------------------

def structure_of(A: Algebra) -> str:
    """``"group"`` or ``"loop"``: which division the word formulas may use."""
    sig = A.signature
    if "inv" in sig and has_group_structure(A):
        return "group"
    if "rdiv" in sig and "mul" in sig and is_loop(A):
        return "loop"
    raise StructureError(f"{A.name}: word formulas need a group or loop structure")


def _divider(A: Algebra, mode: str):
    if mode == "group":
        return lambda a, b: A.apply("mul", a, A.apply("inv", b))
    return lambda a, b: A.apply("rdiv", a, b)


def _tuples(pools: Sequence[np.ndarray]):
    """Chunks of the cartesian product of ``pools``, one array per pool."""
    sizes = tuple(len(p) for p in pools)
    total = int(np.prod(sizes)) if sizes else 1
    for lo in range(0, total, CHUNK):
        flat = np.arange(lo, min(total, lo + CHUNK), dtype=np.int64)
        idx = np.unravel_index(flat, sizes) if sizes else ()
        yield [p[i] for p, i in zip(pools, idx)]


def word_generators(A: Algebra, M: NormalSubobject, N: NormalSubobject,
                    scheme: Sequence[Term]) -> frozenset[int]:
    """Values ``w(mn) / w(n) / w(m) · w(p)`` for ``w`` in the scheme (in ``A``)."""
    mode = structure_of(A)
    div = _divider(A, mode)
    Mm = np.array(sorted(M.members))
    Nm = np.array(sorted(N.members))
    Pm = np.array(sorted(M.members & N.members))
    out: set[int] = set()
    for w in scheme:
        r = arity(w)
        xs = []
        for env in _tuples([Mm] * r + [Nm] * r):
            m, n = env[:r], env[r:]
            mn = [A.apply("mul", a, b) for a, b in zip(m, n)]
            xs.append(np.atleast_1d(div(div(eval_array(w, A, mn), eval_array(w, A, n)),
                                        eval_array(w, A, m))))
        X = np.unique(np.concatenate(xs))
        P = np.unique(np.concatenate([np.atleast_1d(eval_array(w, A, p))
                                      for p in _tuples([Pm] * r)]))
        out.update(np.unique(A.apply("mul", X[:, None], P[None, :])).tolist())
    return frozenset(out)


def _closure_in_join(A: Algebra, join: frozenset[int], gens) -> frozenset[int]:
    base, emb = _join_algebra(A, join)
    where = np.full(A.size, -1, dtype=np.int64)
    where[emb] = np.arange(len(emb))
    local = where[np.array(sorted(gens), dtype=np.int64)]
    if (local < 0).any():
        raise CrossCheckError(f"{A.name}: word generators escape M ∨ N")
    closed = normal_closure(base, local.tolist())
    return frozenset(emb[sorted(closed.members)].tolist())


def commutator_words(A: Algebra, M: NormalSubobject, N: NormalSubobject,
                     scheme: Sequence[Term]) -> Commutator:
    """Normal closure in ``M ∨ N`` of the word-formula generators."""
    _check_pair(M, N)
    if not scheme:
        raise ValidationError("word formula needs a nonempty word scheme")
    J = join_normal(M, N)
    gens = word_generators(A, M, N, scheme)
    return Commutator(A, J.members, _closure_in_join(A, J.members, gens), "words")


# --- Froehlich ----------------------------------------------------------------

@dataclass
class FroehlichResult:
    categorical: NormalSubobject
    words: NormalSubobject | None

    @property
    def value(self) -> NormalSubobject:
        return self.categorical


def kernel_pair_algebra(f: Homomorphism) -> Subpower:
    """``R[f]`` as a subalgebra of ``A × A``."""
    A = f.domain
    base = A if isinstance(A, FiniteAlgebra) else materialize(A)
    labels = kernel_pair(f).labels
    a, b = np.nonzero(labels[:, None] == labels[None, :])
    return Subpower(base, np.stack([a, b], axis=1), name=f"R[{A.name}->{f.codomain.name}]")


def froehlich_commutator(f: Homomorphism, B: VarietySpec, words: bool = True) -> FroehlichResult:
    """``[K[f], A]_B = {y : (1, y) ∈ [R[f]]_B}``, with the word variant when available."""
    if not f.is_surjective:
        raise ValidationError("froehlich commutator needs a surjective homomorphism")
    A = f.domain
    R = kernel_pair_algebra(f)
    U = np.array(sorted(radical_members(R, B)), dtype=np.int64)
    rows = R.rows[U]
    cat = NormalSubobject(A, rows[rows[:, 0] == R.base.unit, 1].tolist())
    word_value = None
    if words and B.word_scheme:
        try:
            structure_of(A)
        except StructureError:
            pass
        else:
            word_value = froehlich_words(f, B.word_scheme)
    return FroehlichResult(cat, word_value)


def froehlich_words(f: Homomorphism, scheme: Sequence[Term]) -> NormalSubobject:
    """Normal closure of ``w(ka) / w(a)`` over ``k ∈ K[f]^r``, ``a ∈ A^r``."""
    A = f.domain
    div = _divider(A, structure_of(A))
    K = np.array(sorted(kernel(f).members))
    All = np.arange(A.size)
    gens: set[int] = set()
    for w in scheme:
        r = arity(w)
        for env in _tuples([K] * r + [All] * r):
            k, a = env[:r], env[r:]
            ka = [A.apply("mul", x, y) for x, y in zip(k, a)]
            gens.update(np.unique(div(eval_array(w, A, ka), eval_array(w, A, a))).tolist())
    return normal_closure(A, gens)


# --- Higgins --------------------------------------------------------------------

def binary_term_functions(A: Algebra, depth: int) -> list[list[tuple[Term, np.ndarray]]]:
    """Binary terms over ``{mul, inv, 1}`` by depth, keeping one term per term function."""
    n = A.size
    grid = np.indices((n, n))
    seen: set[bytes] = set()

    def add(level, t, values):
        values = np.ascontiguousarray(np.broadcast_to(values, (n, n)))
        key = values.tobytes()
        if key not in seen:
            seen.add(key)
            level.append((t, values))

    first: list[tuple[Term, np.ndarray]] = []
    add(first, Var(0), grid[0])
    add(first, Var(1), grid[1])
    add(first, Apply(A.signature.unit_symbol), np.full((n, n), A.unit))
    levels = [first]
    for _ in range(depth):
        prev = levels[-1]
        older = [tf for lvl in levels[:-1] for tf in lvl]
        level: list[tuple[Term, np.ndarray]] = []
        for t, v in prev:
            add(level, Apply("inv", (t,)), A.apply("inv", v))
        # at least one factor must come from the previous level
        for s, u in prev:
            for t, v in prev + older:
                add(level, Apply("mul", (s, t)), A.apply("mul", u, v))
            for t, v in older:
                add(level, Apply("mul", (t, s)), A.apply("mul", v, u))
        levels.append(level)
    return levels


def _higgins_generators(A: Algebra, M: NormalSubobject, N: NormalSubobject,
                        funcs: Sequence[np.ndarray]) -> set[int]:
    Mm = np.array(sorted(M.members))
    Nm = np.array(sorted(N.members))
    mi, ni = [g.ravel() for g in np.meshgrid(Mm, Nm, indexing="ij")]
    prod = A.apply("mul", mi, ni)  # index pairs (m, n) -> mn
    div = _divider(A, "group")
    out: set[int] = set()
    for F in funcs:
        wmn = F[prod[:, None], prod[None, :]]
        wn = F[ni[:, None], ni[None, :]]
        wm = F[mi[:, None], mi[None, :]]
        out.update(np.unique(div(div(wmn, wn), wm)).tolist())
    return out


def higgins_commutator(A: Algebra, M: NormalSubobject, N: NormalSubobject,
                       depth: int = 2) -> tuple[Commutator, bool]:
    """Higgins commutator over binary words up to ``depth``; also whether it stabilised."""
    _check_pair(M, N)
    if depth < 1:
        raise ValidationError("higgins depth must be positive")
    if structure_of(A) != "group":
        raise StructureError(f"{A.name}: the Higgins commutator needs a group structure")
    J = join_normal(M, N)
    levels = binary_term_functions(A, depth)
    gens: set[int] = {A.unit}
    previous = None
    current = frozenset([A.unit])
    for d, level in enumerate(levels):
        gens |= _higgins_generators(A, M, N, [F for _, F in level])
        previous, current = current, _closure_in_join(A, J.members, gens)
    return Commutator(A, J.members, current, "higgins"), previous == current


# --- Huq --------------------------------------------------------------------------

def huq_commute_check(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> bool:
    """Whether ``m ↦ m``, ``n ↦ n`` extend to a morphism ``M × N → A``.

    The candidate graph is the subalgebra of ``A³`` generated by ``(m, 1, m)`` and
    ``(1, n, n)``; a cooperator exists iff it is a function defined on all of ``M × N``.
    """
    _check_pair(M, N)
    base = A if isinstance(A, FiniteAlgebra) else materialize(A)
    u = A.unit
    gens = [(m, u, m) for m in sorted(M.members)] + [(u, n, n) for n in sorted(N.members)]
    G = generate_subpower(base, gens, name="graph")
    domain = np.unique(G.rows[:, 0] * A.size + G.rows[:, 1])
    return len(domain) == G.size and G.size == len(M) * len(N)


def huq_oracle(A: Algebra, M: NormalSubobject, N: NormalSubobject,
               bound: int | None = None) -> frozenset[int]:
    """Least normal ``J`` of ``M ∨ N`` whose quotient makes the images of ``M``, ``N`` commute."""
    J = join_normal(M, N)
    base, emb = _join_algebra(A, J.members)
    where = np.full(A.size, -1, dtype=np.int64)
    where[emb] = np.arange(len(emb))
    Mb = NormalSubobject(base, where[sorted(M.members)].tolist(), validate=False)
    Nb = NormalSubobject(base, where[sorted(N.members)].tolist(), validate=False)
    kwargs = {} if bound is None else {"bound": bound}
    good = []
    for K in normals_enumerate(base, **kwargs):
        Q, q = quotient_by(K)
        if huq_commute_check(Q, direct_image(q, Mb), direct_image(q, Nb)):
            good.append(K)
    least = good[0]
    if any(not least <= K for K in good):
        raise CrossCheckError(f"{A.name}: commuting quotients have no least kernel")
    return frozenset(emb[sorted(least.members)].tolist())


def huq_commutator(A: Algebra, M: NormalSubobject, N: NormalSubobject, B: VarietySpec,
                   cross_check: bool = True, bound: int | None = None) -> Commutator:
    """``[M, N]`` relative to the abelian objects ``B``, checked against the lattice oracle."""
    value = commutator_categorical(A, M, N, B)
    if cross_check:
        oracle = huq_oracle(A, M, N, bound)
        if oracle != value.members:
            raise CrossCheckError(
                f"{A.name}: Huq oracle {A.names(oracle)} differs from {value.names()}"
            )
    return Commutator(A, value.join, value.members, "huq")


# --- Smith ------------------------------------------------------------------------

def matrix_algebra(A: Algebra, R: Congruence, S: Congruence) -> Subpower:
    """Subalgebra of ``A⁴`` generated by ``(a,a,b,b)``, ``(a,b) ∈ R`` and ``(u,v,u,v)``, ``(u,v) ∈ S``."""
    base = A if isinstance(A, FiniteAlgebra) else materialize(A)
    rp, sp = R.pairs(), S.pairs()
    gens = np.concatenate([
        np.stack([rp[:, 0], rp[:, 0], rp[:, 1], rp[:, 1]], axis=1),
        np.stack([sp[:, 0], sp[:, 1], sp[:, 0], sp[:, 1]], axis=1),
    ])
    return generate_subpower(base, gens, name=f"M({A.name})")


def smith_commutator(A: Algebra, R: Congruence, S: Congruence) -> Congruence:
    """Least ``δ`` such that a matrix row in ``δ`` forces the other row into ``δ``."""
    Mx = matrix_algebra(A, R, S).rows
    delta = discrete(A)
    while True:
        lab = delta.labels
        sel = lab[Mx[:, 2]] == lab[Mx[:, 3]]
        nxt = cg_generate(A, Mx[sel][:, :2], start=delta)
        if nxt == delta:
            return delta
        delta = nxt


def centralise_check(R: Congruence, S: Congruence) -> bool:
    return smith_commutator(R.algebra, R, S).is_discrete()


def smith_on_join(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> Congruence:
    """``[R_M, R_N]`` computed on the algebra ``M ∨ N``."""
    J = join_normal(M, N)
    base, emb = _join_algebra(A, J.members)
    RM = Congruence(base, M.congruence.labels[emb])
    RN = Congruence(base, N.congruence.labels[emb])
    return smith_commutator(base, RM, RN)


def commutator_from_smith(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> Commutator:
    J = join_normal(M, N)
    _, emb = _join_algebra(A, J.members)
    delta = smith_on_join(A, M, N)
    return Commutator(A, J.members, frozenset(emb[sorted(delta.unit_class())].tolist()), "smith")
