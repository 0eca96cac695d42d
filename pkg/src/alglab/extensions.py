"""Extensions and double extensions, classified relative to a subvariety.

Squares are laid out as::

    X --c--> C
    |        |
    d        g
    v        v
    D --f--> Z
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .algebra import (
    Algebra,
    FiniteAlgebra,
    Homomorphism,
    identity_hom,
    materialize,
    product,
    restrict,
    subalgebra_generate,
    Subpower,
)
from .birkhoff import VarietySpec, radical_congruence, radical_members
from .commutators import (
    DoubleRelation,
    commutator_categorical,
    double_relation,
    froehlich_commutator,
    kernel_pair_algebra,
    smith_commutator,
)
from .congruence import (
    Congruence,
    NormalSubobject,
    direct_image,
    join_normal,
    kernel,
    kernel_pair,
    meet_normal,
    quotient,
    quotient_by,
    total,
)
from .errors import CrossCheckError, ValidationError


class Extension:
    """A surjective homomorphism ``f: A -> B'``."""

    def __init__(self, f: Homomorphism):
        if not f.is_surjective:
            raise ValidationError(f"{f.domain.name} -> {f.codomain.name} is not surjective")
        self.map = f

    @property
    def domain(self) -> Algebra:
        return self.map.domain

    @property
    def codomain(self) -> Algebra:
        return self.map.codomain

    @cached_property
    def kernel(self) -> NormalSubobject:
        return kernel(self.map)

    def __repr__(self):
        return f"<Extension {self.domain.name} -> {self.codomain.name}>"


def extension_by(N: NormalSubobject, name: str | None = None) -> Extension:
    """The quotient extension ``A -> A/N``."""
    _, q = quotient_by(N, name)
    return Extension(q)


def _fibre_product_size(left: np.ndarray, right: np.ndarray, size: int) -> int:
    """``|{(a, b) : left[a] == right[b]}|`` for label arrays with values below ``size``."""
    return int(np.dot(np.bincount(left, minlength=size), np.bincount(right, minlength=size)))


def trivial_check(e: Extension, B: VarietySpec) -> bool:
    """Whether ``A -> B' ×_{IB'} IA`` is bijective."""
    f = e.map
    lA = radical_congruence(f.domain, B).labels
    lB = radical_congruence(f.codomain, B).labels
    # the induced map IA -> IB'
    If = np.zeros(lA.max() + 1, dtype=np.int64)
    If[lA] = lB[f.map]
    size = _fibre_product_size(lB, If, lB.max() + 1)
    pairs = np.unique(f.map * (lA.max() + 1) + lA)
    return len(pairs) == f.domain.size == size


def kernel_pair_projection(f: Homomorphism) -> Homomorphism:
    """First projection ``R[f] -> A``."""
    R = kernel_pair_algebra(f)
    return Homomorphism(R, f.domain, R.rows[:, 0])


def central_check(e: Extension, B: VarietySpec) -> bool:
    """``[K, A]_B = 0``, confirmed by triviality of the kernel-pair projection."""
    by_commutator = froehlich_commutator(e.map, B, words=False).categorical.is_trivial()
    by_projection = trivial_check(Extension(kernel_pair_projection(e.map)), B)
    if by_commutator != by_projection:
        raise CrossCheckError(
            f"{e!r}: commutator route says {by_commutator}, kernel-pair route says {by_projection}"
        )
    return by_commutator


def centralisation(e: Extension, B: VarietySpec) -> Extension:
    """``A/[K, A]_B -> B'``."""
    K = froehlich_commutator(e.map, B, words=False).categorical
    Q, q = quotient_by(K, name=f"{e.domain.name}/[K,A]")
    out = np.zeros(Q.size, dtype=np.int64)
    out[q.map] = e.map.map
    return Extension(Homomorphism(Q, e.codomain, out))


def find_section(f: Homomorphism) -> Homomorphism | None:
    """A homomorphism ``s`` with ``f ∘ s = id``, or ``None``; exhaustive over generator images."""
    A, Bp = f.domain, f.codomain
    gens = _generating_set(Bp)
    fibres = [np.flatnonzero(f.map == g) for g in gens]
    for choice in np.ndindex(*[len(fb) for fb in fibres]):
        images = {g: int(fb[i]) for g, fb, i in zip(gens, fibres, choice)}
        s = _extend(Bp, A, images)
        if s is not None and (f.map[s] == np.arange(Bp.size)).all():
            return Homomorphism(Bp, A, s)
    return None


def _generating_set(A: Algebra) -> list[int]:
    gens: list[int] = []
    closed = subalgebra_generate(A, [])
    while len(closed) < A.size:
        g = max(set(range(A.size)) - closed)
        gens.append(g)
        closed = subalgebra_generate(A, gens)
    return gens


def _extend(src: Algebra, dst: Algebra, images: dict[int, int]) -> np.ndarray | None:
    """The homomorphism determined by generator images, or ``None`` if inconsistent."""
    mp = np.full(src.size, -1, dtype=np.int64)
    mp[src.unit] = dst.unit
    for g, v in images.items():
        if mp[g] not in (-1, v):
            return None
        mp[g] = v
    changed = True
    while changed:
        changed = False
        known = np.flatnonzero(mp >= 0)
        for sym, k in src.signature.operations:
            if k == 0:
                continue
            grid = [known[i].ravel() for i in np.indices((len(known),) * k)]
            tgt = np.asarray(src.apply(sym, *grid)).ravel()
            img = np.asarray(dst.apply(sym, *(mp[a] for a in grid))).ravel()
            old = mp[tgt]
            if ((old >= 0) & (old != img)).any():
                return None
            fresh = old < 0
            if fresh.any():
                # a target hit twice with different images is a conflict
                t, i = tgt[fresh], img[fresh]
                order = np.lexsort((i, t))
                t, i = t[order], i[order]
                same = t[1:] == t[:-1]
                if (same & (i[1:] != i[:-1])).any():
                    return None
                mp[t] = i
                changed = True
    return mp


# --- commuting normal subobjects ------------------------------------------------

def _pullback_test(D: DoubleRelation, B: VarietySpec) -> bool:
    """Whether ``[R_M □ R_N]_B`` is the pullback of ``[R_M]_B`` and ``[R_N]_B`` over ``M ∨ N``."""
    base = D.base
    quads = D.quads[sorted(radical_members(D.algebra, B))]
    RM = _pair_radical(base, D.p0, B)
    RN = _pair_radical(base, D.r0, B)
    n = base.size
    # pullback over the first coordinate: |{((x,z),(x,y))}|
    size = _fibre_product_size(RM[:, 0], RN[:, 0], n)
    image = np.unique((quads[:, 0] * n + quads[:, 1]) * n + quads[:, 2])
    return len(image) == len(quads) == size


def _pair_radical(base: FiniteAlgebra, pairs: np.ndarray, B: VarietySpec) -> np.ndarray:
    R = Subpower(base, pairs, name="pairs")
    return R.rows[sorted(radical_members(R, B))]


def commute_check(A: Algebra, M: NormalSubobject, N: NormalSubobject, B: VarietySpec) -> bool:
    """``[M, N]_B = 0``, confirmed by the pullback test on the radical of ``R_M □ R_N``."""
    by_commutator = commutator_categorical(A, M, N, B).is_trivial()
    by_pullback = _pullback_test(double_relation(A, M, N), B)
    if by_commutator != by_pullback:
        raise CrossCheckError(
            f"{A.name}: commutator route says {by_commutator}, pullback route says {by_pullback}"
        )
    return by_commutator


# --- double extensions ---------------------------------------------------------

@dataclass
class DoubleExtension:
    c: Homomorphism  # X -> C
    d: Homomorphism  # X -> D
    g: Homomorphism  # C -> Z
    f: Homomorphism  # D -> Z

    def __post_init__(self):
        for name in "cdgf":
            h = getattr(self, name)
            if not h.is_surjective:
                raise ValidationError(f"arrow {name} of the square is not surjective")
        if not (self.g.map[self.c.map] == self.f.map[self.d.map]).all():
            raise ValidationError("square does not commute")

    @property
    def X(self) -> Algebra:
        return self.c.domain

    def comparison_is_surjective(self) -> bool:
        Z = self.f.codomain.size
        size = _fibre_product_size(self.f.map, self.g.map, Z)
        image = np.unique(self.d.map * self.c.codomain.size + self.c.map)
        return len(image) == size


def double_extension_check(sq: DoubleExtension) -> bool:
    return sq.comparison_is_surjective()


def square_of(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> DoubleExtension:
    """``M∨N -> (M∨N)/M``, ``M∨N -> (M∨N)/N`` over ``0``."""
    J = join_normal(M, N)
    X = restrict(A, J.members, name=f"{A.name}[{len(J)}]")
    emb = np.array(sorted(J.members))
    CM = Congruence(X, M.congruence.labels[emb])
    CN = Congruence(X, N.congruence.labels[emb])
    C, c = quotient(X, CM, name="X/M")
    D, d = quotient(X, CN, name="X/N")
    Z, _ = quotient(X, total(X), name="0")
    return DoubleExtension(c, d, Homomorphism(C, Z, np.zeros(C.size, dtype=np.int64)),
                           Homomorphism(D, Z, np.zeros(D.size, dtype=np.int64)))


def square_of_extension(f: Homomorphism) -> DoubleExtension:
    """``A -> 0`` over ``B' -> 0`` with ``f`` vertical (a split epimorphism of extensions)."""
    A = f.domain
    Z, _ = quotient(A, total(A), name="0")
    zero = Homomorphism(A, Z, np.zeros(A.size, dtype=np.int64))
    return DoubleExtension(zero, f, identity_hom(Z),
                           Homomorphism(f.codomain, Z, np.zeros(f.codomain.size, dtype=np.int64)))


def _r_map(sq: DoubleExtension):
    """``r: R[c] -> R[f]`` as a homomorphism between pair algebras."""
    Rc = kernel_pair_algebra(sq.c)
    Rf = kernel_pair_algebra(sq.f)
    image = sq.d.map[Rc.rows]
    return Homomorphism(Rc, Rf, Rf.lookup(image))


def double_central_check(sq: DoubleExtension, B: VarietySpec, cross_check: bool = True) -> bool:
    """Whether ``c0`` maps ``[K[r], R[c]]_B`` isomorphically onto ``[K[d], X]_B``."""
    if not double_extension_check(sq):
        raise ValidationError("square is not a double extension")
    r = _r_map(sq)
    U = froehlich_commutator(r, B, words=False).categorical
    V = froehlich_commutator(sq.d, B, words=False).categorical
    heads = r.domain.rows[sorted(U.members), 0]
    central = len(np.unique(heads)) == len(U) and set(heads.tolist()) == V.members
    if cross_check and B.name == "ab":
        by_smith = smith_double_central(sq)
        if by_smith != central:
            raise CrossCheckError(
                f"double central check: commutator route says {central}, Smith route says {by_smith}"
            )
    return central


def smith_double_central(sq: DoubleExtension) -> bool:
    """``[R[d], R[c]] = Δ = [R[d] ∧ R[c], ∇]`` for Smith commutators on ``X``."""
    X = sq.X
    Rd, Rc = kernel_pair(sq.d), kernel_pair(sq.c)
    first = smith_commutator(X, Rd, Rc).is_discrete()
    return first and smith_commutator(X, Rd.meet(Rc), total(X)).is_discrete()


def fibre_product(f: Homomorphism, g: Homomorphism, name: str | None = None):
    """``A ×_C B`` for ``f: A -> C``, ``g: B -> C``, with its two projections."""
    A, Bq = materialize(f.domain), materialize(g.domain)
    P, p1, p2 = product(A, Bq, name=name)
    members = np.flatnonzero(f.map[p1.map] == g.map[p2.map])
    S = restrict(P, members.tolist(), name=name or f"{A.name}x_{Bq.name}")
    emb = np.arange(P.size) if S is P else S.embedding
    return S, Homomorphism(S, f.domain, p1.map[emb]), Homomorphism(S, g.domain, p2.map[emb])


def pullback_double(sq: DoubleExtension, p: Homomorphism, q: Homomorphism,
                    f2: Homomorphism) -> DoubleExtension:
    """Pull ``sq`` back along the map of extensions ``(p, q): f2 -> f``.

    ``f2: D' -> Z'``, ``p: D' -> D``, ``q: Z' -> Z`` with ``f ∘ p = q ∘ f2``.
    """
    if not (sq.f.map[p.map] == q.map[f2.map]).all():
        raise ValidationError("pullback data does not commute")
    Xp, x_to_X, x_to_D2 = fibre_product(sq.d, p, name="X'")
    Cp, c_to_C, c_to_Z2 = fibre_product(sq.g, q, name="C'")
    # c' sends (x, d') to (c x, f2 d')
    pairs = np.stack([sq.c.map[x_to_X.map], f2.map[x_to_D2.map]], axis=1)
    rows_C = np.stack([c_to_C.map, c_to_Z2.map], axis=1)
    codes_C = {tuple(r): i for i, r in enumerate(rows_C.tolist())}
    c2 = np.array([codes_C[tuple(r)] for r in pairs.tolist()], dtype=np.int64)
    return DoubleExtension(Homomorphism(Xp, Cp, c2), x_to_D2, c_to_Z2, f2)


# --- three-fold extensions --------------------------------------------------------

def threefold_criterion(A: Algebra, J: NormalSubobject, M: NormalSubobject,
                        N: NormalSubobject) -> bool:
    """``q_J(M ∧ N) = q_J M ∧ q_J N``, confirmed by the induced square being a double extension."""
    Q, q = quotient_by(J)
    lhs = direct_image(q, meet_normal(M, N))
    rhs = meet_normal(direct_image(q, M), direct_image(q, N))
    by_images = lhs == rhs
    by_square = _threefold_square(J, M, N)
    if by_images != by_square:
        raise CrossCheckError(
            f"{A.name}: image criterion says {by_images}, square criterion says {by_square}"
        )
    return by_images


def _threefold_square(J: NormalSubobject, M: NormalSubobject, N: NormalSubobject) -> bool:
    """Whether ``X -> X/J ×_{P2} P1`` is onto, with ``P1 = X/M ×_{X/(M∨N)} X/N``."""
    lM, lN = M.congruence.labels, N.congruence.labels
    lMN = join_normal(M, N).congruence.labels
    lJ = J.congruence.labels
    lJM = join_normal(J, M).congruence.labels
    lJN = join_normal(J, N).congruence.labels
    n = len(lM)
    a, b = np.nonzero(lMN[:, None] == lMN[None, :])
    # elements of P1 with their image in P2
    p1 = np.unique(np.stack([lM[a], lN[b], lJM[a], lJN[b]], axis=1), axis=0)
    p2_of_p1 = p1[:, 2] * n + p1[:, 3]
    # elements of X/J with their image in P2
    xj = np.unique(np.stack([lJ, lJM * n + lJN], axis=1), axis=0)
    size = _fibre_product_size(xj[:, 1], p2_of_p1, n * n)
    image = np.unique(np.stack([lJ, lM, lN], axis=1), axis=0)
    return len(image) == size
