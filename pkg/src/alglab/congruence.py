"""Congruences, normal subobjects, quotients and the diagram lemmas.

Congruence generation is union-find saturation: every merged pair is pushed
through every one-position elementary translation ``g(c.., x, ..c)`` until
nothing new merges.  Merging is batched and done with connected components,
so a closure costs ``O(n * edges)`` array work instead of Python loops.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components

from .algebra import (
    CHUNK,
    Algebra,
    FiniteAlgebra,
    Homomorphism,
    hom_check,
    restrict,
    subalgebra_generate,
    translation_constants,
)
from .errors import BoundExceeded, ExactnessError, JoinMismatch, ValidationError

DEFAULT_BOUND = 24
SMALL_MERGE = 256


def _merge(root: np.ndarray, xs: np.ndarray, ys: np.ndarray) -> np.ndarray:
    """New root array after identifying ``xs[i]`` with ``ys[i]``; roots are class minima."""
    n = len(root)
    xs = root[xs]
    ys = root[ys]
    keep = xs != ys
    if not keep.any():
        return root
    xs, ys = xs[keep], ys[keep]
    if len(xs) <= SMALL_MERGE:
        return _merge_small(root, xs.tolist(), ys.tolist())
    rows = np.concatenate([np.arange(n), xs])
    cols = np.concatenate([root, ys])
    graph = coo_matrix((np.ones(len(rows), dtype=np.int8), (rows, cols)), shape=(n, n))
    _, comp = connected_components(graph, directed=False)
    least = np.full(comp.max() + 1, n, dtype=np.int64)
    np.minimum.at(least, comp, np.arange(n))
    return least[comp]


def _merge_small(root: np.ndarray, xs: list, ys: list) -> np.ndarray:
    # plain union-find on the current roots; scipy overhead dominates for few edges
    parent: dict = {}

    def find(a):
        while a in parent:
            a = parent[a]
        return a

    for x, y in zip(xs, ys):
        x, y = find(x), find(y)
        if x != y:
            lo, hi = (x, y) if x < y else (y, x)
            parent[hi] = lo
    if not parent:
        return root
    lookup = np.arange(len(root))
    for r in parent:
        lookup[r] = find(r)
    return lookup[root]


def _translations(A: Algebra, ea: np.ndarray, eb: np.ndarray):
    """Images of the pairs ``(ea[i], eb[i])`` under all elementary translations."""
    pool = translation_constants(A)
    m = len(pool)
    for sym, k in A.signature.operations:
        if k == 0:
            continue
        if k == 1:
            yield A.apply(sym, ea), A.apply(sym, eb)
            continue
        consts = pool[np.indices((m,) * (k - 1)).reshape(k - 1, -1)]
        step = max(1, CHUNK // consts.shape[1])
        for lo in range(0, len(ea), step):
            a = ea[lo:lo + step, None]
            b = eb[lo:lo + step, None]
            for j in range(k):
                cs = [c[None, :] for c in consts]
                xa = A.apply(sym, *(cs[:j] + [a] + cs[j:]))
                xb = A.apply(sym, *(cs[:j] + [b] + cs[j:]))
                yield xa.ravel(), xb.ravel()


def close_roots(A: Algebra, root: np.ndarray, ea, eb) -> np.ndarray:
    """Saturate the partition ``root`` after adding pairs ``(ea, eb)``.

    ``root`` must already be a congruence (or the discrete partition).
    """
    ea = np.asarray(ea, dtype=np.int64).ravel()
    eb = np.asarray(eb, dtype=np.int64).ravel()
    new = _merge(root, ea, eb)
    pending = _changed_edges(root, new)
    root = new
    while pending[0].size:
        if (root == root[0]).all():
            break
        xs, ys = [], []
        for xa, xb in _translations(A, *pending):
            diff = root[xa] != root[xb]
            if diff.any():
                xs.append(xa[diff])
                ys.append(xb[diff])
        if not xs:
            break
        new = _merge(root, np.concatenate(xs), np.concatenate(ys))
        pending = _changed_edges(root, new)
        root = new
    return root


def _changed_edges(old: np.ndarray, new: np.ndarray):
    r = np.flatnonzero((old == np.arange(len(old))) & (new != old))
    return r, new[r]


def _canonical(A: Algebra, root: np.ndarray) -> np.ndarray:
    """Block ids: the unit's block is 0, the rest numbered by least element."""
    _, first, inv = np.unique(root, return_index=True, return_inverse=True)
    # first[i] is the least element carrying the i-th distinct label
    order = np.argsort(first, kind="stable")
    u = inv[A.unit]
    order = np.concatenate([[u], order[order != u]])
    relabel = np.empty(len(order), dtype=np.int64)
    relabel[order] = np.arange(len(order))
    return relabel[inv]


class Congruence:
    """A compatible partition of ``algebra``'s carrier, stored as canonical block ids."""

    def __init__(self, algebra: Algebra, labels):
        self.algebra = algebra
        labels = np.asarray(labels, dtype=np.int64)
        self.labels = _canonical(algebra, labels)

    @classmethod
    def from_roots(cls, algebra, root):
        return cls(algebra, root)

    @classmethod
    def _canonical_labels(cls, algebra, labels) -> "Congruence":
        # labels already canonical (e.g. copied from another Congruence)
        out = cls.__new__(cls)
        out.algebra = algebra
        out.labels = labels
        return out

    @cached_property
    def roots(self) -> np.ndarray:
        least = np.full(self.num_blocks, self.algebra.size, dtype=np.int64)
        np.minimum.at(least, self.labels, np.arange(self.algebra.size))
        return least[self.labels]

    @property
    def num_blocks(self) -> int:
        return int(self.labels.max()) + 1

    @cached_property
    def representatives(self) -> np.ndarray:
        reps = np.full(self.num_blocks, -1, dtype=np.int64)
        reps[self.labels[::-1]] = np.arange(self.algebra.size)[::-1]
        return reps

    def blocks(self) -> list[list[int]]:
        out: list[list[int]] = [[] for _ in range(self.num_blocks)]
        for i, b in enumerate(self.labels.tolist()):
            out[b].append(i)
        return out

    def unit_class(self) -> frozenset[int]:
        return frozenset(np.flatnonzero(self.labels == 0).tolist())

    def related(self, a: int, b: int) -> bool:
        return self.labels[a] == self.labels[b]

    def pairs(self) -> np.ndarray:
        a, b = np.nonzero(self.labels[:, None] == self.labels[None, :])
        return np.stack([a, b], axis=1)

    def is_discrete(self) -> bool:
        return self.num_blocks == self.algebra.size

    def is_total(self) -> bool:
        return self.num_blocks == 1

    def __le__(self, other: "Congruence") -> bool:
        # every block of self sits inside one block of other
        img = np.full(self.num_blocks, -1, dtype=np.int64)
        img[self.labels] = other.labels
        return bool((img[self.labels] == other.labels).all())

    def __eq__(self, other):
        return isinstance(other, Congruence) and np.array_equal(self.labels, other.labels)

    def __hash__(self):
        return hash(self.labels.tobytes())

    def meet(self, other: "Congruence") -> "Congruence":
        combined = self.labels * (other.num_blocks + 1) + other.labels
        return Congruence(self.algebra, np.unique(combined, return_inverse=True)[1])

    def join(self, other: "Congruence") -> "Congruence":
        # the equivalence join of two congruences is already compatible
        return Congruence(self.algebra, _merge(self.roots, np.arange(self.algebra.size), other.roots))

    def is_compatible(self) -> bool:
        """Exhaustive compatibility check (test oracle)."""
        A, lab = self.algebra, self.labels
        n = A.size
        for sym, k in A.signature.operations:
            if k == 0:
                continue
            grid = np.indices((n,) * k).reshape(k, -1)
            base = lab[A.apply(sym, *grid)]
            for j in range(k):
                swapped = list(grid)
                swapped[j] = self.roots[grid[j]]
                if (lab[A.apply(sym, *swapped)] != base).any():
                    return False
        return True

    def describe(self) -> list[list[str]]:
        return [self.algebra.names(b) for b in self.blocks()]

    def __repr__(self):
        return f"<Congruence on {self.algebra.name}: {self.num_blocks} blocks>"


def discrete(A: Algebra) -> Congruence:
    return Congruence(A, np.arange(A.size))


def total(A: Algebra) -> Congruence:
    return Congruence(A, np.zeros(A.size, dtype=np.int64))


def cg_generate(A: Algebra, pairs: Iterable, start: Congruence | None = None) -> Congruence:
    """Smallest congruence containing ``pairs`` (and ``start`` when given)."""
    pairs = np.asarray(list(pairs) if not isinstance(pairs, np.ndarray) else pairs,
                       dtype=np.int64).reshape(-1, 2)
    root = np.arange(A.size) if start is None else start.roots.copy()
    root = close_roots(A, root, pairs[:, 0], pairs[:, 1])
    return Congruence(A, root)


# --- normal subobjects ---------------------------------------------------------

# congruence labels keyed by (algebra key, member set); pure functions of the key
_NORMAL_CACHE: dict[tuple, np.ndarray] = {}
_JOIN_CACHE: dict[tuple, np.ndarray] = {}


class NormalSubobject:
    """A subset that is the unit class of the congruence it generates."""

    def __init__(self, algebra: Algebra, members: Iterable[int], validate: bool = True,
                 congruence: Congruence | None = None):
        self.algebra = algebra
        self.members = frozenset(int(m) for m in members)
        if congruence is not None:
            self.__dict__["congruence"] = congruence
        if validate:
            if algebra.unit not in self.members:
                raise ValidationError(f"{algebra.name}: subset misses the unit")
            if self.congruence.unit_class() != self.members:
                raise ValidationError(
                    f"{algebra.name}: {algebra.names(self.members)} is not a normal subobject"
                )

    @cached_property
    def congruence(self) -> Congruence:
        A = self.algebra
        key = (A.key, self.members)
        labels = _NORMAL_CACHE.get(key)
        if labels is None:
            mem = np.array(sorted(self.members), dtype=np.int64)
            labels = cg_generate(A, np.stack([mem, np.full_like(mem, A.unit)], axis=1)).labels
            labels.setflags(write=False)
            _NORMAL_CACHE[key] = labels
        return Congruence._canonical_labels(A, labels)

    def __len__(self):
        return len(self.members)

    def __contains__(self, x):
        return x in self.members

    def __le__(self, other: "NormalSubobject") -> bool:
        return self.members <= other.members

    def __eq__(self, other):
        return isinstance(other, NormalSubobject) and self.members == other.members

    def __hash__(self):
        return hash(self.members)

    def is_trivial(self) -> bool:
        return len(self.members) == 1

    def is_whole(self) -> bool:
        return len(self.members) == self.algebra.size

    def names(self) -> list[str]:
        return self.algebra.names(self.members)

    def as_algebra(self) -> Algebra:
        return restrict(self.algebra, self.members,
                        name=f"{self.algebra.name}[{len(self.members)}]")

    def __repr__(self):
        return f"<Normal {self.names()} in {self.algebra.name}>"


def trivial(A: Algebra) -> NormalSubobject:
    return NormalSubobject(A, [A.unit], validate=False, congruence=discrete(A))


def whole(A: Algebra) -> NormalSubobject:
    return NormalSubobject(A, range(A.size), validate=False, congruence=total(A))


def normal_from_congruence(theta: Congruence) -> NormalSubobject:
    return NormalSubobject(theta.algebra, theta.unit_class(), validate=False, congruence=theta)


def normal_closure(A: Algebra, S: Iterable[int]) -> NormalSubobject:
    S = np.array(sorted(set(S) | {A.unit}), dtype=np.int64)
    theta = cg_generate(A, np.stack([S, np.full_like(S, A.unit)], axis=1))
    return normal_from_congruence(theta)


def meet_normal(M: NormalSubobject, N: NormalSubobject) -> NormalSubobject:
    _same_algebra(M, N)
    return NormalSubobject(M.algebra, M.members & N.members)


def join_normal(M: NormalSubobject, N: NormalSubobject) -> NormalSubobject:
    _same_algebra(M, N)
    A = M.algebra
    key = (A.key, M.members, N.members)
    labels = _JOIN_CACHE.get(key)
    if labels is not None:
        return normal_from_congruence(Congruence._canonical_labels(A, labels))
    J = normal_from_congruence(M.congruence.join(N.congruence))
    if subalgebra_generate(A, M.members | N.members) != J.members:
        raise JoinMismatch(
            f"{A.name}: join mismatch - normal join of {M.names()} and {N.names()} "
            "differs from the generated subalgebra; the ambient variety violates the "
            "join property of semi-abelian categories"
        )
    J.congruence.labels.setflags(write=False)
    _JOIN_CACHE[key] = J.congruence.labels
    return J


def _same_algebra(M, N):
    if M.algebra is not N.algebra and M.algebra.key != N.algebra.key:
        raise ValidationError("normal subobjects live in different algebras")


# --- quotients, kernels, images -----------------------------------------------

def _block_name(A: Algebra, rep: int) -> str:
    return f"[{A.element_name(rep)}]"


def quotient(A: Algebra, theta: Congruence, name: str | None = None):
    """``(A/theta, projection)``; blocks in canonical order (unit block first)."""
    reps = theta.representatives
    m = len(reps)
    tables = {}
    for sym, k in A.signature.operations:
        if k == 0:
            tables[sym] = np.asarray(0)
            continue
        grid = [reps[g] for g in np.indices((m,) * k)]
        tables[sym] = theta.labels[A.apply(sym, *grid)]
    names = [_block_name(A, int(r)) for r in reps]
    Q = FiniteAlgebra(name or f"{A.name}/{m}", A.signature, names, 0, tables)
    return Q, Homomorphism(A, Q, theta.labels)


def quotient_by(N: NormalSubobject, name: str | None = None):
    return quotient(N.algebra, N.congruence, name)


def kernel(f: Homomorphism) -> NormalSubobject:
    K = np.flatnonzero(f.map == f.codomain.unit)
    return NormalSubobject(f.domain, K.tolist(), validate=False, congruence=kernel_pair(f))


def kernel_pair(f: Homomorphism) -> Congruence:
    return Congruence(f.domain, np.unique(f.map, return_inverse=True)[1])


def direct_image(f: Homomorphism, N: NormalSubobject) -> NormalSubobject:
    if not f.is_surjective:
        raise ValidationError("direct image needs a surjective homomorphism")
    img = f.image(N.members)
    try:
        return NormalSubobject(f.codomain, img)
    except ValidationError:
        raise ExactnessError(
            f"image of {N.names()} along {f.domain.name} -> {f.codomain.name} is not normal"
        ) from None


def preimage(f: Homomorphism, N: NormalSubobject) -> NormalSubobject:
    return NormalSubobject(f.domain, f.preimage(N.members), validate=False)


def induced_map(f: Homomorphism, theta_src: Congruence, theta_dst: Congruence,
                Qsrc: Algebra, Qdst: Algebra) -> Homomorphism:
    """``Qsrc = dom/theta_src -> Qdst = cod/theta_dst`` induced by ``f``; checks well-definedness."""
    img = theta_dst.labels[f.map]
    out = np.full(theta_src.num_blocks, -1, dtype=np.int64)
    out[theta_src.labels] = img
    if (out[theta_src.labels] != img).any():
        raise ExactnessError(f"{f.domain.name} -> {f.codomain.name}: induced map not well defined")
    return Homomorphism(Qsrc, Qdst, out)


# --- enumeration ---------------------------------------------------------------

_LATTICE_CACHE: dict[str, list[Congruence]] = {}


def congruence_lattice(A: Algebra, bound: int = DEFAULT_BOUND) -> list[Congruence]:
    """All congruences, as joins of principal congruences; sorted by number of blocks (desc)."""
    if A.size > bound:
        raise BoundExceeded(f"{A.name} has {A.size} elements, lattice bound is {bound}")
    cached = _LATTICE_CACHE.get(A.key)
    if cached is not None:
        return [Congruence(A, c.labels) for c in cached]
    n = A.size
    principal: dict[bytes, Congruence] = {}
    for a in range(n):
        for b in range(a + 1, n):
            theta = cg_generate(A, [(a, b)])
            principal.setdefault(theta.labels.tobytes(), theta)
    found: dict[bytes, Congruence] = {discrete(A).labels.tobytes(): discrete(A)}
    found.update(principal)
    frontier = list(principal.values())
    gens = list(principal.values())
    while frontier:
        nxt = []
        for theta in frontier:
            for p in gens:
                j = theta.join(p)
                key = j.labels.tobytes()
                if key not in found:
                    found[key] = j
                    nxt.append(j)
        frontier = nxt
    out = sorted(found.values(), key=lambda c: (-c.num_blocks, c.labels.tolist()))
    _LATTICE_CACHE[A.key] = out
    return [Congruence(A, c.labels) for c in out]


def normals_enumerate(A: Algebra, bound: int = DEFAULT_BOUND) -> list[NormalSubobject]:
    """All normal subobjects, smallest first, ties broken by sorted members."""
    seen: dict[frozenset, NormalSubobject] = {}
    for theta in congruence_lattice(A, bound):
        N = normal_from_congruence(theta)
        seen.setdefault(N.members, N)
    return sorted(seen.values(), key=lambda N: (len(N), sorted(N.members)))


# --- the 3x3 diagram -----------------------------------------------------------

@dataclass
class ThreeByThree:
    objects: dict[str, Algebra]
    arrows: dict[str, Homomorphism]
    rows: list[tuple[str, str, str]]
    columns: list[tuple[str, str, str]]
    noether: dict[str, Homomorphism] = field(default_factory=dict)


def _quotient_of_sub(sub: Algebra, inner: frozenset[int], emb_index: dict[int, int]):
    """Quotient of the subalgebra ``sub`` by the normal subobject ``inner`` (ambient indices)."""
    local = [emb_index[x] for x in sorted(inner)]
    K = NormalSubobject(sub, local)
    Q, q = quotient_by(K)
    return Q, q


def three_by_three(A: Algebra, M: NormalSubobject, N: NormalSubobject) -> ThreeByThree:
    """Build the nine objects and the arrows between them and check exactness everywhere."""
    meet = meet_normal(M, N)
    join = join_normal(M, N)
    subs = {}
    index = {}
    embs = {}
    for label, S in (("MN", meet), ("M", M), ("N", N)):
        subs[label] = restrict(A, S.members, name=f"{label}")
        # restrict may hand back A itself, so embeddings come from the member lists
        embs[label] = np.array(sorted(S.members), dtype=np.int64)
        index[label] = {int(x): i for i, x in enumerate(embs[label])}
    AM, qM = quotient_by(M, "A/M")
    AN, qN = quotient_by(N, "A/N")
    AJ, qJ = quotient_by(join, "A/(MvN)")
    N_MN, qN_MN = _quotient_of_sub(subs["N"], meet.members, index["N"])
    M_MN, qM_MN = _quotient_of_sub(subs["M"], meet.members, index["M"])

    def incl(src, dst):
        s_emb = embs[src]
        if dst == "A":
            return Homomorphism(subs[src], A, s_emb)
        return Homomorphism(subs[src], subs[dst], np.array([index[dst][int(x)] for x in s_emb]))

    objects = {"MN": subs["MN"], "N": subs["N"], "N/MN": N_MN, "M": subs["M"], "A": A,
               "A/M": AM, "M/MN": M_MN, "A/N": AN, "A/MvN": AJ}
    idA = Homomorphism(A, A, np.arange(A.size))
    arrows = {
        "MN>N": incl("MN", "N"),
        "N>N/MN": qN_MN,
        "M>A": incl("M", "A"),
        "A>A/M": qM,
        "M/MN>A/N": induced_map(incl("M", "A"), kernel_pair(qM_MN), kernel_pair(qN),
                                 M_MN, AN),
        "A/N>A/MvN": induced_map(idA, kernel_pair(qN), kernel_pair(qJ), AN, AJ),
        "MN>M": incl("MN", "M"),
        "M>M/MN": qM_MN,
        "N>A": incl("N", "A"),
        "A>A/N": qN,
        "N/MN>A/M": induced_map(incl("N", "A"), kernel_pair(qN_MN), kernel_pair(qM), N_MN, AM),
        "A/M>A/MvN": induced_map(idA, kernel_pair(qM), kernel_pair(qJ), AM, AJ),
    }
    rows = [("MN>N", "N>N/MN", "row 1"), ("M>A", "A>A/M", "row 2"),
            ("M/MN>A/N", "A/N>A/MvN", "row 3")]
    columns = [("MN>M", "M>M/MN", "column 1"), ("N>A", "A>A/N", "column 2"),
               ("N/MN>A/M", "A/M>A/MvN", "column 3")]
    for name, arrow in arrows.items():
        try:
            hom_check(arrow.map, arrow.domain, arrow.codomain)
        except ValidationError as exc:
            raise ExactnessError(f"3x3 arrow {name} is not a homomorphism: {exc}") from None
    for left, right, label in rows + columns:
        _check_exact(arrows[left], arrows[right], label)
    out = ThreeByThree(objects, arrows, rows, columns)
    if join.is_whole():
        for name in ("N/MN>A/M", "M/MN>A/N"):
            f = arrows[name]
            if not (f.is_injective and f.is_surjective):
                raise ExactnessError(f"Noether comparison {name} is not bijective")
            out.noether[name] = f
    return out


def _check_exact(left: Homomorphism, right: Homomorphism, label: str):
    if not left.is_injective:
        raise ExactnessError(f"3x3 {label}: first arrow is not injective")
    if not right.is_surjective:
        raise ExactnessError(f"3x3 {label}: second arrow is not surjective")
    ker = frozenset(np.flatnonzero(right.map == right.codomain.unit).tolist())
    if ker != left.image():
        raise ExactnessError(f"3x3 {label}: kernel of the quotient differs from the subobject")


# --- morphisms of short exact sequences ----------------------------------------

@dataclass
class ExactSquare:
    """Data of a morphism of short exact sequences ``K'->A'->B'`` over ``K->A->B``.

    ``a`` is surjective, ``top`` is normal in ``a.domain``, ``bottom`` normal in
    ``a.codomain`` with ``a(top) <= bottom``.
    """

    a: Homomorphism
    top: NormalSubobject
    bottom: NormalSubobject

    def __post_init__(self):
        if not self.a.image(self.top.members) <= self.bottom.members:
            raise ValidationError("a does not map the top kernel into the bottom kernel")

    @cached_property
    def b(self) -> Homomorphism:
        Bt, ft = quotient_by(self.top)
        Bb, fb = quotient_by(self.bottom)
        return induced_map(self.a, self.top.congruence, self.bottom.congruence, Bt, Bb)

    def left_square_is_pullback(self) -> bool:
        # pullback of bottom -> A <- A' is the preimage of bottom; compare by counting fibres
        pre = np.isin(self.a.map, list(self.bottom.members)).sum()
        return int(pre) == len(self.top)

    def b_is_injective(self) -> bool:
        return self.b.is_injective

    def k_is_surjective(self) -> bool:
        return self.a.image(self.top.members) == self.bottom.members

    def right_square_is_regular_pushout(self) -> bool:
        # comparison A' -> A x_B B' must be onto the pullback
        ft = self.top.congruence.labels
        fb = self.bottom.congruence.labels
        comparison = set(zip(self.a.map.tolist(), ft.tolist()))
        bmap = self.b.map
        pullback = sum(int((fb == bmap[y]).sum()) for y in range(len(bmap)))
        return self.a.is_surjective and len(comparison) == pullback
