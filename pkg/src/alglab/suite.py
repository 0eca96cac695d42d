"""Property families run over the bundled catalog.

Each family yields one line per property and instance (an algebra, optionally
with a variety); a line counts the individual cases checked.  Output order is
fixed so that reports are byte-identical across runs.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterator

import numpy as np

from . import catalog
from .algebra import Algebra, Homomorphism, product, restrict, satisfies, subalgebra_generate
from .birkhoff import (
    birkhoff_square_check,
    factors_through,
    radical,
    radical_congruence,
    scheme_sanity,
)
from .commutators import (
    commutator_categorical,
    commutator_from_smith,
    commutator_words,
    froehlich_commutator,
    higgins_commutator,
    huq_commute_check,
    huq_oracle,
    smith_commutator,
    smith_on_join,
)
from .congruence import (
    Congruence,
    ExactSquare,
    NormalSubobject,
    cg_generate,
    congruence_lattice,
    direct_image,
    discrete,
    join_normal,
    meet_normal,
    normal_closure,
    normals_enumerate,
    quotient,
    quotient_by,
    three_by_three,
    total,
)
from .errors import AlgLabError
from .extensions import (
    centralisation,
    central_check,
    commute_check,
    double_central_check,
    double_extension_check,
    extension_by,
    find_section,
    pullback_double,
    smith_double_central,
    square_of,
    square_of_extension,
    threefold_criterion,
    trivial_check,
)

QUICK_SIZE = 8

# products used for the product formula: small enough for exhaustive radicals
PRODUCT_PAIRS = [("Z2", "Z2"), ("Z4", "Z2"), ("Klein4", "Z2"), ("Z6", "Z2"), ("S3", "Z2"),
                 ("D4", "Z2"), ("Q8", "Z2")]


@dataclass
class Line:
    family: str
    prop: str
    instance: str
    cases: int = 0
    failures: int = 0
    detail: str = ""

    @property
    def ok(self) -> bool:
        return self.failures == 0

    def text(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        out = f"{status} {self.family} {self.prop} {self.instance} cases={self.cases}"
        return out + (f" ({self.detail})" if self.detail else "")

    def to_dict(self) -> dict:
        out = {"property": self.prop, "instance": self.instance, "cases": self.cases,
               "ok": self.ok}
        if self.detail:
            out["detail"] = self.detail
        return out


@dataclass
class Tally:
    family: str
    lines: dict = field(default_factory=dict)

    def check(self, prop: str, instance: str, ok: bool, detail: str = "") -> bool:
        line = self.lines.setdefault((prop, instance), Line(self.family, prop, instance))
        line.cases += 1
        if not ok:
            line.failures += 1
            if not line.detail:
                line.detail = detail or "failed"
        return ok

    def guard(self, prop: str, instance: str, fn: Callable[[], bool], detail: str = "") -> bool:
        try:
            ok = bool(fn())
        except AlgLabError as exc:
            return self.check(prop, instance, False, f"{type(exc).__name__}: {exc}")
        return self.check(prop, instance, ok, detail)


@dataclass
class Scope:
    quick: bool = False
    bound: int = 24

    def algebras(self, groups_only: bool = False) -> list[Algebra]:
        names = catalog.GROUP_NAMES if groups_only else catalog.ALGEBRA_NAMES
        out = [catalog.algebra(n) for n in names]
        return [A for A in out if not self.quick or A.size <= QUICK_SIZE]


def _label(A: Algebra, B=None) -> str:
    return A.name if B is None else f"{A.name}/{B.name}"


def _pairs(Ns):
    return itertools.product(Ns, Ns)


def _in_join(A: Algebra, join: NormalSubobject, subs):
    """Restrict ``A`` to ``join`` and transport normal subobjects there."""
    X = restrict(A, join.members, name=f"{A.name}[{len(join)}]")
    emb = np.array(sorted(join.members))
    where = np.full(A.size, -1, dtype=np.int64)
    where[emb] = np.arange(len(emb))

    def move(S):
        return NormalSubobject(X, where[sorted(S)].tolist(), validate=False)

    return X, emb, [move(S.members if isinstance(S, NormalSubobject) else S) for S in subs]


# --- families ----------------------------------------------------------------------

def family_diagram(scope: Scope) -> Tally:
    t = Tally("diagram")
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        lab = _label(A)
        for M, N in _pairs(Ns):
            t.guard("join-equals-generated", lab,
                    lambda: join_normal(M, N).members == subalgebra_generate(A, M.members | N.members))
            t.guard("meet-is-normal", lab, lambda: meet_normal(M, N).members == M.members & N.members)
            t.guard("three-by-three-exact", lab, lambda: three_by_three(A, M, N) is not None)

            def noether():
                X, _, (Mx, Nx) = _in_join(A, join_normal(M, N), [M, N])
                d = three_by_three(X, Mx, Nx)
                sizes = (d.objects["N/MN"].size == d.objects["A/M"].size
                         and d.objects["M/MN"].size == d.objects["A/N"].size)
                return sizes and len(d.noether) == 2
            t.guard("noether-isomorphisms", lab, noether)
        for J, M, N in itertools.product(Ns, Ns, Ns):
            t.guard("threefold-criterion", lab, lambda: _threefold_consistent(A, J, M, N))
        for theta in congruence_lattice(A, scope.bound):
            t.check("congruences-compatible", lab, theta.is_compatible())
        # morphisms of short exact sequences along every quotient
        for J in Ns:
            Q, q = quotient_by(J)
            QN = normals_enumerate(Q, scope.bound)
            for M in Ns:
                for L in QN:
                    if not q.image(M.members) <= L.members:
                        continue
                    sq = ExactSquare(q, M, L)
                    t.check("pullback-iff-injective", lab,
                            sq.left_square_is_pullback() == sq.b_is_injective())
                    t.check("onto-iff-regular-pushout", lab,
                            sq.k_is_surjective() == sq.right_square_is_regular_pushout())
    K4 = catalog.algebra("Klein4")
    M = normal_closure(K4, [K4.index("10")])
    N = normal_closure(K4, [K4.index("01")])
    J = normal_closure(K4, [K4.index("11")])
    t.guard("threefold-diagonal-fails", "Klein4", lambda: not threefold_criterion(K4, J, M, N))
    return t


def _threefold_consistent(A, J, M, N) -> bool:
    holds = threefold_criterion(A, J, M, N)
    # M ≤ N or J ≤ M ∧ N force the criterion
    if M <= N or N <= M or J.members <= (M.members & N.members):
        return holds
    return True


def family_reflection(scope: Scope) -> Tally:
    t = Tally("reflection")
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        lattice = congruence_lattice(A, scope.bound)
        Bs = catalog.varieties_for(A)
        for B in Bs:
            lab = _label(A, B)
            R = radical(A, B)
            t.check("reflection-in-variety", lab, satisfies(R.reflected, B.identities))
            t.check("unit-kernel-is-radical", lab,
                    R.unit_map.is_surjective
                    and frozenset(np.flatnonzero(R.unit_map.map == 0).tolist()) == R.radical.members)
            t.check("radical-idempotent", lab, radical(R.reflected, B).radical.is_trivial())
            for theta in lattice:
                C, h = quotient(A, theta)
                if satisfies(C, B.identities):
                    t.check("universality", lab, factors_through(h, R.unit_map))
            for J in Ns:
                _, q = quotient_by(J)
                t.guard("birkhoff-square", lab, lambda: birkhoff_square_check(q, B))
            t.check("scheme-vanishes", lab, not scheme_sanity(B, [A]))
        # triv ⊆ ab ⊆ nil2 (groups) and triv ⊆ gp (loops)
        chain = ([catalog.variety_for("triv", A), catalog.variety("ab"), catalog.variety("nil2")]
                 if A.signature == catalog.GROUP_SIGNATURE
                 else [catalog.variety_for("triv", A), catalog.variety("gp-in-loops")])
        for small, big in zip(chain, chain[1:]):
            t.check("radical-antitone", _label(A),
                    radical_congruence(A, big).unit_class() <= radical_congruence(A, small).unit_class())
    return t


def family_commutator_properties(scope: Scope) -> Tally:
    t = Tally("commutator-properties")
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        zero = Ns[0]
        for B in catalog.varieties_for(A):
            lab = _label(A, B)

            def cat(M, N, A=A, B=B):
                return commutator_categorical(A, M, N, B).members

            for N in Ns:
                t.guard("(1) zero", lab, lambda: cat(zero, N) == {A.unit} == cat(N, zero))
            for M, N in _pairs(Ns):
                t.guard("(2) symmetric", lab, lambda: cat(M, N) == cat(N, M))
                t.guard("(3) below-meet", lab, lambda: cat(M, N) <= M.members & N.members)
                for L in Ns:
                    if N <= L:
                        t.guard("(4) monotone", lab, lambda: cat(M, N) <= cat(M, L))
                _quotient_items(t, lab, A, M, N, B, scope)
    for left, right in PRODUCT_PAIRS:
        A, A2 = catalog.algebra(left), catalog.algebra(right)
        if scope.quick and A.size * A2.size > QUICK_SIZE:
            continue
        for B in catalog.varieties_for(A):
            _product_item(t, A, A2, B, scope)
    L5 = catalog.algebra("L5")
    one, _ = quotient(L5, total(L5), name="1")
    for B in catalog.varieties_for(L5):
        _product_item(t, L5, one, B, scope)
    return t


def _quotient_items(t: Tally, lab: str, A, M, N, B, scope: Scope):
    """Items (5), (7) and (8): behaviour under quotients of ``M ∨ N``."""
    join = join_normal(M, N)
    X, emb, (Mx, Nx) = _in_join(A, join, [M, N])
    where = {int(a): i for i, a in enumerate(emb)}
    value = frozenset(where[m] for m in commutator_categorical(A, M, N, B).members)
    commuting = []
    for J in normals_enumerate(X, scope.bound):
        Q, q = quotient_by(J)
        qM, qN = direct_image(q, Mx), direct_image(q, Nx)
        image = q.image(value)
        target = commutator_categorical(Q, qM, qN, B).members
        t.check("(5) image-below", lab, image <= target)
        if threefold_criterion(X, J, Mx, Nx):
            t.check("(7) image-equal", lab, image == target)
        if len(target) == 1:
            commuting.append(J.members)
    least = min(commuting, key=len)
    t.check("(8) least-commuting-quotient", lab,
            least == value and all(least <= K for K in commuting))


def _product_item(t: Tally, A, A2, B, scope: Scope):
    P, _, _ = product(A, A2)
    lab = f"{P.name}/{B.name}"
    n2 = A2.size
    Ns, Ns2 = normals_enumerate(A, scope.bound), normals_enumerate(A2, scope.bound)

    def times(S, S2):
        return frozenset(a * n2 + b for a in S for b in S2)

    for (M, N), (M2, N2) in itertools.product(_pairs(Ns), _pairs(Ns2)):
        def item():
            lhs = commutator_categorical(
                P, NormalSubobject(P, times(M.members, M2.members), validate=False),
                NormalSubobject(P, times(N.members, N2.members), validate=False), B).members
            rhs = times(commutator_categorical(A, M, N, B).members,
                        commutator_categorical(A2, M2, N2, B).members)
            return lhs == rhs
        t.guard("(6) product", lab, item)


def family_word_formula(scope: Scope) -> Tally:
    t = Tally("word-formula")
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        for B in catalog.varieties_for(A):
            for M, N in _pairs(Ns):
                t.guard("words-equal-categorical", _label(A, B),
                        lambda: commutator_words(A, M, N, B.word_scheme)
                        == commutator_categorical(A, M, N, B))
    return t


def family_huq(scope: Scope) -> Tally:
    t = Tally("huq")
    for A in scope.algebras():
        B = catalog.abelian_for(A)
        Ns = normals_enumerate(A, scope.bound)
        for M, N in _pairs(Ns):
            lab = _label(A, B)
            value = commutator_categorical(A, M, N, B)
            t.guard("oracle-equals-categorical", lab,
                    lambda: huq_oracle(A, M, N, scope.bound) == value.members)
            t.guard("commute-iff-trivial", lab,
                    lambda: huq_commute_check(A, M, N) == value.is_trivial())
    return t


def family_smith(scope: Scope) -> Tally:
    t = Tally("smith")
    for A in scope.algebras():
        B = catalog.abelian_for(A)
        Ns = normals_enumerate(A, scope.bound)
        for M, N in _pairs(Ns):
            lab = _label(A, B)

            def kernel_pair_matches():
                X, _, (Mx, Nx) = _in_join(A, join_normal(M, N), [M, N])
                delta = smith_on_join(A, M, N)
                value = commutator_categorical(A, M, N, B)
                C = value.in_join().congruence
                return delta == C and commutator_from_smith(A, M, N) == value
            t.guard("kernel-pair-of-categorical", lab, kernel_pair_matches)
    return t


_SMITH_CACHE: dict = {}


def _smith(A, R, S):
    key = (A.key, R.labels.tobytes(), S.labels.tobytes())
    if key not in _SMITH_CACHE:
        _SMITH_CACHE[key] = smith_commutator(A, R, S)
    return _SMITH_CACHE[key]


def family_smith_properties(scope: Scope) -> Tally:
    t = Tally("smith-properties")
    for A in scope.algebras():
        lab = _label(A)
        Cs = congruence_lattice(A, scope.bound)
        D = discrete(A)
        for S in Cs:
            t.check("discrete", lab, _smith(A, D, S) == D)
        for R, S in itertools.product(Cs, Cs):
            c = _smith(A, R, S)
            t.check("symmetric", lab, c == _smith(A, S, R))
            t.check("below-meet", lab, c <= R.meet(S))
            for S2 in Cs:
                if S <= S2:
                    t.check("monotone", lab, c <= _smith(A, R, S2))
                t.check("join", lab, _smith(A, R, S.join(S2)) == c.join(_smith(A, R, S2)))
            if c.is_discrete():
                for theta in Cs:
                    Q, q = quotient(A, theta)
                    fR = _image_congruence(q, R)
                    fS = _image_congruence(q, S)
                    t.check("image-centralises", lab, _smith(Q, fR, fS).is_discrete())
    return t


def _image_congruence(q: Homomorphism, R: Congruence) -> Congruence:
    pairs = q.map[R.pairs()]
    return cg_generate(q.codomain, pairs)


def family_central_extensions(scope: Scope) -> Tally:
    t = Tally("central-extensions")
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        W = Ns[-1]
        for B in catalog.varieties_for(A):
            lab = _label(A, B)
            t.guard("in-variety-iff-self-commuting", lab,
                    lambda: satisfies(A, B.identities) == commute_check(A, W, W, B))
            for K in Ns:
                e = extension_by(K)

                def agrees():
                    central = central_check(e, B)
                    value = froehlich_commutator(e.map, B, words=False).categorical
                    return central == value.is_trivial() == commute_check(A, K, W, B)
                t.guard("central-iff-kernel-commutes", lab, agrees)
                t.guard("double-square-central-iff-central", lab,
                        lambda: double_central_check(square_of_extension(e.map), B)
                        == central_check(e, B))
                if find_section(e.map) is not None:
                    t.guard("split-central-iff-trivial", lab,
                            lambda: central_check(e, B) == trivial_check(e, B))

                def idempotent():
                    c1 = centralisation(e, B)
                    c2 = centralisation(c1, B)
                    return central_check(c1, B) and c2.domain.size == c1.domain.size
                t.guard("centralisation-idempotent", lab, idempotent)
    ab = catalog.variety("ab")
    anchors = [("S3", "(123)", False), ("Q8", "-1", True), ("D4", "r2", True)]
    for name, gen, expected in anchors:
        A = catalog.algebra(name)
        if scope.quick and A.size > QUICK_SIZE:
            continue
        e = extension_by(normal_closure(A, [A.index(gen)]))
        t.guard("anchor", f"{name}/<{gen}>", lambda: central_check(e, ab) == expected)
    return t


def family_furtado_coelho(scope: Scope) -> Tally:
    t = Tally("furtado-coelho")
    ab = catalog.variety("ab")
    for A in scope.algebras(groups_only=True):
        Ns = normals_enumerate(A, scope.bound)
        W = Ns[-1]
        for K in Ns:
            e = extension_by(K)

            def agree():
                f = froehlich_commutator(e.map, ab)
                h, _ = higgins_commutator(A, K, W, 2)
                return f.categorical.members == h.members == f.words.members
            t.guard("froehlich-equals-higgins", _label(A, ab), agree)
    return t


def family_image_stability(scope: Scope) -> Tally:
    t = Tally("image-stability")
    for A in scope.algebras():
        B = catalog.abelian_for(A)
        Ns = normals_enumerate(A, scope.bound)
        lab = _label(A, B)
        for J in Ns:
            Q, p = quotient_by(J)
            for M, N in _pairs(Ns):
                def stable():
                    lhs = direct_image(p, commutator_categorical(A, M, N, B).as_normal())
                    rhs = commutator_categorical(Q, direct_image(p, M), direct_image(p, N), B)
                    return lhs.members == rhs.members
                t.guard("image-of-commutator", lab, stable)
    return t


def family_trivial_variety_witness(scope: Scope) -> Tally:
    t = Tally("trivial-variety-witness")
    for A in scope.algebras():
        B = catalog.variety_for("triv", A)
        Ns = normals_enumerate(A, scope.bound)
        for M, N in _pairs(Ns):
            t.guard("commutator-is-meet", _label(A, B),
                    lambda: commutator_categorical(A, M, N, B).members == M.members & N.members)
    K4 = catalog.algebra("Klein4")
    triv = catalog.variety("triv")
    M = normal_closure(K4, [K4.index("10")])
    N = normal_closure(K4, [K4.index("01")])
    Q, p = quotient_by(normal_closure(K4, [K4.index("11")]))

    def witness():
        lhs = direct_image(p, commutator_categorical(K4, M, N, triv).as_normal())
        rhs = commutator_categorical(Q, direct_image(p, M), direct_image(p, N), triv)
        return lhs.is_trivial() and len(rhs) == 2 and lhs.members < rhs.members
    t.guard("image-strictly-smaller", "Klein4/diagonal", witness)
    return t


def family_double_central(scope: Scope) -> Tally:
    t = Tally("double-central")
    central_squares = []
    for A in scope.algebras():
        Ns = normals_enumerate(A, scope.bound)
        for B in catalog.varieties_for(A):
            lab = _label(A, B)
            for i, M in enumerate(Ns):
                for j, N in enumerate(Ns):
                    sq = square_of(A, M, N)
                    if not t.guard("is-double-extension", lab, lambda: double_extension_check(sq)):
                        continue
                    try:
                        central = double_central_check(sq, B, cross_check=False)
                    except AlgLabError as exc:
                        t.check("central-iff-commute", lab, False, str(exc))
                        continue
                    t.guard("central-iff-commute", lab, lambda: central == commute_check(A, M, N, B))
                    if B.name == "ab":
                        t.guard("smith-criterion-agrees", lab,
                                lambda: smith_double_central(sq) == central)
                    if (central and i <= j and not M.is_trivial() and not N.is_trivial()
                            and A.size <= QUICK_SIZE and B.signature == catalog.GROUP_SIGNATURE):
                        central_squares.append((lab, sq, B))
    # pull back along (D x E -> D, Z x E' -> Z) for E = Z2 and h: Z2 -> Z2, Z2 -> 0
    Z2 = catalog.algebra("Z2")
    _, to_zero = quotient(Z2, total(Z2), name="0")
    hs = [Homomorphism(Z2, Z2, np.arange(2)), to_zero]
    for lab, sq, B in central_squares:
        for h in hs:
            t.guard("pullback-stable", lab, lambda: _pulled_back_central(sq, h, B))
    return t


def _pulled_back_central(sq, h: Homomorphism, B) -> bool:
    D, Z = sq.f.domain, sq.f.codomain
    E, E2 = h.domain, h.codomain
    DE, pD, pE = product(D, E)
    ZE, qZ, qE = product(Z, E2)
    f2 = Homomorphism(DE, ZE, sq.f.map[pD.map] * E2.size + h.map[pE.map])
    pulled = pullback_double(sq, pD, qZ, f2)
    return double_extension_check(pulled) and double_central_check(pulled, B)


FAMILIES: dict[str, Callable[[Scope], Tally]] = {
    "diagram": family_diagram,
    "reflection": family_reflection,
    "commutator-properties": family_commutator_properties,
    "word-formula": family_word_formula,
    "huq": family_huq,
    "smith": family_smith,
    "smith-properties": family_smith_properties,
    "central-extensions": family_central_extensions,
    "furtado-coelho": family_furtado_coelho,
    "image-stability": family_image_stability,
    "trivial-variety-witness": family_trivial_variety_witness,
    "double-central": family_double_central,
}

# short names accepted by ``--only``
ALIASES = {
    "thm3.6": "commutator-properties",
    "remark3.9": "trivial-variety-witness",
}


def resolve(name: str) -> str:
    key = ALIASES.get(name.lower(), name.lower())
    if key not in FAMILIES:
        from .errors import ValidationError

        raise ValidationError(
            f"unknown suite family {name!r}; known: {', '.join(list(FAMILIES) + list(ALIASES))}"
        )
    return key


def run(only: list[str] | None = None, quick: bool = False, bound: int = 24) -> list[Tally]:
    scope = Scope(quick=quick, bound=bound)
    names = [resolve(n) for n in only] if only else list(FAMILIES)
    seen = []
    for n in names:
        if n not in seen:
            seen.append(n)
    return [FAMILIES[n](scope) for n in seen]


def iter_lines(tallies: list[Tally]) -> Iterator[Line]:
    for tally in tallies:
        yield from tally.lines.values()
