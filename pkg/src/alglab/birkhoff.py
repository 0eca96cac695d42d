"""Subvarieties given by identities, and the radical / reflection they induce.

The radical ``[A]_B`` is the unit class of the congruence generated by all
instances ``(s(a), t(a))`` of the identities ``s = t`` of ``B``; the reflection
``IA`` is the quotient by that congruence.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np

from .algebra import (
    CHUNK,
    Algebra,
    Homomorphism,
    Subpower,
    eval_array,
    restrict,
    satisfies,
    term_function,
)
from .congruence import (
    Congruence,
    NormalSubobject,
    close_roots,
    discrete,
    kernel_pair,
    normal_from_congruence,
    quotient,
)
from .errors import CrossCheckError, ValidationError
from .terms import Identity, Signature, Term, check_term, format_term, parse_term

# below this many environments every instance is evaluated in one pass
_DIRECT_LIMIT = 1 << 18
_SEED_SIZE = 12


@dataclass(frozen=True)
class VarietySpec:
    name: str
    signature: Signature
    identities: tuple[Identity, ...]
    word_scheme: tuple[Term, ...] = field(default=())

    def __post_init__(self):
        for ident in self.identities:
            check_term(ident.lhs, self.signature)
            check_term(ident.rhs, self.signature)
        for w in self.word_scheme:
            check_term(w, self.signature)

    @cached_property
    def key(self) -> str:
        return repr((self.signature.operations, [str(i) for i in self.identities]))

    def applies_to(self, A: Algebra) -> bool:
        return A.signature == self.signature

    def contains(self, A: Algebra) -> bool:
        return satisfies(A, self.identities)

    def to_dict(self) -> dict:
        out = {"name": self.name,
               "identities": [{"lhs": format_term(i.lhs), "rhs": format_term(i.rhs)}
                              for i in self.identities]}
        if self.word_scheme:
            out["word_scheme"] = [format_term(w) for w in self.word_scheme]
        return out


def load_variety_dict(raw: dict, sig: Signature) -> VarietySpec:
    try:
        idents = tuple(
            Identity(parse_term(i["lhs"], sig), parse_term(i["rhs"], sig))
            for i in raw["identities"]
        )
        scheme = tuple(parse_term(w, sig) for w in raw.get("word_scheme", []))
        return VarietySpec(raw["name"], sig, idents, scheme)
    except KeyError as exc:
        raise ValidationError(f"variety file is missing field {exc}") from None


@dataclass
class Reflection:
    source: Algebra
    reflected: Algebra
    unit_map: Homomorphism
    radical: NormalSubobject


_RADICAL_CACHE: dict[tuple[str, str], np.ndarray] = {}
_MEMBER_CACHE: dict[tuple[str, str], bool] = {}


def in_variety(A: Algebra, B: VarietySpec) -> bool:
    """Cached ``satisfies(A, B.identities)``."""
    key = (A.key, B.key)
    if key not in _MEMBER_CACHE:
        _MEMBER_CACHE[key] = satisfies(A, B.identities)
    return _MEMBER_CACHE[key]


def _instance_pairs(A: Algebra, ident: Identity, pool: np.ndarray, root: np.ndarray):
    """Yield arrays of instance pairs over ``pool**r`` not yet identified by ``root``."""
    r = ident.arity
    m = len(pool)
    total = m**r
    step = max(1, CHUNK // 4)
    for lo in range(0, total, step):
        flat = np.arange(lo, min(total, lo + step), dtype=np.int64)
        env = [pool[i] for i in np.unravel_index(flat, (m,) * r)] if r else []
        size = len(flat)
        lhs = np.broadcast_to(eval_array(ident.lhs, A, env), (size,))
        rhs = np.broadcast_to(eval_array(ident.rhs, A, env), (size,))
        diff = root[lhs] != root[rhs]
        if diff.any():
            yield lhs[diff], rhs[diff]


def radical_congruence(A: Algebra, B: VarietySpec) -> Congruence:
    """Least congruence whose quotient satisfies ``B``'s identities."""
    if not B.applies_to(A):
        raise ValidationError(f"variety {B.name} does not match the signature of {A.name}")
    key = (A.key, B.key)
    hit = _RADICAL_CACHE.get(key)
    if hit is not None:
        return Congruence(A, hit)
    theta = _radical_congruence(A, B)
    _RADICAL_CACHE[key] = theta.labels
    return theta


def _radical_congruence(A: Algebra, B: VarietySpec) -> Congruence:
    n = A.size
    # subalgebras of powers of a member of B are in B
    if isinstance(A, Subpower) and in_variety(A.base, B):
        return discrete(A)
    root = np.arange(n)
    if all(n ** ident.arity <= _DIRECT_LIMIT for ident in B.identities):
        xs, ys = [], []
        for ident in B.identities:
            for a, b in _instance_pairs(A, ident, root, root):
                xs.append(a)
                ys.append(b)
        if xs:
            root = close_roots(A, root, np.concatenate(xs), np.concatenate(ys))
        return Congruence(A, root)
    # Instances are only needed on class representatives: if d and d' are congruent
    # then so are their instances.  Seed with a few elements, then sweep the current
    # representatives until a full sweep merges nothing.
    rng = np.random.default_rng(0)
    seed = np.unique(np.concatenate([[A.unit], rng.choice(n, size=min(n, _SEED_SIZE), replace=False)]))
    for ident in B.identities:
        for a, b in _instance_pairs(A, ident, seed, root):
            root = close_roots(A, root, a, b)
    while True:
        merged = False
        for ident in B.identities:
            reps = np.unique(root)
            for a, b in _instance_pairs(A, ident, reps, root):
                root = close_roots(A, root, a, b)
                merged = True
                break
            if merged:
                break
        if not merged:
            return Congruence(A, root)


def radical(A: Algebra, B: VarietySpec) -> Reflection:
    theta = radical_congruence(A, B)
    IA, eta = quotient(A, theta, name=f"I({A.name})")
    return Reflection(A, IA, eta, normal_from_congruence(theta))


def radical_members(A: Algebra, B: VarietySpec) -> frozenset[int]:
    return radical_congruence(A, B).unit_class()


def radical_hom(f: Homomorphism, B: VarietySpec) -> Homomorphism:
    """Restriction of ``f`` to ``[dom]_B -> [cod]_B``."""
    src = radical_members(f.domain, B)
    dst = radical_members(f.codomain, B)
    img = f.image(src)
    if not img <= dst:
        raise CrossCheckError(
            f"radical of {f.domain.name} is not mapped into the radical of {f.codomain.name}"
        )
    S = restrict(f.domain, src, name=f"[{f.domain.name}]")
    T = restrict(f.codomain, dst, name=f"[{f.codomain.name}]")
    s_emb = np.array(sorted(src), dtype=np.int64)
    t_emb = np.array(sorted(dst), dtype=np.int64)
    where = np.full(f.codomain.size, -1, dtype=np.int64)
    where[t_emb] = np.arange(len(t_emb))
    return Homomorphism(S, T, where[f.map[s_emb]])


def birkhoff_square_check(f: Homomorphism, B: VarietySpec) -> bool:
    """Whether the radical square of a surjection is a pushout: ``[f]_B`` is onto."""
    if not f.is_surjective:
        raise ValidationError("birkhoff square check needs a surjection")
    return radical_hom(f, B).is_surjective


def factors_through(h: Homomorphism, eta: Homomorphism) -> bool:
    """Whether ``h`` factors through the surjection ``eta`` (kernel-pair refinement)."""
    return kernel_pair(eta) <= kernel_pair(h)


def scheme_sanity(B: VarietySpec, algebras: Sequence[Algebra]) -> list[str]:
    """Word-scheme terms that fail to vanish on some member of ``B`` among ``algebras``."""
    bad = []
    for w, A in itertools.product(B.word_scheme, algebras):
        if A.signature != B.signature or not B.contains(A):
            continue
        if (term_function(w, A) != A.unit).any():
            bad.append(f"{format_term(w)} on {A.name}")
    return bad
