"""Bundled algebras and varieties.

Every catalog algebra has its unit at index 0.
"""

from __future__ import annotations

import itertools
import json
from functools import lru_cache
from importlib import resources

import numpy as np

from .algebra import FiniteAlgebra, is_group, is_loop
from .birkhoff import VarietySpec, load_variety_dict
from .errors import ValidationError
from .terms import GROUP_SIGNATURE, LOOP_SIGNATURE


def group_from_mul(name: str, elements, mul) -> FiniteAlgebra:
    """Table-backed group from a Python multiplication on element labels."""
    n = len(elements)
    index = {e: i for i, e in enumerate(elements)}
    table = np.array([[index[mul(a, b)] for b in elements] for a in elements])
    unit = 0
    inv = np.array([int(np.flatnonzero(table[i] == unit)[0]) for i in range(n)])
    return FiniteAlgebra(name, GROUP_SIGNATURE, [str(e) for e in elements], unit,
                         {"mul": table, "inv": inv, "1": np.asarray(unit)})


def cyclic(n: int) -> FiniteAlgebra:
    return group_from_mul(f"Z{n}", list(range(n)), lambda a, b: (a + b) % n)


def elementary_abelian(k: int, name: str) -> FiniteAlgebra:
    elements = ["".join(map(str, bits)) for bits in itertools.product((0, 1), repeat=k)]

    def add(a, b):
        return "".join(str((int(x) + int(y)) % 2) for x, y in zip(a, b))

    return group_from_mul(name, elements, add)


S3_NAMES = {(0, 1, 2): "e", (1, 0, 2): "(12)", (2, 1, 0): "(13)", (0, 2, 1): "(23)",
            (1, 2, 0): "(123)", (2, 0, 1): "(132)"}


def symmetric3() -> FiniteAlgebra:
    # a permutation p is stored as the image tuple (p(1), p(2), p(3)) shifted to 0-based;
    # products compose left to right: (p*q)(i) = q(p(i))
    perms = list(S3_NAMES)
    names = [S3_NAMES[p] for p in perms]
    by_name = dict(zip(names, perms))

    def mul(a, b):
        p, q = by_name[a], by_name[b]
        return S3_NAMES[tuple(q[p[i]] for i in range(3))]

    return group_from_mul("S3", names, mul)


def dihedral4() -> FiniteAlgebra:
    # r^i s^j with s r s = r^-1
    names = ["e", "r", "r2", "r3", "s", "rs", "r2s", "r3s"]
    pairs = [(0, 0), (1, 0), (2, 0), (3, 0), (0, 1), (1, 1), (2, 1), (3, 1)]
    label = dict(zip(pairs, names))
    pair = dict(zip(names, pairs))

    def mul(a, b):
        (i, j), (k, l) = pair[a], pair[b]
        return label[((i + (-k if j else k)) % 4, (j + l) % 2)]

    return group_from_mul("D4", names, mul)


def quaternion() -> FiniteAlgebra:
    names = ["1", "-1", "i", "-i", "j", "-j", "k", "-k"]
    # basis products: (sign, unit) for units 1,i,j,k
    basis = {
        ("1", "1"): (1, "1"), ("1", "i"): (1, "i"), ("1", "j"): (1, "j"), ("1", "k"): (1, "k"),
        ("i", "1"): (1, "i"), ("i", "i"): (-1, "1"), ("i", "j"): (1, "k"), ("i", "k"): (-1, "j"),
        ("j", "1"): (1, "j"), ("j", "i"): (-1, "k"), ("j", "j"): (-1, "1"), ("j", "k"): (1, "i"),
        ("k", "1"): (1, "k"), ("k", "i"): (1, "j"), ("k", "j"): (-1, "i"), ("k", "k"): (-1, "1"),
    }

    def split(x):
        return (-1, x[1:]) if x.startswith("-") else (1, x)

    def mul(a, b):
        (sa, ua), (sb, ub) = split(a), split(b)
        s, u = basis[(ua, ub)]
        s *= sa * sb
        return u if s == 1 else "-" + u

    return group_from_mul("Q8", names, mul)


# A nonassociative loop of order 5 (rows/columns indexed by 0..4, 0 the identity).
L5_TABLE = [
    [0, 1, 2, 3, 4],
    [1, 0, 3, 4, 2],
    [2, 4, 0, 1, 3],
    [3, 2, 4, 0, 1],
    [4, 3, 1, 2, 0],
]


def loop_from_table(name: str, table, names=None) -> FiniteAlgebra:
    t = np.asarray(table, dtype=np.int64)
    n = len(t)
    ldiv = np.zeros_like(t)
    rdiv = np.zeros_like(t)
    for x in range(n):
        for y in range(n):
            ldiv[x, t[x, y]] = y  # x \ (x y) = y
            rdiv[t[y, x], x] = y  # (y x) / x = y
    L = FiniteAlgebra(name, LOOP_SIGNATURE, names or [str(i) for i in range(n)], 0,
                      {"mul": t, "ldiv": ldiv, "rdiv": rdiv, "1": np.asarray(0)})
    if not is_loop(L):
        raise ValidationError(f"{name}: table is not a loop")
    return L


def loop5() -> FiniteAlgebra:
    return loop_from_table("L5", L5_TABLE, ["1", "a", "b", "c", "d"])


_BUILDERS = {
    "Z2": lambda: cyclic(2),
    "Z4": lambda: cyclic(4),
    "Z6": lambda: cyclic(6),
    "Z12": lambda: cyclic(12),
    "Klein4": lambda: elementary_abelian(2, "Klein4"),
    "Z2cube": lambda: elementary_abelian(3, "Z2cube"),
    "S3": symmetric3,
    "D4": dihedral4,
    "Q8": quaternion,
    "L5": loop5,
}

ALGEBRA_NAMES = tuple(_BUILDERS)
GROUP_NAMES = tuple(n for n in ALGEBRA_NAMES if n != "L5")
LOOP_NAMES = ("L5",)
VARIETY_NAMES = ("ab", "triv", "nil2", "gp-in-loops")
VARIETY_FILES = {"ab": "ab.json", "triv": "triv.json", "nil2": "nil2.json",
                 "gp-in-loops": "gp-in-loops.json"}


def algebra(name: str) -> FiniteAlgebra:
    for key in _BUILDERS:
        if key.lower() == name.lower():
            return _build(key)
    raise ValidationError(f"no catalog algebra named {name!r}")


@lru_cache(maxsize=None)
def _build(key: str) -> FiniteAlgebra:
    A = _BUILDERS[key]()
    if A.signature == GROUP_SIGNATURE and not is_group(A):
        raise ValidationError(f"catalog algebra {key} is not a group")
    return A


@lru_cache(maxsize=None)
def variety(name: str, for_loops: bool | None = None) -> VarietySpec:
    key = name.lower()
    if key not in VARIETY_FILES:
        raise ValidationError(f"no catalog variety named {name!r}")
    raw = json.loads(resources.files("alglab.data.varieties").joinpath(VARIETY_FILES[key]).read_text())
    sig = LOOP_SIGNATURE if raw.get("signature") == "loops" else GROUP_SIGNATURE
    if key == "triv" and for_loops:
        sig = LOOP_SIGNATURE
    return load_variety_dict(raw, sig)


def varieties_for(A: FiniteAlgebra) -> list[VarietySpec]:
    """Catalog varieties whose signature matches ``A``."""
    if A.signature == LOOP_SIGNATURE:
        return [variety("gp-in-loops"), variety("triv", for_loops=True)]
    return [variety("ab"), variety("triv"), variety("nil2")]


def variety_for(name: str, A: FiniteAlgebra) -> VarietySpec:
    if name.lower() == "ab" and A.signature == LOOP_SIGNATURE:
        return abelian_variety("loops")
    if name.lower() == "triv":
        return variety("triv", for_loops=A.signature == LOOP_SIGNATURE)
    return variety(name)


@lru_cache(maxsize=None)
def abelian_variety(sig_name: str = "groups") -> VarietySpec:
    """Abelian objects: the bundled ``ab`` for groups; commutative groups inside loops."""
    if sig_name == "groups":
        return variety("ab")
    return load_variety_dict({
        "name": "ab",
        "identities": [
            {"lhs": "mul(x0, x1)", "rhs": "mul(x1, x0)"},
            {"lhs": "mul(mul(x0, x1), x2)", "rhs": "mul(x0, mul(x1, x2))"},
        ],
    }, LOOP_SIGNATURE)


def abelian_for(A: FiniteAlgebra) -> VarietySpec:
    return abelian_variety("loops" if A.signature == LOOP_SIGNATURE else "groups")
