import itertools

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from alglab import catalog
from alglab.algebra import (
    FiniteAlgebra,
    generate_subpower,
    hom_check,
    is_group,
    is_loop,
    power,
    product,
    restrict,
    satisfies,
    subalgebra_generate,
    term_function,
)
from alglab.errors import HomomorphismError, ValidationError
from alglab.terms import GROUP_SIGNATURE, parse_identity, parse_term

from oracles import Group, associativity_failures, loop_axioms, perm_matrix


@pytest.mark.parametrize("name", catalog.GROUP_NAMES)
def test_catalog_groups_are_groups(name):
    A = catalog.algebra(name)
    assert is_group(A)
    assert A.unit == 0
    G = Group(A)
    for a, b, c in itertools.product(range(A.size), repeat=3):
        assert G.mul[G.mul[a][b]][c] == G.mul[a][G.mul[b][c]]
    assert all(G.mul[a][G.inv[a]] == 0 for a in range(A.size))


def test_catalog_sizes():
    sizes = {n: catalog.algebra(n).size for n in catalog.ALGEBRA_NAMES}
    assert sizes == {"Z2": 2, "Z4": 4, "Z6": 6, "Z12": 12, "Klein4": 4, "Z2cube": 8,
                     "S3": 6, "D4": 8, "Q8": 8, "L5": 5}


def test_catalog_lookup_is_case_insensitive():
    assert catalog.algebra("s3") is catalog.algebra("S3")
    with pytest.raises(ValidationError, match="Z5"):
        catalog.algebra("Z5")


def test_l5_is_a_nonassociative_loop():
    L = catalog.algebra("L5")
    table = np.asarray(L.apply("mul", *np.indices((5, 5)))).tolist()
    assert loop_axioms(table) == []
    assert associativity_failures(table)
    assert is_loop(L)
    # the divisions really are the divisions
    for x, y in itertools.product(range(5), repeat=2):
        assert table[x][int(L.apply("ldiv", x, y))] == y
        assert table[int(L.apply("rdiv", y, x))][x] == y


def test_s3_matches_permutation_matrices():
    A = catalog.algebra("S3")
    # products compose left to right, so the transpose representation is multiplicative
    mats = {name: perm_matrix(p).T for p, name in catalog.S3_NAMES.items()}
    for a, b in itertools.product(A.elements, repeat=2):
        ab = A.elements[int(A.apply("mul", A.index(a), A.index(b)))]
        assert (mats[a] @ mats[b] == mats[ab]).all()


def test_q8_matches_complex_matrices():
    one = np.eye(2, dtype=complex)
    i = np.array([[1j, 0], [0, -1j]])
    j = np.array([[0, 1], [-1, 0]], dtype=complex)
    k = i @ j
    mats = {"1": one, "i": i, "j": j, "k": k}
    mats.update({"-" + key: -m for key, m in list(mats.items())})
    A = catalog.algebra("Q8")
    for a, b in itertools.product(A.elements, repeat=2):
        ab = A.elements[int(A.apply("mul", A.index(a), A.index(b)))]
        assert np.allclose(mats[a] @ mats[b], mats[ab])


def test_d4_matches_symmetries_of_a_square():
    r = np.array([[0, -1], [1, 0]])
    s = np.array([[1, 0], [0, -1]])
    mats = {}
    for a in range(4):
        for b in range(2):
            name = ("e" if a == 0 else "r" if a == 1 else f"r{a}") if b == 0 else \
                ("s" if a == 0 else "rs" if a == 1 else f"r{a}s")
            mats[name] = np.linalg.matrix_power(r, a) @ np.linalg.matrix_power(s, b)
    A = catalog.algebra("D4")
    for a, b in itertools.product(A.elements, repeat=2):
        ab = A.elements[int(A.apply("mul", A.index(a), A.index(b)))]
        assert (mats[a] @ mats[b] == mats[ab]).all()


def test_table_validation_errors():
    t = np.array([[0, 1], [1, 0]])
    with pytest.raises(ValidationError, match="missing table"):
        FiniteAlgebra("X", GROUP_SIGNATURE, ["a", "b"], 0, {"mul": t, "1": np.asarray(0)})
    with pytest.raises(ValidationError, match="out-of-range"):
        FiniteAlgebra("X", GROUP_SIGNATURE, ["a", "b"], 0,
                      {"mul": t + 1, "inv": np.array([0, 1]), "1": np.asarray(0)})
    with pytest.raises(ValidationError, match="duplicate element name 'a'"):
        FiniteAlgebra("X", GROUP_SIGNATURE, ["a", "a"], 0,
                      {"mul": t, "inv": np.array([0, 1]), "1": np.asarray(0)})
    with pytest.raises(ValidationError, match="shape"):
        FiniteAlgebra("X", GROUP_SIGNATURE, ["a", "b"], 0,
                      {"mul": t[0], "inv": np.array([0, 1]), "1": np.asarray(0)})


def test_hom_check_accepts_and_rejects():
    Z4, Z2 = catalog.algebra("Z4"), catalog.algebra("Z2")
    f = hom_check([0, 1, 0, 1], Z4, Z2)
    assert f.is_surjective and not f.is_injective
    with pytest.raises(HomomorphismError):
        hom_check([0, 1, 1, 1], Z4, Z2)


def test_product_projections():
    P, p, q = product(catalog.algebra("S3"), catalog.algebra("Z2"))
    assert P.size == 12
    assert is_group(P)
    hom_check(p.map, P, p.codomain)
    hom_check(q.map, P, q.codomain)


@settings(max_examples=40, deadline=None)
@given(st.sampled_from(catalog.ALGEBRA_NAMES), st.data())
def test_subalgebra_generate_is_a_closure(name, data):
    A = catalog.algebra(name)
    gens = data.draw(st.sets(st.integers(0, A.size - 1), max_size=3))
    S = subalgebra_generate(A, gens)
    assert set(gens) <= S
    assert subalgebra_generate(A, S) == S
    # closed under every operation
    mem = np.array(sorted(S))
    for sym, k in A.signature.operations:
        grid = [g.ravel() for g in np.meshgrid(*[mem] * k)] if k else []
        assert set(np.atleast_1d(A.apply(sym, *grid)).tolist()) <= S


@settings(max_examples=30, deadline=None)
@given(st.sampled_from(catalog.GROUP_NAMES), st.data())
def test_subgroup_generation_matches_oracle(name, data):
    A = catalog.algebra(name)
    gens = data.draw(st.sets(st.integers(0, A.size - 1), max_size=3))
    assert subalgebra_generate(A, gens) == Group(A).subgroup(gens)


def test_restrict_gives_a_subalgebra():
    A = catalog.algebra("D4")
    S = restrict(A, subalgebra_generate(A, [A.index("r")]), name="C4")
    assert S.size == 4
    assert is_group(S)


def test_subpower_generation_agrees_with_generic_closure():
    Z2 = catalog.algebra("Z2")
    gens = [(1, 1, 0), (0, 1, 1)]
    S = generate_subpower(Z2, gens)
    assert S.size == 4
    P = power(Z2, 3)
    assert P.size == 8
    L = catalog.algebra("L5")
    T = generate_subpower(L, [(1, 2)])
    assert T.size == len({tuple(r) for r in T.rows.tolist()})


def test_satisfies_and_term_functions():
    ab = catalog.variety("ab")
    assert satisfies(catalog.algebra("Z6"), ab.identities)
    assert not satisfies(catalog.algebra("S3"), ab.identities)
    comm = parse_term("mul(mul(x0, x1), mul(inv(x0), inv(x1)))", GROUP_SIGNATURE)
    F = term_function(comm, catalog.algebra("Q8"))
    assert set(np.unique(F).tolist()) == {0, 1}
    assoc = parse_identity("mul(mul(x0, x1), x2)", "mul(x0, mul(x1, x2))",
                           catalog.algebra("L5").signature)
    assert not satisfies(catalog.algebra("L5"), [assoc])
