import itertools
import json

import numpy as np
import pytest

from alglab import catalog
from alglab.algebra import hom_check, satisfies
from alglab.birkhoff import (
    birkhoff_square_check,
    factors_through,
    load_variety_dict,
    radical,
    radical_congruence,
    scheme_sanity,
)
from alglab.congruence import normals_enumerate, quotient_by
from alglab.errors import ValidationError
from alglab.terms import GROUP_SIGNATURE

from oracles import Group


def radical_names(name, variety):
    A = catalog.algebra(name)
    return sorted(radical(A, catalog.variety_for(variety, A)).radical.names())


@pytest.mark.parametrize("name", catalog.GROUP_NAMES)
def test_ab_radical_is_derived_subgroup(name):
    A = catalog.algebra(name)
    G = Group(A)
    assert radical(A, catalog.variety("ab")).radical.members == G.lower_central(2)


@pytest.mark.parametrize("name", catalog.GROUP_NAMES)
def test_nil2_radical_is_third_lower_central_term(name):
    A = catalog.algebra(name)
    assert radical(A, catalog.variety("nil2")).radical.members == Group(A).lower_central(3)


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_triv_radical_is_everything(name):
    A = catalog.algebra(name)
    R = radical(A, catalog.variety_for("triv", A))
    assert len(R.radical) == A.size
    assert R.reflected.size == 1


def test_radical_anchors():
    assert radical_names("S3", "ab") == sorted(["e", "(123)", "(132)"])
    assert radical_names("Q8", "ab") == ["-1", "1"]
    assert radical_names("D4", "ab") == ["e", "r2"]
    assert radical_names("Z12", "ab") == ["0"]
    assert radical_names("S3", "nil2") == sorted(["e", "(123)", "(132)"])
    assert radical_names("L5", "gp-in-loops") == ["1", "a", "b", "c", "d"]


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_reflection_lands_in_variety_and_is_universal(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        R = radical(A, B)
        assert satisfies(R.reflected, B.identities)
        hom_check(R.unit_map.map, A, R.reflected)
        # every quotient in B factors through the unit
        for N in normals_enumerate(A):
            Q, q = quotient_by(N)
            if satisfies(Q, B.identities):
                assert factors_through(q, R.unit_map)
            else:
                assert not R.radical.members <= N.members


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_birkhoff_squares_of_quotients(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        for N in normals_enumerate(A):
            _, q = quotient_by(N)
            assert birkhoff_square_check(q, B)


def test_large_arity_radical_uses_sweep():
    # a 3-variable identity on 12 elements; Z12 is abelian so nothing is identified
    A = catalog.algebra("Z12")
    assert radical_congruence(A, catalog.variety("nil2")).is_discrete()


def test_word_schemes_vanish_in_their_varieties():
    algebras = [catalog.algebra(n) for n in catalog.ALGEBRA_NAMES]
    for name in catalog.VARIETY_NAMES:
        assert scheme_sanity(catalog.variety(name), algebras) == []


def test_variety_dict_round_trip():
    B = catalog.variety("nil2")
    again = load_variety_dict(json.loads(json.dumps(B.to_dict())), GROUP_SIGNATURE)
    assert again.key == B.key
    assert again.word_scheme == B.word_scheme


def test_variety_dict_errors():
    with pytest.raises(ValidationError, match="identities"):
        load_variety_dict({"name": "x"}, GROUP_SIGNATURE)
    with pytest.raises(ValidationError, match="position"):
        load_variety_dict({"name": "x", "identities": [{"lhs": "mul(x0", "rhs": "1"}]},
                          GROUP_SIGNATURE)


def test_varieties_for_signatures():
    assert [B.name for B in catalog.varieties_for(catalog.algebra("S3"))] == ["ab", "triv", "nil2"]
    assert [B.name for B in catalog.varieties_for(catalog.algebra("L5"))] == ["gp-in-loops", "triv"]
    with pytest.raises(ValidationError):
        catalog.variety("nilpotent")


def test_radical_is_the_identity_instance_closure():
    # direct check on Q8: the radical is generated by commutator values
    A = catalog.algebra("Q8")
    G = Group(A)
    values = {G.comm(a, b) for a, b in itertools.product(range(8), repeat=2)}
    assert radical(A, catalog.variety("ab")).radical.members == G.normal_closure(values)
    assert np.all(radical_congruence(A, catalog.variety("ab")).labels >= 0)
