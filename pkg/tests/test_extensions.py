import itertools

import numpy as np
import pytest

from alglab import catalog
from alglab.algebra import Homomorphism, product, satisfies
from alglab.commutators import commutator_categorical
from alglab.congruence import (
    normal_closure,
    normals_enumerate,
    quotient,
    quotient_by,
    total,
    trivial,
    whole,
)
from alglab.errors import ValidationError
from alglab.extensions import (
    DoubleExtension,
    Extension,
    central_check,
    centralisation,
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

from oracles import Group

AB = catalog.variety("ab")


def sub(A, *gens):
    return normal_closure(A, [A.index(g) for g in gens])


def extensions(A):
    for K in normals_enumerate(A):
        yield K, extension_by(K)


def test_central_anchors():
    S3 = catalog.algebra("S3")
    assert not central_check(extension_by(sub(S3, "(123)")), AB)
    Q8 = catalog.algebra("Q8")
    assert central_check(extension_by(sub(Q8, "-1")), AB)
    D4 = catalog.algebra("D4")
    assert central_check(extension_by(sub(D4, "r2")), AB)


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_central_iff_commutator_vanishes(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        for K, e in extensions(A):
            assert central_check(e, B) == commutator_categorical(A, K, whole(A), B).is_trivial()
            assert central_check(e, B) == commute_check(A, K, whole(A), B)


@pytest.mark.parametrize("name", catalog.GROUP_NAMES)
def test_ab_central_means_kernel_in_centre(name):
    A = catalog.algebra(name)
    G = Group(A)
    centre = {z for z in range(A.size) if all(G.mul[z][g] == G.mul[g][z] for g in range(A.size))}
    for K, e in extensions(A):
        assert central_check(e, AB) == (K.members <= centre)


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_split_central_extensions_are_trivial(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        for _, e in extensions(A):
            s = find_section(e.map)
            if s is not None:
                assert (e.map.map[s.map] == np.arange(e.codomain.size)).all()
                assert central_check(e, B) == trivial_check(e, B)


def test_sections():
    Z4 = catalog.algebra("Z4")
    assert find_section(extension_by(sub(Z4, "2")).map) is None
    S3 = catalog.algebra("S3")
    assert find_section(extension_by(sub(S3, "(123)")).map) is not None
    Q8 = catalog.algebra("Q8")
    assert find_section(extension_by(sub(Q8, "-1")).map) is None


def test_trivial_extensions():
    A = catalog.algebra("D4")
    assert trivial_check(extension_by(trivial(A)), AB)
    assert not trivial_check(extension_by(sub(A, "r2")), AB)
    # relative to triv only isomorphisms are trivial
    triv = catalog.variety("triv")
    assert [trivial_check(e, triv) for _, e in extensions(A)] == \
        [len(K) == 1 for K, _ in extensions(A)]
    # a product projection with abelian kernel is trivial
    P, p1, _ = product(catalog.algebra("S3"), catalog.algebra("Z2"))
    assert trivial_check(Extension(p1), AB)


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_centralisation_is_idempotent_and_central(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        for _, e in extensions(A):
            c = centralisation(e, B)
            assert central_check(c, B)
            assert centralisation(c, B).domain.size == c.domain.size


@pytest.mark.parametrize("name", catalog.ALGEBRA_NAMES)
def test_self_commuting_iff_in_variety(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        assert commute_check(A, whole(A), whole(A), B) == satisfies(A, B.identities)


def test_commute_examples():
    assert not commute_check(catalog.algebra("S3"), whole(catalog.algebra("S3")),
                             whole(catalog.algebra("S3")), AB)
    Z6 = catalog.algebra("Z6")
    assert commute_check(Z6, whole(Z6), whole(Z6), AB)
    L5 = catalog.algebra("L5")
    assert not commute_check(L5, whole(L5), whole(L5), catalog.variety("gp-in-loops"))
    assert commute_check(L5, whole(L5), trivial(L5), catalog.variety("gp-in-loops"))


def test_extension_must_be_onto():
    Z2, Z4 = catalog.algebra("Z2"), catalog.algebra("Z4")
    with pytest.raises(ValidationError, match="not surjective"):
        Extension(Homomorphism(Z2, Z4, [0, 2]))


@pytest.mark.parametrize("name", ["Klein4", "S3", "D4", "Q8", "Z2cube", "L5"])
def test_double_central_iff_commute(name):
    A = catalog.algebra(name)
    for B in catalog.varieties_for(A):
        for M, N in itertools.product(normals_enumerate(A), repeat=2):
            sq = square_of(A, M, N)
            assert double_extension_check(sq)
            central = double_central_check(sq, B)
            assert central == commute_check(A, M, N, B)
            if B.name == "ab":
                assert smith_double_central(sq) == central


def test_double_central_examples():
    D4 = catalog.algebra("D4")
    assert double_central_check(square_of(D4, sub(D4, "r"), sub(D4, "r2")), AB)
    S3 = catalog.algebra("S3")
    assert not double_central_check(square_of(S3, whole(S3), whole(S3)), AB)


def test_square_of_extension_is_a_double_extension():
    A = catalog.algebra("Q8")
    _, q = quotient_by(sub(A, "-1"))
    sq = square_of_extension(q)
    assert double_extension_check(sq)
    assert double_central_check(sq, AB) == central_check(Extension(q), AB)


def test_non_double_extension():
    # the same quotient twice over 0: the comparison into Q x Q misses the off-diagonal
    K = catalog.algebra("Klein4")
    M = sub(K, "10")
    Q, q = quotient_by(M)
    Z, _ = quotient(Q, total(Q), name="0")
    zero = Homomorphism(Q, Z, np.zeros(Q.size, dtype=np.int64))
    sq = DoubleExtension(q, q, zero, zero)
    assert not double_extension_check(sq)
    with pytest.raises(ValidationError, match="not a double extension"):
        double_central_check(sq, AB)


def test_pullback_of_double_central_square():
    D4 = catalog.algebra("D4")
    sq = square_of(D4, sub(D4, "r"), sub(D4, "r2"))
    Z2 = catalog.algebra("Z2")
    # pull back along D x Z2 -> D over Z x Z2 -> Z
    P, p1, p2 = product(sq.f.domain, Z2)
    Q, q1, _ = product(sq.f.codomain, Z2)
    f2 = np.array([sq.f.map[p1.map[i]] * Z2.size + p2.map[i] for i in range(P.size)])
    back = pullback_double(sq, p1, q1, Homomorphism(P, Q, f2))
    assert double_extension_check(back)
    assert double_central_check(back, AB)


def test_threefold_forced_cases():
    A = catalog.algebra("D4")
    Ns = normals_enumerate(A)
    for J, M, N in itertools.product(Ns, repeat=3):
        if M <= N or J.members <= (M.members & N.members):
            assert threefold_criterion(A, J, M, N)
