import pytest

from kolyvagin_lab import cohomology as C
from kolyvagin_lab.distribution import build_U, kolyvagin_vector
from kolyvagin_lab.exactlin import in_span_mod
from kolyvagin_lab.scenario import submasks

from conftest import load

H0_RANKS = {"S1": 2, "S2": 4, "S3": 2, "S4": 8}


@pytest.mark.parametrize("name", sorted(H0_RANKS))
def test_h0_rank(name):
    scn = load(name)
    rep = C.h0_crosscheck(scn)
    assert rep["direct_size"] == scn.modulus ** H0_RANKS[name]
    assert rep["via_K_size"] == rep["direct_size"]
    assert rep["log_size"] == H0_RANKS[name]
    assert rep["span_equal"] and rep["passed"]


def test_h0_at_trivial_level(s2):
    # z = 1: U = T and everything is fixed
    assert C.h0_crosscheck(s2, 0)["direct_size"] == s2.modulus


def test_class_arithmetic(s1):
    a = C.make_class(s1, 1, [1, 2, 0])
    b = C.make_class(s1, 1, [2, 2, 5])
    assert (a + b).coords == (0, 1, 2)
    assert a.scale(3).is_zero()
    with pytest.raises(ValueError):
        a + C.make_class(s1, 0, [1])


def test_canonical_basis_verifies(scn):
    rep = C.verify_canonical_basis(scn)
    assert rep["passed"], rep
    assert rep["rank"] == rep["expected_rank"]


def test_canonical_coordinates_are_unit_vectors(scn):
    basis = C.canonical_basis(scn)
    n = 0
    for y in basis.labels:
        want = [0] * len(basis.vectors)
        want[n] = 1
        assert C.class_coordinates(basis.classes[y], basis) == want
        n += scn.h_order


def test_c1_is_unit_class(s2):
    U = build_U(s2, s2.full_mask)
    assert list(C.canonical_basis(s2).classes[0].coords) == U.coords_mod({(0, s2.identity, 0): 1})


def test_cx_matches_classical_class_up_to_c1(s1):
    # the classical derived class D_x[x] differs from c̄_x by a multiple of c̄_1
    U = build_U(s1, 1)
    basis = C.canonical_basis(s1)
    diff = [a - b for a, b in zip(U.coords_mod(kolyvagin_vector(s1, 1)), basis.classes[1].coords)]
    assert in_span_mod(diff, [list(basis.classes[0].coords)], 3)


def test_non_fixed_vector_rejected(s1):
    U = build_U(s1, 1)
    top = U.coords_mod({(1, s1.identity, 0): 1})
    assert not C.is_fixed(s1, U, top)
    with pytest.raises(C.DependenceError):
        C.class_coordinates(C.make_class(s1, 1, top), C.canonical_basis(s1))


def test_inclusion_compatible(scn):
    for sub in submasks(scn.full_mask):
        assert C.inclusion_compatible(scn, sub)


def test_lift_is_a_cocycle_mod_M(s2):
    from kolyvagin_lab.complex import chain_mod, total_differential

    basis = C.canonical_basis(s2)
    for y in basis.labels:
        assert chain_mod(total_differential(s2, basis.lifts[y]), s2.modulus) == {}


def test_lift_of_round_trips(s2):
    from kolyvagin_lab.complex import bar_to_U, u_map

    basis = C.canonical_basis(s2)
    U = build_U(s2, s2.full_mask)
    mixed = [(a + 2 * b) % 3 for a, b in zip(basis.vectors[1], basis.vectors[3])]
    got = [v % 3 for v in bar_to_U(s2, u_map(basis.lift_of(mixed)), U)]
    assert got == mixed
