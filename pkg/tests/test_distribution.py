import math

import pytest
from hypothesis import given, settings, strategies as st

from kolyvagin_lab import distribution as D
from kolyvagin_lab.exactlin import int_rank
from kolyvagin_lab.scenario import submasks

from conftest import load


def test_rank_equals_group_order_times_rank_T(scn):
    U = D.build_U(scn, scn.full_mask)
    assert U.t_rank == math.prod(scn.orders)
    assert U.rank == U.t_rank * scn.h_order
    assert set(U.snf_diagonal) <= {0, 1}


@pytest.mark.parametrize(("name", "rank"), [("S1", 3), ("S2", 18), ("S3", 9), ("S4", 36)])
def test_bundled_ranks(name, rank):
    scn = load(name)
    assert D.build_U(scn, scn.full_mask).rank == rank


def test_lambda_rows_are_relations(scn):
    U = D.build_U(scn, scn.full_mask)
    for i in range(scn.k):
        for sub in submasks(scn.full_mask & ~(1 << i)):
            for g in scn.group_elements(sub):
                rel = D.lambda_map(scn, i, {D.symbol(scn, sub, g): 1})
                assert U.is_relation(rel)
                assert U.coords(rel) == [0] * U.rank


def test_beta_after_lambda_is_gamma(scn):
    for i in range(scn.k):
        gamma = scn.gamma_element(i)
        for sub in submasks(scn.full_mask & ~(1 << i)):
            v = {D.symbol(scn, sub): 1}
            assert D.beta_map(scn, i, D.lambda_map(scn, i, v)) == D.act(scn, gamma, v)


def test_unit_round_trip(s2):
    U = D.build_U(s2, s2.full_mask)
    for n in range(U.rank):
        assert U.coords(U.lift(U.unit(n))) == U.unit(n)


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_relations_stable_under_group(data):
    scn = load("S2")
    U = D.build_U(scn, scn.full_mask)
    elems = list(scn.group_elements(scn.full_mask))
    g = data.draw(st.sampled_from(elems))
    i = data.draw(st.sampled_from(range(scn.k)))
    sub = data.draw(st.sampled_from(submasks(scn.full_mask & ~(1 << i))))
    rel = D.lambda_map(scn, i, {D.symbol(scn, sub): 1})
    assert U.is_relation(D.act_group(scn, g, rel))


@settings(max_examples=40, deadline=None)
@given(st.data())
def test_action_is_compatible(data):
    scn = load("S2")
    U = D.build_U(scn, scn.full_mask)
    elems = list(scn.group_elements(scn.full_mask))
    g1, g2 = data.draw(st.sampled_from(elems)), data.draw(st.sampled_from(elems))
    coords = data.draw(st.lists(st.integers(-5, 5), min_size=U.rank, max_size=U.rank))
    v = U.lift(coords)
    once = U.coords(D.act_group(scn, scn.g_mul(g1, g2), v))
    twice = U.coords(D.act_group(scn, g1, D.act_group(scn, g2, v)))
    assert once == twice


def test_inclusion_is_injective(scn):
    for sub in submasks(scn.full_mask):
        mat = D.include_U(scn, sub, scn.full_mask)
        assert int_rank(mat, D.build_U(scn, scn.full_mask).rank) == len(mat)


def test_exactness_every_prime(scn):
    for i in range(scn.k):
        report = D.check_exact(scn, i, scn.full_mask)
        assert report["passed"], report


def test_gamma_determinant_nonzero(scn):
    D.check_gamma_injective(scn)


def test_kolyvagin_vector_top_symbol(s1):
    vec = D.kolyvagin_vector(s1, 1)
    # D = σ + 2σ² on [x]
    assert sorted(vec.values()) == [1, 2]
    assert all(mask == 1 for mask, _, _ in vec)


def test_ix_rejects_foreign_prime(s2):
    with pytest.raises(ValueError):
        D.build_Ix(s2, 1, 0b01)
