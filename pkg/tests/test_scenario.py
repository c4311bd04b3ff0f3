import json
import re

import pytest

from kolyvagin_lab.distribution import KolyvaginConditionError, check_gamma_injective
from kolyvagin_lab.scenario import Scenario, ScenarioError, iter_w, omega, submasks

from conftest import load


def one_prime(**overrides):
    prime = {"id": "x", "level": 1, "group_order": 3, "p_coeffs": [1, -1], "norm_hint": 4}
    prime.update(overrides)
    return {"modulus": 3, "coefficient_group": [], "primes": [prime]}


def test_bundled_shapes():
    assert [load(n).orders for n in ("S1", "S2", "S3", "S4")] == [(3,), (3, 6), (9,), (3, 6)]
    assert load("S4").h_order == 2
    assert load("S3").primes[0].level == 2


def test_round_trip(scn):
    again = Scenario.from_dict(json.loads(json.dumps(scn.to_dict())))
    assert again.to_dict() == scn.to_dict()


def test_omega_signs():
    # y = x1 x2 x3 as bits 0..2
    assert [omega(i, 0b111) for i in range(3)] == [1, -1, 1]
    assert omega(1, 0b101) == 0
    assert omega(2, 0b101) == -1


def test_submask_order():
    assert submasks(0b11) == [0, 1, 2, 3]
    assert submasks(0b101) == [0, 1, 4, 5]


def test_iter_w():
    assert list(iter_w(0b11, 2, 2)) == [(0, 2), (1, 1), (2, 0)]
    assert list(iter_w(0b11, 2, -1)) == []


def test_group_arithmetic(s2):
    s = s2.sigma(1)
    assert s2.g_pow(s, 6) == s2.identity
    assert s2.g_mul(s2.sigma(0), s) == s2.g_mul(s, s2.sigma(0))
    assert len(list(s2.group_elements(s2.full_mask))) == 18
    assert s2.frob_inverse(0) == s2.g_pow(s2.sigma(1), -1)


def test_kolyvagin_operator_identity(scn):
    # (1 - σ) D = N - |G| in the group ring
    for i in range(scn.k):
        one_minus = scn.gr_add(scn.gr_one(), {(scn.sigma(i), 0): 1}, scale=-1)
        lhs = scn.gr_mul(one_minus, scn.kolyvagin_operator(i))
        rhs = scn.gr_add(scn.norm_element(i), {(scn.identity, 0): scn.orders[i]}, scale=-1)
        assert lhs == rhs


def test_squarefree_labels(s2):
    assert s2.squarefree_label(0) == "1"
    assert s2.parse_squarefree(s2.squarefree_label(3)) == 3


@pytest.mark.parametrize(
    ("overrides", "fragment"),
    [
        ({"group_order": 4}, "M ∤ |G_x|"),
        ({"p_coeffs": [1, 1]}, "M ∤ p(x;1)"),
        ({"norm_hint": 2}, "must divide"),
        ({"norm_hint": None}, "r_coeffs or norm_hint"),
        ({"level": 0}, "level must be positive"),
        ({"frobenius": {"y": 1}}, "unknown primes"),
    ],
)
def test_rejects_bad_primes(overrides, fragment):
    data = one_prime(**overrides)
    if data["primes"][0]["norm_hint"] is None:
        del data["primes"][0]["norm_hint"]
    with pytest.raises(ScenarioError, match=re.escape(fragment)):
        Scenario.from_dict(data)


def test_rejects_structural_errors(tmp_path):
    with pytest.raises(ScenarioError, match="missing field 'primes'"):
        Scenario.from_dict({"modulus": 3})
    with pytest.raises(ScenarioError, match="at least 2"):
        Scenario.from_dict({**one_prime(), "modulus": 1})
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(ScenarioError, match="malformed JSON"):
        Scenario.load(bad)


def test_gamma_injectivity_condition():
    check_gamma_injective(Scenario.from_dict(one_prime()))
    degenerate = Scenario.from_dict(one_prime(p_coeffs=[0]))
    with pytest.raises(KolyvaginConditionError, match="condition 3"):
        check_gamma_injective(degenerate)
