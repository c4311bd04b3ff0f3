import copy

import pytest

from kolyvagin_lab import eulermock as E
from kolyvagin_lab.recursion import canonical_family, family_from_coordinates, kolyvagin_family
from kolyvagin_lab.cohomology import canonical_basis

from conftest import NAMES, data_path, load


def bundled(name):
    return E.MockModel.load(data_path(f"{name}_mock"))


@pytest.mark.parametrize(
    ("coeffs", "expected"),
    [
        ([[1], [-1]], [(-1,)]),
        ([[5]], []),
        ([[0], [0], [1]], [(1,), (1,)]),
        ([[1, 0], [-1, 0]], [(-1, 0)]),
    ],
)
def test_q_polynomial(coeffs, expected):
    assert E.q_polynomial(coeffs) == expected


def test_q_polynomial_reduces(s1):
    assert E.q_polynomial([[1], [-1]], 3) == [(2,)]


@pytest.mark.parametrize("name", NAMES)
def test_bundled_mock_validates(name):
    rep = E.validate(bundled(name), load(name))
    assert rep["passed"], rep["errors"][:3]
    assert set(rep["checks"]) == set(E.VALIDATORS)


@pytest.mark.parametrize("name", NAMES)
def test_recursion_on_bundled_mock(name):
    scn, model = load(name), bundled(name)
    for fam in (canonical_family(scn), kolyvagin_family(scn)):
        rep = E.verify_kolyvagin_recursion(fam, model)
        assert rep["passed"], rep["failures"][:2]
        assert rep["checked"] == scn.k * 2 ** (scn.k - 1)


@pytest.mark.parametrize("name", NAMES)
def test_broken_family_fails(name):
    scn = load(name)
    basis = canonical_basis(scn)
    n = len(basis.vectors)
    data = {}
    for pos, y in enumerate(basis.labels):
        row = [0] * n
        row[pos * scn.h_order] = 2 if y == scn.full_mask else 1
        data[scn.squarefree_label(y)] = row
    rep = E.verify_kolyvagin_recursion(family_from_coordinates(scn, data, "broken"), bundled(name))
    assert not rep["passed"] and rep["failures"]


@pytest.mark.parametrize("name", NAMES)
def test_broken_mock_fails_validation(name):
    scn, model = load(name), bundled(name)
    broken = copy.deepcopy(model)
    top = scn.squarefree_label(scn.full_mask)
    broken.dhat[top] = [(v + 1) % model.modulus for v in broken.dhat[top]]
    rep = E.validate(broken, scn)
    assert not rep["passed"]
    assert E.verify_kolyvagin_recursion(canonical_family(scn), broken)["passed"] is False


def test_structural_failure_short_circuits(s1):
    broken = bundled("S1")
    broken.actions = broken.actions[:1]
    rep = E.validate(broken, s1)
    assert not rep["passed"]
    assert list(rep["checks"]) == ["structure"]


def test_kappa_trivial_cases(s2):
    model = bundled("S2")
    basis = canonical_basis(s2)
    zero = [0] * len(basis.vectors[0])
    assert not any(E.kappa(model, s2, zero, model.sigma["x1"]))
    for c in basis.classes.values():
        assert not any(E.kappa(model, s2, c, model.identity))


def test_generation_is_deterministic(s1):
    a, b = E.generate_mock(s1, 3), E.generate_mock(s1, 3)
    assert a is not None and a.to_dict() == b.to_dict()
    assert E.validate(a, s1)["passed"]


def test_round_trip(s2):
    model = bundled("S2")
    assert E.MockModel.from_dict(model.to_dict()).to_dict() == model.to_dict()


def test_malformed_mock(tmp_path):
    with pytest.raises(E.MockError):
        E.MockModel.from_dict({"modulus": 3})
    bad = tmp_path / "m.json"
    bad.write_text("{")
    with pytest.raises(E.MockError, match="malformed JSON"):
        E.MockModel.load(bad)
