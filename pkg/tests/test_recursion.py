import json

import pytest
from hypothesis import given, settings, strategies as st

from kolyvagin_lab import recursion as R
from kolyvagin_lab.cohomology import canonical_basis
from kolyvagin_lab.scenario import submasks

from conftest import load


def unit_family(scn, scale_top=1):
    basis = canonical_basis(scn)
    n = len(basis.vectors)
    data = {}
    for pos, y in enumerate(basis.labels):
        row = [0] * n
        row[pos * scn.h_order] = scale_top if y == scn.full_mask else 1
        data[scn.squarefree_label(y)] = row
    return data


def test_shift_examples(s1):
    e = (0, s1.identity, 0)
    assert R.diagonal_shift(s1, 0, {(e, 1, (1,)): 1}) == {(e, 0, (0,)): 1}
    assert R.diagonal_shift(s1, 0, {(e, 0, (2,)): 1}) == {}
    assert R.diagonal_shift(s1, 0, {(e, 1, (0,)): 1}) == {}


def test_operator_identity(scn):
    assert all(R.kolyvagin_operator_identity(scn, i) for i in range(scn.k))


def test_shift_relations(scn):
    assert R.verify_shift_relations(scn)["passed"]


def test_delta_agreement(scn):
    rep = R.verify_delta_agreement(scn)
    assert rep["passed"], rep["failures"][:2]


@pytest.mark.parametrize("method", ["shift", "characterized"])
def test_universal_recursion(scn, method):
    for fam in (R.canonical_family(scn), R.kolyvagin_family(scn)):
        rep = R.verify_universal_recursion(fam, method)
        assert rep["passed"], rep["failures"][:2]
        assert rep["checked"] == scn.k * 2**scn.k


def test_delta_of_canonical_class(s2):
    basis = canonical_basis(s2)
    for y in basis.labels:
        for i in range(s2.k):
            got = R.delta_on_class(s2, i, basis.classes[y].coords, basis)
            want = basis.classes[y & ~(1 << i)].coords if y >> i & 1 else (0,) * len(got)
            assert tuple(got) == tuple(want)


def test_broken_family_fails(scn):
    fam = R.family_from_coordinates(scn, unit_family(scn, scale_top=2), "broken")
    rep = R.verify_universal_recursion(fam)
    assert not rep["passed"]
    assert rep["failures"][0]["y"] == scn.squarefree_label(scn.full_mask)


def test_unit_family_is_canonical(s2):
    fam = R.family_from_coordinates(s2, unit_family(s2))
    canon = R.canonical_family(s2)
    assert {y: c.coords for y, c in fam.classes.items()} == {y: c.coords for y, c in canon.classes.items()}


def test_family_errors(s2, tmp_path):
    data = unit_family(s2)
    del data["1"]
    with pytest.raises(R.FamilyError, match="missing"):
        R.family_from_coordinates(s2, data)
    with pytest.raises(R.FamilyError, match="expected 4"):
        R.family_from_coordinates(s2, {"1": [1]})
    bad = tmp_path / "fam.json"
    bad.write_text("[1, 2]")
    with pytest.raises(R.FamilyError, match="object"):
        R.load_family(s2, bad)
    good = tmp_path / "good.json"
    good.write_text(json.dumps(unit_family(s2)))
    assert R.load_family(s2, good).name == "good"


def test_basis_theorem(scn):
    rep = R.verify_basis_theorem(R.kolyvagin_family(scn))
    assert rep["passed"], rep


def test_basis_theorem_rejects_singular(s2):
    data = unit_family(s2)
    data["x1*x2"] = [0] * 4
    rep = R.verify_basis_theorem(R.family_from_coordinates(s2, data))
    assert not rep["invertible"] and not rep["unitriangular"]
    assert "kernel_vector" in rep


def test_kolyvagin_class_matches_family(s2):
    fam = R.kolyvagin_family(s2)
    for y in submasks(s2.full_mask):
        assert R.kolyvagin_class(s2, y).coords == fam.classes[y].coords


@settings(max_examples=25, deadline=None)
@given(st.lists(st.integers(0, 2), min_size=4, max_size=4), st.lists(st.integers(0, 2), min_size=4, max_size=4))
def test_delta_is_linear(a, b):
    scn = load("S2")
    basis = canonical_basis(scn)

    def combo(t):
        out = [0] * len(basis.vectors[0])
        for c, v in zip(t, basis.vectors):
            out = [(x + c * y) % 3 for x, y in zip(out, v)]
        return out

    for i in range(scn.k):
        lhs = R.delta_on_class(scn, i, combo([x + y for x, y in zip(a, b)]), basis)
        rhs = [(x + y) % 3 for x, y in zip(R.delta_on_class(scn, i, combo(a), basis), R.delta_on_class(scn, i, combo(b), basis))]
        assert lhs == rhs
