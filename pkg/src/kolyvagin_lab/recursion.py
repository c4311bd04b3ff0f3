"""Δ_x two ways, Kolyvagin classes c'_y, and the recursion / basis-theorem verifiers."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Mapping, Sequence

from .cohomology import (
    CanonicalBasis,
    CohomologyClass,
    DependenceError,
    canonical_basis,
    in_image_of_stalk,
    is_fixed,
    make_class,
)
from .complex import KChain, chain_add, chain_mod, d_x_K, delta_x_K, k_basis
from .distribution import act, basis, build_U, kolyvagin_vector
from .exactlin import howell_rows, kernel_mod_rows, solve_mod_rows, span_log_size, transpose
from .scenario import Scenario, bits, submasks


class FamilyError(ValueError):
    pass


def diagonal_shift(scn: Scenario, i: int, chain: KChain) -> KChain:
    """[a, y, w] -> [a, y/x, w/x] when x | y and x | w, else 0."""
    out: KChain = {}
    for (a, y, w), c in chain.items():
        if y >> i & 1 and w[i]:
            key = (a, y & ~(1 << i), w[:i] + (w[i] - 1,) + w[i + 1 :])
            out[key] = out.get(key, 0) + c
    return {s: v for s, v in out.items() if v}


def _u_coords(scn: Scenario, chain: KChain, mask: int) -> list[int]:
    vec: dict = {}
    for (a, y, w), c in chain.items():
        if y == 0 and not any(w):
            vec[a] = vec.get(a, 0) + c
    return build_U(scn, mask).coords_mod(vec)


def delta_on_class(scn: Scenario, i: int, coords: Sequence[int], basis_: CanonicalBasis | None = None) -> list[int]:
    """Δ_x via the diagonal shift of a canonical cocycle lift, in U_z/MU_z coordinates."""
    basis_ = basis_ or canonical_basis(scn)
    if not basis_.mask >> i & 1:
        raise ValueError(f"prime {scn.ids[i]} does not divide the level")
    return _u_coords(scn, diagonal_shift(scn, i, basis_.lift_of(coords)), basis_.mask)


def vardelta_characterized(
    scn: Scenario, i: int, coords: Sequence[int], mask: int | None = None, permute: int | None = None
) -> list[int]:
    """b with (1-σ_x)a ≡ γ_x b mod M·I_x, read off from (σ_x-1)𝐚 = M𝐛 + Σ λ_{x'}𝐛_{x'} in A_z.

    The decomposition is solved modulo M over the λ-images (the M𝐛 term
    absorbs the rest); ``permute`` shuffles the generator order so that the
    well-definedness of the answer can be tested.
    """
    mask = scn.full_mask if mask is None else mask
    if not mask >> i & 1:
        raise ValueError(f"prime {scn.ids[i]} does not divide the level")
    U = build_U(scn, mask)
    M = scn.modulus
    if not is_fixed(scn, U, coords):
        raise ValueError("representative is not G-fixed modulo M")
    moved = act(scn, scn.gr_add({(scn.sigma(i), 0): 1}, scn.gr_one(), -1), U.lift(coords))
    rhs = [v % M for v in U.to_dense(moved)]

    # U.relations lists λ_{x'}(s) prime by prime, s running over basis(z/z(x'))
    owners = []
    for j in bits(mask):
        owners.extend((j, s) for s in basis(scn, mask & ~(1 << j)))
    order = list(range(len(owners)))
    if permute is not None:
        random.Random(permute).shuffle(order)
    rows = [U.relations[n] for n in order]
    sol = solve_mod_rows(transpose(rows, len(U.basis)), len(rows), rhs, M)
    if sol is None:
        raise DependenceError(f"(σ-1)a is not in M·A_z + D_z; residual rhs {rhs}")
    b: dict = {}
    for n, c in zip(order, sol):
        j, s = owners[n]
        if j == i and c:
            b[s] = b.get(s, 0) + c
    return U.coords_mod(b)


# ---------------------------------------------------------------------------
# Kolyvagin classes


def kolyvagin_class(scn: Scenario, y: int, mask: int | None = None) -> CohomologyClass:
    """c̄'_y = class of D_y[z(y)] in U_z/MU_z (fixedness verified)."""
    mask = scn.full_mask if mask is None else mask
    if y & ~mask:
        raise ValueError(f"{scn.squarefree_label(y)} does not divide the level")
    U = build_U(scn, mask)
    coords = U.coords_mod(kolyvagin_vector(scn, y))
    if not is_fixed(scn, U, coords):
        raise DependenceError(f"c'_{scn.squarefree_label(y)} is not G-fixed modulo M")
    return make_class(scn, mask, coords, f"D_{scn.squarefree_label(y)}[z({scn.squarefree_label(y)})]")


def kolyvagin_operator_identity(scn: Scenario, i: int) -> bool:
    """(1-σ)D_{z(x)} = N_{z(x)} - |G_{z(x)}| in the group ring."""
    one_minus = scn.gr_add(scn.gr_one(), {(scn.sigma(i), 0): 1}, -1)
    lhs = scn.gr_mul(one_minus, scn.kolyvagin_operator(i))
    rhs = scn.gr_add(scn.norm_element(i), scn.gr_one(), -scn.orders[i])
    return lhs == rhs


# ---------------------------------------------------------------------------
# families


@dataclass
class RecursiveFamily:
    scn: Scenario
    mask: int
    classes: dict[int, CohomologyClass]
    name: str = ""


def canonical_family(scn: Scenario, mask: int | None = None) -> RecursiveFamily:
    basis_ = canonical_basis(scn, mask)
    return RecursiveFamily(scn, basis_.mask, dict(basis_.classes), "canonical")


def kolyvagin_family(scn: Scenario, mask: int | None = None) -> RecursiveFamily:
    mask = scn.full_mask if mask is None else mask
    return RecursiveFamily(scn, mask, {y: kolyvagin_class(scn, y, mask) for y in submasks(mask)}, "kolyvagin")


def family_from_coordinates(scn: Scenario, data: Mapping[str, Sequence[int]], name: str = "custom") -> RecursiveFamily:
    """Build a family from {divisor label: canonical coordinates} (flattened in (y, h) order)."""
    basis_ = canonical_basis(scn)
    vecs = basis_.vectors
    M = scn.modulus
    classes = {}
    for label, coef in data.items():
        y = scn.parse_squarefree(label)
        if len(coef) != len(vecs):
            raise FamilyError(f"{label}: expected {len(vecs)} canonical coordinates, got {len(coef)}")
        coords = [0] * len(vecs[0])
        for t, v in zip(coef, vecs):
            coords = [(a + t * b) % M for a, b in zip(coords, v)]
        classes[y] = make_class(scn, basis_.mask, coords, f"family {name}")
    missing = [scn.squarefree_label(y) for y in submasks(basis_.mask) if y not in classes]
    if missing:
        raise FamilyError(f"family is missing divisors {missing}")
    return RecursiveFamily(scn, basis_.mask, classes, name)


def load_family(scn: Scenario, path: str | Path) -> RecursiveFamily:
    try:
        data: Any = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise FamilyError(f"malformed family JSON: {exc}") from None
    if not isinstance(data, dict):
        raise FamilyError("family JSON must be an object")
    return family_from_coordinates(scn, data, Path(path).stem)


def verify_universal_recursion(fam: RecursiveFamily, method: str = "shift") -> dict:
    """Δ_x c_y = c_{y/x} when x | y and 0 otherwise, plus the stalk-support constraint on each c_y."""
    scn = fam.scn
    basis_ = canonical_basis(scn, fam.mask)
    failures = []
    checked = 0
    for y, cls in sorted(fam.classes.items()):
        if not in_image_of_stalk(scn, cls.coords, y, fam.mask):
            failures.append({"y": scn.squarefree_label(y), "reason": "support constraint"})
        for i in bits(fam.mask):
            checked += 1
            if method == "shift":
                got = delta_on_class(scn, i, cls.coords, basis_)
            else:
                got = vardelta_characterized(scn, i, cls.coords, fam.mask)
            if y >> i & 1:
                want = list(fam.classes[y & ~(1 << i)].coords)
            else:
                want = [0] * len(got)
            if got != want:
                failures.append(
                    {"y": scn.squarefree_label(y), "x": scn.ids[i], "delta": got, "expected": want}
                )
    return {"family": fam.name, "checked": checked, "failures": failures, "passed": not failures}


def change_of_basis(fam: RecursiveFamily) -> list[list[int]]:
    """Rows: canonical coordinates of h·f_y, ordered by (y, h)."""
    scn = fam.scn
    basis_ = canonical_basis(scn, fam.mask)
    U = build_U(scn, fam.mask)
    rows = []
    for y in basis_.labels:
        vec = U.lift(fam.classes[y].coords)
        for h in range(scn.h_order):
            coords = U.coords_mod(act(scn, {(scn.identity, h): 1}, vec))
            t = basis_.coordinates(coords)
            if t is None:
                raise DependenceError(f"f_{scn.squarefree_label(y)} lies outside H^0")
            rows.append(t)
    return rows


def verify_basis_theorem(fam: RecursiveFamily) -> dict:
    scn = fam.scn
    M = scn.modulus
    basis_ = canonical_basis(scn, fam.mask)
    C = change_of_basis(fam)
    n = len(C)
    invertible = span_log_size(howell_rows(C, n, M), M) == M**n
    report: dict = {"family": fam.name, "matrix": C, "invertible": invertible}
    if not invertible:
        report["kernel_vector"] = kernel_mod_rows(C, n, M)[0]
    nh = scn.h_order
    unitri = True
    for r, y in enumerate(basis_.labels):
        for h in range(nh):
            row = C[r * nh + h]
            for c2, y2 in enumerate(basis_.labels):
                for h2 in range(nh):
                    v = row[c2 * nh + h2]
                    if y2 == y:
                        unitri &= v == int(h2 == h)
                    elif y2 & ~y:
                        unitri &= v == 0
    report["unitriangular"] = unitri
    report["normalized"] = fam.classes[0].coords == basis_.classes[0].coords
    report["passed"] = invertible and unitri and report["normalized"]
    return report


# ---------------------------------------------------------------------------
# shift identities on the windowed complex


def verify_shift_relations(scn: Scenario, degrees: Sequence[int] = (-1, 0, 1)) -> dict:
    """Δ_x commutes with d_{x'}, δ_{x'} (x' ≠ x), kills against d_x, and [δ_x, Δ_x] ≡ 0 mod M."""
    M = scn.modulus
    checked = 0
    for n in degrees:
        for s in k_basis(scn, n):
            c = {s: 1}
            for i in range(scn.k):
                sh = diagonal_shift(scn, i, c)
                for j in range(scn.k):
                    for name, op in (("d", d_x_K), ("delta", delta_x_K)):
                        lhs = diagonal_shift(scn, i, op(scn, j, c))
                        rhs = op(scn, j, sh)
                        checked += 1
                        if j != i:
                            ok = lhs == rhs
                        elif name == "d":
                            ok = not lhs and not rhs
                        else:
                            ok = not chain_mod(chain_add(rhs, lhs, -1), M)
                        if not ok:
                            return {
                                "passed": False,
                                "checked": checked,
                                "counterexample": {"symbol": repr(s), "shift": scn.ids[i], "op": f"{name}_{scn.ids[j]}"},
                            }
    return {"passed": True, "checked": checked}


def verify_delta_agreement(scn: Scenario, resolves: int = 2) -> dict:
    """Shift-Δ and characterized Δ agree on every canonical basis element (incl. H-translates),
    the characterized Δ is independent of the generator order, and Δ's for distinct primes commute."""
    basis_ = canonical_basis(scn)
    failures = []
    vecs = basis_.vectors
    for n, v in enumerate(vecs):
        for i in bits(basis_.mask):
            a = delta_on_class(scn, i, v, basis_)
            b = vardelta_characterized(scn, i, v)
            if a != b:
                failures.append({"vector": n, "x": scn.ids[i], "shift": a, "characterized": b})
            for seed in range(resolves):
                if vardelta_characterized(scn, i, v, permute=seed) != b:
                    failures.append({"vector": n, "x": scn.ids[i], "reason": "not well defined"})
            for j in bits(basis_.mask):
                if j <= i:
                    continue
                ij = delta_on_class(scn, j, a, basis_)
                ji = delta_on_class(scn, i, delta_on_class(scn, j, v, basis_), basis_)
                if ij != ji:
                    failures.append({"vector": n, "pair": [scn.ids[i], scn.ids[j]], "reason": "order dependence"})
    return {"checked": len(vecs), "failures": failures, "passed": not failures}
