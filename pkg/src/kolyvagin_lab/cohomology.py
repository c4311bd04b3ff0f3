"""H^0(G_z, U_z/MU_z): direct fixed points, the windowed K complex, and the canonical basis.

A class is stored as its coordinate vector in ``U_z/MU_z``.  Because ``U_z``
is free on the basis chosen by :class:`~kolyvagin_lab.distribution.UPresentation`,
reducing coordinates mod M is already a canonical form.
"""

from __future__ import annotations

import random
from dataclasses import dataclass, field
from typing import Sequence

from .complex import (
    KChain,
    KComplex,
    KSymbol,
    bar_to_U,
    chain_add,
    chain_mod,
    from_dense,
    in_Q,
    project_Q,
    to_dense,
    total_differential,
    u_map,
)
from .distribution import UPresentation, act, build_U, include_U
from .exactlin import (
    howell_reduce,
    howell_rows,
    in_span_mod,
    kernel_mod_rows,
    solve_mod_rows,
    span_log_size,
    transpose,
    vecmat,
)
from .scenario import Scenario, bits, popcount, submasks


class LiftError(RuntimeError):
    """The cocycle lifting system has no solution."""


class DependenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class CohomologyClass:
    mask: int
    modulus: int
    coords: tuple[int, ...]
    provenance: str = ""

    def __add__(self, other: "CohomologyClass") -> "CohomologyClass":
        if (self.mask, self.modulus) != (other.mask, other.modulus):
            raise ValueError("classes live at different levels or moduli")
        M = self.modulus
        return CohomologyClass(self.mask, M, tuple((a + b) % M for a, b in zip(self.coords, other.coords)))

    def scale(self, c: int) -> "CohomologyClass":
        M = self.modulus
        return CohomologyClass(self.mask, M, tuple(c * a % M for a in self.coords))

    def is_zero(self) -> bool:
        return not any(self.coords)


def make_class(scn: Scenario, mask: int, coords: Sequence[int], provenance: str = "") -> CohomologyClass:
    M = scn.modulus
    return CohomologyClass(mask, M, tuple(c % M for c in coords), provenance)


def invariance_matrix(scn: Scenario, U: UPresentation) -> list[list[int]]:
    """Stacked (σ_x - 1) in row convention: r x (r * #primes)."""
    r = U.rank
    blocks = []
    for i in bits(U.mask):
        S = U.group_matrix(scn.sigma(i))
        blocks.append([[S[a][b] - int(a == b) for b in range(r)] for a in range(r)])
    return [sum((blk[a] for blk in blocks), []) for a in range(r)]


def is_fixed(scn: Scenario, U: UPresentation, coords: Sequence[int]) -> bool:
    B = invariance_matrix(scn, U)
    if not B or not B[0]:
        return True
    return not any(v % scn.modulus for v in vecmat(coords, B, len(B[0])))


def h0_direct(scn: Scenario, mask: int | None = None) -> list[CohomologyClass]:
    """Howell basis of the G_z-fixed part of U_z/MU_z."""
    mask = scn.full_mask if mask is None else mask
    U = build_U(scn, mask)
    M = scn.modulus
    B = invariance_matrix(scn, U)
    if B and B[0]:
        kern = kernel_mod_rows(transpose(B, len(B[0])), U.rank, M)
    else:
        kern = howell_rows([U.unit(n) for n in range(U.rank)], U.rank, M)
    return [make_class(scn, mask, v, "h0_direct") for v in kern]


def span_size(classes: Sequence[CohomologyClass], rank: int, modulus: int) -> int:
    return span_log_size(howell_rows([c.coords for c in classes], rank, modulus), modulus)


def h0_via_K(scn: Scenario, mask: int | None = None) -> dict:
    """|H^0(K/M)| from the windowed total complex, plus the span of its 𝐮-images."""
    mask = scn.full_mask if mask is None else mask
    cx = KComplex(scn, mask=mask)
    M = scn.modulus
    U = build_U(scn, mask)
    D0, Dm1 = cx.matrix(0), cx.matrix(-1)
    b0 = cx.basis(0)
    ker_rows = kernel_mod_rows(transpose(D0, len(cx.basis(1))), len(b0), M)
    ker_size = span_log_size(ker_rows, M)
    im_size = span_log_size(howell_rows(Dm1, len(b0), M), M)
    images = [bar_to_U(scn, u_map(from_dense(v, b0)), U) for v in ker_rows]
    return {
        "size": ker_size // im_size,
        "kernel_size": ker_size,
        "image_size": im_size,
        "u_images": images,
    }


def _log(n: int, base: int) -> float:
    out, x = 0, 1
    while x < n:
        x *= base
        out += 1
    return out if x == n else float("nan")


def h0_crosscheck(scn: Scenario, mask: int | None = None) -> dict:
    mask = scn.full_mask if mask is None else mask
    M = scn.modulus
    U = build_U(scn, mask)
    direct = h0_direct(scn, mask)
    direct_size = span_size(direct, U.rank, M)
    via = h0_via_K(scn, mask)
    direct_h = howell_rows([c.coords for c in direct], U.rank, M)
    u_h = howell_rows(via["u_images"], U.rank, M)
    expected = M ** (2 ** popcount(mask) * scn.h_order)
    return {
        "direct_size": direct_size,
        "via_K_size": via["size"],
        "expected_size": expected,
        "log_size": _log(direct_size, M),
        "span_equal": direct_h == u_h,
        "passed": direct_size == via["size"] == expected and direct_h == u_h,
    }


# ---------------------------------------------------------------------------
# canonical basis


def lift_canonical(scn: Scenario, y: int, cx: KComplex, permute: int | None = None) -> KChain:
    """A 0-cocycle of K/M with ρ_M-image [1, y, y].

    ``permute`` reorders the S-supported unknowns with a seeded shuffle to give
    an independent solver run.
    """
    M = scn.modulus
    if y & ~cx.mask:
        raise ValueError(f"{scn.squarefree_label(y)} does not divide the level")
    b0, b1 = cx.basis(0), cx.basis(1)
    D0 = cx.matrix(0)
    index = {s: n for n, s in enumerate(b0)}
    w = tuple(int(y >> i & 1) for i in range(scn.k))
    seed: KSymbol = ((0, scn.identity, 0), y, w)
    s_idx = [n for n, s in enumerate(b0) if not in_Q(s)]
    if permute is not None:
        random.Random(permute).shuffle(s_idx)
    rhs = [-v % M for v in D0[index[seed]]]
    A = [D0[n] for n in s_idx]
    if A:
        sol = solve_mod_rows(transpose(A, len(b1)), len(A), rhs, M)
    else:
        sol = [] if not any(rhs) else None
    if sol is None:
        raise LiftError(f"no cocycle lifts [1,{scn.squarefree_label(y)},{scn.squarefree_label(y)}]")
    chain: KChain = {seed: 1}
    for n, c in zip(s_idx, sol):
        if c:
            chain[b0[n]] = c
    check = chain_mod(total_differential(scn, chain, cx.mask), M)
    if check or project_Q(chain, M) != {seed: 1}:
        raise LiftError("lift failed verification")
    return chain


def translate_chain(scn: Scenario, chain: KChain, h: int) -> KChain:
    """h · chain for h in H."""
    out: KChain = {}
    for (a, y, w), c in chain.items():
        (stalk, g, h0) = a
        out[((stalk, g, scn.h_mul(h0, h)), y, w)] = c
    return out


@dataclass
class CanonicalBasis:
    scn: Scenario
    mask: int
    labels: list[int]
    classes: dict[int, CohomologyClass]
    lifts: dict[int, KChain]
    howell: list[list[int]] = field(repr=False, default_factory=list)

    @property
    def vectors(self) -> list[tuple[int, ...]]:
        """Z/M-basis {h c̄_y}, ordered by (y, h)."""
        U = build_U(self.scn, self.mask)
        out = []
        for y in self.labels:
            vec = U.lift(self.classes[y].coords)
            for h in range(self.scn.h_order):
                out.append(tuple(U.coords_mod(act(self.scn, {(self.scn.identity, h): 1}, vec))))
        return out

    def coordinates(self, coords: Sequence[int]) -> list[int] | None:
        vecs = self.vectors
        M = self.scn.modulus
        return solve_mod_rows(transpose(vecs, len(coords)), len(vecs), list(coords), M) if vecs else []

    def lift_of(self, coords: Sequence[int]) -> KChain:
        """Cocycle lift of a class through its canonical coordinates."""
        t = self.coordinates(coords)
        if t is None:
            raise DependenceError("class lies outside the canonical span")
        chain: KChain = {}
        n = 0
        for y in self.labels:
            for h in range(self.scn.h_order):
                if t[n]:
                    chain = chain_add(chain, translate_chain(self.scn, self.lifts[y], h), t[n])
                n += 1
        return chain


def canonical_class(scn: Scenario, y: int, cx: KComplex, permute: int | None = None) -> tuple[CohomologyClass, KChain]:
    chain = lift_canonical(scn, y, cx, permute)
    U = build_U(scn, cx.mask)
    coords = bar_to_U(scn, u_map(chain), U)
    return make_class(scn, cx.mask, coords, f"lift of [1,{scn.squarefree_label(y)},{scn.squarefree_label(y)}]"), chain


_BASES: dict[tuple[int, int], CanonicalBasis] = {}


def canonical_basis(scn: Scenario, mask: int | None = None) -> CanonicalBasis:
    mask = scn.full_mask if mask is None else mask
    key = (id(scn), mask)
    cached = _BASES.get(key)
    if cached is not None and cached.scn is scn:
        return cached
    cx = KComplex(scn, mask=mask)
    U = build_U(scn, mask)
    labels = submasks(mask)
    classes, lifts = {}, {}
    for y in labels:
        classes[y], lifts[y] = canonical_class(scn, y, cx)
        if not is_fixed(scn, U, classes[y].coords):
            raise DependenceError(f"c̄_{scn.squarefree_label(y)} is not G-fixed")
    basis = CanonicalBasis(scn, mask, labels, classes, lifts)
    M = scn.modulus
    basis.howell = howell_rows(basis.vectors, U.rank, M)
    if span_log_size(basis.howell, M) != M ** len(basis.vectors):
        raise DependenceError("canonical family is linearly dependent over T/MT")
    _BASES[key] = basis
    return basis


def class_coordinates(c: CohomologyClass, basis: CanonicalBasis) -> list[int]:
    if c.mask != basis.mask or c.modulus != basis.scn.modulus:
        raise ValueError("class and basis live at different levels")
    t = basis.coordinates(c.coords)
    if t is None:
        raise DependenceError("class lies outside the canonical span")
    return t


def verify_canonical_basis(scn: Scenario, mask: int | None = None) -> dict:
    """Lifts verified, family independent and spanning, c̄_1 = [1], uniqueness under re-solving."""
    mask = scn.full_mask if mask is None else mask
    M = scn.modulus
    basis = canonical_basis(scn, mask)
    U = build_U(scn, mask)
    direct = howell_rows([c.coords for c in h0_direct(scn, mask)], U.rank, M)
    spans = basis.howell == direct
    one = U.coords_mod({(0, scn.identity, 0): 1})
    cx = KComplex(scn, mask=mask)
    unique = all(canonical_class(scn, y, cx, permute=17 + y)[0].coords == basis.classes[y].coords for y in basis.labels)
    rank_ok = len(basis.vectors) == 2 ** popcount(mask) * scn.h_order
    report = {
        "rank": len(basis.vectors),
        "expected_rank": 2 ** popcount(mask) * scn.h_order,
        "spans_h0": spans,
        "c1_is_unit_class": list(basis.classes[0].coords) == one,
        "unique_under_resolve": unique,
        "classes": {scn.squarefree_label(y): list(basis.classes[y].coords) for y in basis.labels},
    }
    report["passed"] = spans and rank_ok and report["c1_is_unit_class"] and unique
    return report


def inclusion_compatible(scn: Scenario, sub: int, mask: int | None = None) -> bool:
    """c̄_y for y | sub maps to c̄_y upstairs under U_sub -> U_z."""
    mask = scn.full_mask if mask is None else mask
    M = scn.modulus
    low, high = canonical_basis(scn, sub), canonical_basis(scn, mask)
    inc = include_U(scn, sub, mask)
    U = build_U(scn, mask)
    for y in low.labels:
        image = [v % M for v in vecmat(low.classes[y].coords, inc, U.rank)]
        if tuple(image) != high.classes[y].coords:
            return False
    return True


def reduce_mod_span(vec: Sequence[int], howell: list[list[int]], modulus: int) -> list[int]:
    return howell_reduce(vec, howell, modulus)[0]


def in_image_of_stalk(scn: Scenario, coords: Sequence[int], sub: int, mask: int | None = None) -> bool:
    """Does a class of U_z/MU_z come from U_sub/MU_sub?"""
    mask = scn.full_mask if mask is None else mask
    U = build_U(scn, mask)
    inc = include_U(scn, sub, mask)
    return in_span_mod(coords, howell_rows(inc, U.rank, scn.modulus), scn.modulus)


def chain_dense(chain: KChain, basis_: Sequence[KSymbol]) -> list[int]:
    return to_dense(chain, basis_)
