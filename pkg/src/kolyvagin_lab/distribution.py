"""The universal norm distribution U_z = A_z / D_z and the submodule I_x.

Elements of ``A_z`` are sparse dicts keyed by stalk symbols
``(stalk_mask, g, h)``: ``g`` is a group element supported on the stalk and
``h`` indexes the coefficient group ``H`` (so ``T = Z[H]`` is flattened into
Z-coordinates).  ``U_z`` is presented through a Smith form of the relation
matrix, which both certifies freeness and yields a fixed Z-basis; every
class of ``U_z`` (or ``U_z/MU_z``) is then a plain coordinate vector.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property
from typing import Iterable, Sequence

from .exactlin import (
    determinant,
    hermite_rows,
    howell_rows,
    in_lattice,
    in_span_mod,
    left_kernel,
    snf_dense,
    vecmat,
)
from .scenario import GroupElem, GroupRing, Level, Scenario, bits, submasks

Symbol = tuple[int, GroupElem, int]
AVector = dict[Symbol, int]


class FreenessError(RuntimeError):
    """The relation module does not have a free quotient (scenario outside the guarantees)."""


class KolyvaginConditionError(RuntimeError):
    pass


def as_mask(z: Level | int) -> int:
    return z if isinstance(z, int) else z.mask


# ---------------------------------------------------------------------------
# A_z arithmetic


def basis(scn: Scenario, mask: int) -> list[Symbol]:
    out = []
    for sub in submasks(mask):
        for g in scn.group_elements(sub):
            for h in range(scn.h_order):
                out.append((sub, g, h))
    return out


def symbol(scn: Scenario, mask: int, g: GroupElem | None = None, h: int = 0) -> Symbol:
    return (mask, scn.identity if g is None else scn.restrict(g, mask), h)


def vec_add(a: AVector, b: AVector, scale: int = 1) -> AVector:
    out = dict(a)
    for s, v in b.items():
        out[s] = out.get(s, 0) + scale * v
    return {s: v for s, v in out.items() if v}


def vec_scale(a: AVector, c: int) -> AVector:
    return {s: c * v for s, v in a.items() if c * v}


def act(scn: Scenario, elem: GroupRing, vec: AVector) -> AVector:
    """Group-ring element acting on A: g[g'' z''] = [g_{z''} g'' z'']."""
    out: AVector = {}
    for (mask, g, h), c in vec.items():
        for (g2, h2), c2 in elem.items():
            key = (mask, scn.g_mul(g, scn.restrict(g2, mask)), scn.h_mul(h, h2))
            out[key] = out.get(key, 0) + c * c2
    return {s: v for s, v in out.items() if v}


def act_group(scn: Scenario, g: GroupElem, vec: AVector, h: int = 0) -> AVector:
    return act(scn, {(g, h): 1}, vec)


def raise_stalk(vec: AVector, i: int) -> AVector:
    """[g z'] -> [g z(x) z'] for x = prime i (x must not divide z')."""
    out: AVector = {}
    for (mask, g, h), c in vec.items():
        assert not mask >> i & 1
        out[(mask | 1 << i, g, h)] = c
    return out


def lambda_map(scn: Scenario, i: int, vec: AVector) -> AVector:
    """λ_{z(x)}: [z'] -> p(x; Fr_x^-1)[z'] - N_{z(x)}[z(x) z'] for x ∤ z' (0 when x | z')."""
    src = {s: c for s, c in vec.items() if not s[0] >> i & 1}
    return vec_add(act(scn, scn.p_of_frob_inv(i), src), act(scn, scn.norm_element(i), raise_stalk(src, i)), -1)


def beta_map(scn: Scenario, i: int, vec: AVector) -> AVector:
    """β_{z(x)}: [g z'] -> r_x(Fr_x^-1)[g z'/z(x)] if x | z', identity on the rest."""
    keep = {s: c for s, c in vec.items() if not s[0] >> i & 1}
    lowered: AVector = {}
    for (mask, g, h), c in vec.items():
        if mask >> i & 1:
            m2 = mask & ~(1 << i)
            key = (m2, scn.restrict(g, m2), h)
            lowered[key] = lowered.get(key, 0) + c
    r = scn.eval_poly(scn.r_poly(i), scn.frob_inverse(i))
    return vec_add(keep, act(scn, r, lowered))


def kolyvagin_vector(scn: Scenario, ymask: int) -> AVector:
    """c'_y = D_y [z(y)] in A_z."""
    elem = scn.gr_one()
    for i in bits(ymask):
        elem = scn.gr_mul(elem, scn.kolyvagin_operator(i))
    return act(scn, elem, {symbol(scn, ymask): 1})


# ---------------------------------------------------------------------------
# U_z


class UPresentation:
    """U_z = A_z / D_z with a certified free Z-basis.

    ``coords`` maps an A-vector to U-coordinates, ``lift`` goes back.
    """

    def __init__(self, scn: Scenario, z: Level | int):
        self.scn = scn
        self.mask = as_mask(z)
        self.basis = basis(scn, self.mask)
        self.index = {s: n for n, s in enumerate(self.basis)}
        self.relations = self._relations()
        n = len(self.basis)
        L, diag, R, Rinv = snf_dense(self.relations, n)
        nonzero = [d for d in diag if d]
        self.snf_diagonal = diag
        if any(d != 1 for d in nonzero):
            raise FreenessError(
                f"U at level {scn.label(self.mask)} is not free: Smith diagonal contains {sorted(set(nonzero))}"
            )
        rd = len(nonzero)
        self.rank = n - rd
        self._P = [row[rd:] for row in R]
        self._lift = Rinv[rd:]

    def _relations(self) -> list[list[int]]:
        rows = []
        for i in bits(self.mask):
            for s in basis(self.scn, self.mask & ~(1 << i)):
                rows.append(self.to_dense(lambda_map(self.scn, i, {s: 1})))
        return rows

    @property
    def t_rank(self) -> int:
        return self.rank // self.scn.h_order

    def to_dense(self, vec: AVector) -> list[int]:
        out = [0] * len(self.basis)
        for s, c in vec.items():
            try:
                out[self.index[s]] += c
            except KeyError:
                raise ValueError(f"symbol {s} is not a stalk symbol of level {self.scn.label(self.mask)}") from None
        return out

    def from_dense(self, dense: Sequence[int]) -> AVector:
        return {self.basis[n]: c for n, c in enumerate(dense) if c}

    def coords(self, vec: AVector) -> list[int]:
        return vecmat(self.to_dense(vec), self._P, self.rank)

    def coords_mod(self, vec: AVector) -> list[int]:
        M = self.scn.modulus
        return [c % M for c in self.coords(vec)]

    def lift(self, coords: Sequence[int]) -> AVector:
        return self.from_dense(vecmat(coords, self._lift, len(self.basis)))

    def unit(self, n: int) -> list[int]:
        return [int(j == n) for j in range(self.rank)]

    def is_relation(self, vec: AVector) -> bool:
        return not any(self.coords(vec))

    def operator_matrix(self, fn) -> list[list[int]]:
        """Matrix (row convention) of an A-linear map preserving D, on U-coordinates."""
        return [self.coords(fn(self.lift(self.unit(n)))) for n in range(self.rank)]

    def group_matrix(self, g: GroupElem, h: int = 0) -> list[list[int]]:
        return self.operator_matrix(lambda v: act_group(self.scn, g, v, h))

    @cached_property
    def relation_hnf(self) -> list[list[int]]:
        return hermite_rows(self.relations, len(self.basis))


_CACHE: dict[tuple[int, int], UPresentation] = {}


def build_U(scn: Scenario, z: Level | int) -> UPresentation:
    key = (id(scn), as_mask(z))
    pres = _CACHE.get(key)
    if pres is None or pres.scn is not scn:
        pres = UPresentation(scn, z)
        _CACHE[key] = pres
    return pres


def include_U(scn: Scenario, z1: Level | int, z2: Level | int) -> list[list[int]]:
    """Matrix of U_{z1} -> U_{z2} (row convention) for a stalk pair z1 |_s z2."""
    m1, m2 = as_mask(z1), as_mask(z2)
    if m1 & ~m2:
        raise ValueError(f"{scn.label(m1)} is not a stalk of {scn.label(m2)}")
    u1, u2 = build_U(scn, m1), build_U(scn, m2)
    return [u2.coords(u1.lift(u1.unit(n))) for n in range(u1.rank)]


def gamma_endo(scn: Scenario, i: int, z: Level | int) -> list[list[int]]:
    """Matrix of multiplication by γ_{z(x)} on U_{z/z(x)}."""
    mask = as_mask(z)
    if not mask >> i & 1:
        raise ValueError(f"prime {scn.ids[i]} does not divide the level")
    sub = build_U(scn, mask & ~(1 << i))
    gamma = scn.gamma_element(i)
    return sub.operator_matrix(lambda v: act(scn, gamma, v))


def check_gamma_injective(scn: Scenario, z: Level | int | None = None) -> None:
    """Third Kolyvagin condition at every prime of z; raises KolyvaginConditionError."""
    mask = scn.full_mask if z is None else as_mask(z)
    for i in bits(mask):
        if determinant(gamma_endo(scn, i, mask)) == 0:
            raise KolyvaginConditionError(
                f"Kolyvagin condition 3 violated at prime {scn.ids[i]}: γ has a nontrivial kernel on U"
            )


# ---------------------------------------------------------------------------
# I_x


@dataclass
class IxSubmodule:
    prime: int
    mask: int
    generators: list[AVector]
    hnf: list[list[int]]
    howell: list[list[int]]

    def contains(self, coords: Sequence[int]) -> bool:
        return in_lattice(coords, self.hnf)

    def contains_mod(self, coords: Sequence[int], modulus: int) -> bool:
        return in_span_mod(coords, self.howell, modulus)


def ix_generators(scn: Scenario, i: int, mask: int) -> list[AVector]:
    r = scn.eval_poly(scn.r_poly(i), scn.frob_inverse(i))
    gens = []
    xbit = 1 << i
    for sub in submasks(mask & ~xbit):
        top = {symbol(scn, sub | xbit): 1}
        base = {symbol(scn, sub): 1}
        for k in range(scn.orders[i]):
            g = scn.g_pow(scn.sigma(i), k)
            gtop = act_group(scn, g, top)
            gens.append(vec_add(top, gtop, -1))
            gens.append(vec_add(act(scn, r, base), gtop, -1))
    return [v for v in gens if v]


def build_Ix(scn: Scenario, i: int, z: Level | int) -> IxSubmodule:
    mask = as_mask(z)
    if not mask >> i & 1:
        raise ValueError(f"prime {scn.ids[i]} does not divide the level")
    U = build_U(scn, mask)
    gens = ix_generators(scn, i, mask)
    rows = []
    for g in scn.group_elements(mask):
        for h in range(scn.h_order):
            for v in gens:
                rows.append(U.coords(act_group(scn, g, v, h)))
    hnf = hermite_rows(rows, U.rank)
    return IxSubmodule(i, mask, gens, hnf, howell_rows(hnf, U.rank, scn.modulus))


def check_exact(scn: Scenario, i: int, z: Level | int) -> dict:
    """Exactness of 0 -> U_{z/z(x)} -γ-> U_{z/z(x)} -> U_z/I_x -> 0 by exact lattice computations."""
    mask = as_mask(z)
    sub = mask & ~(1 << i)
    U, Us = build_U(scn, mask), build_U(scn, sub)
    gamma = gamma_endo(scn, i, mask)
    iota = include_U(scn, sub, mask)
    Ix = build_Ix(scn, i, mask)
    report: dict = {"prime": scn.ids[i], "level": scn.label(mask)}

    det = determinant(gamma)
    report["gamma_injective"] = det != 0
    if det == 0:
        report["witness"] = {"gamma_kernel": left_kernel(gamma, Us.rank)[:1]}

    span = hermite_rows(list(iota) + Ix.hnf, U.rank)
    surjective = len(span) == U.rank and all(span[n][n] == 1 for n in range(U.rank))
    report["surjective"] = surjective
    if not surjective:
        missing = next(n for n in range(U.rank) if not in_lattice(U.unit(n), span))
        report.setdefault("witness", {})["not_in_image"] = U.unit(missing)

    gamma_iota = [vecmat(row, iota, U.rank) for row in gamma]
    bad = [n for n, row in enumerate(gamma_iota) if not Ix.contains(row)]
    report["image_in_kernel"] = not bad
    if bad:
        report.setdefault("witness", {})["gamma_image_outside_Ix"] = gamma[bad[0]]

    stacked = list(iota) + Ix.hnf
    kern = [v[: Us.rank] for v in left_kernel(stacked, U.rank)]
    gamma_hnf = hermite_rows(gamma, Us.rank)
    bad_k = [v for v in kern if not in_lattice(v, gamma_hnf)]
    report["kernel_in_image"] = not bad_k
    if bad_k:
        report.setdefault("witness", {})["kernel_outside_gamma_image"] = bad_k[0]
    report["passed"] = all(report[k] for k in ("gamma_injective", "surjective", "image_in_kernel", "kernel_in_image"))
    return report


def fixed_mod(scn: Scenario, U: UPresentation, coords: Sequence[int]) -> bool:
    """Is the class with these U-coordinates fixed by G_z modulo M?"""
    M = scn.modulus
    vec = U.lift(coords)
    for i in bits(U.mask):
        moved = U.coords(act_group(scn, scn.sigma(i), vec))
        if any((a - b) % M for a, b in zip(moved, coords)):
            return False
    return True


def iter_symbols(vecs: Iterable[AVector]) -> set[Symbol]:
    out: set[Symbol] = set()
    for v in vecs:
        out.update(v)
    return out
