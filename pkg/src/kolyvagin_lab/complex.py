"""Anderson's resolution L_z, the double complex K_z, the bar complex and the quotient Q_z.

A K-symbol is ``(a, y, w)``: ``a`` an A-symbol ``(stalk_mask, g, h)`` whose
stalk avoids the squarefree mask ``y``, and ``w`` a tuple of exponents (one
per prime, supported anywhere on the scenario's primes).  Its total degree is
``deg w - #y``.  Since ``deg w = #y + n`` in degree ``n``, every homogeneous
piece is finite, so a window is just a range of total degrees.

Chains are sparse dicts ``KSymbol -> int``.  Matrices use the row convention:
row ``r`` holds the image of source basis symbol ``r``.  The resolution L_z is
the ``w = 1`` column of K_z, so it shares the same symbols.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .distribution import (
    AVector,
    Symbol,
    UPresentation,
    act,
    basis,
    build_U,
    raise_stalk,
)
from .exactlin import (
    Rows,
    hermite_rows,
    howell_rows,
    int_rank,
    matmul,
    snf_dense,
    span_log_size,
)
from .scenario import Scenario, bits, iter_w, omega, popcount, submasks

KSymbol = tuple[Symbol, int, tuple[int, ...]]
KChain = dict[KSymbol, int]


class WindowExceeded(RuntimeError):
    """A differential was requested whose source or target leaves the materialized window."""


def chain_add(a: KChain, b: KChain, scale: int = 1) -> KChain:
    out = dict(a)
    for s, v in b.items():
        out[s] = out.get(s, 0) + scale * v
    return {s: v for s, v in out.items() if v}


def chain_mod(c: KChain, modulus: int) -> KChain:
    return {s: v % modulus for s, v in c.items() if v % modulus}


def total_degree(s: KSymbol) -> int:
    return sum(s[2]) - popcount(s[1])


def _lift_a(vec: AVector, y: int, w: tuple[int, ...]) -> KChain:
    return {(a, y, w): c for a, c in vec.items()}


def _split_a(chain: KChain) -> dict[tuple[int, tuple[int, ...]], AVector]:
    out: dict[tuple[int, tuple[int, ...]], AVector] = {}
    for (a, y, w), c in chain.items():
        out.setdefault((y, w), {})[a] = c
    return out


# ---------------------------------------------------------------------------
# differentials


def d_x_K(scn: Scenario, i: int, chain: KChain) -> KChain:
    """d_x: bidegree (1, 0); acts only on symbols with x | y."""
    p = scn.p_of_frob_inv(i)
    nx = scn.norm_element(i)
    out: KChain = {}
    for (y, w), vec in _split_a(chain).items():
        if not y >> i & 1:
            continue
        sign = omega(i, y) * (-1) ** sum(w[:i])
        y2 = y & ~(1 << i)
        part = _lift_a(act(scn, p, vec), y2, w)
        part = chain_add(part, _lift_a(act(scn, nx, raise_stalk(vec, i)), y2, w), -1)
        out = chain_add(out, part, sign)
    return out


def delta_x_K(scn: Scenario, i: int, chain: KChain) -> KChain:
    """δ_x: bidegree (0, 1); multiplies by 1-σ or N according to the parity of v_x(w)."""
    one_minus_sigma = scn.gr_add(scn.gr_one(), {(scn.sigma(i), 0): 1}, -1)
    nx = scn.norm_element(i)
    out: KChain = {}
    for (y, w), vec in _split_a(chain).items():
        sign = (-1) ** (popcount(y & ((2 << i) - 1)) + sum(w[:i]))
        elem = nx if w[i] % 2 else one_minus_sigma
        w2 = w[:i] + (w[i] + 1,) + w[i + 1 :]
        out = chain_add(out, _lift_a(act(scn, elem, vec), y, w2), sign)
    return out


def total_differential(scn: Scenario, chain: KChain, mask: int | None = None) -> KChain:
    out: KChain = {}
    for i in bits(scn.full_mask if mask is None else mask):
        out = chain_add(out, d_x_K(scn, i, chain))
        out = chain_add(out, delta_x_K(scn, i, chain))
    return out


def d_L(scn: Scenario, chain: KChain) -> KChain:
    """Differential of the resolution L_z (the w = 1 column of K_z)."""
    out: KChain = {}
    for i in range(scn.k):
        out = chain_add(out, d_x_K(scn, i, chain))
    return out


def differentials(scn: Scenario) -> list[tuple[str, int]]:
    return [(kind, i) for i in range(scn.k) for kind in ("d", "delta")]


def apply_named(scn: Scenario, name: tuple[str, int], chain: KChain) -> KChain:
    kind, i = name
    return d_x_K(scn, i, chain) if kind == "d" else delta_x_K(scn, i, chain)


# ---------------------------------------------------------------------------
# bases and matrices


def k_basis(scn: Scenario, degree: int, mask: int | None = None, w_one: bool = False) -> list[KSymbol]:
    """Ordered basis of K^degree, sorted by (y, w, stalk, group exponents, h)."""
    mask = scn.full_mask if mask is None else mask
    out = []
    for y in submasks(mask):
        dw = popcount(y) + degree
        if w_one:
            ws = [(0,) * scn.k] if dw == 0 else []
        else:
            ws = list(iter_w(mask, scn.k, dw))
        a_basis = basis(scn, mask & ~y)
        for w in ws:
            out.extend((a, y, w) for a in a_basis)
    return sorted(out, key=lambda s: (s[1], s[2], s[0]))


def chain_matrix(fn, src: Sequence[KSymbol], tgt: Sequence[KSymbol]) -> Rows:
    index = {s: n for n, s in enumerate(tgt)}
    rows = []
    for s in src:
        row = [0] * len(tgt)
        for t, c in fn({s: 1}).items():
            if t not in index:
                raise WindowExceeded(f"symbol {t} lies outside the target basis")
            row[index[t]] += c
        rows.append(row)
    return rows


def to_dense(chain: KChain, basis_: Sequence[KSymbol]) -> list[int]:
    index = {s: n for n, s in enumerate(basis_)}
    out = [0] * len(basis_)
    for s, c in chain.items():
        if s not in index:
            raise WindowExceeded(f"symbol {s} lies outside the basis")
        out[index[s]] += c
    return out


def from_dense(vec: Sequence[int], basis_: Sequence[KSymbol]) -> KChain:
    return {basis_[n]: c for n, c in enumerate(vec) if c}


@dataclass
class KComplex:
    """The total complex of K_z truncated to total degrees ``window[0]..window[1]``."""

    scn: Scenario
    window: tuple[int, int] | None = None
    mask: int | None = None
    _bases: dict[int, list[KSymbol]] = field(default_factory=dict, repr=False)
    _mats: dict[int, Rows] = field(default_factory=dict, repr=False)

    def __post_init__(self) -> None:
        if self.mask is None:
            self.mask = self.scn.full_mask
        if self.window is None:
            self.window = (-popcount(self.mask) - 1, 2)

    def in_window(self, n: int) -> bool:
        lo, hi = self.window
        return lo <= n <= hi

    def basis(self, n: int) -> list[KSymbol]:
        if not self.in_window(n):
            raise WindowExceeded(f"degree {n} outside window {self.window}")
        if n not in self._bases:
            self._bases[n] = k_basis(self.scn, n, self.mask)
        return self._bases[n]

    def matrix(self, n: int) -> Rows:
        """D^n : K^n -> K^{n+1}."""
        if n not in self._mats:
            self._mats[n] = chain_matrix(
                lambda c: total_differential(self.scn, c, self.mask), self.basis(n), self.basis(n + 1)
            )
        return self._mats[n]


# ---------------------------------------------------------------------------
# verification


def verify_resolution(scn: Scenario) -> dict:
    """d² = 0, acyclicity of L_z in negative degrees and H^0(L_z) = U_z, all over Z."""
    k = scn.k
    bases = {n: k_basis(scn, n, w_one=True) for n in range(-k, 1)}
    mats = {n: chain_matrix(lambda c: d_L(scn, c), bases[n], bases[n + 1]) for n in range(-k, 0)}
    report: dict = {"degrees": {}, "passed": True}
    for n in range(-k, 0):
        if n + 1 < 0 and mats[n] and bases[n + 2]:
            sq = matmul(mats[n], mats[n + 1], len(bases[n + 2]))
            bad = next((r for r, row in enumerate(sq) if any(row)), None)
            if bad is not None:
                report["passed"] = False
                report["counterexample"] = {"d_squared_nonzero_on": repr(bases[n][bad])}
                return report
    for n in range(-k, 0):
        dim = len(bases[n])
        rank_in = int_rank(mats[n - 1], dim) if n - 1 >= -k else 0
        rank_out = int_rank(mats[n], len(bases[n + 1]))
        saturated = True
        if n - 1 >= -k and mats[n - 1]:
            _, diag, _, _ = snf_dense(mats[n - 1], dim)
            saturated = all(d in (0, 1) for d in diag)
        ok = rank_in + rank_out == dim and saturated
        report["degrees"][n] = {"dim": dim, "rank_in": rank_in, "rank_out": rank_out, "saturated": saturated}
        if not ok:
            report["passed"] = False
            report.setdefault("counterexample", {"degree": n})
    U = build_U(scn, scn.full_mask)
    top = mats.get(-1, [])
    h0_rank = len(bases[0]) - (int_rank(top, len(bases[0])) if top else 0)
    image = hermite_rows([u_row(scn, U, bases[0], row) for row in top], len(U.basis)) if top else []
    report["h0_rank"] = h0_rank
    report["u_rank"] = U.rank
    report["u_induces_iso"] = image == U.relation_hnf and h0_rank == U.rank
    report["passed"] = report["passed"] and report["u_induces_iso"]
    return report


def u_row(scn: Scenario, U: UPresentation, src: Sequence[KSymbol], row: Sequence[int]) -> list[int]:
    """Dense A-vector of the y = 1, w = 1 part of a degree-0 dense chain."""
    out = [0] * len(U.basis)
    for s, c in zip(src, row):
        if c and s[1] == 0 and not any(s[2]):
            out[U.index[s[0]]] += c
    return out


def verify_anticommute(scn: Scenario, window: tuple[int, int] | None = None) -> dict:
    """Pairwise anticommutation and squares of the d_x and δ_x on every window basis symbol."""
    lo, hi = window if window is not None else (-scn.k - 1, 2)
    names = differentials(scn)
    checked = 0
    for n in range(lo, hi - 1):
        for s in k_basis(scn, n):
            first = {name: apply_named(scn, name, {s: 1}) for name in names}
            for a_pos, n1 in enumerate(names):
                for n2 in names[a_pos:]:
                    total = apply_named(scn, n1, first[n2])
                    if n1 != n2:
                        total = chain_add(total, apply_named(scn, n2, first[n1]))
                    checked += 1
                    if total:
                        return {
                            "passed": False,
                            "checked": checked,
                            "counterexample": {
                                "symbol": repr(s),
                                "pair": [f"{k}_{scn.ids[i]}" for k, i in (n1, n2)],
                            },
                        }
    return {"passed": True, "checked": checked, "window": [lo, hi]}


# ---------------------------------------------------------------------------
# augmentation and the bar complex


def u_map(chain: KChain) -> dict[tuple[Symbol, tuple[int, ...]], int]:
    """[a, y, w] -> [a, w] if y = 1, else 0."""
    return {(a, w): c for (a, y, w), c in chain.items() if y == 0}


def bar_to_U(scn: Scenario, bar: dict[tuple[Symbol, tuple[int, ...]], int], U: UPresentation | None = None) -> list[int]:
    """A degree-0 bar chain sum c[a, 1] taken to U_z/MU_z coordinates."""
    U = U or build_U(scn, scn.full_mask)
    vec: AVector = {}
    for (a, w), c in bar.items():
        if any(w):
            raise ValueError("bar_to_U expects a degree-0 bar chain")
        vec[a] = vec.get(a, 0) + c
    return U.coords_mod(vec)


def bar_delta_matrix(scn: Scenario, U: UPresentation, degree: int) -> tuple[list[tuple[int, ...]], list[tuple[int, ...]], Rows]:
    """δ on the bar complex, K̄^n = ⊕_{deg w = n} U_z, in U-coordinates."""
    src_w = list(iter_w(scn.full_mask, scn.k, degree))
    tgt_w = list(iter_w(scn.full_mask, scn.k, degree + 1))
    tindex = {w: n for n, w in enumerate(tgt_w)}
    r = U.rank
    rows = []
    for w in src_w:
        for n in range(r):
            vec = U.lift(U.unit(n))
            row = [0] * (r * len(tgt_w))
            image = delta_x_total(scn, _lift_a(vec, 0, w))
            for (y, w2), avec in _split_a(image).items():
                off = tindex[w2] * r
                for j, c in enumerate(U.coords(avec)):
                    row[off + j] += c
            rows.append(row)
    return src_w, tgt_w, rows


def delta_x_total(scn: Scenario, chain: KChain) -> KChain:
    out: KChain = {}
    for i in range(scn.k):
        out = chain_add(out, delta_x_K(scn, i, chain))
    return out


def verify_bar_relations(scn: Scenario, degree: int = 0) -> bool:
    """δ maps the relation lattice of K̄^n into that of K̄^{n+1}."""
    U = build_U(scn, scn.full_mask)
    for w in iter_w(scn.full_mask, scn.k, degree):
        for rel in U.relations:
            image = delta_x_total(scn, _lift_a(U.from_dense(rel), 0, w))
            for _, avec in _split_a(image).items():
                if any(U.coords(avec)):
                    return False
    return True


# ---------------------------------------------------------------------------
# S_z and Q_z


def in_Q(s: KSymbol) -> bool:
    """Retained generators h·[1, y, w] with y | w̄."""
    (stalk, g, h), y, w = s
    return stalk == 0 and not any(g) and all(w[i] for i in bits(y))


def project_Q(chain: KChain, modulus: int | None = None) -> KChain:
    """ρ_M: kill S_z, keep the Q-generators (reduced mod M when a modulus is given)."""
    out = {s: c for s, c in chain.items() if in_Q(s)}
    return chain_mod(out, modulus) if modulus else out


def q_generators(scn: Scenario, degree: int) -> list[KSymbol]:
    return [s for s in k_basis(scn, degree) if in_Q(s)]


def verify_Q_differentials_vanish(scn: Scenario, degrees: Iterable[int] = (-1, 0, 1)) -> bool:
    M = scn.modulus
    return all(
        not project_Q(total_differential(scn, {s: 1}), M) for n in degrees for s in q_generators(scn, n)
    )


def h0_size_via_K(scn: Scenario, cx: KComplex | None = None) -> tuple[int, int]:
    """(|ker D^0 mod M|, |im D^{-1} mod M|) for the windowed total complex."""
    cx = cx or KComplex(scn)
    M = scn.modulus
    D0 = cx.matrix(0)
    dim0 = len(cx.basis(0))
    image0 = span_log_size(howell_rows(D0, len(cx.basis(1)), M), M)
    kernel = M**dim0 // image0
    Dm1 = cx.matrix(-1)
    im = span_log_size(howell_rows(Dm1, dim0, M), M)
    return kernel, im
