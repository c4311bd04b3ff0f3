"""A finite stand-in for an Euler system: the κ map and the Kolyvagin recursion on a mock.

The mock keeps only the algebra the recursion argument consumes:

* a finite abelian group Γ (cyclic factors) acting on 𝕎 = (Z/M)^S by
  commuting matrices, with W = the first ``w_rank`` coordinates Γ-stable;
* images σ̂_x, F̂r_x of the generators and Frobenius elements, and images of
  the generators of the coefficient group H (so that T = Z[H] acts);
* a lift d̂ given on the basic stalk symbols [z'] and extended to A_z by
  d̂(h[g z']) = ĥ ĝ d̂[z'], where ĝ = Π σ̂_x^{k_x} with 0 ≤ k_x < |G_{z(x)}|.

κ(c)(γ) = (γ - 1)·N̂·d̂(c̃) for any lift c̃ ∈ A_z of a class c.
"""

from __future__ import annotations

import itertools
import json
import random
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Any, Mapping, Sequence

from .cohomology import CohomologyClass
from .distribution import AVector, build_U, ix_generators, lambda_map, basis, act_group
from .exactlin import howell_rows, in_span_mod, kernel_mod_rows, matmul
from .recursion import RecursiveFamily
from .scenario import Scenario, bits, submasks

Matrix = list[list[int]]
Vec = list[int]


class MockError(ValueError):
    pass


def q_polynomial(coeffs: Sequence[Sequence[int]], modulus: int | None = None) -> list[tuple[int, ...]]:
    """Q with Q(t)(t-1) = p(t) - p(1), by synthetic division over T (coefficient tuples)."""
    if not coeffs:
        return []
    width = len(coeffs[0])
    n = len(coeffs) - 1
    q: list[tuple[int, ...]] = [tuple([0] * width) for _ in range(max(n, 0))]
    # p(t) - p(1) = Σ_j c_j (t^j - 1), and (t^j - 1)/(t - 1) = 1 + t + ... + t^{j-1}
    for j in range(1, n + 1):
        for i in range(j):
            q[i] = tuple(a + b for a, b in zip(q[i], coeffs[j]))
    if modulus:
        q = [tuple(a % modulus for a in c) for c in q]
    return q


def _mat_identity(n: int) -> Matrix:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def _mat_mul(a: Matrix, b: Matrix, mod: int) -> Matrix:
    n = len(b[0]) if b else 0
    return [[v % mod for v in row] for row in matmul(a, b, n)]


def _mat_vec(a: Matrix, v: Sequence[int], mod: int) -> Vec:
    return [sum(x * y for x, y in zip(row, v)) % mod for row in a]


@dataclass
class MockModel:
    """Column convention: a Γ-element acts on a vector v as ``matrix @ v``."""

    modulus: int
    gamma_orders: list[int]
    actions: list[Matrix]
    w_rank: int
    sigma: dict[str, list[int]]
    frobenius: dict[str, list[int]]
    h_generators: list[list[int]]
    dhat: dict[str, Vec]
    local: list[Vec] = field(default_factory=list)
    norm: list[tuple[list[int], int]] = field(default_factory=list)
    commuting_pairs: list[tuple[list[int], list[int]]] = field(default_factory=list)

    # -- io ----------------------------------------------------------------

    @classmethod
    def from_dict(cls, data: Mapping[str, Any]) -> "MockModel":
        try:
            return cls(
                modulus=int(data["modulus"]),
                gamma_orders=[int(o) for o in data["gamma_orders"]],
                actions=[[[int(v) for v in row] for row in m] for m in data["actions"]],
                w_rank=int(data["w_rank"]),
                sigma={str(k): list(v) for k, v in data["sigma"].items()},
                frobenius={str(k): list(v) for k, v in data["frobenius"].items()},
                h_generators=[list(v) for v in data.get("h_generators", [])],
                dhat={str(k): list(v) for k, v in data["dhat"].items()},
                local=[list(v) for v in data.get("local", [])],
                norm=[(list(g), int(c)) for g, c in data.get("norm", [])],
                commuting_pairs=[(list(a), list(b)) for a, b in data.get("commuting_pairs", [])],
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MockError(f"malformed mock model: {exc!r}") from None

    @classmethod
    def load(cls, path: str | Path) -> "MockModel":
        try:
            return cls.from_dict(json.loads(Path(path).read_text()))
        except json.JSONDecodeError as exc:
            raise MockError(f"malformed JSON: {exc}") from None

    def to_dict(self) -> dict[str, Any]:
        return {
            "modulus": self.modulus,
            "gamma_orders": self.gamma_orders,
            "actions": self.actions,
            "w_rank": self.w_rank,
            "sigma": self.sigma,
            "frobenius": self.frobenius,
            "h_generators": self.h_generators,
            "dhat": self.dhat,
            "local": self.local,
            "norm": [[g, c] for g, c in self.norm],
            "commuting_pairs": [[a, b] for a, b in self.commuting_pairs],
        }

    # -- group action ----------------------------------------------------------

    @property
    def rank(self) -> int:
        return len(self.actions[0]) if self.actions else 0

    @cached_property
    def _powers(self) -> list[list[Matrix]]:
        out = []
        for A, o in zip(self.actions, self.gamma_orders):
            pw = [_mat_identity(self.rank)]
            for _ in range(o):
                pw.append(_mat_mul(pw[-1], A, self.modulus))
            out.append(pw)
        return out

    def matrix(self, exps: Sequence[int]) -> Matrix:
        key = tuple(e % o for e, o in zip(exps, self.gamma_orders))
        cache = self.__dict__.setdefault("_matrix_cache", {})
        if key not in cache:
            cache[key] = self._matrix(key)
        return cache[key]

    def _matrix(self, exps: Sequence[int]) -> Matrix:
        out = _mat_identity(self.rank)
        for j, e in enumerate(exps):
            e %= self.gamma_orders[j]
            if e:
                out = _mat_mul(out, self._powers[j][e], self.modulus)
        return out

    def apply(self, exps: Sequence[int], v: Sequence[int]) -> Vec:
        return _mat_vec(self.matrix(exps), v, self.modulus)

    def mul(self, a: Sequence[int], b: Sequence[int]) -> list[int]:
        return [(x + y) % o for x, y, o in zip(a, b, self.gamma_orders)]

    def power(self, a: Sequence[int], n: int) -> list[int]:
        return [(x * n) % o for x, o in zip(a, self.gamma_orders)]

    @property
    def identity(self) -> list[int]:
        return [0] * len(self.gamma_orders)

    def elements(self) -> list[list[int]]:
        return [list(e) for e in itertools.product(*(range(o) for o in self.gamma_orders))]

    def tested_elements(self) -> list[list[int]]:
        """Identity and the generators of Γ.

        The structural check makes the generators commute on 𝕎, so a
        Γ-linear identity holding at these elements holds on all of Γ.
        """
        n = len(self.gamma_orders)
        return [self.identity] + [[int(t == j) for t in range(n)] for j in range(n)]

    def apply_ring(self, elem: Sequence[tuple[Sequence[int], int]], v: Sequence[int]) -> Vec:
        out = [0] * self.rank
        for g, c in elem:
            out = [(a + c * b) % self.modulus for a, b in zip(out, self.apply(g, v))]
        return out

    def add(self, a: Sequence[int], b: Sequence[int], scale: int = 1) -> Vec:
        return [(x + scale * y) % self.modulus for x, y in zip(a, b)]

    def in_W(self, v: Sequence[int]) -> bool:
        return not any(x % self.modulus for x in v[self.w_rank :])

    # -- translating the scenario ---------------------------------------------

    def h_image(self, scn: Scenario, h: int) -> list[int]:
        out = self.identity
        for gen, e in zip(self.h_generators, scn.h_elements[h]):
            out = self.mul(out, self.power(gen, e))
        return out

    def section(self, scn: Scenario, g: Sequence[int]) -> list[int]:
        """ĝ = Π σ̂_x^{k_x} with the exponents of g taken in [0, |G_{z(x)}|)."""
        out = self.identity
        for i, k in enumerate(g):
            if k:
                out = self.mul(out, self.power(self.sigma[scn.ids[i]], k))
        return out

    def t_poly(self, scn: Scenario, coeffs: Sequence[Sequence[int]], g: Sequence[int]) -> list[tuple[list[int], int]]:
        """Σ_j c_j(ĥ) g^j as a formal combination of Γ-elements."""
        out = []
        for j, c in enumerate(coeffs):
            gj = self.power(g, j)
            for h, v in enumerate(c):
                if v:
                    out.append((self.mul(gj, self.h_image(scn, h)), v))
        return out

    def norm_sigma(self, scn: Scenario, i: int) -> list[tuple[list[int], int]]:
        s = self.sigma[scn.ids[i]]
        return [(self.power(s, k), 1) for k in range(scn.orders[i])]

    def frob_inv(self, scn: Scenario, i: int) -> list[int]:
        return self.power(self.frobenius[scn.ids[i]], -1)

    def dhat_vec(self, scn: Scenario, vec: AVector) -> Vec:
        out = [0] * self.rank
        for (mask, g, h), c in vec.items():
            base = self.dhat[scn.squarefree_label(mask)]
            moved = self.apply(self.mul(self.section(scn, g), self.h_image(scn, h)), base)
            out = self.add(out, moved, c)
        return out

    def norm_elem(self) -> list[tuple[list[int], int]]:
        return self.norm or [(self.identity, 1)]


# ---------------------------------------------------------------------------
# validation (one check per axiom, plus structural sanity)


def _structural(model: MockModel, scn: Scenario) -> list[str]:
    errs = []
    M = model.modulus
    if M != scn.modulus:
        errs.append(f"mock modulus {M} differs from scenario modulus {scn.modulus}")
    n = model.rank
    if len(model.actions) != len(model.gamma_orders):
        errs.append("one action matrix per cyclic factor of Γ is required")
    for j, (A, o) in enumerate(zip(model.actions, model.gamma_orders)):
        if len(A) != n or any(len(r) != n for r in A):
            errs.append(f"action matrix {j} is not {n}x{n}")
            continue
        if model._powers[j][o] != _mat_identity(n):
            errs.append(f"generator {j} does not have order dividing {o} on 𝕎")
        for e in range(model.w_rank):
            col = [A[r][e] for r in range(n)]
            if not model.in_W(col):
                errs.append(f"W is not stable under generator {j}")
                break
    for a in range(len(model.actions)):
        for b in range(a + 1, len(model.actions)):
            if _mat_mul(model.actions[a], model.actions[b], M) != _mat_mul(model.actions[b], model.actions[a], M):
                errs.append(f"generators {a} and {b} do not commute on 𝕎")
    for pid in scn.ids:
        if pid not in model.sigma or pid not in model.frobenius:
            errs.append(f"prime {pid}: σ̂ and F̂r images are required")
    if len(model.h_generators) != len(scn.coefficient_group):
        errs.append("one image per generator of the coefficient group is required")
    for y in submasks(scn.full_mask):
        label = scn.squarefree_label(y)
        if label not in model.dhat:
            errs.append(f"d̂ is missing stalk {label}")
        elif len(model.dhat[label]) != n:
            errs.append(f"d̂[{label}] has the wrong length")
    return errs


def check_annihilation(model: MockModel, scn: Scenario) -> list[str]:
    """p(x; F̂r_x^{-1}) kills W."""
    errs = []
    for i, pid in enumerate(scn.ids):
        elem = model.t_poly(scn, scn.primes[i].p_coeffs, model.frob_inv(scn, i))
        for e in range(model.w_rank):
            unit = [int(r == e) for r in range(model.rank)]
            if any(model.apply_ring(elem, unit)):
                errs.append(f"p({pid}; F̂r^-1) does not annihilate W (basis vector {e})")
                break
    return errs


def _pairs(model: MockModel, scn: Scenario) -> list[tuple[list[int], list[int]]]:
    if model.commuting_pairs:
        return model.commuting_pairs
    return [(model.sigma[p], model.frobenius[p]) for p in scn.ids]


def check_commutation(model: MockModel, scn: Scenario) -> list[str]:
    """g g' γ d̂[z] = g' g γ d̂[z] for the decomposition-group pairs, γ over the tested elements."""
    errs = []
    M = model.modulus
    for g, g2 in _pairs(model, scn):
        A, B = model.matrix(g), model.matrix(g2)
        for label, v in model.dhat.items():
            for gam in model.tested_elements():
                w = model.apply(gam, v)
                if _mat_vec(A, _mat_vec(B, w, M), M) != _mat_vec(B, _mat_vec(A, w, M), M):
                    errs.append(f"pair {g},{g2} fails to commute on γ·d̂[{label}]")
                    break
    return errs


def check_norm_relation(model: MockModel, scn: Scenario) -> list[str]:
    """N̂_x γ d̂[z'] = p(x; F̂r_x^{-1}) γ d̂[z'/z(x)] for γ over the tested elements."""
    errs = []
    for y in submasks(scn.full_mask):
        for i in bits(y):
            top = model.dhat[scn.squarefree_label(y)]
            low = model.dhat[scn.squarefree_label(y & ~(1 << i))]
            pfr = model.t_poly(scn, scn.primes[i].p_coeffs, model.frob_inv(scn, i))
            nx = model.norm_sigma(scn, i)
            for gam in model.tested_elements():
                if model.apply_ring(nx, model.apply(gam, top)) != model.apply_ring(pfr, model.apply(gam, low)):
                    errs.append(f"norm relation fails at [{scn.squarefree_label(y)}], prime {scn.ids[i]}, γ={gam}")
                    break
    return errs


def evaluation_elements(model: MockModel, scn: Scenario) -> list[list[int]]:
    return [model.sigma[p] for p in scn.ids] + [model.frobenius[p] for p in scn.ids]


def check_local(model: MockModel, scn: Scenario) -> list[str]:
    """κ of the I_x generators lies in the configured local submodule (no constraint when unset)."""
    M = model.modulus
    if not model.local:
        return []
    local = model.local
    H = howell_rows(local, model.rank, M)
    errs = []
    for i in range(scn.k):
        for gen in ix_generators(scn, i, scn.full_mask):
            for g in scn.group_elements(scn.full_mask):
                moved = model.dhat_vec(scn, act_group(scn, g, gen))
                for gam in evaluation_elements(model, scn):
                    val = model.add(model.apply(gam, moved), moved, -1)
                    if not in_span_mod(val, H, M):
                        errs.append(f"κ(I_{scn.ids[i]} generator)({gam}) is not local")
                        return errs
    return errs


def check_relations(model: MockModel, scn: Scenario) -> list[str]:
    """d̂ maps the λ-relations into W^Γ, so d̂ descends to U_z -> 𝕎/W and κ is lift-independent."""
    errs = []
    for i in range(scn.k):
        for s in basis(scn, scn.full_mask & ~(1 << i)):
            v = model.dhat_vec(scn, lambda_map(scn, i, {s: 1}))
            if not model.in_W(v):
                errs.append(f"d̂(λ_{scn.ids[i]}{s}) leaves W")
                return errs
            for gam in evaluation_elements(model, scn):
                if model.add(model.apply(gam, v), v, -1) != [0] * model.rank:
                    errs.append(f"d̂(λ_{scn.ids[i]}{s}) is not Γ-fixed")
                    return errs
    return errs


VALIDATORS = {
    "structure": _structural,
    "annihilation": check_annihilation,
    "commutation": check_commutation,
    "norm-relation": check_norm_relation,
    "relations": check_relations,
    "local": check_local,
}


def validate(model: MockModel, scn: Scenario) -> dict:
    results: dict[str, list[str]] = {}
    for name, fn in VALIDATORS.items():
        results[name] = fn(model, scn)
        if name == "structure" and results[name]:
            break
    return {"checks": {k: not v for k, v in results.items()}, "errors": sum(results.values(), []),
            "passed": not any(results.values())}


# ---------------------------------------------------------------------------
# κ and the recursion


def kappa(model: MockModel, scn: Scenario, c: CohomologyClass | Sequence[int], gamma: Sequence[int]) -> Vec:
    coords = c.coords if isinstance(c, CohomologyClass) else c
    U = build_U(scn, scn.full_mask)
    d = model.apply_ring(model.norm_elem(), model.dhat_vec(scn, U.lift(coords)))
    return model.add(model.apply(gamma, d), d, -1)


def verify_kolyvagin_recursion(fam: RecursiveFamily, model: MockModel) -> dict:
    """Q_x(F̂r^{-1}) κ(c_{y/x})(F̂r_x) = κ(c_y)(σ̂_x) in W, for every y and x | y."""
    scn = fam.scn
    v = validate(model, scn)
    if not v["passed"]:
        return {"family": fam.name, "passed": False, "validation": v, "failures": []}
    failures = []
    checked = 0
    for y, cls in sorted(fam.classes.items()):
        for i in bits(y):
            pid = scn.ids[i]
            q = q_polynomial(scn.primes[i].p_coeffs, scn.modulus)
            lower = kappa(model, scn, fam.classes[y & ~(1 << i)], model.frobenius[pid])
            lhs = model.apply_ring(model.t_poly(scn, q, model.frob_inv(scn, i)), lower)
            rhs = kappa(model, scn, cls, model.sigma[pid])
            checked += 1
            in_w = model.in_W(lhs) and model.in_W(rhs)
            if lhs != rhs or not in_w:
                failures.append({"y": scn.squarefree_label(y), "x": pid, "lhs": lhs, "rhs": rhs, "in_W": in_w})
    return {"family": fam.name, "checked": checked, "failures": failures, "passed": not failures}


# ---------------------------------------------------------------------------
# generation


def _unipotent(size: int, modulus: int, a: int) -> Matrix:
    """(1 + n)^a with n the down-shift e_j -> e_{j-1} on (Z/M)^size."""
    base = [[int(r == c) + int(c == r + 1) for c in range(size)] for r in range(size)]
    out = _mat_identity(size)
    for _ in range(a):
        out = _mat_mul(out, base, modulus)
    return out


def _kron(a: Matrix, b: Matrix, mod: int) -> Matrix:
    nb = len(b)
    return [
        [a[i // nb][j // nb] * b[i % nb][j % nb] % mod for j in range(len(a) * nb)]
        for i in range(len(a) * nb)
    ]


def _block_size(modulus: int, order: int, cap: int = 9) -> int:
    """Largest Jordan block (≤ cap) whose unipotent generator has order dividing ``order``."""
    for size in range(min(cap, order), 0, -1):
        if _unipotent(size, modulus, order) == _mat_identity(size):
            return size
    return 1


def generate_mock(scn: Scenario, seed: int = 0) -> MockModel | None:
    """Draw Γ and its action, then solve the axiom constraints for d̂; None when unsolvable.

    Γ = Π_x <σ̂_x> × Π_x <φ_x> × Π <ĥ>.  𝕎 is a tensor product of unipotent
    Jordan blocks, one per prime, and every generator acts by a product of
    powers of them; W is the socle line.  F̂r_x = ĝ(Fr_x)·φ_x, so its image in
    G_z is the configured Frobenius.
    """
    M = scn.modulus
    rng = random.Random(seed)
    k = scn.k
    sizes = [_block_size(M, m) for m in scn.orders] or [_block_size(M, M)]
    orders = list(scn.orders) * 2 + list(scn.coefficient_group)
    actions = []
    for o in orders:
        A = [[1]]
        for size in sizes:
            allowed = [a for a in range(o) if _unipotent(size, M, a * o) == _mat_identity(size)]
            A = _kron(A, _unipotent(size, M, rng.choice(allowed)), M)
        actions.append(A)

    def unit(j: int) -> list[int]:
        return [int(t == j) for t in range(len(orders))]

    sigma = {p: unit(i) for i, p in enumerate(scn.ids)}
    frob = {}
    for i, p in enumerate(scn.ids):
        g = unit(k + i)
        for j, e in enumerate(scn.frobenius[i]):
            g = [(a + e * b) % o for a, b, o in zip(g, unit(j), orders)]
        frob[p] = g
    hgens = [unit(2 * k + j) for j in range(len(scn.coefficient_group))]
    model = MockModel(M, orders, actions, 1, sigma, frob, hgens, {})
    rank = model.rank

    labels = [scn.squarefree_label(y) for y in submasks(scn.full_mask)]
    pos = {lab: n for n, lab in enumerate(labels)}
    nvar = rank * len(labels)

    def block(label: str, mat: Matrix, scale: int = 1) -> list[list[int]]:
        rows = [[0] * nvar for _ in range(rank)]
        off = pos[label] * rank
        for r in range(rank):
            for c in range(rank):
                rows[r][off + c] = scale * mat[r][c] % M
        return rows

    def ring_matrix(elem) -> Matrix:
        out = [[0] * rank for _ in range(rank)]
        for g, c in elem:
            A = model.matrix(g)
            out = [[(x + c * y) % M for x, y in zip(ro, ra)] for ro, ra in zip(out, A)]
        return out

    eqs: list[list[int]] = []
    for y in submasks(scn.full_mask):
        for i in bits(y):
            nx = ring_matrix(model.norm_sigma(scn, i))
            pf = ring_matrix(model.t_poly(scn, scn.primes[i].p_coeffs, model.frob_inv(scn, i)))
            top = block(scn.squarefree_label(y), nx)
            low = block(scn.squarefree_label(y & ~(1 << i)), pf, -1)
            eqs.extend([(u + v) % M for u, v in zip(a, b)] for a, b in zip(top, low))
    # d̂ of every λ-relation must land in W^Γ: a linear condition on the table
    for i in range(k):
        for s in basis(scn, scn.full_mask & ~(1 << i)):
            rel = lambda_map(scn, i, {s: 1})
            mats: dict[str, Matrix] = {}
            for (mask, g, h), c in rel.items():
                A = model.matrix(model.mul(model.section(scn, g), model.h_image(scn, h)))
                lab = scn.squarefree_label(mask)
                cur = mats.get(lab, [[0] * rank for _ in range(rank)])
                mats[lab] = [[(x + c * y) % M for x, y in zip(ro, ra)] for ro, ra in zip(cur, A)]
            full = [[0] * nvar for _ in range(rank)]
            for lab, A in mats.items():
                for r, row in enumerate(block(lab, A)):
                    full[r] = [(u + v) % M for u, v in zip(full[r], row)]
            eqs.extend(full[model.w_rank :])
            for gam in evaluation_elements(model, scn):
                G = model.matrix(gam)
                moved = [[(sum(G[r][t] * full[t][c] for t in range(rank)) - full[r][c]) % M for c in range(nvar)]
                         for r in range(rank)]
                eqs.extend(moved)
    kern = kernel_mod_rows(eqs, nvar, M) if eqs else [[int(r == c) for c in range(nvar)] for r in range(nvar)]
    if not kern:
        return None
    sol = [0] * nvar
    for row in kern:
        t = rng.randrange(M)
        sol = [(a + t * b) % M for a, b in zip(sol, row)]
    if not any(sol):
        sol = list(kern[0])
    model.dhat = {lab: sol[pos[lab] * rank : (pos[lab] + 1) * rank] for lab in labels}
    return model if validate(model, scn)["passed"] else None
