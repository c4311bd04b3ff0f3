"""Exact linear algebra over the integers and over residue rings Z/M.

Matrices are stored as coordinate maps (:class:`IntMatrix`, :class:`ResMatrix`);
the algorithms themselves work on dense row lists of Python ints, which keeps
the arithmetic arbitrary precision throughout.

Conventions: ``howell_form`` and the lattice helpers act on *row* modules;
``solve_mod`` and ``kernel_mod`` treat the matrix as a map on column vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from math import gcd
from typing import Iterable, Sequence

Rows = list[list[int]]


@dataclass(frozen=True)
class IntMatrix:
    rows: int
    cols: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        for (i, j), v in self.entries.items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
            if v == 0:
                raise ValueError("zero entries must not be stored")

    @classmethod
    def from_rows(cls, data: Sequence[Sequence[int]], cols: int | None = None) -> "IntMatrix":
        ncols = cols if cols is not None else (len(data[0]) if data else 0)
        entries = {(i, j): int(v) for i, row in enumerate(data) for j, v in enumerate(row) if v}
        return cls(len(data), ncols, entries)

    @classmethod
    def identity(cls, n: int) -> "IntMatrix":
        return cls(n, n, {(i, i): 1 for i in range(n)})

    def to_rows(self) -> Rows:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out

    def __matmul__(self, other: "IntMatrix") -> "IntMatrix":
        if self.cols != other.rows:
            raise ValueError("dimension mismatch")
        return IntMatrix.from_rows(matmul(self.to_rows(), other.to_rows(), other.cols), other.cols)


@dataclass(frozen=True)
class ResMatrix:
    modulus: int
    rows: int
    cols: int
    entries: dict[tuple[int, int], int] = field(default_factory=dict)

    def __post_init__(self) -> None:
        if self.modulus < 2:
            raise ValueError("modulus must be at least 2")
        for (i, j), v in self.entries.items():
            if not (0 <= i < self.rows and 0 <= j < self.cols):
                raise IndexError(f"entry ({i}, {j}) outside {self.rows}x{self.cols}")
            if not 0 < v < self.modulus:
                raise ValueError("entries must be nonzero residues in [0, M)")

    @classmethod
    def from_rows(cls, modulus: int, data: Sequence[Sequence[int]], cols: int | None = None) -> "ResMatrix":
        ncols = cols if cols is not None else (len(data[0]) if data else 0)
        entries = {}
        for i, row in enumerate(data):
            for j, v in enumerate(row):
                v %= modulus
                if v:
                    entries[(i, j)] = v
        return cls(modulus, len(data), ncols, entries)

    def to_rows(self) -> Rows:
        out = [[0] * self.cols for _ in range(self.rows)]
        for (i, j), v in self.entries.items():
            out[i][j] = v
        return out


# ---------------------------------------------------------------------------
# dense helpers


def identity_rows(n: int) -> Rows:
    return [[int(i == j) for j in range(n)] for i in range(n)]


def matmul(a: Rows, b: Rows, bcols: int | None = None) -> Rows:
    ncols = bcols if bcols is not None else (len(b[0]) if b else 0)
    out = []
    for row in a:
        acc = [0] * ncols
        for k, v in enumerate(row):
            if v:
                for j, w in enumerate(b[k]):
                    if w:
                        acc[j] += v * w
        out.append(acc)
    return out


def vecmat(v: Sequence[int], b: Rows, bcols: int) -> list[int]:
    """Row vector times matrix."""
    acc = [0] * bcols
    for k, c in enumerate(v):
        if c:
            for j, w in enumerate(b[k]):
                if w:
                    acc[j] += c * w
    return acc


def transpose(a: Rows, cols: int | None = None) -> Rows:
    ncols = cols if cols is not None else (len(a[0]) if a else 0)
    return [[row[j] for row in a] for j in range(ncols)]


def xgcd(a: int, b: int) -> tuple[int, int, int]:
    """Return (g, s, t) with s*a + t*b = g = gcd(a, b) >= 0."""
    r0, r1, s0, s1, t0, t1 = a, b, 1, 0, 0, 1
    while r1:
        q = r0 // r1
        r0, r1 = r1, r0 - q * r1
        s0, s1 = s1, s0 - q * s1
        t0, t1 = t1, t0 - q * t1
    if r0 < 0:
        r0, s0, t0 = -r0, -s0, -t0
    return r0, s0, t0


def _row_combine(rows: Rows, i: int, j: int, s: int, t: int, u: int, v: int, mod: int | None = None) -> None:
    ri, rj = rows[i], rows[j]
    ni = [s * x + t * y for x, y in zip(ri, rj)]
    nj = [u * x + v * y for x, y in zip(ri, rj)]
    if mod is not None:
        ni = [x % mod for x in ni]
        nj = [x % mod for x in nj]
    rows[i], rows[j] = ni, nj


def _col_combine(rows: Rows, i: int, j: int, s: int, t: int, u: int, v: int) -> None:
    # new col_i = s*col_i + t*col_j ; new col_j = u*col_i + v*col_j
    for row in rows:
        x, y = row[i], row[j]
        row[i] = s * x + t * y
        row[j] = u * x + v * y


# ---------------------------------------------------------------------------
# Smith normal form


def snf_dense(a: Rows, ncols: int) -> tuple[Rows, list[int], Rows, Rows]:
    """Return (L, diag, R, R_inv) with L*a*R diagonal and each d_i | d_{i+1}."""
    m, n = len(a), ncols
    A = [list(r) for r in a]
    L = identity_rows(m)
    R = identity_rows(n)
    Rinv = identity_rows(n)
    diag: list[int] = []
    for t in range(min(m, n)):
        best = None
        for i in range(t, m):
            row = A[i]
            for j in range(t, n):
                v = row[j]
                if v and (best is None or abs(v) < best[0]):
                    best = (abs(v), i, j)
                    if best[0] == 1:
                        break
            if best is not None and best[0] == 1:
                break
        if best is None:
            break
        _, pi, pj = best
        A[t], A[pi] = A[pi], A[t]
        L[t], L[pi] = L[pi], L[t]
        if pj != t:
            for M_ in (A, R):
                for row in M_:
                    row[t], row[pj] = row[pj], row[t]
            Rinv[t], Rinv[pj] = Rinv[pj], Rinv[t]
        while True:
            for i in range(t + 1, m):
                b = A[i][t]
                if b:
                    p = A[t][t]
                    if b % p == 0:
                        q = b // p
                        A[i] = [x - q * y for x, y in zip(A[i], A[t])]
                        L[i] = [x - q * y for x, y in zip(L[i], L[t])]
                    else:
                        g, s, tt = xgcd(p, b)
                        u, v = -b // g, p // g
                        _row_combine(A, t, i, s, tt, u, v)
                        _row_combine(L, t, i, s, tt, u, v)
            clean = True
            for j in range(t + 1, n):
                b = A[t][j]
                if b:
                    p = A[t][t]
                    if b % p == 0:
                        q = b // p
                        for row in A:
                            row[j] -= q * row[t]
                        for row in R:
                            row[j] -= q * row[t]
                        Rinv[t] = [x + q * y for x, y in zip(Rinv[t], Rinv[j])]
                    else:
                        g, s, tt = xgcd(p, b)
                        bg, pg = b // g, p // g
                        # column transform [[s, -bg], [tt, pg]] on (t, j)
                        _col_combine(A, t, j, s, tt, -bg, pg)
                        _col_combine(R, t, j, s, tt, -bg, pg)
                        _row_combine(Rinv, t, j, pg, bg, -tt, s)
                        clean = False
            if clean and all(A[i][t] == 0 for i in range(t + 1, m)):
                p = A[t][t]
                bad = None
                for i in range(t + 1, m):
                    if any(x % p for x in A[i][t + 1:]):
                        bad = i
                        break
                if bad is None:
                    break
                A[t] = [x + y for x, y in zip(A[t], A[bad])]
                L[t] = [x + y for x, y in zip(L[t], L[bad])]
        if A[t][t] < 0:
            A[t] = [-x for x in A[t]]
            L[t] = [-x for x in L[t]]
        diag.append(A[t][t])
    diag.extend([0] * (min(m, n) - len(diag)))
    return L, diag, R, Rinv


def smith_normal_form(m: IntMatrix) -> tuple[IntMatrix, list[int], IntMatrix]:
    """Smith form: ``left @ m @ right`` is diagonal with entries ``diag``."""
    L, diag, R, _ = snf_dense(m.to_rows(), m.cols)
    return IntMatrix.from_rows(L, m.rows), diag, IntMatrix.from_rows(R, m.cols)


def determinant(a: Rows) -> int:
    """Bareiss fraction-free determinant."""
    n = len(a)
    if n == 0:
        return 1
    A = [list(r) for r in a]
    sign, prev = 1, 1
    for k in range(n - 1):
        if A[k][k] == 0:
            for i in range(k + 1, n):
                if A[i][k]:
                    A[k], A[i] = A[i], A[k]
                    sign = -sign
                    break
            else:
                return 0
        for i in range(k + 1, n):
            for j in range(k + 1, n):
                A[i][j] = (A[i][j] * A[k][k] - A[i][k] * A[k][j]) // prev
        prev = A[k][k]
    return sign * A[n - 1][n - 1]


# ---------------------------------------------------------------------------
# Hermite normal form and integer lattices (row convention)


def hermite_rows(rows: Iterable[Sequence[int]], ncols: int, with_transform: bool = False):
    """Row-style Hermite normal form of the Z-span of ``rows``.

    Returns the nonzero HNF rows (positive pivots, entries above each pivot
    reduced into [0, pivot)).  With ``with_transform`` also returns
    ``(hnf_all, transform)`` where ``transform @ rows == hnf_all`` and the
    trailing zero rows of ``hnf_all`` come last.
    """
    A = [list(r) for r in rows]
    m = len(A)
    U = identity_rows(m) if with_transform else None
    r = 0
    pivots = []
    for c in range(ncols):
        if r >= m:
            break
        for i in range(r + 1, m):
            b = A[i][c]
            if not b:
                continue
            a = A[r][c]
            if a == 0:
                A[r], A[i] = A[i], A[r]
                if U is not None:
                    U[r], U[i] = U[i], U[r]
                continue
            if b % a == 0:
                q = b // a
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                if U is not None:
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
                continue
            g, s, t = xgcd(a, b)
            u, v = -b // g, a // g
            _row_combine(A, r, i, s, t, u, v)
            if U is not None:
                _row_combine(U, r, i, s, t, u, v)
        p = A[r][c]
        if p == 0:
            continue
        if p < 0:
            A[r] = [-x for x in A[r]]
            if U is not None:
                U[r] = [-x for x in U[r]]
            p = -p
        for i in range(r):
            q = A[i][c] // p
            if q:
                A[i] = [x - q * y for x, y in zip(A[i], A[r])]
                if U is not None:
                    U[i] = [x - q * y for x, y in zip(U[i], U[r])]
        pivots.append(c)
        r += 1
    if with_transform:
        return A, U, pivots
    return A[:r]


def hnf_reduce(vec: Sequence[int], hnf: Rows) -> list[int]:
    """Reduce ``vec`` against HNF rows; the result is zero iff vec is in the lattice
    (when every pivot divides).  Entries at pivot columns land in [0, pivot)."""
    v = list(vec)
    for row in hnf:
        c = next(j for j, x in enumerate(row) if x)
        q = v[c] // row[c]
        if q:
            v = [x - q * y for x, y in zip(v, row)]
    return v


def in_lattice(vec: Sequence[int], hnf: Rows) -> bool:
    return not any(hnf_reduce(vec, hnf))


def int_rank(rows: Sequence[Sequence[int]], ncols: int) -> int:
    return len(hermite_rows(rows, ncols))


def left_kernel(rows: Sequence[Sequence[int]], ncols: int) -> Rows:
    """Z-basis (HNF) of {v : v @ rows = 0}."""
    m = len(rows)
    if m == 0:
        return []
    A, U, pivots = hermite_rows(rows, ncols, with_transform=True)
    kernel = [U[i] for i in range(len(pivots), m)]
    return hermite_rows(kernel, m)


# ---------------------------------------------------------------------------
# Howell form over Z/M


def _unit_normalizer(a: int, mod: int) -> tuple[int, int]:
    """Return (u, g) with u a unit mod ``mod`` and u*a = g = gcd(a, mod) (mod ``mod``)."""
    g = gcd(a, mod)
    if g == mod:
        return 1, 0
    n1 = mod // g
    u = pow((a // g) % n1, -1, n1) if n1 > 1 else 1
    while gcd(u, mod) != 1:
        u += n1
    return u % mod, g


def howell_rows(rows: Iterable[Sequence[int]], ncols: int, mod: int, with_transform: bool = False):
    """Howell form of the row module generated by ``rows`` over Z/mod.

    Pivots are normalized to divisors of ``mod``, entries above a pivot are
    reduced into [0, pivot), and every row's annihilator multiple is folded
    back in, which makes the form canonical and greedy reduction a membership
    test.
    """
    A = [[x % mod for x in r] for r in rows]
    nsrc = len(A)
    U = identity_rows(nsrc) if with_transform else None
    if U is not None:
        U = [[x % mod for x in r] for r in U]
    r = 0
    for c in range(ncols):
        if r >= len(A):
            break
        for i in range(r + 1, len(A)):
            b = A[i][c]
            if not b:
                continue
            a = A[r][c]
            if a == 0:
                A[r], A[i] = A[i], A[r]
                if U is not None:
                    U[r], U[i] = U[i], U[r]
                continue
            g, s, t = xgcd(a, b)
            u, v = -b // g, a // g
            _row_combine(A, r, i, s, t, u, v, mod)
            if U is not None:
                _row_combine(U, r, i, s, t, u, v, mod)
        a = A[r][c]
        if a == 0:
            continue
        unit, g = _unit_normalizer(a, mod)
        A[r] = [(unit * x) % mod for x in A[r]]
        if U is not None:
            U[r] = [(unit * x) % mod for x in U[r]]
        for i in range(r):
            q = A[i][c] // g
            if q:
                A[i] = [(x - q * y) % mod for x, y in zip(A[i], A[r])]
                if U is not None:
                    U[i] = [(x - q * y) % mod for x, y in zip(U[i], U[r])]
        ann = mod // g
        if ann != mod and ann % mod:
            extra = [(ann * x) % mod for x in A[r]]
            if any(extra):
                A.append(extra)
                if U is not None:
                    U.append([(ann * x) % mod for x in U[r]])
        r += 1
    keep = [i for i in range(r) if any(A[i])]
    H = [A[i] for i in keep]
    if with_transform:
        return H, [U[i] for i in keep]
    return H


def howell_form(m: ResMatrix) -> tuple[ResMatrix, ResMatrix]:
    """Howell form ``h`` of the row module of ``m`` and ``transform`` with h = transform @ m."""
    H, X = howell_rows(m.to_rows(), m.cols, m.modulus, with_transform=True)
    return (
        ResMatrix.from_rows(m.modulus, H, m.cols),
        ResMatrix.from_rows(m.modulus, X, m.rows),
    )


def howell_reduce(vec: Sequence[int], howell: Rows, mod: int) -> tuple[list[int], list[int]]:
    """Greedy reduction against a Howell basis: returns (remainder, coefficients)."""
    v = [x % mod for x in vec]
    coeffs = [0] * len(howell)
    for k, row in enumerate(howell):
        c = next(j for j, x in enumerate(row) if x)
        p = row[c]
        if v[c] % p == 0:
            q = v[c] // p
            if q:
                coeffs[k] = q
                v = [(x - q * y) % mod for x, y in zip(v, row)]
    return v, coeffs


def in_span_mod(vec: Sequence[int], howell: Rows, mod: int) -> bool:
    return not any(howell_reduce(vec, howell, mod)[0])


def span_log_size(howell: Rows, mod: int) -> int:
    """Size of the row module as a product; returned as the integer |span|."""
    size = 1
    for row in howell:
        p = next(x for x in row if x)
        size *= mod // p
    return size


def solve_mod(m: ResMatrix, rhs: Sequence[int]) -> list[int] | None:
    """Return v with m @ v = rhs over Z/M, or None when no solution exists."""
    if len(rhs) != m.rows:
        raise ValueError(f"rhs has length {len(rhs)}, expected {m.rows}")
    return solve_mod_rows(m.to_rows(), m.cols, list(rhs), m.modulus)


def solve_mod_rows(a: Rows, ncols: int, rhs: Sequence[int], mod: int) -> list[int] | None:
    at = transpose(a, ncols) if a else [[] for _ in range(ncols)]
    H, X = howell_rows(at, len(a), mod, with_transform=True)
    rem, coeffs = howell_reduce(rhs, H, mod)
    if any(rem):
        return None
    sol = [0] * ncols
    for k, q in enumerate(coeffs):
        if q:
            for j, x in enumerate(X[k]):
                if x:
                    sol[j] = (sol[j] + q * x) % mod
    return sol


def kernel_mod_rows(a: Rows, ncols: int, mod: int) -> Rows:
    """Howell basis of {v in (Z/M)^ncols : a @ v = 0}."""
    nrows = len(a)
    at = transpose(a, ncols) if a else [[] for _ in range(ncols)]
    aug = [list(at[j]) + [int(i == j) for i in range(ncols)] for j in range(ncols)]
    H = howell_rows(aug, nrows + ncols, mod)
    kern = [row[nrows:] for row in H if not any(row[:nrows])]
    return howell_rows(kern, ncols, mod)


def kernel_mod(m: ResMatrix) -> ResMatrix:
    K = kernel_mod_rows(m.to_rows(), m.cols, m.modulus)
    return ResMatrix.from_rows(m.modulus, K, m.cols)


def image_size_mod(a: Rows, ncols: int, mod: int) -> int:
    """|a @ (Z/M)^ncols|."""
    at = transpose(a, ncols) if a else []
    return span_log_size(howell_rows(at, len(a), mod), mod)
