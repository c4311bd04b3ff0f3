import itertools

import pytest
from hypothesis import given, settings, strategies as st

from kolyvagin_lab.exactlin import (
    IntMatrix,
    ResMatrix,
    determinant,
    hermite_rows,
    howell_form,
    howell_rows,
    in_lattice,
    kernel_mod,
    left_kernel,
    matmul,
    smith_normal_form,
    snf_dense,
    solve_mod,
)


def row_module(rows, ncols, mod):
    """Brute-force: every Z/mod-combination of the rows."""
    out = set()
    for coeffs in itertools.product(range(mod), repeat=len(rows)):
        v = [0] * ncols
        for c, r in zip(coeffs, rows):
            for j in range(ncols):
                v[j] = (v[j] + c * r[j]) % mod
        out.add(tuple(v))
    return out


def brute_kernel(rows, ncols, mod):
    return {
        v
        for v in itertools.product(range(mod), repeat=ncols)
        if all(sum(a * b for a, b in zip(r, v)) % mod == 0 for r in rows)
    }


def test_snf_examples():
    assert smith_normal_form(IntMatrix.from_rows([[2, 4], [6, 8]]))[1] == [2, 4]
    assert smith_normal_form(IntMatrix.identity(3))[1] == [1, 1, 1]
    assert smith_normal_form(IntMatrix(2, 2))[1] == [0, 0]


matrices = st.integers(1, 4).flatmap(
    lambda m: st.integers(1, 4).flatmap(
        lambda n: st.lists(
            st.lists(st.integers(-12, 12), min_size=n, max_size=n), min_size=m, max_size=m
        )
    )
)


@settings(max_examples=150, deadline=None)
@given(matrices)
def test_snf_certificate(a):
    n = len(a[0])
    L, diag, R, Rinv = snf_dense(a, n)
    D = matmul(matmul(L, a, n), R, n)
    for i, row in enumerate(D):
        for j, v in enumerate(row):
            assert v == (diag[i] if i == j else 0)
    assert abs(determinant(L)) == 1
    assert abs(determinant(R)) == 1
    assert matmul(R, Rinv, n) == [[int(i == j) for j in range(n)] for i in range(n)]
    nz = [d for d in diag if d]
    assert all(b % a == 0 for a, b in zip(nz, nz[1:]))
    assert all(d >= 0 for d in diag)


def test_howell_examples():
    h, _ = howell_form(ResMatrix.from_rows(4, [[2]]))
    assert h.to_rows() == [[2]]
    m = ResMatrix.from_rows(4, [[1, 1], [0, 2]])
    h, t = howell_form(m)
    assert row_module(h.to_rows(), 2, 4) == row_module(m.to_rows(), 2, 4)
    assert len(row_module(m.to_rows(), 2, 4)) == 8
    assert [[x % 4 for x in r] for r in matmul(t.to_rows(), m.to_rows(), 2)] == h.to_rows()
    empty = howell_form(ResMatrix.from_rows(5, [], 3))[0]
    assert empty.rows == 0


res_cases = st.sampled_from([2, 4, 6, 8, 9, 12]).flatmap(
    lambda mod: st.tuples(
        st.just(mod),
        st.integers(1, 3).flatmap(
            lambda n: st.lists(
                st.lists(st.integers(0, mod - 1), min_size=n, max_size=n), min_size=1, max_size=3
            )
        ),
    )
)


@settings(max_examples=120, deadline=None)
@given(res_cases)
def test_howell_span_idempotent_and_transform(case):
    mod, rows = case
    n = len(rows[0])
    H, X = howell_rows(rows, n, mod, with_transform=True)
    assert row_module(H, n, mod) == row_module(rows, n, mod)
    assert howell_rows(H, n, mod) == H
    prod = matmul(X, rows, n)
    assert [[x % mod for x in r] for r in prod] == H


@settings(max_examples=120, deadline=None)
@given(res_cases)
def test_howell_membership_is_exact(case):
    mod, rows = case
    n = len(rows[0])
    H = howell_rows(rows, n, mod)
    span = row_module(rows, n, mod)
    from kolyvagin_lab.exactlin import in_span_mod

    for v in itertools.product(range(mod), repeat=n):
        assert in_span_mod(v, H, mod) == (v in span)


def test_solve_mod_examples():
    assert solve_mod(ResMatrix.from_rows(4, [[2]]), [2]) in ([1], [3])
    assert solve_mod(ResMatrix.from_rows(4, [[2]]), [1]) is None
    m = ResMatrix.from_rows(9, [[3, 1], [0, 3]])
    brute = [
        v for v in itertools.product(range(9), repeat=2) if (3 * v[0] + v[1]) % 9 == 1 and (3 * v[1]) % 9 == 3
    ]
    assert brute  # the exhaustive oracle finds solutions
    v = solve_mod(m, [1, 3])
    assert tuple(v) in brute
    with pytest.raises(ValueError):
        solve_mod(m, [1])


@settings(max_examples=120, deadline=None)
@given(res_cases, st.data())
def test_solve_mod_substitution(case, data):
    mod, rows = case
    n = len(rows[0])
    x = data.draw(st.lists(st.integers(0, mod - 1), min_size=n, max_size=n))
    rhs = [sum(a * b for a, b in zip(r, x)) % mod for r in rows]
    v = solve_mod(ResMatrix.from_rows(mod, rows), rhs)
    assert v is not None
    assert [sum(a * b for a, b in zip(r, v)) % mod for r in rows] == rhs


def test_kernel_examples():
    circ = [[(1 if (j - i) % 3 == 1 else 0) - (1 if i == j else 0) for j in range(3)] for i in range(3)]
    K = kernel_mod(ResMatrix.from_rows(3, circ)).to_rows()
    assert row_module(K, 3, 3) == brute_kernel(circ, 3, 3)
    assert len(brute_kernel(circ, 3, 3)) == 3
    assert row_module(K, 3, 3) == {(0, 0, 0), (1, 1, 1), (2, 2, 2)}
    assert kernel_mod(ResMatrix.from_rows(5, [[1, 0], [0, 1]])).rows == 0
    assert len(row_module(kernel_mod(ResMatrix.from_rows(4, [[0, 0]])).to_rows(), 2, 4)) == 16


@settings(max_examples=120, deadline=None)
@given(res_cases)
def test_kernel_matches_brute_force(case):
    mod, rows = case
    n = len(rows[0])
    K = kernel_mod(ResMatrix.from_rows(mod, rows)).to_rows()
    for v in K:
        assert all(sum(a * b for a, b in zip(r, v)) % mod == 0 for r in rows)
    assert row_module(K, n, mod) == brute_kernel(rows, n, mod)


def test_hermite_and_left_kernel():
    H = hermite_rows([[2, 4], [6, 8]], 2)
    assert in_lattice([8, 12], H)
    assert not in_lattice([1, 0], H)
    K = left_kernel([[1, 2], [2, 4], [0, 1]], 2)
    for v in K:
        assert v[0] * 1 + v[1] * 2 == 0 and v[0] * 2 + v[1] * 4 + v[2] == 0
    assert len(K) == 1
