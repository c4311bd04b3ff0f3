import pytest

from kolyvagin_lab import complex as K
from kolyvagin_lab.scenario import popcount


def sym(scn, stalk=0, y=0, w=None, g=None, h=0):
    return ((stalk, g or scn.identity, h), y, tuple(w or (0,) * scn.k))


def orbit(scn, i, stalk, y, w, coeff=1):
    """Σ_k σ_x^k applied to a symbol with stalk ``stalk``."""
    out = {}
    for k in range(scn.orders[i]):
        g = scn.restrict(scn.g_pow(scn.sigma(i), k), stalk)
        s = sym(scn, stalk, y, w, g)
        out[s] = out.get(s, 0) + coeff
    return out


def test_delta_on_trivial_stalk_vanishes(s1):
    # (1 - σ)[1, 1, x] is zero because G acts trivially on the stalk [1]
    assert K.delta_x_K(s1, 0, {sym(s1): 1}) == {}


def test_delta_even_and_odd(s1):
    src = {sym(s1, stalk=1): 1}
    sigma = s1.sigma(0)
    assert K.delta_x_K(s1, 0, src) == {sym(s1, 1, 0, (1,)): 1, sym(s1, 1, 0, (1,), sigma): -1}
    assert K.delta_x_K(s1, 0, {sym(s1, w=(1,)): 1}) == {sym(s1, w=(2,)): 3}


def test_d_example(s1):
    # p(x;1) = 0 leaves -N[x, 1, 1]
    assert K.d_x_K(s1, 0, {sym(s1, y=1): 1}) == orbit(s1, 0, 1, 0, None, -1)


def test_d_squares_to_zero_top(s2):
    top = {sym(s2, y=0b11): 1}
    assert K.d_L(s2, K.d_L(s2, top)) == {}


def test_total_degree(s2):
    assert K.total_degree(sym(s2, y=0b11, w=(2, 0))) == 0
    assert K.total_degree(sym(s2, y=0b01)) == -1


def test_resolution(scn):
    rep = K.verify_resolution(scn)
    assert rep["passed"], rep
    assert rep["h0_rank"] == rep["u_rank"]
    assert sorted(rep["degrees"]) == list(range(-scn.k, 0))


def test_anticommute(scn):
    rep = K.verify_anticommute(scn)
    assert rep["passed"], rep
    assert rep["checked"] > 0


def test_empty_window_is_vacuous(s2):
    assert K.verify_anticommute(s2, (1, 0)) == {"passed": True, "checked": 0, "window": [1, 0]}


def test_missing_sign_breaks_anticommutation(s2, monkeypatch):
    honest = K.delta_x_K

    def unsigned(scn, i, chain):
        out = {}
        for (a, y, w), c in chain.items():
            sign = (-1) ** (popcount(y & ((2 << i) - 1)) + sum(w[:i]))
            out = K.chain_add(out, honest(scn, i, {(a, y, w): c}), sign)
        return out

    monkeypatch.setattr(K, "delta_x_K", unsigned)
    rep = K.verify_anticommute(s2, (-2, 1))
    assert not rep["passed"]
    assert "symbol" in rep["counterexample"]


def test_window_guard(s2):
    cx = K.KComplex(s2)
    assert cx.window == (-3, 2)
    with pytest.raises(K.WindowExceeded):
        cx.basis(3)


def test_total_differential_squares_to_zero(s2):
    cx = K.KComplex(s2)
    for n in (-2, -1, 0):
        a, b = cx.matrix(n), cx.matrix(n + 1)
        width = len(cx.basis(n + 2))
        for row in a:
            acc = [0] * width
            for j, c in enumerate(row):
                if c:
                    for t, v in enumerate(b[j]):
                        acc[t] += c * v
            assert not any(acc)


def test_project_Q(s1):
    keep = sym(s1, y=1, w=(1,))
    drop = sym(s1, stalk=1, w=(1,), g=s1.sigma(0))
    assert K.project_Q({keep: 1, drop: 5}) == {keep: 1}
    assert K.project_Q({keep: 4}, 3) == {keep: 1}
    assert not K.in_Q(sym(s1, y=1))


def test_q_differentials_vanish(scn):
    assert K.verify_Q_differentials_vanish(scn)


def test_bar_relations(scn):
    assert K.verify_bar_relations(scn)


def test_u_map(s1):
    assert K.u_map({sym(s1): 2, sym(s1, y=1, w=(1,)): 1}) == {((0, s1.identity, 0), (0,)): 2}
