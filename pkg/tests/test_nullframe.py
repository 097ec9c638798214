import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from nullwave.nullframe import (
    MINKOWSKI,
    InvalidDirection,
    NullComponents,
    contract,
    decompose,
    frame_at,
    frame_decomposition,
    reconstruct,
    tangential_hessian_norm,
    wave_operator_residual,
)

finite = st.floats(-1.0, 1.0, allow_nan=False)
directions = st.tuples(finite, finite, finite).filter(lambda v: np.linalg.norm(v) > 1e-3)


def random_sym(rng, scale=1.0):
    a = rng.uniform(-scale, scale, (4, 4))
    return 0.5 * (a + a.T)


def test_axis_frames():
    f = frame_at([0, 0, 1])
    np.testing.assert_array_equal(f.L, [1, 0, 0, 1])
    np.testing.assert_array_equal(f.Lbar, [1, 0, 0, -1])
    np.testing.assert_allclose(f.S1, [0, 1, 0, 0])
    np.testing.assert_allclose(f.S2, [0, 0, 1, 0])
    g = frame_at([1, 0, 0])
    np.testing.assert_array_equal(g.L, [1, 1, 0, 0])
    np.testing.assert_array_equal(g.Lbar, [1, -1, 0, 0])


def test_zero_direction_rejected():
    with pytest.raises(InvalidDirection):
        frame_at([0, 0, 0])


@settings(max_examples=200, deadline=None)
@given(directions)
def test_frame_inner_products(w):
    f = frame_at(w)
    m = MINKOWSKI
    assert abs(contract(m, f.L, f.L)) < 1e-12
    assert abs(contract(m, f.Lbar, f.Lbar)) < 1e-12
    assert abs(contract(m, f.L, f.Lbar) + 2.0) < 1e-12
    for i, a in enumerate(f.angular):
        assert abs(contract(m, f.L, a)) < 1e-12
        assert abs(contract(m, f.Lbar, a)) < 1e-12
        for j, b in enumerate(f.angular):
            assert abs(contract(m, a, b) - (i == j)) < 1e-12


def test_contract_examples():
    f = frame_at([0.3, -0.4, 0.5])
    assert contract(MINKOWSKI, f.L, f.Lbar) == pytest.approx(-2.0, abs=1e-14)
    c2m1 = 0.37
    H = np.zeros((4, 4))
    H[1:, 1:] = c2m1 * np.eye(3)
    assert contract(H, f.L, f.L) == pytest.approx(c2m1, abs=1e-14)


def test_minkowski_components():
    c = decompose(MINKOWSKI, [0.2, 0.9, -0.1])
    assert c.gLLbar == pytest.approx(-0.5, abs=1e-15)
    assert abs(c.gLL) < 1e-15 and abs(c.gLbarLbar) < 1e-15
    np.testing.assert_allclose(c.gLA, 0, atol=1e-15)
    np.testing.assert_allclose(c.gLbarA, 0, atol=1e-15)
    np.testing.assert_allclose(c.gAB, np.eye(2), atol=1e-15)


def test_minkowski_from_components():
    w = [0.6, 0.0, 0.8]
    c = NullComponents(0.0, -0.5, 0.0, np.zeros(2), np.zeros(2), np.eye(2))
    np.testing.assert_allclose(reconstruct(c, w), MINKOWSKI, atol=1e-15)


def test_zero_tensor():
    c = decompose(np.zeros((4, 4)), [1, 2, 3])
    assert not np.any(c.as_array())
    z = NullComponents(0.0, 0.0, 0.0, np.zeros(2), np.zeros(2), np.zeros((2, 2)))
    assert not np.any(reconstruct(z, [1, 2, 3]))


def test_roundtrip_1000():
    rng = np.random.default_rng(7)
    worst = 0.0
    for _ in range(1000):
        g = random_sym(rng)
        w = rng.normal(size=3)
        worst = max(worst, np.max(np.abs(reconstruct(decompose(g, w), w) - g)))
    assert worst < 1e-12


def test_component_contraction_relations():
    rng = np.random.default_rng(3)
    g = random_sym(rng)
    w = rng.normal(size=3)
    f = frame_at(w)
    c = decompose(g, w)
    assert c.gLLbar == pytest.approx(0.25 * contract(g, f.Lbar, f.L), abs=1e-14)
    assert c.gLL == pytest.approx(0.25 * contract(g, f.Lbar, f.Lbar), abs=1e-14)
    assert c.gLA[1] == pytest.approx(-0.5 * contract(g, f.Lbar, f.S2), abs=1e-14)


def test_flat_decomposition():
    w = np.array([0.0, 0.6, 0.8])
    d = frame_decomposition(np.zeros((4, 4)), w)
    np.testing.assert_allclose(d.L1, [1, *w], atol=1e-15)
    assert d.ell == 0.0
    f = frame_at(w)
    expected = np.outer(f.S1, f.S1) + np.outer(f.S2, f.S2)
    np.testing.assert_allclose(d.gamma, expected, atol=1e-15)


def test_isotropic_perturbation_ell():
    # ell = trbar H + H_{L Lbar} - H_{LL}/2 = 2h - h - h/2 = h/2
    h = 0.21
    H = np.zeros((4, 4))
    H[1:, 1:] = h * np.eye(3)
    d = frame_decomposition(H, [1.0, 2.0, 2.0])
    assert d.trace_bar_H == pytest.approx(2 * h, abs=1e-14)
    assert d.HLL == pytest.approx(h, abs=1e-14)
    assert d.HLLbar == pytest.approx(-h, abs=1e-14)
    assert d.ell == pytest.approx(0.5 * h, abs=1e-14)


@settings(max_examples=200, deadline=None)
@given(st.integers(0, 2**32 - 1))
def test_metric_identity(seed):
    rng = np.random.default_rng(seed)
    H = random_sym(rng, 0.25)
    w = rng.normal(size=3)
    d = frame_decomposition(H, w)
    assert np.max(np.abs(d.metric(w) - (MINKOWSKI + H))) < 1e-12


def test_wave_residual_zero_hessian():
    assert wave_operator_residual(np.zeros((4, 4)), [0, 0, 1], np.zeros((4, 4))) == 0.0


def test_wave_residual_flat_q_profile():
    # phi = (t - r)^2 / 2 near the point x = (0, 0, r), omega = e_z
    w = np.array([0.0, 0.0, 1.0])
    t, r = 2.0, 1.5
    hess = np.zeros((4, 4))
    hess[0, 0] = 1.0
    hess[0, 3] = hess[3, 0] = -1.0
    hess[3, 3] = 1.0
    # the angular second derivatives of (t - r)^2/2 are (r - t)/r on the x, y diagonal
    hess[1, 1] = hess[2, 2] = (r - t) / r
    res = wave_operator_residual(np.zeros((4, 4)), w, hess)
    # box = -d_t^2 + d_z^2 + angular; g_LL = 0 in flat space
    assert res == pytest.approx(-1.0 + 1.0 + 2 * (r - t) / r, abs=1e-14)
    # the d_q profile is invisible to tangential derivatives: only angular rows survive
    assert tangential_hessian_norm(w, hess) == pytest.approx(np.sqrt(2) * abs(r - t) / r, abs=1e-14)


def test_wave_residual_tangential_hessian():
    w = np.array([1.0, 0.0, 0.0])
    f = frame_at(w)
    hess = np.outer(f.S1, f.S1) * 0.7 + np.outer(f.L, f.L) * 0.3
    rng = np.random.default_rng(1)
    H = random_sym(rng, 0.2)
    g = MINKOWSKI + H
    # d_q^2 phi = Lbar.hess.Lbar/4 vanishes for this hessian
    assert wave_operator_residual(H, w, hess) == pytest.approx(float(np.sum(g * hess)), abs=1e-13)
