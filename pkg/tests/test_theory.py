import numpy as np
import pytest

from tvarselect.estimation import companion_matrix
from tvarselect.exceptions import ThresholdsInapplicableError, UnstableTangentError
from tvarselect.models import CATALOG, MOTIVATING_EXAMPLE, Constant, TvarSpec, get_model, is_time_invariant
from tvarselect.quadrature import DEFAULT_RULE, QuadratureRule, integrate
from tvarselect.selection import default_m, default_n_grid
from tvarselect.theory import (
    a_delta,
    averaged_cov,
    delta_thresholds,
    d_bounds,
    f_delta,
    local_cov,
    local_covariances,
    local_mspe,
    population_mspe,
    v_delta,
)

AR05 = TvarSpec((Constant(0.5),))
WHITE = get_model("indepNonHetero")
STATIONARY = ("stationaryAR", "indepNonHetero", "mdl12")


def test_quadrature_basics():
    assert integrate(lambda x: x ** 3, 0.0, 2.0) == pytest.approx(4.0, rel=1e-14)
    assert integrate(np.cos, 0.0, 10.0) == pytest.approx(np.sin(10.0), abs=1e-13)
    rule = QuadratureRule(nodes=8, panel_width=0.1)
    assert rule.panels(1.0) == 10 and rule.doubled().nodes == 16


def test_local_cov_examples():
    assert local_cov(WHITE, 0.3, 0) == 1.0
    assert local_cov(WHITE, 0.3, 2) == 0.0
    assert local_cov(AR05, 0.7, 0) == pytest.approx(4 / 3, rel=1e-14)
    assert local_cov(AR05, 0.7, 1) == pytest.approx(2 / 3, rel=1e-14)
    r = local_cov(MOTIVATING_EXAMPLE, 0.9, 1) / local_cov(MOTIVATING_EXAMPLE, 0.9, 0)
    assert r == pytest.approx(0.285 / 0.885, rel=1e-12)


@pytest.mark.parametrize("label", sorted(CATALOG))
def test_local_cov_is_a_covariance(label):
    gam = local_covariances(get_model(label), np.linspace(0, 1, 101), 6)
    assert np.all(gam[:, 0] > 0)
    assert np.all(np.abs(gam[:, 1:]) <= gam[:, :1] * (1 + 1e-12))


def test_local_cov_order_two_against_lyapunov():
    spec = get_model("mdl12")
    # stationary covariance of the companion form solves S = A S A' + sigma^2 e1 e1'
    A = companion_matrix([1.0, -0.81])
    S = np.eye(2)
    for _ in range(5000):
        S = A @ S @ A.T + np.diag([1.0, 0.0])
    np.testing.assert_allclose(local_covariances(spec, 0.4, 1), [S[0, 0], S[0, 1]], rtol=1e-10)


def test_unstable_tangent():
    with pytest.raises(UnstableTangentError):
        local_cov(TvarSpec((Constant(1.2),)), 0.5, 0)
    with pytest.raises(UnstableTangentError):
        averaged_cov(TvarSpec((lambda u: 0.5 + 0.6 * u,)), 1.0, 0.5, 0)


def test_averaged_cov_constant_and_zero_width():
    for d in (0.0, 0.3, 1.0):
        assert averaged_cov(AR05, 0.9, d, 1) == pytest.approx(2 / 3, rel=1e-13)
    spec = get_model("periodic1")
    assert averaged_cov(spec, 0.6, 0.0, 2) == local_cov(spec, 0.6, 2)


def test_averaged_cov_riemann_oracle():
    K = 1_000_000
    v = 0.5 + 0.5 * (np.arange(K) + 0.5) / K  # midpoints of [0.5, 1]
    ref = np.mean(1.0 / (1.0 - (0.5 + 0.19 * v) ** 2))
    assert averaged_cov(get_model("increasing2"), 1.0, 0.5, 0) == pytest.approx(ref, rel=1e-8)


def test_a_delta_examples():
    for d in (0.0, 0.2, 0.9):
        np.testing.assert_allclose(a_delta(AR05, 0.8, d, 1), [0.5], rtol=1e-13)
    spec = get_model("increasing5")
    assert a_delta(spec, 0.7, 0.0, 1)[0] == pytest.approx(0.5 + 0.49 * 0.7, rel=1e-13)
    np.testing.assert_allclose(a_delta(MOTIVATING_EXAMPLE, 0.9, 0.0, 2), [0.285, 0.115], atol=1e-12)
    assert a_delta(spec, 0.5, 0.3, 0).shape == (0,)


@pytest.mark.parametrize("h", [1, 2, 5])
def test_v_delta_matches_companion_power(h):
    spec = get_model("mdl11")
    a = a_delta(spec, 0.6, 0.25, 3)
    v = v_delta(spec, 0.6, 0.25, 3, h)
    np.testing.assert_allclose(v, np.linalg.matrix_power(companion_matrix(a), h)[0], rtol=1e-10, atol=1e-14)
    if h == 1:
        np.testing.assert_array_equal(v, a)


def test_population_mspe_examples():
    assert population_mspe(WHITE, 0.4, 0.3, 0.1, 0, 1) == pytest.approx(1.0, rel=1e-13)
    for d in (0.0, 0.5):
        assert population_mspe(AR05, 0.8, d, 0.1, 1, 1) == pytest.approx(1.0, rel=1e-12)
    assert population_mspe(AR05, 0.8, 0.2, 0.1, 1, 2) == pytest.approx(1.25, rel=1e-12)


def test_two_step_mspe_against_simulation():
    rng = np.random.default_rng(17)
    K = 1_000_000
    z = rng.standard_normal(K + 200)
    x = np.empty_like(z)
    x[0] = z[0] / np.sqrt(0.75)
    for t in range(1, len(z)):
        x[t] = 0.5 * x[t - 1] + z[t]
    x = x[200:]
    mc = np.mean((x[2:] - 0.25 * x[:-2]) ** 2)
    assert population_mspe(AR05, 0.5, 0.3, 0.1, 1, 2) == pytest.approx(mc, rel=0.01)


def test_order_zero_independent_of_window_and_horizon():
    spec = get_model("periodic2")
    base = population_mspe(spec, 0.7, 0.1, 0.2, 0, 1)
    for d1, h in [(0.5, 1), (0.0, 4), (0.9, 7)]:
        assert population_mspe(spec, 0.7, d1, 0.2, 0, h) == pytest.approx(base, rel=1e-14)


@pytest.mark.parametrize("label", STATIONARY)
def test_stationary_specs_have_constant_mspe(label):
    spec = get_model(label)
    assert is_time_invariant(spec)
    vals = [population_mspe(spec, u, d, 0.05, 2, 2) for u, d in [(0.3, 0.1), (0.9, 0.8), (0.5, 0.0)]]
    np.testing.assert_allclose(vals, vals[0], rtol=1e-11)


def test_local_mspe_is_segment_limit():
    spec = get_model("increasing5")
    g = local_mspe(spec, 0.8, 0.4, 2, 3)
    assert population_mspe(spec, 0.8, 0.4, 1e-7, 2, 3) == pytest.approx(g, rel=1e-6)
    assert population_mspe(spec, 0.8, 0.4, 0.0, 2, 3) == g


@pytest.mark.parametrize("label", sorted(CATALOG))
def test_quadrature_doubling_stability(label):
    spec = get_model(label)
    for u, d1, d2, p, h in [(0.92, 0.9, 0.08, 2, 1), (0.95, 0.15, 0.05, 3, 4)]:
        a = population_mspe(spec, u, d1, d2, p, h, DEFAULT_RULE)
        b = population_mspe(spec, u, d1, d2, p, h, DEFAULT_RULE.doubled())
        assert abs(a - b) <= 1e-8 * abs(b)


@pytest.mark.parametrize("label", sorted(CATALOG))
def test_f_delta_zero_at_zero(label):
    n = 1000
    m = default_m(n)
    assert f_delta(get_model(label), n, m, 7, default_n_grid(n), 1, 0.0) == 0.0


@pytest.mark.parametrize("n", [500, 2000])
def test_f_delta_stationary_ar(n):
    m = default_m(n)
    vals = f_delta(get_model("stationaryAR"), n, m, 7, default_n_grid(n), 1, [0.05, 0.1])
    assert [float(f"{v:.2g}") for v in vals] == [0.05, 0.1]


@pytest.mark.parametrize("label", STATIONARY)
def test_d_bounds_vanish_for_stationary(label):
    b = d_bounds(get_model(label), 2000, 159)
    assert b.d_sup == pytest.approx(0.0, abs=1e-12) and b.d_inf == pytest.approx(0.0, abs=1e-12)


@pytest.mark.parametrize("label", sorted(CATALOG))
def test_d_sup_at_most_two(label):
    assert d_bounds(get_model(label), 1000, 88).d_sup <= 2


def _d_oracle(a_fn, T, m, K=100_000):
    # closed-form tvAR(1) covariances and an independent Gauss-Legendre rule
    lo, hi = (T - m) / T, 1.0
    width = (T - m) / T
    x, w = np.polynomial.legendre.leggauss(200)
    d = []
    for chunk in np.array_split(np.linspace(lo, hi, K), 20):
        # integrate over [u - width, u] split into 8 panels
        acc0 = acc1 = 0.0
        for j in range(8):
            a_end = chunk[:, None] - width + width * (j + (x[None, :] + 1) / 2) / 8
            a = a_fn(a_end)
            g0 = 1 / (1 - a ** 2)
            acc0 = acc0 + (g0 * w).sum(axis=1)
            acc1 = acc1 + (a * g0 * w).sum(axis=1)
        d.append(np.abs(acc1 / acc0 - a_fn(chunk)))
    d = np.concatenate(d)
    return d.max(), d.min()


def test_d_bounds_against_dense_grid():
    spec = get_model("increasing5")
    b = d_bounds(spec, 2000, 159)
    sup_ref, inf_ref = _d_oracle(lambda u: 0.5 + 0.49 * u, 2000, 159)
    assert b.d_inf > 0
    assert b.d_sup == pytest.approx(sup_ref, abs=1e-4)
    assert b.d_inf == pytest.approx(inf_ref, abs=1e-4)


def test_delta_thresholds_stationary():
    c = delta_thresholds(get_model("stationaryAR"), 2000, 159)
    assert c.rho == pytest.approx(0.6, abs=1e-12)
    assert c.delta_lower == pytest.approx(0.0, abs=1e-20) and c.delta_upper == pytest.approx(0.0, abs=1e-20)
    assert c.n_condition_status == "not evaluated"
    assert delta_thresholds(AR05, 500, 40).rho == pytest.approx(0.5, abs=1e-12)


def test_delta_thresholds_arithmetic():
    spec = get_model("decreasing2")
    T, m = 1000, 88
    c = delta_thresholds(spec, T, m, max_n=250, spectral_ratio=0.5)
    b = d_bounds(spec, T, m)
    # |a(u)| = u - 0.5 is largest at the right end of [(T - m)/T, 1]
    assert c.rho == pytest.approx(0.5, abs=1e-9)
    assert c.delta_upper == pytest.approx(b.d_inf ** 2 / 8, rel=1e-12)
    assert c.delta_lower == pytest.approx(2 * b.d_sup ** 2 / (1 - c.rho ** 2), rel=1e-12)
    assert c.n_condition == (b.d_inf ** 2 >= 2 * (0.5 * 250 / T) ** 2)
    assert c.n_condition_status in ("satisfied", "violated")


def test_delta_thresholds_inapplicable():
    spec = TvarSpec((lambda u: np.where(u > 0.5, 1.0 - 1e-12, 0.3),))
    with pytest.raises((ThresholdsInapplicableError, UnstableTangentError)):
        delta_thresholds(spec, 1000, 88)
