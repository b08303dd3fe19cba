"""Population second-order quantities of tvAR models.

Everything here is computed from the model's local (tangent-process)
autocovariances ``gamma_k(u)`` together with numerical quadrature:

* averaged covariances ``gamma_{Delta,k}(u) = int_0^1 gamma_k(u + Delta (x - 1)) dx``,
* coefficients ``a_Delta = Gamma_Delta^{-1} gamma_Delta`` and their h-step
  versions ``v_Delta``,
* the local prediction error ``g`` of a predictor built from ``v_Delta`` and
  the segment average ``MSPE_{Delta1,Delta2}(u) = int_0^1 g_{Delta1}(u + Delta2 (1 - x)) dx``,
* the separation ``f(delta)`` between the stationary and the locally
  stationary error surfaces, and the lag-one discrepancy bounds used by the
  order-one variant of the procedure.

Rescaled time is ``u = t / T`` throughout; callers choose ``T``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.optimize

from .estimation import hstep_recursion
from .exceptions import (
    ThresholdsInapplicableError,
    InvalidConfigError,
    SingularAveragedMatrixError,
    UnstableTangentError,
)
from .models import TvarSpec
from .quadrature import DEFAULT_RULE, interval_nodes

__all__ = [
    "STABILITY_MARGIN",
    "local_cov",
    "local_covariances",
    "averaged_cov",
    "averaged_covariances",
    "a_delta",
    "v_delta",
    "local_mspe",
    "population_mspe",
    "MspeSurface",
    "mspe_surface",
    "f_delta",
    "DBounds",
    "d_bounds",
    "DeltaThresholds",
    "delta_thresholds",
]

#: Tangent processes with companion spectral radius above ``1 - STABILITY_MARGIN`` are rejected.
STABILITY_MARGIN = 1e-10
_RCOND = 1e-12
_D_GRID = 2001


def _check_spec(spec):
    if not isinstance(spec, TvarSpec):
        raise TypeError(f"expected a TvarSpec, got {type(spec).__name__}")


def _spectral_radius(a):
    """Spectral radius of the companion matrices of the rows of ``a`` ``(n, p)``."""
    n, p = a.shape
    if p == 1:
        return np.abs(a[:, 0])
    C = np.zeros((n, p, p))
    C[:, 0, :] = a
    C[:, np.arange(1, p), np.arange(p - 1)] = 1.0
    return np.max(np.abs(np.linalg.eigvals(C)), axis=1)


def local_covariances(spec, u, k_max):
    """Local autocovariances ``gamma_0..gamma_{k_max}`` of the tangent AR process.

    Parameters
    ----------
    spec : TvarSpec
    u : array_like
        Rescaled times, any shape ``S``.
    k_max : int

    Returns
    -------
    ndarray of shape ``S + (k_max + 1,)``

    Raises
    ------
    UnstableTangentError
        If the tangent process at some ``u`` is not stable.
    """
    _check_spec(spec)
    u = np.asarray(u, dtype=float)
    shape = u.shape
    flat = u.reshape(-1)
    a = spec.coefficients(flat)
    s2 = spec.sigma(flat) ** 2
    p = spec.order
    k_max = int(k_max)
    rad = _spectral_radius(a)
    bad = ~(rad < 1 - STABILITY_MARGIN)
    if bad.any():
        u_bad = float(flat[np.argmax(bad)])
        raise UnstableTangentError(f"tangent process of {spec.label} is not stable at u={u_bad:.6g}")
    n = flat.shape[0]
    K = max(k_max, p)
    gam = np.empty((n, K + 1))
    if p == 1:
        a1 = a[:, 0]
        gam[:, 0] = s2 / (1 - a1 ** 2)
        for k in range(1, K + 1):
            gam[:, k] = a1 * gam[:, k - 1]
    else:
        # gamma_k - sum_j a_j gamma_{|k-j|} = sigma^2 1{k=0}, k = 0..p
        M = np.zeros((n, p + 1, p + 1))
        idx = np.arange(p + 1)
        M[:, idx, idx] = 1.0
        for k in range(p + 1):
            for j in range(1, p + 1):
                M[:, k, abs(k - j)] -= a[:, j - 1]
        rhs = np.zeros((n, p + 1, 1))
        rhs[:, 0, 0] = s2
        gam[:, :p + 1] = np.linalg.solve(M, rhs)[..., 0]
        for k in range(p + 1, K + 1):
            gam[:, k] = np.sum(a * gam[:, k - np.arange(1, p + 1)], axis=1)
    return gam[:, :k_max + 1].reshape(shape + (k_max + 1,))


def local_cov(spec, u, k):
    """Local lag-``k`` autocovariance ``gamma_k(u)`` (scalar or array in ``u``)."""
    k = abs(int(k))
    out = local_covariances(spec, u, k)[..., k]
    return float(out) if np.ndim(out) == 0 else out


def averaged_covariances(spec, u, delta, k_max, rule=DEFAULT_RULE):
    """``int_0^1 gamma_k(u + delta (x - 1)) dx`` for ``k = 0..k_max``.

    ``u`` may be an array; ``delta`` is a non-negative scalar.  ``delta = 0``
    returns the local covariances.
    """
    delta = float(delta)
    if delta < 0:
        raise InvalidConfigError("delta must be non-negative")
    u = np.asarray(u, dtype=float)
    if delta == 0:
        return local_covariances(spec, u, k_max)
    nodes, weights = interval_nodes(u - delta, u, rule)
    gam = local_covariances(spec, nodes, k_max)
    return np.einsum("...qk,...q->...k", gam, weights) / delta


def averaged_cov(spec, u, delta, k, rule=DEFAULT_RULE):
    k = abs(int(k))
    out = averaged_covariances(spec, u, delta, k, rule)[..., k]
    return float(out) if np.ndim(out) == 0 else out


def _toeplitz_stack(gam, p):
    idx = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
    return gam[..., idx]


def _solve_coefficients(gam, p):
    """``Gamma^{-1} gamma`` from covariance rows ``gam`` ``(..., >= p + 1)``."""
    G = _toeplitz_stack(gam, p)
    g = gam[..., 1:p + 1]
    flatG = G.reshape(-1, p, p)
    eig = np.abs(np.linalg.eigvalsh(flatG))
    top = eig.max(axis=1)
    if np.any(~(eig.min(axis=1) > _RCOND * top)):
        raise SingularAveragedMatrixError(f"averaged covariance matrix of order {p} is singular")
    return np.linalg.solve(G, g[..., None])[..., 0]


def a_delta(spec, u, delta, p, rule=DEFAULT_RULE):
    """One-step coefficients ``Gamma_Delta^{-1} gamma_Delta`` at ``u``.

    Returns an array of shape ``shape(u) + (p,)``.
    """
    p = int(p)
    u = np.asarray(u, dtype=float)
    if p == 0:
        return np.zeros(u.shape + (0,))
    gam = averaged_covariances(spec, u, delta, p, rule)
    return _solve_coefficients(gam, p)


def v_delta(spec, u, delta, p, h, rule=DEFAULT_RULE):
    """h-step coefficients: first row of the h-th power of the companion of ``a_delta``."""
    if int(h) < 1:
        raise InvalidConfigError("h must be at least 1")
    return hstep_recursion(a_delta(spec, u, delta, p, rule), int(h))


def _g_from(local, v, p, h):
    """Local prediction error given local covariances and h-step coefficients."""
    g0 = local[..., 0]
    if p == 0:
        return g0
    cross = local[..., h:h + p]
    G = _toeplitz_stack(local, p)
    return g0 - 2 * np.einsum("...i,...i->...", v, cross) + np.einsum("...i,...ij,...j->...", v, G, v)


def local_mspe(spec, u, delta, p, h, rule=DEFAULT_RULE):
    """``g_Delta^{(p,h)}(u) = gamma_0 - 2 v' gamma_0^{(p,h)} + v' Gamma_0 v``.

    ``gamma_0^{(p,h)} = (gamma_h, ..., gamma_{h+p-1})`` and ``Gamma_0`` are local
    quantities at ``u``; ``v = v_delta(spec, u, delta, p, h)``.  For ``p = 0``
    this is ``gamma_0(u)``.
    """
    p, h = int(p), int(h)
    u = np.asarray(u, dtype=float)
    local = local_covariances(spec, u, max(p + h - 1, 0))
    v = v_delta(spec, u, delta, p, h, rule) if p else None
    out = _g_from(local, v, p, h)
    return float(out) if np.ndim(out) == 0 else out


def population_mspe(spec, u, delta1, delta2, p, h, rule=DEFAULT_RULE):
    """Segment-averaged population MSPE ``int_0^1 g_{delta1}(u + delta2 (1 - x)) dx``.

    ``delta2 = 0`` degenerates to ``g_{delta1}(u)``.
    """
    delta2 = float(delta2)
    if delta2 < 0:
        raise InvalidConfigError("delta2 must be non-negative")
    if delta2 == 0:
        return local_mspe(spec, u, delta1, p, h, rule)
    nodes, weights = interval_nodes(float(u), float(u) + delta2, rule)
    g = local_mspe(spec, nodes, delta1, p, h, rule)
    return float(np.dot(g, weights) / delta2)


@dataclass(frozen=True)
class MspeSurface:
    """Population MSPEs of every stationary and locally stationary candidate.

    Attributes
    ----------
    stationary : ndarray, shape ``(p_max + 1,)``
        Index ``p`` holds the order-``p`` stationary value.
    local : ndarray, shape ``(p_max + 1, len(n_grid))``
    n_grid : tuple of int
    u : float
        Start of the evaluated segment, ``s_1 / T``.
    """

    stationary: np.ndarray
    local: np.ndarray
    n_grid: tuple
    u: float

    def separation(self, delta):
        """``min |stationary[p1] - (1 + delta) local[p2, N]|`` over all candidates."""
        diff = self.stationary[:, None, None] - (1 + float(delta)) * self.local[None, :, :]
        return float(np.min(np.abs(diff)))


def mspe_surface(spec, T, m, p_max, n_grid, h, rule=DEFAULT_RULE):
    """Population MSPE of each candidate forecaster on the validation segment.

    The stationary candidates average over ``Delta1 = s_1 / T`` and the locally
    stationary ones over ``Delta1 = N / T``; all are averaged over
    ``[s_1 / T, (s_1 + m) / T]`` with ``s_1 = T - m - h + 1``.
    """
    T, m, p_max, h = int(T), int(m), int(p_max), int(h)
    n_grid = tuple(int(N) for N in n_grid)
    s1 = T - m - h + 1
    if m < 1 or h < 1 or s1 < 1:
        raise InvalidConfigError(f"need m >= 1, h >= 1 and T - m - h + 1 >= 1 (T={T}, m={m}, h={h})")
    u = s1 / T
    nodes, weights = interval_nodes(u, u + m / T, rule)
    weights = weights / (m / T)
    k_max = p_max + h - 1
    local = local_covariances(spec, nodes, k_max)
    g0 = np.dot(local[:, 0], weights)

    def row(delta):
        vals = np.empty(p_max + 1)
        vals[0] = g0
        if p_max == 0:
            return vals
        avg = averaged_covariances(spec, nodes, delta, p_max, rule)
        for p in range(1, p_max + 1):
            v = hstep_recursion(_solve_coefficients(avg, p), h)
            vals[p] = np.dot(_g_from(local, v, p, h), weights)
        return vals

    stationary = row(s1 / T)
    loc = np.column_stack([row(N / T) for N in n_grid]) if n_grid else np.empty((p_max + 1, 0))
    return MspeSurface(stationary, loc, n_grid, u)


def f_delta(spec, T, m, p_max, n_grid, h, delta, rule=DEFAULT_RULE):
    """Separation ``f(delta)`` between stationary and scaled local population MSPEs.

    ``delta`` may be a scalar or a sequence; a sequence returns a list.
    """
    surface = mspe_surface(spec, T, m, p_max, n_grid, h, rule)
    if np.ndim(delta) == 0:
        return surface.separation(delta)
    return [surface.separation(d) for d in delta]


def _u_range(T, m, h):
    T, m, h = int(T), int(m), int(h)
    lo, hi = (T - m - h + 1) / T, (T - h + 1) / T
    if m < 1 or h < 1 or lo <= 0:
        raise InvalidConfigError(f"invalid (T={T}, m={m}, h={h})")
    return lo, hi


def _extremes(fun, lo, hi, n_grid=_D_GRID):
    """Sup and inf of a vectorised scalar function on ``[lo, hi]``.

    A uniform grid locates the extrema, which bounded Brent searches in the
    neighbouring cells then refine.
    """
    grid = np.linspace(lo, hi, n_grid)
    vals = fun(grid)
    out = []
    for sign in (-1.0, 1.0):  # -1: maximise, +1: minimise
        i = int(np.argmin(sign * vals))
        best = float(vals[i])
        a, b = grid[max(i - 1, 0)], grid[min(i + 1, n_grid - 1)]
        if b > a:
            res = scipy.optimize.minimize_scalar(
                lambda s: sign * float(fun(np.array([s]))[0]),
                bounds=(a, b), method="bounded", options={"xatol": 1e-12},
            )
            cand = sign * float(res.fun)
            best = max(best, cand) if sign < 0 else min(best, cand)
        out.append(best)
    return out[0], out[1]


@dataclass(frozen=True)
class DBounds:
    d_sup: float
    d_inf: float


def _lag1_discrepancy(spec, T, m, h, rule):
    s1 = int(T) - int(m) - int(h) + 1
    width = s1 / int(T)

    def fun(u):
        avg = averaged_covariances(spec, u, width, 1, rule)
        loc = local_covariances(spec, u, 1)
        return np.abs(avg[..., 1] / avg[..., 0] - loc[..., 1] / loc[..., 0])

    return fun


def d_bounds(spec, T, m, h=1, rule=DEFAULT_RULE):
    """Largest and smallest gap between averaged and local lag-one autocorrelation.

    The averaged ratio integrates ``gamma_1`` and ``gamma_0`` over
    ``[u - s_1/T, u]``; ``u`` ranges over ``[(T - m - h + 1)/T, (T - h + 1)/T]``.
    """
    _check_spec(spec)
    lo, hi = _u_range(T, m, h)
    d_sup, d_inf = _extremes(_lag1_discrepancy(spec, T, m, h, rule), lo, hi)
    return DBounds(d_sup, max(d_inf, 0.0))


@dataclass(frozen=True)
class DeltaThresholds:
    """Order-one consistency thresholds.

    Attributes
    ----------
    rho : float
        ``sup |gamma_1(u) / gamma_0(u)|`` over the validation range.
    d_sup, d_inf : float
    delta_lower : float
        ``2 d_sup^2 / (1 - rho^2)``; any ``delta`` at or above it suffices.
    delta_upper : float
        ``d_inf^2 / 8``; ``delta`` at or below it suffices when ``d_inf > 0``.
    n_condition : bool or None
        ``d_inf^2 >= 2 (ratio * max_N / T)^2`` for the user supplied ratio
        ``M'_f / m_f``; ``None`` when not evaluated.
    """

    rho: float
    d_sup: float
    d_inf: float
    delta_lower: float
    delta_upper: float
    n_condition: bool | None = None

    @property
    def n_condition_status(self):
        if self.n_condition is None:
            return "not evaluated"
        return "satisfied" if self.n_condition else "violated"


def delta_thresholds(spec, T, m, h=1, *, max_n=None, spectral_ratio=None, rule=DEFAULT_RULE):
    """Thresholds on ``delta`` for the order-one procedure.

    Parameters
    ----------
    max_n : int, optional
        Largest candidate window; needed for the window condition.
    spectral_ratio : float, optional
        Bound ``M'_f / m_f`` on the relative time-derivative of the local
        spectral density.  The window condition is only evaluated when both
        this and ``max_n`` are given.

    Raises
    ------
    ThresholdsInapplicableError
        If ``rho >= 1``.
    """
    lo, hi = _u_range(T, m, h)

    def corr(u):
        gam = local_covariances(spec, u, 1)
        return np.abs(gam[..., 1] / gam[..., 0])

    rho, _ = _extremes(corr, lo, hi)
    if not rho < 1:
        raise ThresholdsInapplicableError(f"rho = {rho:.6g} >= 1")
    db = d_bounds(spec, T, m, h, rule)
    cond = None
    if spectral_ratio is not None and max_n is not None:
        cond = bool(db.d_inf ** 2 >= 2 * (float(spectral_ratio) * int(max_n) / int(T)) ** 2)
    return DeltaThresholds(
        rho=rho,
        d_sup=db.d_sup,
        d_inf=db.d_inf,
        delta_lower=2 * db.d_sup ** 2 / (1 - rho ** 2),
        delta_upper=db.d_inf ** 2 / 8,
        n_condition=cond,
    )
