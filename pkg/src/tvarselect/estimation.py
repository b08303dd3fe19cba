"""Localized autocovariances, Yule-Walker solves and h-step prediction coefficients.

All time arguments are 1-based.  A window of length ``N`` anchored at ``t``
covers observations ``t - N + 1, ..., t``; passing ``N = t`` (or ``None`` to
the batched routines) uses the whole available past, which is what the
stationary forecaster does.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .exceptions import LagTooLargeError, SingularWindowError, WindowOutOfRangeError
from .series import check_series

__all__ = [
    "CoeffVector",
    "RCOND_THRESHOLD",
    "local_acov",
    "local_acov_vector",
    "yule_walker",
    "hstep_coeffs",
    "hstep_recursion",
    "companion_matrix",
    "WindowedYuleWalker",
]

#: Reciprocal condition number below which a localized system counts as singular.
RCOND_THRESHOLD = 1e-12


@dataclass(frozen=True)
class CoeffVector:
    """Prediction coefficients ``(c_1, ..., c_p)`` for ``X_{t+h}``.

    ``N == 0`` encodes the full-past (stationary) window.
    """

    values: np.ndarray
    h: int = 1
    N: int = 0
    t: int | None = None

    def __post_init__(self):
        arr = np.array(self.values, dtype=float).reshape(-1)
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def p(self):
        return self.values.shape[0]

    def __len__(self):
        return self.p

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.values, dtype=dtype)


def _check_window(n_obs, t, N, k=0):
    if N < 1:
        raise WindowOutOfRangeError(f"window length must be positive, got N={N}")
    if abs(k) > N - 1:
        raise LagTooLargeError(f"lag {k} needs a window longer than N={N}")
    if t > n_obs:
        raise WindowOutOfRangeError(f"anchor t={t} lies beyond the {n_obs} observations")
    if t - N + 1 < 1:
        raise WindowOutOfRangeError(f"window of length {N} anchored at t={t} starts before index 1")


def local_acov(x, t, N, k):
    """Localized lag-``k`` autocovariance on the window ending at ``t``.

    ``sum_{l=t-N+|k|+1}^{t} x_{l-|k|} x_l / (N - |k|)``, evaluated literally.
    """
    x = check_series(x)
    k = abs(int(k))
    t, N = int(t), int(N)
    _check_window(x.shape[0], t, N, k)
    lo = t - N + k + 1
    total = 0.0
    for ell in range(lo, t + 1):
        total += x[ell - k - 1] * x[ell - 1]
    return total / (N - k)


def local_acov_vector(x, t, N, k_max):
    """``local_acov`` for lags ``0..k_max`` (vectorised, same summation range)."""
    x = check_series(x)
    t, N = int(t), int(N)
    _check_window(x.shape[0], t, N, k_max)
    seg = x[t - N:t]
    return np.array([np.dot(seg[:N - k], seg[k:]) / (N - k) for k in range(k_max + 1)])


def _solve_symmetric(G, g):
    """Cholesky first, LU as fallback; raise when the system is singular."""
    if not np.all(np.isfinite(G)):
        raise SingularWindowError("non-finite localized covariance matrix")
    eig = np.linalg.eigvalsh(G)
    scale = np.max(np.abs(eig))
    if scale == 0 or np.min(np.abs(eig)) / scale < RCOND_THRESHOLD:
        raise SingularWindowError("localized Toeplitz matrix is numerically singular")
    try:
        return scipy.linalg.cho_solve(scipy.linalg.cho_factor(G), g)
    except np.linalg.LinAlgError:
        return scipy.linalg.lu_solve(scipy.linalg.lu_factor(G), g)


def yule_walker(x, t, N, p):
    """One-step prediction coefficients from the localized Yule-Walker system.

    Parameters
    ----------
    x : array_like
        Observed series.
    t : int
        1-based anchor; the window ends at ``t``.
    N : int
        Window length; ``N = t`` gives the full-past estimator.
    p : int
        Order.  ``p = 0`` returns the empty vector (zero forecaster).

    Raises
    ------
    SingularWindowError
        If the localized covariance matrix is numerically singular.
    """
    x = check_series(x)
    t, N, p = int(t), int(N), int(p)
    if p < 0:
        raise ValueError("p must be non-negative")
    full = 0 if N == t else N
    if p == 0:
        _check_window(x.shape[0], t, N)
        return CoeffVector(np.empty(0), h=1, N=full, t=t)
    if N < p + 1:
        raise WindowOutOfRangeError(f"window N={N} too short for order p={p}")
    gam = local_acov_vector(x, t, N, p)
    G = scipy.linalg.toeplitz(gam[:p])
    a = _solve_symmetric(G, gam[1:p + 1])
    return CoeffVector(a, h=1, N=full, t=t)


def hstep_recursion(a, h):
    """Apply the h-step recursion to coefficient rows.

    ``a`` has shape ``(..., p)``; returns an array of the same shape.
    """
    a = np.asarray(a, dtype=float)
    v = a.copy()
    for _ in range(1, int(h)):
        nxt = a * v[..., :1]
        nxt[..., :-1] += v[..., 1:]
        v = nxt
    return v


def hstep_coeffs(a, h):
    """h-step plug-in coefficients from one-step coefficients ``a``.

    ``v^(1) = a`` and ``v_i^(k) = a_i v_1^(k-1) + v_{i+1}^(k-1)`` with the
    second term dropped for ``i = p``.
    """
    h = int(h)
    if h < 1:
        raise ValueError("h must be at least 1")
    if isinstance(a, CoeffVector):
        if a.h != 1:
            raise ValueError("hstep_coeffs expects one-step coefficients")
        return CoeffVector(hstep_recursion(a.values, h), h=h, N=a.N, t=a.t)
    return CoeffVector(hstep_recursion(np.asarray(a, dtype=float).reshape(-1), h), h=h)


def companion_matrix(a):
    """``e_1 a' + H`` with ``H`` the nilpotent shift (ones on the subdiagonal)."""
    a = np.asarray(a, dtype=float).reshape(-1)
    p = a.shape[0]
    A = np.eye(p, k=-1)
    A[0, :] = a
    return A


class WindowedYuleWalker:
    """Batched localized Yule-Walker estimates over many anchors.

    Lagged products are accumulated once, so each localized autocovariance
    costs O(1); systems for all anchors of one order are solved as a stack.

    Parameters
    ----------
    x : array_like
        Series; anchors may use every element.
    anchors : array_like of int
        1-based anchor times.
    p_max : int
        Largest order needed.
    """

    def __init__(self, x, anchors, p_max):
        self.x = check_series(x)
        self.anchors = np.asarray(anchors, dtype=np.int64).reshape(-1)
        self.p_max = int(p_max)
        n = self.x.shape[0]
        if self.anchors.size and (self.anchors.min() < 1 or self.anchors.max() > n):
            raise WindowOutOfRangeError("anchor outside the observed range")
        # prefix[k, i] = sum_{l=k+1}^{i} x_{l-k} x_l
        self._prefix = np.zeros((self.p_max + 1, n + 1))
        for k in range(self.p_max + 1):
            if k < n:
                self._prefix[k, k + 1:] = np.cumsum(self.x[:n - k] * self.x[k:])
        lag_idx = self.anchors[:, None] - 1 - np.arange(max(self.p_max, 1))[None, :]
        self._lags = np.where(lag_idx >= 0, self.x[np.clip(lag_idx, 0, None)], np.nan)

    def autocovariances(self, N=None):
        """Array ``(len(anchors), p_max + 1)`` of lags ``0..p_max``; ``N=None`` is full past."""
        t = self.anchors
        width = t if N is None else np.full_like(t, int(N))
        if np.any(t - width < 0):
            raise WindowOutOfRangeError(f"window N={N} reaches before index 1")
        k = np.arange(self.p_max + 1)
        start = t[:, None] - width[:, None] + k[None, :]
        num = self._prefix[k[None, :], t[:, None]] - self._prefix[k[None, :], np.maximum(start, 0)]
        denom = (width[:, None] - k[None, :]).astype(float)
        with np.errstate(divide="ignore", invalid="ignore"):
            out = np.where(denom > 0, num / denom, np.nan)
        return out

    def coefficients(self, N=None, orders=None):
        """One-step coefficients per order.

        Returns
        -------
        dict
            ``p -> (coef, ok)`` where ``coef`` has shape ``(A, p)`` (NaN rows
            where singular) and ``ok`` flags the solvable anchors.
        """
        gam = self.autocovariances(N)
        orders = range(1, self.p_max + 1) if orders is None else orders
        out = {}
        for p in orders:
            A = gam.shape[0]
            if p == 0:
                out[0] = (np.empty((A, 0)), np.ones(A, dtype=bool))
                continue
            idx = np.abs(np.arange(p)[:, None] - np.arange(p)[None, :])
            G = gam[:, idx]
            g = gam[:, 1:p + 1]
            finite = np.all(np.isfinite(G.reshape(A, -1)), axis=1) & np.all(np.isfinite(g), axis=1)
            ok = finite.copy()
            coef = np.full((A, p), np.nan)
            if finite.any():
                eig = np.linalg.eigvalsh(G[finite])
                mags = np.abs(eig)
                top = mags.max(axis=1)
                with np.errstate(divide="ignore", invalid="ignore"):
                    good = (top > 0) & (mags.min(axis=1) >= RCOND_THRESHOLD * top)
                ok[finite] = good
                if ok.any():
                    coef[ok] = np.linalg.solve(G[ok], g[ok][..., None])[..., 0]
            out[p] = (coef, ok)
        return out

    def forecasts(self, coef, h, rows=slice(None)):
        """Plug-in h-step forecasts from one-step coefficients ``coef``.

        ``rows`` selects the anchors ``coef`` belongs to.
        """
        p = coef.shape[1]
        if p == 0:
            return np.zeros(coef.shape[0])
        v = hstep_recursion(coef, h)
        return np.einsum("ap,ap->a", v, self._lags[rows, :p])
