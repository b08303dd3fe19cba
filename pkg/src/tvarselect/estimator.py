"""scikit-learn style wrappers around the forecasters and the selection procedure."""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_is_fitted

from .estimation import hstep_coeffs, yule_walker
from .exceptions import InvalidConfigError
from .selection import SelectionConfig, run_procedure
from .series import check_series, demean

__all__ = ["YuleWalkerForecaster", "LocallyStationarySelector"]


class YuleWalkerForecaster(BaseEstimator):
    """Plug-in AR forecaster fitted on the last ``window`` observations.

    Parameters
    ----------
    order : int
        AR order ``p``; ``0`` forecasts zero.
    window : int or None
        Window length ``N``.  ``None`` uses the whole series, which gives the
        stationary forecaster.
    """

    def __init__(self, order=1, window=None):
        self.order = order
        self.window = window

    def fit(self, x, y=None):
        x = check_series(x)
        T = x.shape[0]
        N = T if self.window is None else int(self.window)
        if N > T:
            raise InvalidConfigError(f"window {N} longer than the series ({T})")
        self.coef_ = yule_walker(x, T, N, int(self.order))
        self.last_values_ = x[T - self.coef_.p:][::-1].copy()
        self.n_obs_ = T
        return self

    def hstep_coef(self, h):
        check_is_fitted(self, "coef_")
        return hstep_coeffs(self.coef_, h)

    def predict(self, horizons=1):
        """Forecasts of ``x_{T+h}`` for each requested ``h``."""
        check_is_fitted(self, "coef_")
        hs = np.atleast_1d(np.asarray(horizons, dtype=int))
        out = np.array([np.dot(self.hstep_coef(h).values, self.last_values_) for h in hs])
        return float(out[0]) if np.ndim(horizons) == 0 else out


class LocallyStationarySelector(BaseEstimator):
    """Per-horizon choice between a stationary and a windowed AR forecaster.

    Parameters
    ----------
    m : int or None
        Segment length; default ``floor(T^0.85 / 4)`` of the fitted series.
    p_max : int
    n_grid : sequence of int or None
        Candidate windows; default grid derived from the series length.
    max_horizon : int
    delta : float
        Required relative validation advantage of the windowed forecaster.
    center : bool
        Subtract the mean before fitting and add it back to forecasts.

    Attributes
    ----------
    report_ : SelectionReport
    config_ : SelectionConfig
    mean_ : float
    """

    def __init__(self, m=None, p_max=7, n_grid=None, max_horizon=10, delta=0.0, center=False):
        self.m = m
        self.p_max = p_max
        self.n_grid = n_grid
        self.max_horizon = max_horizon
        self.delta = delta
        self.center = center

    def fit(self, x, y=None, test=None):
        """Run the procedure on ``x``; ``test`` optionally scores the winners."""
        x = check_series(x)
        self.mean_ = float(x.mean()) if self.center else 0.0
        xc = demean(x) if self.center else x
        if test is not None:
            test = check_series(test, name="test") - self.mean_
        self.config_ = SelectionConfig.default(
            x.shape[0], m=self.m, p_max=self.p_max, n_grid=self.n_grid,
            max_horizon=self.max_horizon, delta=self.delta,
        )
        self.report_ = run_procedure(xc, self.config_, test=test)
        self._x = xc
        return self

    @property
    def chosen_(self):
        check_is_fitted(self, "report_")
        return {r.h: r.chosen for r in self.report_}

    def predict(self, horizons=None):
        """Forecast of ``x_{T+h}`` from the class chosen for ``h``, anchored at ``T``."""
        check_is_fitted(self, "report_")
        hs = range(1, self.config_.max_horizon + 1) if horizons is None else np.atleast_1d(horizons)
        out = []
        for h in hs:
            row = self.report_[int(h)]
            if row.chosen == "ls":
                f = YuleWalkerForecaster(row.p_ls, row.N_ls)
            else:
                f = YuleWalkerForecaster(row.p_s, None)
            out.append(f.fit(self._x).predict(int(h)) + self.mean_)
        return np.array(out)
