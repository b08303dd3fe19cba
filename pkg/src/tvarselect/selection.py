"""Two-stage choice between stationary and locally stationary AR forecasters.

Stage one picks, within each class, the order (and window length for the
locally stationary class) minimising the empirical MSPE on the end of the
training set ``M1``.  Stage two compares the two winners on the validation
set ``M2`` and keeps the locally stationary forecaster only if

    MSPE_s / MSPE_ls >= 1 + delta.

Optionally the winners are also scored on a held-back test set ``M3``.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .estimation import WindowedYuleWalker
from .exceptions import (
    AllCandidatesInfeasibleError,
    InsufficientDataError,
    InvalidConfigError,
)
from .forecasting import split_segments
from .series import check_series, format_float

__all__ = [
    "SelectionConfig",
    "HorizonResult",
    "SelectionReport",
    "default_m",
    "default_n_grid",
    "mspe_ratio",
    "choose_class",
    "select_within_class",
    "decide",
    "run_procedure",
    "run_modified_procedure",
    "read_report_csv",
]


def _floor(v):
    # guards exact powers such as 1024 ** 0.8 == 256 against rounding down
    return int(math.floor(v + 1e-9))


def default_m(n):
    """Segment length ``floor(n^0.85 / 4)``."""
    return _floor(n ** 0.85 / 4)


def default_n_grid(n):
    """At most 25 (26 when the step divides evenly) equally spaced window lengths.

    ``N_min = floor((n/2)^0.8)``, ``N_max = floor(n^0.8)`` and step
    ``ceil((N_max - N_min) / 25)``.
    """
    n = int(n)
    if n < 16:
        raise InvalidConfigError(f"default window grid needs n >= 16, got {n}")
    n_min = _floor((n / 2) ** 0.8)
    n_max = _floor(n ** 0.8)
    step = max(1, math.ceil((n_max - n_min) / 25))
    return tuple(range(n_min, n_max + 1, step))


@dataclass(frozen=True)
class SelectionConfig:
    """User parameters of the procedure.

    Attributes
    ----------
    m : int
        Length of each of the segments ``M1``, ``M2`` and ``M3``.
    p_max : int
        Largest AR order considered (orders ``0..p_max``).
    n_grid : tuple of int
        Candidate window lengths for the locally stationary forecaster.
    max_horizon : int
        Forecast horizons ``1..max_horizon`` are processed.
    delta : float
        Required relative advantage of the locally stationary forecaster.
    """

    m: int
    p_max: int
    n_grid: tuple
    max_horizon: int = 10
    delta: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "n_grid", tuple(int(v) for v in self.n_grid))
        if self.m < 1:
            raise InvalidConfigError("m must be positive")
        if self.p_max < 0:
            raise InvalidConfigError("p_max must be non-negative")
        if self.max_horizon < 1:
            raise InvalidConfigError("max_horizon must be positive")
        if not self.delta >= 0:
            raise InvalidConfigError("delta must be non-negative")
        if not self.n_grid:
            raise InvalidConfigError("n_grid must not be empty")
        if any(b <= a for a, b in zip(self.n_grid, self.n_grid[1:])):
            raise InvalidConfigError("n_grid must be strictly increasing")
        if self.n_grid[0] <= self.p_max:
            raise InvalidConfigError("every window length must exceed p_max")

    @classmethod
    def default(cls, n, **overrides):
        """Defaults for a series of total length ``n``."""
        params = dict(m=default_m(n), p_max=7, n_grid=default_n_grid(n), max_horizon=10, delta=0.0)
        params.update({k: v for k, v in overrides.items() if v is not None})
        return cls(**params)

    def min_length(self, horizon=None):
        """Smallest number of observations the procedure can run on."""
        h = self.max_horizon if horizon is None else horizon
        return 2 * self.m + max(self.n_grid) + h - 1

    def check_length(self, T, horizon=None):
        need = self.min_length(horizon)
        if T < need:
            raise InsufficientDataError(
                f"series of length {T} too short: need at least {need} observations "
                f"(2m + max(n_grid) + h - 1)"
            )


def mspe_ratio(mspe_s, mspe_ls):
    """``MSPE_s / MSPE_ls`` with ``0/0 -> 1`` and ``x/0 -> inf``."""
    if mspe_ls == 0:
        return 1.0 if mspe_s == 0 else math.inf
    if math.isinf(mspe_ls) and math.isinf(mspe_s):
        return 1.0
    return mspe_s / mspe_ls


def choose_class(mspe_s, mspe_ls, delta):
    if mspe_s == 0 and mspe_ls == 0:
        return "s"
    return "ls" if mspe_ratio(mspe_s, mspe_ls) >= 1 + delta else "s"


@dataclass
class HorizonResult:
    """Selection outcome for one horizon."""

    h: int
    p_s: int
    p_ls: int
    N_ls: int
    mspe1_s: float
    mspe1_ls: float
    mspe2_s: float
    mspe2_ls: float
    ratio2: float
    chosen: str
    mspe3_s: float = math.nan
    mspe3_ls: float = math.nan
    ratio3: float = math.nan
    forecasts: dict = field(default_factory=dict)
    grid_s: np.ndarray | None = field(default=None, repr=False)
    grid_ls: np.ndarray | None = field(default=None, repr=False)
    infeasible: list = field(default_factory=list)

    SCALARS = (
        "h", "p_s", "mspe1_s", "p_ls", "N_ls", "mspe1_ls",
        "mspe2_s", "mspe2_ls", "ratio2", "mspe3_s", "mspe3_ls", "ratio3", "chosen",
    )

    def summary(self):
        return {k: getattr(self, k) for k in self.SCALARS}


@dataclass
class SelectionReport:
    config: SelectionConfig
    T: int
    rows: list

    def __iter__(self):
        return iter(self.rows)

    def __getitem__(self, h):
        for row in self.rows:
            if row.h == h:
                return row
        raise KeyError(h)

    @property
    def horizons(self):
        return [r.h for r in self.rows]

    def ls_horizons(self):
        return {r.h for r in self.rows if r.chosen == "ls"}

    def to_dict(self):
        rows = []
        for r in self.rows:
            d = r.summary()
            d["forecasts"] = {str(k): v for k, v in r.forecasts.items()}
            d["infeasible"] = [list(c) for c in r.infeasible]
            rows.append(d)
        return {"T": self.T, "config": asdict(self.config), "rows": rows}

    def to_json(self, path=None):
        text = json.dumps(_jsonable(self.to_dict()), indent=2)
        if path is not None:
            Path(path).write_text(text)
        return text

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(HorizonResult.SCALARS)
            for r in self.rows:
                w.writerow([_csv_cell(v) for v in r.summary().values()])
        return Path(path)


def _csv_cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return v


def _jsonable(obj):
    if isinstance(obj, dict):
        return {k: _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        v = float(obj)
        if math.isnan(v):
            return None
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return obj


def read_report_csv(path):
    """Parse a report CSV back into a list of typed row dicts."""
    ints = {"h", "p_s", "p_ls", "N_ls"}
    rows = []
    with open(path, newline="") as fh:
        for rec in csv.DictReader(fh):
            rows.append({
                k: (v if k == "chosen" else int(v) if k in ints else float(v))
                for k, v in rec.items()
            })
    return rows


class _Procedure:
    """Shared state for one run over an observed series (and optional test data)."""

    def __init__(self, x, config, test=None, orders=None):
        self.x = check_series(x)
        self.config = config
        self.T = T = self.x.shape[0]
        config.check_length(T)
        self.segments = split_segments(T, config.m)
        self.orders = list(range(config.p_max + 1)) if orders is None else list(orders)
        self.windows = [None] + list(config.n_grid)  # None = full past
        if test is not None:
            test = check_series(test, name="test")
            if test.shape[0] != config.m:
                raise InvalidConfigError(f"test segment must hold m={config.m} values")
        self.test = test
        self._grid = None
        self._engines = {}

    # anchors t with t + h in the segment [lo, hi]
    @staticmethod
    def _anchor_range(seg, h):
        return np.arange(seg.start - h, seg.stop - h)

    def _m1_grid(self):
        """Empirical MSPE on M1 for every candidate and horizon."""
        if self._grid is not None:
            return self._grid
        cfg, x = self.config, self.x
        H = cfg.max_horizon
        seg = self.segments.M1
        lo, hi = seg.start - H, seg.stop - 2
        engine = WindowedYuleWalker(x, np.arange(lo, hi + 1), max(cfg.p_max, 1))
        pos = [p for p in self.orders if p > 0]
        grid = {}
        for h in range(1, H + 1):
            grid[h] = (np.full(cfg.p_max + 1, np.inf), np.full((cfg.p_max + 1, len(cfg.n_grid)), np.inf))
        targets = {h: x[seg.start - 1:seg.stop - 1] for h in range(1, H + 1)}
        for wi, window in enumerate(self.windows):
            coefs = engine.coefficients(window, orders=pos)
            for h in range(1, H + 1):
                sl = slice(seg.start - h - lo, seg.stop - h - lo)
                y = targets[h]
                for p in self.orders:
                    if p == 0:
                        val = float(np.mean(y ** 2))
                    else:
                        coef, ok = coefs[p]
                        if not ok[sl].all():
                            continue
                        f = engine.forecasts(coef[sl], h, sl)
                        val = float(np.mean((y - f) ** 2))
                    if math.isnan(val):
                        continue
                    if window is None:
                        grid[h][0][p] = val
                    else:
                        grid[h][1][p, wi - 1] = val
        self._grid = grid
        return grid

    def select(self, h):
        grid_s, grid_ls = self._m1_grid()[h]
        if not np.isfinite(grid_s).any() or not np.isfinite(grid_ls).any():
            raise AllCandidatesInfeasibleError(f"no feasible candidate for h={h}")
        p_s = int(np.argmin(grid_s))  # first minimum: smallest p
        flat = int(np.argmin(grid_ls))  # row-major: smallest p, then smallest N
        p_ls, iN = divmod(flat, grid_ls.shape[1])
        return p_s, p_ls, self.config.n_grid[iN]

    def _segment_mspe(self, series, seg, h, p, window, key):
        """MSPE of one forecaster on the targets of ``seg``; also returns the forecasts."""
        y = series[seg.start - 1:seg.stop - 1]
        if p == 0:
            f = np.zeros_like(y)
        else:
            anchors = self._anchor_range(seg, h)
            eng_key = (key, h)
            engine = self._engines.get(eng_key)
            if engine is None:
                engine = WindowedYuleWalker(series, anchors, self.config.p_max)
                self._engines[eng_key] = engine
            coef, ok = engine.coefficients(window, orders=[p])[p]
            if not ok.all():
                return math.inf, None
            f = engine.forecasts(coef, h)
        return float(np.mean((y - f) ** 2)), f

    def decide(self, h):
        cfg = self.config
        p_s, p_ls, N_ls = self.select(h)
        grid_s, grid_ls = self._m1_grid()[h]
        seg2 = self.segments.M2
        m2_s, _ = self._segment_mspe(self.x, seg2, h, p_s, None, "M2")
        m2_ls, _ = self._segment_mspe(self.x, seg2, h, p_ls, N_ls, "M2")
        ratio2 = mspe_ratio(m2_s, m2_ls)
        chosen = choose_class(m2_s, m2_ls, cfg.delta)
        infeasible = [("s", p, None) for p in self.orders if not np.isfinite(grid_s[p])]
        infeasible += [
            ("ls", p, N) for p in self.orders for j, N in enumerate(cfg.n_grid)
            if not np.isfinite(grid_ls[p, j])
        ]
        res = HorizonResult(
            h=h, p_s=p_s, p_ls=p_ls, N_ls=N_ls,
            mspe1_s=float(grid_s[p_s]), mspe1_ls=float(grid_ls[p_ls, cfg.n_grid.index(N_ls)]),
            mspe2_s=m2_s, mspe2_ls=m2_ls, ratio2=ratio2, chosen=chosen,
            grid_s=grid_s.copy(), grid_ls=grid_ls.copy(), infeasible=infeasible,
        )
        p_c, w_c = (p_ls, N_ls) if chosen == "ls" else (p_s, None)
        if self.test is not None:
            full = np.concatenate([self.x, self.test])
            seg3 = self.segments.M3
            res.mspe3_s, f_s = self._segment_mspe(full, seg3, h, p_s, None, "M3")
            res.mspe3_ls, f_ls = self._segment_mspe(full, seg3, h, p_ls, N_ls, "M3")
            res.ratio3 = mspe_ratio(res.mspe3_s, res.mspe3_ls)
            f_c = f_ls if chosen == "ls" else f_s
            if f_c is not None:
                res.forecasts = {int(t): float(v) for t, v in zip(seg3, f_c)}
        else:
            res.forecasts = self._future_forecasts(h, p_c, w_c)
        return res

    def _future_forecasts(self, h, p, window):
        """Forecasts of ``x_{T+1..T+min(h, m)}`` from anchors inside the observed data."""
        T = self.T
        targets = np.arange(T + 1, T + min(h, self.config.m) + 1)
        if p == 0:
            return {int(t): 0.0 for t in targets}
        engine = WindowedYuleWalker(self.x, targets - h, self.config.p_max)
        coef, ok = engine.coefficients(window, orders=[p])[p]
        f = engine.forecasts(coef, h)
        return {int(t): (float(v) if k else math.nan) for t, v, k in zip(targets, f, ok)}


def select_within_class(x, config, h):
    """Stage one: ``(p_s, p_ls, N_ls)`` minimising the M1 empirical MSPE."""
    return _Procedure(x, config).select(h)


def decide(x, config, h, test=None):
    """Stage two for a single horizon; returns a :class:`HorizonResult`."""
    if not 1 <= h <= config.max_horizon:
        raise InvalidConfigError(f"h={h} outside 1..{config.max_horizon}")
    return _Procedure(x, config, test=test).decide(h)


def run_procedure(x, config, test=None, horizons: Sequence[int] | None = None):
    """Run both stages for every horizon.

    Parameters
    ----------
    x : array_like
        Observed series ``x_1..x_T``.  Selection reads nothing else.
    config : SelectionConfig
    test : array_like, optional
        The ``m`` values following ``x`` (test set); only used to score the
        winners and never influences the choice.
    horizons : sequence of int, optional
        Subset of ``1..config.max_horizon``.
    """
    if horizons is not None:
        horizons = sorted(set(int(h) for h in horizons))
        if not horizons or horizons[0] < 1:
            raise InvalidConfigError("horizons must be positive")
        config = SelectionConfig(config.m, config.p_max, config.n_grid, max(horizons), config.delta)
    else:
        horizons = range(1, config.max_horizon + 1)
    proc = _Procedure(x, config, test=test)
    return SelectionReport(config, proc.T, [proc.decide(h) for h in horizons])


def run_modified_procedure(x, config, test=None):
    """One-step variant with the order fixed at 1 in both classes."""
    if config.p_max < 1:
        raise InvalidConfigError("the modified procedure needs p_max >= 1")
    cfg = SelectionConfig(config.m, config.p_max, config.n_grid, 1, config.delta)
    proc = _Procedure(x, cfg, test=test, orders=[1])
    return SelectionReport(cfg, proc.T, [proc.decide(1)])
