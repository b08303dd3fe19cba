"""Per-horizon selection between stationary and locally stationary AR forecasters."""

__version__ = "0.1.0"

from .estimation import CoeffVector, hstep_coeffs, local_acov, yule_walker
from .estimator import LocallyStationarySelector, YuleWalkerForecaster
from .exceptions import TvarSelectError
from .experiment import ExperimentPlan, ratio_curves, run_experiment, same_decision_table
from .forecasting import empirical_mspe, forecast_ls, forecast_s, split_segments
from .models import CATALOG, MOTIVATING_EXAMPLE, TvarSpec, get_model, simulate_tvar
from .selection import (
    SelectionConfig,
    SelectionReport,
    decide,
    default_m,
    default_n_grid,
    run_modified_procedure,
    run_procedure,
    select_within_class,
)
from .series import check_series, demean, read_series_csv, write_series_csv
from .theory import (
    a_delta,
    averaged_cov,
    delta_thresholds,
    d_bounds,
    f_delta,
    local_cov,
    population_mspe,
    v_delta,
)

__all__ = [
    "CATALOG",
    "MOTIVATING_EXAMPLE",
    "CoeffVector",
    "ExperimentPlan",
    "LocallyStationarySelector",
    "SelectionConfig",
    "SelectionReport",
    "TvarSelectError",
    "TvarSpec",
    "YuleWalkerForecaster",
    "a_delta",
    "averaged_cov",
    "check_series",
    "delta_thresholds",
    "d_bounds",
    "decide",
    "default_m",
    "default_n_grid",
    "demean",
    "empirical_mspe",
    "f_delta",
    "forecast_ls",
    "forecast_s",
    "get_model",
    "hstep_coeffs",
    "local_acov",
    "local_cov",
    "population_mspe",
    "ratio_curves",
    "read_series_csv",
    "run_experiment",
    "run_modified_procedure",
    "run_procedure",
    "same_decision_table",
    "select_within_class",
    "simulate_tvar",
    "split_segments",
    "v_delta",
    "write_series_csv",
    "yule_walker",
]
