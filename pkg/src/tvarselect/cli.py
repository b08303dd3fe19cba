"""Command line interface: ``simulate``, ``select``, ``theory`` and ``experiment``.

Exit codes: 0 success, 2 input/output problem, 3 violated precondition,
4 numerical failure.  Failures print a JSON error document on stderr.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .exceptions import InvalidConfigError, TvarSelectError
from .experiment import DEFAULT_DELTAS, ExperimentPlan, run_experiment, write_outputs
from .models import get_model, simulate_tvar
from .selection import SelectionConfig, default_m, default_n_grid, run_procedure
from .series import demean, format_float, read_series_csv, write_series_csv
from .theory import mspe_surface

OUTPUT_ENV = "TVARSELECT_OUTPUT_DIR"


def _int_list(text):
    return [int(v) for v in text.split(",") if v.strip()]


def _float_list(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _output_dir(args, default_name):
    if args.out:
        out = Path(args.out)
    else:
        out = Path(os.environ.get(OUTPUT_ENV, "tvarselect-output")) / default_name
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write_manifest(outdir, command, argv, config, outputs):
    doc = {
        "command": command,
        "version": __version__,
        "argv": list(argv),
        "config": config,
        "outputs": sorted(Path(p).name for p in outputs),
    }
    path = Path(outdir) / "manifest.json"
    path.write_text(json.dumps(doc, indent=2, default=str))
    return path


def _window_grid(args, n):
    """Window grid from ``--n-grid`` or ``--n-min/--n-max[/--n-count]``, else the default for ``n``."""
    if args.n_grid:
        return tuple(args.n_grid)
    if args.n_min is None and args.n_max is None:
        return default_n_grid(n)
    if args.n_min is None or args.n_max is None:
        raise InvalidConfigError("--n-min and --n-max must be given together")
    if args.n_max < args.n_min:
        raise InvalidConfigError("--n-max must not be below --n-min")
    if args.n_count is None:
        return tuple(range(args.n_min, args.n_max + 1))
    pts = np.linspace(args.n_min, args.n_max, args.n_count)
    return tuple(int(v) for v in np.unique(np.round(pts)))


def _add_grid_flags(p):
    p.add_argument("--m", type=int, help="segment length m (default floor(n^0.85 / 4))")
    p.add_argument("--p-max", type=int, default=7, help="largest AR order p_max")
    p.add_argument("--n-grid", type=_int_list, help="comma separated window lengths N")
    p.add_argument("--n-min", type=int, help="smallest window length")
    p.add_argument("--n-max", type=int, help="largest window length")
    p.add_argument("--n-count", type=int, help="number of equally spaced windows (default: every integer)")


def cmd_simulate(args, argv):
    spec = get_model(args.model)
    x = simulate_tvar(spec, args.n, args.seed)
    outdir = _output_dir(args, f"simulate-{args.model}-{args.n}-{args.seed}")
    if args.format == "json":
        path = outdir / "series.json"
        path.write_text(json.dumps([float(v) for v in x]))
    else:
        path = write_series_csv(outdir / "series.csv", x)
    _write_manifest(outdir, "simulate", argv, {"model": args.model, "n": args.n, "seed": args.seed}, [path])
    print(path)
    return 0


def cmd_select(args, argv):
    x = read_series_csv(args.input)
    mean = float(x.mean()) if args.demean else 0.0
    xs = demean(x) if args.demean else x
    n = xs.shape[0]
    m = args.m if args.m is not None else default_m(n)
    config = SelectionConfig(
        m=m, p_max=args.p_max, n_grid=_window_grid(args, n),
        max_horizon=args.max_horizon, delta=args.delta,
    )
    if args.holdout:
        if n <= m:
            raise InvalidConfigError("series too short to hold out the test segment")
        obs, test = xs[:n - m], xs[n - m:]
    else:
        obs, test = xs, None
    report = run_procedure(obs, config, test=test)
    outdir = _output_dir(args, f"select-{Path(args.input).stem}")
    if args.format == "json":
        doc = json.loads(report.to_json())
        doc["mean_removed"] = mean
        outputs = [outdir / "report.json"]
        outputs[0].write_text(json.dumps(doc, indent=2))
    else:
        outputs = [report.to_csv(outdir / "report.csv")]
    fc_path = outdir / "forecasts.csv"
    with open(fc_path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "t", "class", "forecast"])
        for row in report:
            for t, v in sorted(row.forecasts.items()):
                w.writerow([row.h, t, row.chosen, format_float(v + mean)])
    outputs.append(fc_path)
    cfg = {
        "input": str(Path(args.input).resolve()), "demean": args.demean, "holdout": args.holdout,
        "m": config.m, "p_max": config.p_max, "n_grid": list(config.n_grid),
        "max_horizon": config.max_horizon, "delta": config.delta,
    }
    _write_manifest(outdir, "select", argv, cfg, outputs)
    _print_report(report)
    return 0


def _print_report(report):
    cols = ("h", "p_s", "mspe1_s", "p_ls", "N_ls", "mspe1_ls", "mspe2_s", "mspe2_ls", "ratio2", "ratio3", "chosen")
    print(" ".join(f"{c:>12}" for c in cols))
    for row in report:
        cells = []
        for c in cols:
            v = getattr(row, c)
            cells.append(f"{v:>12.6g}" if isinstance(v, float) else f"{v!s:>12}")
        print(" ".join(cells))


def cmd_theory(args, argv):
    spec = get_model(args.model)
    T = args.n
    m = args.m if args.m is not None else default_m(T)
    grid = _window_grid(args, T)
    outdir = _output_dir(args, f"theory-{args.model}-{T}")
    f_path, s_path = outdir / "f_delta.csv", outdir / "surface.csv"
    with open(f_path, "w", newline="") as ff, open(s_path, "w", newline="") as fs:
        wf, ws = csv.writer(ff), csv.writer(fs)
        wf.writerow(["model", "n", "h", "delta", "f_delta"])
        ws.writerow(["model", "n", "h", "class", "p", "N", "mspe"])
        for h in args.h:
            surface = mspe_surface(spec, T, m, args.p_max, grid, h)
            for p, v in enumerate(surface.stationary):
                ws.writerow([args.model, T, h, "s", p, "", format_float(v)])
            for p in range(surface.local.shape[0]):
                for j, N in enumerate(grid):
                    ws.writerow([args.model, T, h, "ls", p, N, format_float(surface.local[p, j])])
            for d in args.delta:
                val = surface.separation(d)
                wf.writerow([args.model, T, h, format_float(d), format_float(val)])
                print(f"{args.model},{T},{h},{d:g},{val:.2g}")
    cfg = {"model": args.model, "n": T, "m": m, "p_max": args.p_max, "n_grid": list(grid),
           "h": args.h, "delta": args.delta}
    _write_manifest(outdir, "theory", argv, cfg, [f_path, s_path])
    return 0


def cmd_experiment(args, argv):
    plan = ExperimentPlan(
        model=args.model, n=args.n, reps=args.reps, base_seed=args.seed,
        deltas=tuple(args.delta), horizons=tuple(args.horizons),
        m=args.m, p_max=args.p_max,
        n_grid=_window_grid(args, args.n) if (args.n_grid or args.n_min is not None) else None,
    )
    workers = args.threads if args.threads else 1
    result = run_experiment(plan, workers=workers)
    outdir = _output_dir(args, f"experiment-{args.model}-{args.n}-{args.seed}")
    write_outputs(outdir, result)
    if any(r.ok for r in result.records):
        table = result.tables()
        print("delta," + ",".join(f"h={h}" for h in table.horizons))
        for row in table.rows():
            print(",".join(f"{v:.4g}" for v in row))
    if result.failures:
        print(f"{len(result.failures)} of {plan.reps} replications failed", file=sys.stderr)
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="tvarselect",
        description="Choose per horizon between stationary and locally stationary AR forecasts.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--threads", type=int, default=None, help="maximum worker processes")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("simulate", help="simulate a catalog model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True, help="path length")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", help=f"output directory (default ${OUTPUT_ENV}/...)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("select", help="run the selection procedure on a CSV series")
    p.add_argument("input", help="single-column CSV")
    _add_grid_flags(p)
    p.add_argument("--max-horizon", type=int, default=10, help="largest horizon H")
    p.add_argument("--delta", type=float, default=0.0, help="required relative advantage delta")
    p.add_argument("--no-demean", dest="demean", action="store_false", help="keep the series mean")
    p.add_argument("--holdout", action="store_true",
                   help="treat the last m values as the test segment and score the winners on it")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "json"), default="csv")
    p.set_defaults(func=cmd_select)

    p = sub.add_parser("theory", help="population MSPE surfaces and f(delta)")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True, help="rescaling length T")
    _add_grid_flags(p)
    p.add_argument("--h", type=_int_list, default=[1], help="comma separated horizons")
    p.add_argument("--delta", type=_float_list, default=list(DEFAULT_DELTAS), help="comma separated deltas")
    p.add_argument("--out")
    p.set_defaults(func=cmd_theory)

    p = sub.add_parser("experiment", help="Monte Carlo replications on a catalog model")
    p.add_argument("--model", required=True)
    p.add_argument("--n", type=int, required=True, help="simulated length (training, validation and test)")
    p.add_argument("--reps", type=int, default=500)
    p.add_argument("--seed", type=int, default=0, help="base seed")
    _add_grid_flags(p)
    p.add_argument("--horizons", type=_int_list, default=[1], help="comma separated horizons")
    p.add_argument("--delta", type=_float_list, default=list(DEFAULT_DELTAS), help="comma separated deltas")
    p.add_argument("--out")
    p.set_defaults(func=cmd_experiment)
    return parser


def _fail(kind, message, code):
    json.dump({"error": kind, "message": message, "exit_code": code}, sys.stderr)
    sys.stderr.write("\n")
    return code


def main(argv=None):
    argv = sys.argv[1:] if argv is None else list(argv)
    args = build_parser().parse_args(argv)
    try:
        return args.func(args, argv)
    except TvarSelectError as exc:
        return _fail(exc.kind, str(exc), exc.exit_code)
    except OSError as exc:
        return _fail("io-error", str(exc), 2)
    except (np.linalg.LinAlgError, FloatingPointError, ZeroDivisionError) as exc:
        return _fail("numerical-failure", str(exc), 4)


if __name__ == "__main__":
    sys.exit(main())
