"""Monte Carlo replications of the selection procedure on simulated tvAR paths.

Each replication simulates ``n`` points, keeps the last ``m`` as the test
segment, runs the procedure on the first ``n - m`` and records, per horizon,
the selected candidates and their validation and test MSPEs.  Decisions for
any ``delta`` are recomputed from the recorded MSPEs afterwards.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from .exceptions import InvalidConfigError, TvarSelectError
from .models import get_model, simulate_tvar, splitmix64
from .selection import SelectionConfig, choose_class, default_n_grid, run_procedure
from .series import format_float

__all__ = [
    "DEFAULT_DELTAS",
    "ExperimentPlan",
    "ReplicationRecord",
    "ExperimentResult",
    "DecisionTable",
    "default_n_grid",
    "run_replication",
    "run_experiment",
    "same_decision_table",
    "ratio_curves",
    "write_records_csv",
    "read_records_csv",
]

DEFAULT_DELTAS = (0.0, 0.01, 0.05, 0.1, 0.15, 0.2, 0.4, 0.6)

RECORD_FIELDS = ("h", "p_s", "p_ls", "N_ls", "mspe2_s", "mspe2_ls", "mspe3_s", "mspe3_ls")


@dataclass(frozen=True)
class ExperimentPlan:
    """What to simulate and how to run the procedure on it.

    ``m``, ``p_max`` and ``n_grid`` default to the values derived from ``n``.
    """

    model: str
    n: int
    reps: int
    base_seed: int = 0
    deltas: tuple = DEFAULT_DELTAS
    horizons: tuple = tuple(range(1, 11))
    m: int | None = None
    p_max: int | None = None
    n_grid: tuple | None = None

    def __post_init__(self):
        object.__setattr__(self, "deltas", tuple(float(d) for d in self.deltas))
        object.__setattr__(self, "horizons", tuple(sorted({int(h) for h in self.horizons})))
        if self.n_grid is not None:
            object.__setattr__(self, "n_grid", tuple(int(N) for N in self.n_grid))
        if self.reps < 0:
            raise InvalidConfigError("reps must be non-negative")
        if not self.horizons or self.horizons[0] < 1:
            raise InvalidConfigError("horizons must be positive")
        get_model(self.model)
        cfg = self.config()
        need = cfg.min_length() + cfg.m
        if self.n < need:
            raise InvalidConfigError(f"n={self.n} too small for this configuration; need n >= {need}")

    def config(self):
        return SelectionConfig.default(
            self.n, m=self.m, p_max=self.p_max, n_grid=self.n_grid,
            max_horizon=max(self.horizons),
        )

    def seed(self, rep):
        return splitmix64(self.base_seed, rep)

    def to_dict(self):
        d = asdict(self)
        cfg = self.config()
        d["resolved"] = {"m": cfg.m, "p_max": cfg.p_max, "n_grid": list(cfg.n_grid)}
        return d


@dataclass
class ReplicationRecord:
    """Outcome of one replication; ``rows`` holds one dict per horizon."""

    rep: int
    seed: int
    rows: list = field(default_factory=list)
    error: str | None = None

    @property
    def ok(self):
        return self.error is None

    def row(self, h):
        for r in self.rows:
            if r["h"] == h:
                return r
        raise KeyError(h)


def run_replication(plan, rep):
    seed = plan.seed(rep)
    cfg = plan.config()
    try:
        x = simulate_tvar(get_model(plan.model), plan.n, seed)
        T = plan.n - cfg.m
        report = run_procedure(x[:T], cfg, test=x[T:], horizons=plan.horizons)
    except TvarSelectError as exc:
        return ReplicationRecord(rep, seed, error=f"{exc.kind}: {exc}")
    rows = [{k: getattr(r, k) for k in RECORD_FIELDS} for r in report]
    return ReplicationRecord(rep, seed, rows)


def _run_chunk(args):
    plan, reps = args
    return [run_replication(plan, r) for r in reps]


@dataclass
class ExperimentResult:
    plan: ExperimentPlan
    records: list

    @property
    def failures(self):
        return [r for r in self.records if not r.ok]

    def tables(self, deltas=None, horizons=None):
        return same_decision_table(
            self.records,
            self.plan.deltas if deltas is None else deltas,
            self.plan.horizons if horizons is None else horizons,
        )


def run_experiment(plan, workers=1):
    """Run every replication of ``plan``; the result does not depend on ``workers``.

    Failing replications are kept as records carrying an ``error`` string.
    """
    reps = list(range(plan.reps))
    if workers <= 1 or len(reps) <= 1:
        return ExperimentResult(plan, [run_replication(plan, r) for r in reps])
    n_chunks = min(len(reps), 4 * workers)
    chunks = [(plan, reps[i::n_chunks]) for i in range(n_chunks)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_chunk, chunks))
    records = sorted((rec for part in parts for rec in part), key=lambda r: r.rep)
    return ExperimentResult(plan, records)


@dataclass(frozen=True)
class DecisionTable:
    """Decision agreement between validation and test sets.

    ``joint[(delta, h)]`` holds the proportions of the four events
    ``(ls on M2, ls on M3)``, ``(ls, s)``, ``(s, ls)`` and ``(s, s)``.
    """

    deltas: tuple
    horizons: tuple
    count: int
    joint: dict

    def same_decision(self, delta, h):
        j = self.joint[(float(delta), int(h))]
        return j["ls_ls"] + j["s_s"]

    def rows(self):
        """Table layout: one row per ``delta``, one column per horizon."""
        return [[d] + [self.same_decision(d, h) for h in self.horizons] for d in self.deltas]


def same_decision_table(records, deltas=DEFAULT_DELTAS, horizons=None):
    """Proportions of runs where the rule picks the same class on M2 and M3."""
    good = [r for r in records if r.ok]
    if not good:
        raise InvalidConfigError("no successful replications to tabulate")
    if horizons is None:
        horizons = sorted({row["h"] for row in good[0].rows})
    deltas = tuple(float(d) for d in deltas)
    horizons = tuple(int(h) for h in horizons)
    joint = {}
    for h in horizons:
        pairs = [(r.row(h)["mspe2_s"], r.row(h)["mspe2_ls"], r.row(h)["mspe3_s"], r.row(h)["mspe3_ls"]) for r in good]
        for d in deltas:
            cells = {"ls_ls": 0, "ls_s": 0, "s_ls": 0, "s_s": 0}
            for s2, l2, s3, l3 in pairs:
                cells[f"{choose_class(s2, l2, d)}_{choose_class(s3, l3, d)}"] += 1
            joint[(d, h)] = {k: v / len(pairs) for k, v in cells.items()}
    return DecisionTable(deltas, horizons, len(good), joint)


def ratio_curves(records):
    """Per horizon, mean stationary MSPE over mean locally stationary MSPE.

    Returns a list of ``(h, ratio on M2, ratio on M3)``.
    """
    good = [r for r in records if r.ok]
    if not good:
        return []
    out = []
    for h in sorted({row["h"] for row in good[0].rows}):
        rows = [r.row(h) for r in good]
        mean = {k: float(np.mean([row[k] for row in rows])) for k in ("mspe2_s", "mspe2_ls", "mspe3_s", "mspe3_ls")}
        out.append((h, mean["mspe2_s"] / mean["mspe2_ls"], mean["mspe3_s"] / mean["mspe3_ls"]))
    return out


def _cell(v):
    if isinstance(v, (float, np.floating)):
        return format_float(v)
    return "" if v is None else v


def write_records_csv(path, records):
    """One row per replication and horizon; failed replications get one row with ``error``."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(("rep", "seed") + RECORD_FIELDS + ("error",))
        for rec in records:
            if not rec.ok:
                w.writerow([rec.rep, rec.seed] + [""] * len(RECORD_FIELDS) + [rec.error])
                continue
            for row in rec.rows:
                w.writerow([rec.rep, rec.seed] + [_cell(row[k]) for k in RECORD_FIELDS] + [""])
    return Path(path)


def read_records_csv(path):
    """Inverse of :func:`write_records_csv`."""
    ints = {"h", "p_s", "p_ls", "N_ls"}
    by_rep = {}
    with open(path, newline="") as fh:
        for line in csv.DictReader(fh):
            rep = int(line["rep"])
            rec = by_rep.setdefault(rep, ReplicationRecord(rep, int(line["seed"])))
            if line["error"]:
                rec.error = line["error"]
                continue
            rec.rows.append({k: int(line[k]) if k in ints else float(line[k]) for k in RECORD_FIELDS})
    return [by_rep[k] for k in sorted(by_rep)]


def write_tables_csv(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta"] + [f"h={h}" for h in table.horizons])
        for row in table.rows():
            w.writerow([_cell(v) for v in row])
    return Path(path)


def write_joint_csv(path, table):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["delta", "h", "ls_ls", "ls_s", "s_ls", "s_s"])
        for (d, h), cells in sorted(table.joint.items(), key=lambda kv: (kv[0][1], kv[0][0])):
            w.writerow([_cell(d), h] + [_cell(cells[k]) for k in ("ls_ls", "ls_s", "s_ls", "s_s")])
    return Path(path)


def write_ratio_csv(path, curves):
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["h", "ratio2", "ratio3"])
        for h, r2, r3 in curves:
            w.writerow([h, _cell(r2), _cell(r3)])
    return Path(path)


def content_hash(paths):
    """SHA-256 over the names and bytes of ``paths`` in sorted order."""
    digest = hashlib.sha256()
    for p in sorted(Path(p) for p in paths):
        digest.update(p.name.encode())
        digest.update(b"\0")
        digest.update(p.read_bytes())
    return digest.hexdigest()


def plan_from_dict(d):
    keys = {"model", "n", "reps", "base_seed", "deltas", "horizons", "m", "p_max", "n_grid"}
    return ExperimentPlan(**{k: v for k, v in d.items() if k in keys})


def _jsonable(v):
    if isinstance(v, float) and not math.isfinite(v):
        return str(v)
    return v


def write_outputs(outdir, result):
    """Records, decision tables, ratio curves and a manifest under ``outdir``."""
    outdir = Path(outdir)
    outdir.mkdir(parents=True, exist_ok=True)
    files = [
        write_records_csv(outdir / "records.csv", result.records),
        write_ratio_csv(outdir / "ratios.csv", ratio_curves(result.records)),
    ]
    if any(r.ok for r in result.records):
        table = result.tables()
        files.append(write_tables_csv(outdir / "tables.csv", table))
        files.append(write_joint_csv(outdir / "joint.csv", table))
    manifest = {
        "command": "experiment",
        "plan": result.plan.to_dict(),
        "failures": len(result.failures),
        "outputs": sorted(f.name for f in files),
        "content_hash": content_hash(files),
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2, default=_jsonable))
    return files
