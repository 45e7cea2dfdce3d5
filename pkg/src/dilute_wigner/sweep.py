"""Phase-transition sweeps, CSV emitters and run manifests."""

from __future__ import annotations

import csv
import datetime as _dt
import hashlib
import io
import json
import logging
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .ensemble import EntryDistribution, EnsembleSpec, sample_matrix
from .errors import InvalidParameterError
from .spectral import (
    DENSE_LIMIT,
    MomentReport,
    dense_spectrum,
    esd_ks_distance,
    lanczos_extremes,
    semicircle_cdf,
    trial_seed,
)

log = logging.getLogger(__name__)

TRANSITION_COLUMNS = ["n", "p", "a", "median_lambda_max", "q25", "q75"]
SPECTRUM_COLUMNS = ["n", "p", "dist", "seed", "lambda_max", "ks", "iters"]
HISTOGRAM_COLUMNS = ["bin_left", "bin_right", "density", "semicircle_density"]
MOMENT_COLUMNS = ["k", "exact", "mc_mean", "mc_stderr", "bound"]


@dataclass(frozen=True)
class GridPoint:
    """One p value of the scan: explicit, or p = ceil((log n)^a)."""

    p: float | None = None
    a: float | None = None

    def resolve(self, n: int) -> float:
        if self.p is not None:
            return self.p
        return float(math.ceil(math.log(n) ** self.a))


@dataclass
class SweepConfig:
    n_list: list[int]
    grid: list[GridPoint]
    dist: EntryDistribution = field(default_factory=EntryDistribution.rademacher)
    trials: int = 8
    master_seed: int = 0
    quantiles: tuple[float, ...] = (0.25, 0.5, 0.75)
    compute_ks: bool = False
    tol: float = 1e-10

    def __post_init__(self):
        if self.trials < 1:
            raise InvalidParameterError("trials must be >= 1")
        if not all(0 < q < 1 for q in self.quantiles):
            raise InvalidParameterError("quantiles must lie in (0, 1)")
        if not self.grid:
            raise InvalidParameterError("empty p grid")

    def as_dict(self) -> dict:
        d = asdict(self)
        d["dist"] = self.dist.name
        return d


@dataclass(frozen=True)
class TrialRecord:
    n: int
    p: float
    dist: str
    seed: int
    lambda_max: float
    ks: float | None
    iters: int


@dataclass
class SweepRow:
    n: int
    p: float
    a: float | None
    trials: int
    quantiles: dict[float, float]
    mean: float
    std: float
    ks_mean: float | None
    seed_base: int
    skipped: bool = False

    @property
    def median(self) -> float:
        return self.quantiles.get(0.5, math.nan)


@dataclass
class SweepResult:
    rows: list[SweepRow]
    records: list[TrialRecord]


def run_trial(n: int, p: float, dist: EntryDistribution, seed: int, compute_ks: bool, tol: float) -> TrialRecord:
    m = sample_matrix(EnsembleSpec(n, p, dist, seed))
    if compute_ks:
        eig = dense_spectrum(m)
        lam = float(max(abs(eig[0]), abs(eig[-1])))
        return TrialRecord(n, p, dist.name, seed, lam, esd_ks_distance(eig), 0)
    lo, hi, iters = lanczos_extremes(m, tol=tol, seed=seed)
    return TrialRecord(n, p, dist.name, seed, max(abs(lo), abs(hi)), None, iters)


def _run_task(args):
    return run_trial(*args)


def run_sweep(config: SweepConfig, jobs: int = 1) -> SweepResult:
    """Run every (n, p) point; per-trial seeds depend only on (seed, n, p, trial)."""
    points = []
    tasks = []
    for n in config.n_list:
        for gp in config.grid:
            p = gp.resolve(n)
            feasible = 0 < p <= n and not (config.compute_ks and n > DENSE_LIMIT)
            points.append((n, p, gp.a, feasible))
            if not feasible:
                log.warning("skipping infeasible point n=%d p=%g", n, p)
                continue
            for t in range(config.trials):
                tasks.append((n, p, config.dist, trial_seed(config.master_seed, n, p, t), config.compute_ks, config.tol))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=1))
    else:
        results = [_run_task(t) for t in tasks]
    by_key = {(r.n, r.p, r.seed): r for r in results}

    rows = []
    records = []
    for n, p, a, feasible in points:
        if not feasible:
            rows.append(SweepRow(n, p, a, 0, {}, math.nan, math.nan, None, 0, skipped=True))
            continue
        recs = [by_key[(n, p, trial_seed(config.master_seed, n, p, t))] for t in range(config.trials)]
        records.extend(recs)
        lam = np.array([r.lambda_max for r in recs])
        qs = {q: float(np.quantile(lam, q)) for q in sorted(set(config.quantiles) | {0.25, 0.5, 0.75})}
        ks = [r.ks for r in recs if r.ks is not None]
        rows.append(SweepRow(
            n, p, a, config.trials, qs, float(lam.mean()), float(lam.std(ddof=1)) if lam.size > 1 else 0.0,
            float(np.mean(ks)) if ks else None, trial_seed(config.master_seed, n, p, 0),
        ))
    return SweepResult(rows, records)


# -- CSV output --------------------------------------------------------------------------------

def _fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, float):
        return "" if math.isnan(x) else repr(x)
    return str(x)


def write_csv(path: str | Path | None, columns: Sequence[str], rows: Iterable[Sequence], timestamp: bool = True) -> str:
    buf = io.StringIO()
    if timestamp:
        buf.write(f"# generated {_dt.datetime.now(_dt.timezone.utc).isoformat(timespec='seconds')}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for row in rows:
        w.writerow([_fmt(x) for x in row])
    text = buf.getvalue()
    if path is not None:
        Path(path).write_text(text)
    return text


def transition_rows(result: SweepResult) -> list[list]:
    return [[r.n, r.p, r.a, r.median if not r.skipped else None, r.quantiles.get(0.25), r.quantiles.get(0.75)]
            for r in result.rows]


def spectrum_rows(records: Iterable[TrialRecord]) -> list[list]:
    return [[r.n, r.p, r.dist, r.seed, r.lambda_max, r.ks, r.iters] for r in records]


def histogram_rows(eigenvalues, bins: int = 60) -> list[list]:
    eig = np.asarray(eigenvalues, dtype=np.float64)
    counts, edges = np.histogram(eig, bins=bins)
    width = np.diff(edges)
    density = counts / (eig.size * width)
    # semicircle mass in each bin divided by its width
    sc = np.diff(semicircle_cdf(edges)) / width
    return [[float(edges[i]), float(edges[i + 1]), float(density[i]), float(sc[i])] for i in range(bins)]


def moment_rows(reports: Iterable[MomentReport]) -> list[list]:
    return [[r.k, r.exact_value, r.monte_carlo_mean, r.std_error, r.bound_value] for r in reports]


def emit_plot_data(result, kind: str, path: str | Path | None = None, timestamp: bool = True) -> str:
    """Write plot-ready CSV for ``kind`` in {transition, spectrum, moments}.

    ``result`` is a :class:`SweepResult` for transition, an eigenvalue array
    for spectrum, and a list of :class:`MomentReport` for moments.
    """
    if kind == "transition":
        return write_csv(path, TRANSITION_COLUMNS, transition_rows(result), timestamp)
    if kind == "spectrum":
        return write_csv(path, HISTOGRAM_COLUMNS, histogram_rows(result), timestamp)
    if kind == "moments":
        return write_csv(path, MOMENT_COLUMNS, moment_rows(result), timestamp)
    raise InvalidParameterError(f"unknown plot kind {kind!r}")


# -- manifests ------------------------------------------------------------------------------------

def content_hash(payload) -> str:
    blob = json.dumps(payload, sort_keys=True, default=str).encode()
    return hashlib.sha256(blob).hexdigest()


def write_manifest(run_dir: str | Path, command: str, config: dict, outputs: list[str], timestamp: bool = True) -> Path:
    """One JSON manifest per invocation, named by the hash of its inputs."""
    run_dir = Path(run_dir)
    run_dir.mkdir(parents=True, exist_ok=True)
    digest = content_hash({"command": command, "config": config})
    manifest = {"command": command, "config": config, "input_hash": digest, "outputs": sorted(outputs)}
    if timestamp:
        manifest["timestamp"] = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")
    path = run_dir / f"{command}-{digest[:12]}.json"
    path.write_text(json.dumps(manifest, sort_keys=True, indent=2, default=str) + "\n")
    return path
