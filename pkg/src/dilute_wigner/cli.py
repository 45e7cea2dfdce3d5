"""Command line interface: ``dilute-wigner <command> [options]``.

Exit codes: 0 success, 1 check failure, 2 usage error, 3 resource limit.
"""

from __future__ import annotations

import argparse
import json
import logging
import math
import sys
from pathlib import Path

import numpy as np

from . import bounds, spectral, sweep, trees, verify, walks
from .ensemble import EntryDistribution, EnsembleSpec, SparseSymmetricMatrix, sample_matrix
from .errors import DiluteWignerError, InvalidParameterError, ResourceLimitError

EXIT_OK, EXIT_CHECK, EXIT_USAGE, EXIT_RESOURCE = 0, 1, 2, 3


def _common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=0, help="master seed (64-bit)")
    parser.add_argument("--trials", type=int, default=1)
    parser.add_argument("--dist", choices=["rademacher", "gaussian"], default="rademacher")
    parser.add_argument("--out", type=Path, default=None, help="output file (stdout if omitted)")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes")
    parser.add_argument("--json", action="store_true", help="print a JSON summary")
    parser.add_argument("--suppress-timestamp", action="store_true", help="omit timestamp lines for byte-identical reruns")
    parser.add_argument("--run-log", type=Path, default=None, help="directory for the run manifest")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="dilute-wigner", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="sample one realization and write its triplet file")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--no-diagonal", action="store_true")

    p = sub.add_parser("spectrum", help="lambda_max and KS distance per trial")
    p.add_argument("--n", type=int)
    p.add_argument("--p", type=float)
    p.add_argument("--matrix", type=Path, help="read a triplet file instead of sampling")
    p.add_argument("--dense", action="store_true", help="full dense spectrum (needed for KS)")
    p.add_argument("--eigs", type=Path, help="dump eigenvalues of the first trial, one per line")
    p.add_argument("--hist", type=Path, help="histogram CSV of the first trial's spectrum")

    p = sub.add_parser("sweep", help="lambda_max quantiles over an (n, p) grid")
    p.add_argument("--n", type=int, nargs="+", required=True)
    p.add_argument("--p", type=float, nargs="*", default=[], help="explicit p values")
    p.add_argument("--a", type=float, nargs="*", default=[], help="exponents: p = ceil((log n)^a)")
    p.add_argument("--ks", action="store_true", help="also compute KS distances (dense)")
    p.add_argument("--records", type=Path, help="per-trial spectrum CSV")

    p = sub.add_parser("moments", help="exact, Monte Carlo and bound values of M_2k")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k-max", type=int, default=3)

    p = sub.add_parser("trees", help="tree censuses for k edges")
    p.add_argument("--k", type=int, required=True)

    p = sub.add_parser("walks", help="even walk classes or exact-moment table")
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--N", type=int, nargs="+", required=True)
    p.add_argument("--p", type=float, nargs="+", required=True)
    p.add_argument("--classes", action="store_true", help="dump classes instead of the moment table")
    p.add_argument("--brute-force", action="store_true", help="add the brute-force column (small N only)")

    p = sub.add_parser("bounds", help="bound reports as JSON lines")
    p.add_argument("--N", type=int, required=True)
    p.add_argument("--p", type=float, required=True)
    p.add_argument("--k", type=int, required=True)
    p.add_argument("--eps", type=float, default=0.5)
    p.add_argument("--R", type=float, default=3.0)

    p = sub.add_parser("verify", help="exact verification suites")
    p.add_argument("--level", choices=["quick", "full"], default="quick")

    for sp in sub.choices.values():
        _common(sp)
    return parser


def _emit(text: str, out: Path | None) -> list[str]:
    if out is None:
        sys.stdout.write(text)
        return []
    out.write_text(text)
    return [str(out)]


def _cmd_gen(args, dist) -> tuple[int, list[str], dict]:
    spec = EnsembleSpec(args.n, args.p, dist, args.seed, not args.no_diagonal)
    m = sample_matrix(spec)
    if args.out is None:
        sys.stdout.write(f"{m.n} {m.nnz}\n" + "".join(f"{x} {y} {v:.17g}\n" for x, y, v in m.triplets()))
        return EXIT_OK, [], {"nnz": m.nnz}
    m.write(args.out)
    return EXIT_OK, [str(args.out)], {"nnz": m.nnz}


def _cmd_spectrum(args, dist) -> tuple[int, list[str], dict]:
    ts = not args.suppress_timestamp
    if args.matrix:
        mats = [(SparseSymmetricMatrix.read(args.matrix), math.nan, 0)]
    else:
        if args.n is None or args.p is None:
            raise InvalidParameterError("--n and --p are required without --matrix")
        seeds = [spectral.trial_seed(args.seed, args.n, args.p, t) for t in range(args.trials)]
        mats = [(sample_matrix(EnsembleSpec(args.n, args.p, dist, s)), args.p, s) for s in seeds]
    records = []
    outputs = []
    first_eig = None
    for m, p, seed in mats:
        if args.dense or args.eigs or args.hist:
            eig = spectral.dense_spectrum(m)
            first_eig = eig if first_eig is None else first_eig
            lam = float(max(abs(eig[0]), abs(eig[-1]))) if eig.size else 0.0
            records.append(sweep.TrialRecord(m.n, p, dist.name, seed, lam, spectral.esd_ks_distance(eig), 0))
        else:
            lo, hi, it = spectral.lanczos_extremes(m, seed=seed)
            records.append(sweep.TrialRecord(m.n, p, dist.name, seed, max(abs(lo), abs(hi)), None, it))
    if args.eigs is not None:
        args.eigs.write_text("".join(f"{x:.17g}\n" for x in first_eig))
        outputs.append(str(args.eigs))
    if args.hist is not None:
        sweep.emit_plot_data(first_eig, "spectrum", args.hist, ts)
        outputs.append(str(args.hist))
    text = sweep.write_csv(None, sweep.SPECTRUM_COLUMNS, sweep.spectrum_rows(records), ts)
    outputs += _emit(text, args.out)
    return EXIT_OK, outputs, {"lambda_max": [r.lambda_max for r in records]}


def _cmd_sweep(args, dist) -> tuple[int, list[str], dict]:
    grid = [sweep.GridPoint(p=p) for p in args.p] + [sweep.GridPoint(a=a) for a in args.a]
    cfg = sweep.SweepConfig(args.n, grid, dist, args.trials, args.seed, compute_ks=args.ks)
    result = sweep.run_sweep(cfg, jobs=args.jobs)
    ts = not args.suppress_timestamp
    outputs = _emit(sweep.emit_plot_data(result, "transition", None, ts), args.out)
    if args.records:
        sweep.write_csv(args.records, sweep.SPECTRUM_COLUMNS, sweep.spectrum_rows(result.records), ts)
        outputs.append(str(args.records))
    summary = {f"{r.n},{r.p}": r.median for r in result.rows}
    return EXIT_OK, outputs, summary


def _cmd_moments(args, dist) -> tuple[int, list[str], dict]:
    trials = max(args.trials, 2)
    reports = spectral.monte_carlo_moments(args.n, args.p, dist, args.k_max, trials, args.seed)
    for rep in reports:
        if rep.k <= walks.CLASS_BUDGET:
            rep.exact_value = walks.exact_moment(args.n, args.p, rep.k, dist)
        rep.bound_value = bounds.moment_upper_bound(args.n, args.p, rep.k, dist)
    text = sweep.emit_plot_data(reports, "moments", None, not args.suppress_timestamp)
    bad = [r.k for r in reports if r.exact_value is not None and r.exact_value > r.bound_value]
    return (EXIT_CHECK if bad else EXIT_OK), _emit(text, args.out), {"dominance_violations": bad}


def _cmd_trees(args, dist) -> tuple[int, list[str], dict]:
    k = args.k
    census = trees.max_cluster_census(k)
    data = {
        "k": k,
        "catalan": trees.catalan(k),
        "root_edge_counts": trees.root_edge_counts(k) if k >= 1 else {},
        "max_power_exact": census.exact,
        "max_power_at_least": census.at_least,
        "sum_sq_cluster_total": trees.sum_sq_cluster_total(k),
        "max_cluster_bound_violations": census.violations(),
    }
    text = json.dumps(data, sort_keys=True, indent=2, default=str) + "\n"
    return (EXIT_CHECK if data["max_cluster_bound_violations"] else EXIT_OK), _emit(text, args.out), {}


def _cmd_walks(args, dist) -> tuple[int, list[str], dict]:
    if args.classes:
        lines = [walks.class_dump_line(c, args.N[0], args.p[0], dist)
                 for c in walks.enumerate_even_classes(args.k, True)]
        return EXIT_OK, _emit("\n".join(lines) + "\n", args.out), {"classes": len(lines)}
    rows = []
    worst = 0.0
    for n in args.N:
        for p in args.p:
            exact = walks.exact_moment(n, p, args.k, dist)
            brute = rel = None
            if args.brute_force:
                brute = walks.brute_force_moment(n, p, args.k, dist)
                rel = abs(exact - brute) / abs(brute)
                worst = max(worst, rel)
            rows.append([n, p, args.k, dist.name, exact, brute, rel])
    text = sweep.write_csv(None, ["N", "p", "k", "dist", "exact", "brute_force", "rel_err"], rows,
                           not args.suppress_timestamp)
    return (EXIT_CHECK if worst > 1e-12 else EXIT_OK), _emit(text, args.out), {"worst_rel_err": worst}


def _cmd_bounds(args, dist) -> tuple[int, list[str], dict]:
    n, p, k = args.N, args.p, args.k
    params = {"N": n, "p": p, "k": k, "eps": args.eps, "R": args.R, "dist": dist.name}
    reports = []
    exact = walks.exact_moment(n, p, k, dist) if k <= 5 else None
    mb = bounds.moment_upper_bound(n, p, k, dist)
    reports.append(bounds.BoundReport(params, "moment_upper_bound", mb, [], exact,
                                      None if exact is None else mb >= exact))
    if k <= bounds.EXACT_CENSUS_MAX_K:
        mbx = bounds.moment_upper_bound(n, p, k, dist, True)
        reports.append(bounds.BoundReport(params, "moment_upper_bound_exact_census", mbx, [], exact,
                                          None if exact is None else mbx >= exact))
    if k >= 2:
        for s in range(0, 4):
            q = bounds.q_bound(k, s, p, dist)
            reports.append(bounds.BoundReport({**params, "s": s}, "q_bound", q.value, [], q.exact,
                                              None if q.exact is None else q.value >= q.exact))
    tail = bounds.norm_tail_bound(n, p, k, args.eps, dist)
    premises = ["moment_premise"] if tail.premise_certified else []
    reports.append(bounds.BoundReport(params, "norm_tail_bound", tail.value, premises))
    reports.append(bounds.BoundReport(params, "poisson_max_tail", bounds.poisson_max_tail(n, p, args.R)))
    text = "".join(r.to_json() + "\n" for r in reports)
    failed = any(r.dominance_ok is False for r in reports)
    return (EXIT_CHECK if failed else EXIT_OK), _emit(text, args.out), {}


def _cmd_verify(args, dist) -> tuple[int, list[str], dict]:
    report = verify.run_verify(args.level)
    lines = report.lines()
    if "g_k(m)" in report.tables and args.level == "full":
        lines.append("g_k(m) table: k m exact at_least bound")
        for k, row in report.tables["g_k(m)"].items():
            for m, (ex, al, b) in row.items():
                lines.append(f"  {k} {m} {ex} {al} {b:.6g}")
    return report.exit_code(), _emit("\n".join(lines) + "\n", args.out), {"ok": report.ok, "complete": report.complete}


COMMANDS = {
    "gen": _cmd_gen,
    "spectrum": _cmd_spectrum,
    "sweep": _cmd_sweep,
    "moments": _cmd_moments,
    "trees": _cmd_trees,
    "walks": _cmd_walks,
    "bounds": _cmd_bounds,
    "verify": _cmd_verify,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(message)s")
    dist = EntryDistribution.by_name(args.dist)
    try:
        code, outputs, summary = COMMANDS[args.command](args, dist)
    except ResourceLimitError as exc:
        print(f"resource limit: {exc}", file=sys.stderr)
        return EXIT_RESOURCE
    except (InvalidParameterError, DiluteWignerError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    if args.json:
        print(json.dumps(summary, sort_keys=True, default=str))
    if args.run_log is not None:
        config = {k: v for k, v in vars(args).items() if k not in ("run_log",)}
        sweep.write_manifest(args.run_log, args.command, config, outputs, not args.suppress_timestamp)
    return code


if __name__ == "__main__":
    sys.exit(main())
