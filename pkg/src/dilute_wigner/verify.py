"""Exact verification suites behind ``dilute-wigner verify``."""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Callable

from . import bounds, trees, walks
from .ensemble import EntryDistribution
from .errors import ResourceLimitError

RADEMACHER = EntryDistribution.rademacher()
GAUSSIAN = EntryDistribution.gaussian()


@dataclass
class Check:
    name: str
    ok: bool
    detail: str = ""
    seconds: float = 0.0


@dataclass
class VerifyReport:
    level: str
    checks: list[Check] = field(default_factory=list)
    complete: bool = True
    tables: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return all(c.ok for c in self.checks)

    def exit_code(self) -> int:
        if not self.ok:
            return 1
        return 0 if self.complete else 3

    def lines(self) -> list[str]:
        out = [f"{'PASS' if c.ok else 'FAIL'}  {c.name}  {c.detail}".rstrip() for c in self.checks]
        if not self.complete:
            out.append("INCOMPLETE  resource budget exceeded")
        return out


def _catalan_values() -> tuple[bool, str]:
    want = (1, 1, 2, 5, 14, 42, 132, 429, 1430, 4862, 16796)
    got = tuple(trees.catalan(k) for k in range(11))
    return got == want, "" if got == want else f"got {got}"


def _enumeration(k_max: int) -> tuple[bool, str]:
    bad = [k for k in range(k_max + 1) if sum(1 for _ in trees.enumerate_trees(k)) != trees.catalan(k)]
    return not bad, f"k<={k_max}" + (f" mismatch at {bad}" if bad else "")


def _root_edges(k_max: int) -> tuple[bool, str]:
    for k in range(1, k_max + 1):
        table = trees.root_edge_counts(k)  # raises on census/convolution disagreement
        if sum(table.values()) != trees.catalan(k):
            return False, f"sum of t_{k}^(m) != t_{k}"
    return True, f"k<={k_max}"


def _profile_bounds(k_max: int) -> tuple[bool, str]:
    for k in range(2, k_max + 1):
        for t in trees.enumerate_trees(k):
            prof = trees.cluster_profile(t)
            leaves = sum(1 for d in t.degrees() if d == 1)
            if not (k <= prof.sum <= 2 * k - 2) or prof.sum != 2 * k - leaves:
                return False, f"tree {t.encoding}"
    return True, f"k<={k_max}"


def _root_degree_bounds(k_max: int) -> tuple[bool, str]:
    bad = trees.root_degree_bound_check(k_max)
    return not bad, f"k<={k_max}, violations={bad[:5]}"


def _forest_chain() -> tuple[bool, str]:
    rows = trees.forest_chain_table(8, 8)
    bad = [(r.r, r.l, r.s) for r in rows if not (r.left_ok and r.outer_ok)]
    middle = sum(not r.middle_ok for r in rows)
    return not bad, f"{len(rows)} rows, violations={bad[:5]}, middle-step exceptions={middle}"


def _max_cluster(k_max: int, report: VerifyReport) -> tuple[bool, str]:
    table = {}
    bad = []
    for k in range(1, k_max + 1):
        census = trees.max_cluster_census(k)
        table[k] = {m: (census.exact.get(m, 0), census.at_least.get(m, 0), float(census.bound(m)))
                    for m in range(2, k + 1)}
        bad += [(k, m, name) for m, name in census.violations()]
    report.tables["g_k(m)"] = table
    return not bad, f"k<={k_max}, violations={bad[:5]}"


def _type_census(k_max: int) -> tuple[bool, str]:
    bad = [k for k in range(1, k_max + 1) if walks.type_census(k).get((0, 0)) != trees.catalan(k)]
    return not bad, f"k<={k_max}" + (f" (0,0) != t_k at {bad}" if bad else "")


def _oracle(n_max: int) -> tuple[bool, str]:
    worst = 0.0
    for n in range(2, n_max + 1):
        for p in sorted({1, 2, n}):
            for k in (1, 2, 3):
                for dist in (RADEMACHER, GAUSSIAN):
                    e = walks.exact_moment(n, p, k, dist)
                    b = walks.brute_force_moment(n, p, k, dist)
                    worst = max(worst, abs(e - b) / abs(b))
                    if k == 1 and walks.exact_moment_fraction(n, p, 1, dist) != 1:
                        return False, f"M_2 != 1 at N={n}, p={p}"
    return worst <= 1e-12, f"N<={n_max}, worst rel err {worst:.2e}"


def _dominance(grid_n, grid_p, k_max: int) -> tuple[bool, str]:
    bad = []
    for n in grid_n:
        for p in grid_p(n):
            for k in range(1, k_max + 1):
                for dist in (RADEMACHER, GAUSSIAN):
                    e = walks.exact_moment(n, p, k, dist)
                    if bounds.moment_upper_bound(n, p, k, dist) < e or bounds.moment_upper_bound(n, p, k, dist, True) < e:
                        bad.append((n, p, k, dist.name))
    return not bad, f"violations={bad[:5]}"


def _q_bounds(k_max: int) -> tuple[bool, str]:
    bad = []
    for k in range(2, k_max + 1):
        for s in range(0, 4):
            for dist in (RADEMACHER, GAUSSIAN):
                q = bounds.q_bound(k, s, 2.0, dist)
                if q.exact > q.value * (1 + 1e-12):
                    bad.append((k, s, dist.name))
    return not bad, f"k<={k_max}, violations={bad[:5]}"


def run_verify(level: str = "quick") -> VerifyReport:
    if level not in ("quick", "full"):
        raise ValueError(f"unknown level {level!r}")
    full = level == "full"
    report = VerifyReport(level)
    suite: list[tuple[str, Callable[[], tuple[bool, str]]]] = [
        ("catalan values k<=10", _catalan_values),
        ("catalan recursion k<=30", lambda: (trees.catalan_recursion_check(30), "")),
        ("tree enumeration", lambda: _enumeration(10 if full else 6)),
        ("root-edge census vs convolution", lambda: _root_edges(12 if full else 6)),
        ("cluster profile sum bounds", lambda: _profile_bounds(10 if full else 6)),
        ("root-degree count bounds", lambda: _root_degree_bounds(12 if full else 6)),
        ("forest-count chain", _forest_chain),
        ("maximal cluster census bound", lambda: _max_cluster(10 if full else 6, report)),
        ("walk type census (0,0) = t_k", lambda: _type_census(6 if full else 5)),
        ("exact vs brute-force moments", lambda: _oracle(4 if full else 3)),
        ("moment bound dominance", lambda: _dominance(
            (8, 64, 1024) if full else (8,), lambda n: sorted({2, 8, 50, n}), 5 if full else 3)),
        ("cluster-sum bound vs census", lambda: _q_bounds(10 if full else 6)),
    ]
    for name, fn in suite:
        start = time.perf_counter()
        try:
            ok, detail = fn()
        except ResourceLimitError as exc:
            report.complete = False
            ok, detail = True, f"skipped: {exc}"
        except AssertionError as exc:
            ok, detail = False, str(exc)
        report.checks.append(Check(name, ok, detail, time.perf_counter() - start))
    return report
