from __future__ import annotations

import csv
import io
import json
import math
import subprocess
import sys

import pytest

from dilute_wigner import cli, sweep, verify
from dilute_wigner.ensemble import EnsembleSpec, EntryDistribution, sample_matrix
from dilute_wigner.errors import InvalidParameterError
from dilute_wigner.spectral import dense_spectrum, trial_seed

RAD = EntryDistribution.rademacher()


def read_csv(path_or_text):
    text = path_or_text.read_text() if hasattr(path_or_text, "read_text") else path_or_text
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(io.StringIO("\n".join(lines))))


class TestSweep:
    def test_small_config_matches_dense(self):
        cfg = sweep.SweepConfig([64], [sweep.GridPoint(p=64)], RAD, trials=2, master_seed=5)
        res = sweep.run_sweep(cfg)
        assert len(res.records) == 2
        for rec in res.records:
            eig = dense_spectrum(sample_matrix(EnsembleSpec(64, 64, RAD, rec.seed)))
            assert math.isfinite(rec.lambda_max)
            assert rec.lambda_max == pytest.approx(max(abs(eig[0]), abs(eig[-1])), rel=1e-8)

    def test_grid_resolution(self):
        assert sweep.GridPoint(a=2.0).resolve(4096) == 70
        assert sweep.GridPoint(a=0.0).resolve(4096) == 1
        assert sweep.GridPoint(p=2.5).resolve(10) == 2.5

    def test_row_count_and_skips(self, caplog):
        cfg = sweep.SweepConfig([16, 40], [sweep.GridPoint(p=3), sweep.GridPoint(p=30), sweep.GridPoint(a=1.0)],
                                RAD, trials=3)
        with caplog.at_level("WARNING"):
            res = sweep.run_sweep(cfg)
        assert len(res.rows) == 2 * 3
        skipped = [r for r in res.rows if r.skipped]
        assert [(r.n, r.p) for r in skipped] == [(16, 30)]
        assert "infeasible" in caplog.text
        rows = sweep.transition_rows(res)
        assert len(rows) == 6
        for r in res.rows:
            if not r.skipped:
                q = [r.quantiles[x] for x in sorted(r.quantiles)]
                assert q == sorted(q)

    def test_trial_order_independence(self):
        a = sweep.run_trial(100, 4, RAD, trial_seed(1, 100, 4, 3), False, 1e-10)
        sweep.run_trial(100, 4, RAD, trial_seed(1, 100, 4, 0), False, 1e-10)
        b = sweep.run_trial(100, 4, RAD, trial_seed(1, 100, 4, 3), False, 1e-10)
        assert a == b

    def test_serial_equals_parallel(self):
        cfg = sweep.SweepConfig([50, 120], [sweep.GridPoint(p=3), sweep.GridPoint(a=1.5)], RAD, trials=3, master_seed=9)
        one = sweep.emit_plot_data(sweep.run_sweep(cfg, jobs=1), "transition", timestamp=False)
        many = sweep.emit_plot_data(sweep.run_sweep(cfg, jobs=3), "transition", timestamp=False)
        assert one == many

    def test_config_validation(self):
        with pytest.raises(InvalidParameterError):
            sweep.SweepConfig([10], [sweep.GridPoint(p=2)], trials=0)
        with pytest.raises(InvalidParameterError):
            sweep.SweepConfig([10], [])
        with pytest.raises(InvalidParameterError):
            sweep.SweepConfig([10], [sweep.GridPoint(p=2)], quantiles=(0.5, 1.0))


class TestPlotData:
    def test_histogram_integrates_to_one(self):
        eig = dense_spectrum(sample_matrix(EnsembleSpec(1024, 30, RAD, 2)))
        rows = read_csv(sweep.emit_plot_data(eig, "spectrum", timestamp=False))
        assert list(rows[0]) == sweep.HISTOGRAM_COLUMNS
        total = sum(float(r["density"]) * (float(r["bin_right"]) - float(r["bin_left"])) for r in rows)
        assert abs(total - 1) <= 1e-6
        sc = sum(float(r["semicircle_density"]) * (float(r["bin_right"]) - float(r["bin_left"])) for r in rows)
        assert 0 < sc <= 1 + 1e-12

    def test_unknown_kind(self):
        with pytest.raises(InvalidParameterError):
            sweep.emit_plot_data([], "scatter")

    def test_timestamp_header(self):
        text = sweep.write_csv(None, ["a"], [[1]], timestamp=True)
        assert text.startswith("# generated ")
        assert sweep.write_csv(None, ["a"], [[1]], timestamp=False) == "a\n1\n"


def run_cli(*argv):
    return cli.main([str(a) for a in argv])


class TestCLI:
    def test_moments_file_dominance(self, tmp_path):
        out = tmp_path / "m.csv"
        assert run_cli("moments", "--n", 8, "--p", 4, "--k-max", 3, "--trials", 200, "--out", out) == 0
        rows = read_csv(out)
        assert [r["k"] for r in rows] == ["1", "2", "3"]
        for r in rows:
            assert float(r["exact"]) <= float(r["bound"])

    def test_transition_file(self, tmp_path):
        out = tmp_path / "t.csv"
        code = run_cli("sweep", "--n", 32, 64, "--p", 2, "--a", 1.0, 2.0, "--trials", 2, "--out", out,
                       "--suppress-timestamp")
        assert code == 0
        rows = read_csv(out)
        assert list(rows[0]) == sweep.TRANSITION_COLUMNS
        assert len(rows) == 2 * 3

    @pytest.mark.parametrize("argv", [
        ["gen", "--n", 30, "--p", 3, "--seed", 4],
        ["spectrum", "--n", 40, "--p", 4, "--trials", 2, "--dense"],
        ["sweep", "--n", 40, 60, "--a", 1.0, 1.5, "--trials", 2],
        ["moments", "--n", 6, "--p", 2, "--trials", 20],
        ["walks", "--k", 3, "--N", 3, 5, "--p", 1, 2, "--brute-force"],
        ["walks", "--k", 2, "--N", 4, "--p", 2, "--classes"],
        ["trees", "--k", 5],
        ["bounds", "--N", 64, "--p", 8, "--k", 3],
    ])
    def test_byte_identical_reruns(self, tmp_path, argv):
        texts = []
        for i in range(2):
            out = tmp_path / f"out{i}"
            assert run_cli(*argv, "--suppress-timestamp", "--out", out) == 0
            texts.append(out.read_bytes())
        assert texts[0] == texts[1] and texts[0]

    def test_jobs_do_not_change_output(self, tmp_path):
        outs = []
        for jobs in (1, 8):
            out = tmp_path / f"j{jobs}.csv"
            rec = tmp_path / f"r{jobs}.csv"
            assert run_cli("sweep", "--n", 50, 80, "--a", 0.5, 1.5, "--p", 2, "--trials", 3, "--jobs", jobs,
                           "--suppress-timestamp", "--out", out, "--records", rec) == 0
            outs.append((out.read_bytes(), rec.read_bytes()))
        assert outs[0] == outs[1]

    def test_gen_roundtrip(self, tmp_path):
        path = tmp_path / "m.txt"
        assert run_cli("gen", "--n", 20, "--p", 5, "--seed", 3, "--out", path) == 0
        assert run_cli("spectrum", "--matrix", path, "--out", tmp_path / "s.csv") == 0
        rows = read_csv(tmp_path / "s.csv")
        assert len(rows) == 1 and float(rows[0]["lambda_max"]) > 0

    def test_hist_and_eigs(self, tmp_path):
        h, e = tmp_path / "h.csv", tmp_path / "e.txt"
        assert run_cli("spectrum", "--n", 200, "--p", 20, "--hist", h, "--eigs", e, "--out", tmp_path / "s.csv") == 0
        assert len(e.read_text().splitlines()) == 200
        assert read_csv(h)

    def test_usage_errors(self, capsys):
        with pytest.raises(SystemExit) as info:
            cli.main(["sweep"])
        assert info.value.code == 2
        assert run_cli("gen", "--n", 4, "--p", 9) == 2
        assert run_cli("spectrum", "--trials", 1) == 2

    def test_resource_exit(self):
        assert run_cli("walks", "--k", 9, "--N", 4, "--p", 2) == 3

    def test_manifest(self, tmp_path):
        log = tmp_path / "runs"
        for _ in range(2):
            assert run_cli("trees", "--k", 4, "--out", tmp_path / "t.json", "--run-log", log,
                           "--suppress-timestamp") == 0
        files = sorted(log.glob("trees-*.json"))
        assert len(files) == 1
        manifest = json.loads(files[0].read_text())
        assert manifest["outputs"] == [str(tmp_path / "t.json")]
        assert len(manifest["input_hash"]) == 64 and "timestamp" not in manifest

    def test_json_summary(self, capsys, tmp_path):
        assert run_cli("walks", "--k", 2, "--N", 3, "--p", 1, "--brute-force", "--json", "--out", tmp_path / "w") == 0
        summary = json.loads(capsys.readouterr().out)
        assert summary["worst_rel_err"] <= 1e-12

    def test_bounds_json_lines(self, tmp_path):
        out = tmp_path / "b.jsonl"
        assert run_cli("bounds", "--N", 1024, "--p", 50, "--k", 2, "--out", out) == 0
        reports = [json.loads(ln) for ln in out.read_text().splitlines()]
        names = {r["bound_name"] for r in reports}
        assert {"moment_upper_bound", "q_bound", "norm_tail_bound", "poisson_max_tail"} <= names
        assert all(r.get("dominance_ok", True) for r in reports)

    def test_module_entry_point(self):
        proc = subprocess.run([sys.executable, "-m", "dilute_wigner", "trees", "--k", "3"],
                              capture_output=True, text=True, check=True)
        assert json.loads(proc.stdout)["catalan"] == 5


class TestVerify:
    def test_quick(self):
        report = verify.run_verify("quick")
        assert report.ok and report.exit_code() == 0
        assert all(line.startswith("PASS") for line in report.lines())

    def test_cli_quick(self, tmp_path):
        assert run_cli("verify", "--out", tmp_path / "v.txt") == 0

    def test_seeded_fault(self, monkeypatch):
        from dilute_wigner import trees

        real = trees.catalan
        monkeypatch.setattr(trees, "catalan", lambda k: 6 if k == 3 else real(k))
        report = verify.run_verify("quick")
        assert not report.ok and report.exit_code() == 1
        failed = [c.name for c in report.checks if not c.ok]
        assert "catalan recursion k<=30" in failed

    @pytest.mark.slow
    def test_full_has_gk_table(self):
        report = verify.run_verify("full")
        assert report.ok
        assert set(report.tables["g_k(m)"]) == set(range(1, 11))

    def test_bad_level(self):
        with pytest.raises(ValueError):
            verify.run_verify("medium")
