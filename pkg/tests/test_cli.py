import hashlib
import json
import subprocess
import sys

import numpy as np
import pytest

from torsim.cli import main
from torsim.metrics import read_metrics_csv


def run_cli(args, env_out=None, monkeypatch=None):
    if env_out is not None:
        monkeypatch.setenv("TORSIM_OUT", str(env_out))
    return main(args)


FAST = ["--set", "duration", "160", "--set", "warmup", "60"]


class TestSimulate:
    def test_default_run_exit_zero(self, tmp_path):
        rc = main(["simulate", "--v0", "18", "--controller", "EOR",
                   "--seed", "1", "--out", str(tmp_path)] + FAST)
        assert rc == 0
        run_dir = tmp_path / "EOR_v18_s1"
        for name in ("log.csv", "metrics.csv", "meta.json", "psd.csv",
                     "gains.txt"):
            assert (run_dir / name).exists()

    def test_unknown_controller_exit_2(self, tmp_path, capsys):
        rc = main(["simulate", "--set", "controller", "PID",
                   "--out", str(tmp_path)] + FAST)
        assert rc == 2

    def test_unknown_key_exit_2_names_key(self, tmp_path, capsys):
        rc = main(["simulate", "--set", "not_a_key", "1",
                   "--out", str(tmp_path)] + FAST)
        assert rc == 2
        assert "not_a_key" in capsys.readouterr().err

    def test_bad_config_file_exit_2(self, tmp_path):
        bad = tmp_path / "bad.cfg"
        bad.write_text("v0 == 12\n")
        rc = main(["simulate", "--config", str(bad), "--out", str(tmp_path)])
        assert rc == 2

    def test_seed_override_changes_log(self, tmp_path):
        for seed in ("1", "2"):
            rc = main(["simulate", "--v0", "18", "--controller", "Baseline",
                       "--seed", seed, "--out", str(tmp_path)] + FAST)
            assert rc == 0
        h1 = hashlib.sha256(
            (tmp_path / "Baseline_v18_s1" / "log.csv").read_bytes()).hexdigest()
        h2 = hashlib.sha256(
            (tmp_path / "Baseline_v18_s2" / "log.csv").read_bytes()).hexdigest()
        assert h1 != h2

    def test_env_var_output_root(self, tmp_path, monkeypatch):
        monkeypatch.setenv("TORSIM_OUT", str(tmp_path / "envroot"))
        rc = main(["simulate", "--v0", "18", "--controller", "Baseline",
                   "--seed", "3"] + FAST)
        assert rc == 0
        assert (tmp_path / "envroot" / "Baseline_v18_s3" / "log.csv").exists()


class TestSweep:
    def test_counts_and_resume(self, tmp_path):
        args = ["sweep", "--speeds", "9,18", "--controllers", "Baseline,EOR",
                "--seeds", "1", "--jobs", "2", "--out", str(tmp_path)] + FAST
        assert main(args) == 0
        manifest = json.loads((tmp_path / "manifest.json").read_text())
        assert len(manifest["runs"]) == 4
        rows = read_metrics_csv(tmp_path / "sweep_metrics.csv")
        assert len(rows) == 4
        agg = (tmp_path / "aggregate.csv").read_text().splitlines()
        assert agg[0].startswith("row,")
        assert any(line.startswith("EOR cf. Baseline %") for line in agg)
        # resume: nothing to rerun, manifest unchanged
        mtime = (tmp_path / "runs" / "EOR_v18_s1" / "log.csv").stat().st_mtime
        assert main(args) == 0
        assert (tmp_path / "runs" / "EOR_v18_s1" / "log.csv").stat().st_mtime \
            == mtime

    def test_bad_controller_list_exit_2(self, tmp_path):
        rc = main(["sweep", "--speeds", "9", "--controllers", "EOR,PID",
                   "--seeds", "1", "--out", str(tmp_path)] + FAST)
        assert rc == 2

    def test_region2_rows_flagged(self, tmp_path):
        args = ["sweep", "--speeds", "9", "--controllers", "Baseline",
                "--seeds", "1", "--out", str(tmp_path)] + FAST
        assert main(args) == 0
        rows = read_metrics_csv(tmp_path / "sweep_metrics.csv")
        assert rows[0][0]["region"] == "Region2"


class TestCompare:
    def _sweep(self, tmp_path):
        assert main(["sweep", "--speeds", "18", "--controllers",
                     "Baseline,EOR", "--seeds", "1",
                     "--out", str(tmp_path)] + FAST) == 0
        return tmp_path / "sweep_metrics.csv"

    def test_identical_inputs_zero_percent(self, tmp_path, capsys):
        path = self._sweep(tmp_path)
        rows = read_metrics_csv(path)
        bl = [(i, r) for i, r in rows if i["controller"] == "Baseline"]
        clone = [({**i, "controller": "EOR"}, r) for i, r in bl]
        from torsim.metrics import write_metrics_csv
        p2 = tmp_path / "clone.csv"
        write_metrics_csv(p2, bl + clone)
        rc = main(["compare", str(p2), "--out", str(tmp_path / "cmp.csv")])
        assert rc == 0
        out = (tmp_path / "cmp.csv").read_text().splitlines()
        pct = [l for l in out if l.startswith("EOR cf. Baseline %")][0]
        vals = [float(x) for x in pct.split(",")[1:]]
        assert all(abs(v) < 1e-9 for v in vals)

    def test_missing_baseline_exit_2(self, tmp_path):
        path = self._sweep(tmp_path)
        rows = read_metrics_csv(path)
        eor_only = [(i, r) for i, r in rows if i["controller"] == "EOR"]
        from torsim.metrics import write_metrics_csv
        p2 = tmp_path / "eor.csv"
        write_metrics_csv(p2, eor_only)
        assert main(["compare", str(p2)]) == 2

    def test_mismatched_coverage_exit_2(self, tmp_path):
        path = self._sweep(tmp_path)
        rows = read_metrics_csv(path)
        trimmed = [(i, r) for i, r in rows
                   if not (i["controller"] == "EOR")]
        extra = [({**i, "controller": "EOR", "seed": "9"}, r)
                 for i, r in rows if i["controller"] == "Baseline"]
        from torsim.metrics import write_metrics_csv
        p2 = tmp_path / "mismatch.csv"
        write_metrics_csv(p2, trimmed + extra)
        assert main(["compare", str(p2)]) == 2


class TestEntryPoint:
    def test_console_script_help(self):
        proc = subprocess.run([sys.executable, "-m", "torsim.cli", "--help"],
                              capture_output=True, text=True)
        assert proc.returncode == 0
        assert "simulate" in proc.stdout and "sweep" in proc.stdout

    def test_write_config_round_trips(self, tmp_path):
        path = tmp_path / "default.cfg"
        assert main(["write-config", str(path)]) == 0
        from torsim.sim import load_sim_config, SimConfig
        assert load_sim_config(path) == SimConfig()
