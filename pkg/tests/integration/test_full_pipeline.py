"""
CUTrend Integration Tests
End-to-end runs of the command-line workflows.
"""

import json
import os
import subprocess
import sys
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

PROJECT_ROOT = Path(__file__).resolve().parents[2]
MODELS = ("bm", "dbr", "dsigm")


def run_cli(*args, threads=None):
    """Run ``cutrend`` in a subprocess from the project root."""
    env = os.environ.copy()
    env["PYTHONPATH"] = str(PROJECT_ROOT)
    env.pop("CUTREND_THREADS", None)
    if threads is not None:
        env["CUTREND_THREADS"] = str(threads)
    cmd = [sys.executable, "-m", "cli.cutrend_cli", *[str(a) for a in args]]
    return subprocess.run(cmd, capture_output=True, text=True, cwd=PROJECT_ROOT, env=env)


def read_table(path):
    return pd.read_csv(path, comment="#")


@pytest.mark.integration
@pytest.mark.slow
class TestFullPipeline:
    """Test the complete CUTrend workflow chain."""

    def test_prior_check(self, temp_dir, small_config_file):
        result = run_cli("prior-check", "--config", small_config_file, "--out", temp_dir, "--model", "bm")
        assert result.returncode == 0, f"Prior check failed: {result.stderr}"

        table = read_table(Path(temp_dir) / "prior_delta_cu_quantiles.csv").set_index("quantile")
        assert table.loc[0.025, "delta_cu"] == pytest.approx(-0.6, abs=0.07)
        assert table.loc[0.975, "delta_cu"] == pytest.approx(0.6, abs=0.07)

    def test_simulate_then_fit_is_reproducible(self, temp_dir, small_config_file):
        sim_dir = Path(temp_dir) / "sim"
        result = run_cli("simulate", "--config", small_config_file, "--out", sim_dir, "--bin", "8")
        assert result.returncode == 0, f"Simulation failed: {result.stderr}"
        data = sim_dir / "observations.csv"
        assert len(read_table(data)) == 4

        runs = {}
        for name, threads in (("first", 1), ("second", 1), ("parallel", 2)):
            out = Path(temp_dir) / name
            result = run_cli("fit", "--config", small_config_file, "--data", data, "--out", out, threads=threads)
            assert result.returncode == 0, f"Fit failed: {result.stderr}"
            runs[name] = out

        for model in MODELS:
            first = (runs["first"] / model / "chain.csv").read_bytes()
            assert first == (runs["second"] / model / "chain.csv").read_bytes()
            assert first == (runs["parallel"] / model / "chain.csv").read_bytes()
            assert (runs["first"] / model / "cu_paths.csv").exists()

        summary = json.loads((runs["first"] / "fit_summary.json").read_text())
        assert set(summary["models"]) == set(MODELS)
        assert summary["observations"] == 4
        for model in MODELS:
            delta = summary["models"][model]["delta_cu"]
            assert delta["lower"] <= delta["median"] <= delta["upper"]
        assert (runs["first"] / "observed_prevalence.csv").exists()

    def test_ensemble_and_report(self, temp_dir, small_config_file):
        sim_dir = Path(temp_dir) / "sim"
        fit_dir = Path(temp_dir) / "fit"
        assert run_cli("simulate", "--config", small_config_file, "--out", sim_dir).returncode == 0
        result = run_cli(
            "fit", "--config", small_config_file, "--data", sim_dir / "observations.csv", "--out", fit_dir
        )
        assert result.returncode == 0, f"Fit failed: {result.stderr}"

        ensembles = {}
        for threads in (1, 2):
            out = Path(temp_dir) / f"ensemble_{threads}"
            result = run_cli("ensemble", "--config", small_config_file, "--out", out, "--threads", threads)
            assert result.returncode == 0, f"Ensemble failed: {result.stderr}"
            ensembles[threads] = out

        serial = (ensembles[1] / "ensemble_replicates.csv").read_bytes()
        assert serial == (ensembles[2] / "ensemble_replicates.csv").read_bytes()

        report = json.loads((ensembles[1] / "ensemble_report.json").read_text())
        assert report["header"]["replicates"] == 2
        assert report["header"]["failures"] == 0
        replicates = read_table(ensembles[1] / "ensemble_replicates.csv")
        assert replicates["bin"].tolist() == [0, 1]
        assert (ensembles[1] / "ensemble_metrics.csv").exists()
        assert (ensembles[1] / "ensemble_bias_by_bin.csv").exists()

        claims_dir = Path(temp_dir) / "claims"
        result = run_cli(
            "report", "--config", small_config_file, "--fit-dir", fit_dir,
            "--ensemble-dir", ensembles[1], "--out", claims_dir,
        )
        assert result.returncode == 0, f"Report failed: {result.stderr}"
        claims = json.loads((claims_dir / "claims.json").read_text())
        assert set(claims["claims"]) == set(MODELS)

    def test_bad_data_exit_code(self, temp_dir, small_config_file):
        data = Path(temp_dir) / "bad.csv"
        data.write_text("time,stratum,positives,sample_size\n2005,fsw,500,425\n")
        result = run_cli("fit", "--config", small_config_file, "--data", data, "--out", temp_dir)
        assert result.returncode == 3
        error = json.loads(result.stderr.strip().splitlines()[-1])
        assert error["error"] == "data_error"
        assert "row 1" in error["message"]


def metrics_at(out_dir, T):
    """Ensemble metrics at threshold T, one row per method."""
    metrics = read_table(Path(out_dir) / "ensemble_metrics.csv")
    return metrics[np.isclose(metrics["T"], T)].set_index("method")


def write_config(temp_dir, text, name="long.yaml"):
    path = Path(temp_dir) / name
    path.write_text(text)
    return path


long_run = pytest.mark.skipif(
    os.environ.get("CUTREND_LONG_RUNS") != "1", reason="set CUTREND_LONG_RUNS=1"
)


@long_run
@pytest.mark.integration
@pytest.mark.slow
class TestDeskScale:
    """Desk-scale acceptance runs: 50 replicates, 500 particles, 15000 iterations; hours of CPU."""

    def ensemble_metrics(self, out_dir, *args):
        result = run_cli(
            "ensemble", "--out", out_dir, "--seed", 1, "--threads", os.cpu_count() or 1, *args
        )
        assert result.returncode == 0, f"Ensemble failed: {result.stderr}"
        return metrics_at(out_dir, 0.2)

    def test_sigmoid_truths(self, temp_dir):
        at = self.ensemble_metrics(temp_dir)
        assert set(at.index) == set(MODELS)
        for method in MODELS:
            assert at.loc[method, "bias"] < 0.0, f"{method} bias is not negative"
            assert at.loc[method, "specificity"] >= 0.9, f"{method} specificity"
            assert at.loc[method, "auc"] >= 0.8, f"{method} AUC"

        # |bias| grows from bm to dsigm to dbr, within one bootstrap standard error
        for smaller, larger in (("bm", "dsigm"), ("dsigm", "dbr")):
            tolerance = max(at.loc[smaller, "bias_se"], at.loc[larger, "bias_se"])
            assert abs(at.loc[smaller, "bias"]) <= abs(at.loc[larger, "bias"]) + tolerance

    def test_step_truths(self, temp_dir):
        config = write_config(temp_dir, "ensemble:\n  generator: step\n")
        at = self.ensemble_metrics(Path(temp_dir) / "out", "--config", config)
        for method in MODELS:
            assert at.loc[method, "bias"] < 0.0, f"{method} bias is not negative"
        assert at["mse"].idxmin() == "bm"

    def test_credible_intervals_are_calibrated(self, temp_dir):
        config = write_config(temp_dir, "ensemble:\n  replicates: 100\n  methods: [dsigm]\n")
        at = self.ensemble_metrics(Path(temp_dir) / "out", "--config", config)
        # binomial error at 100 replicates
        assert 0.89 <= at.loc["dsigm", "coverage"] <= 1.0

    def test_bm_and_dsigm_agree_on_survey_data(self, temp_dir, observation_csv):
        config = write_config(temp_dir, "fit:\n  models: [bm, dsigm]\n")
        out = Path(temp_dir) / "fit"
        result = run_cli(
            "fit", "--config", config, "--data", observation_csv, "--out", out, "--seed", 1,
            "--iterations", 20000, "--particles", 500, "--threads", 2,
        )
        assert result.returncode == 0, f"Fit failed: {result.stderr}"
        summary = json.loads((out / "fit_summary.json").read_text())
        bm = summary["models"]["bm"]["delta_cu"]
        dsigm = summary["models"]["dsigm"]["delta_cu"]
        assert abs(bm["median"] - dsigm["median"]) <= 0.15
        assert bm["lower"] <= dsigm["upper"] and dsigm["lower"] <= bm["upper"]
