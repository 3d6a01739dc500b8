#!/usr/bin/env python3
"""
CUTrend Ensemble Evaluation
Simulates replicate epidemics with known ΔCU, fits every method to each and
scores the posterior-median estimator.

Replicate ``i`` targets ΔCU bin ``i mod n_bins`` and draws all of its random
numbers from streams keyed by (master seed, i), so results do not depend on
the number of workers.
"""

import argparse
import os
import sys
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Dict, List, Optional, Tuple

import pandas as pd
from joblib import Parallel, delayed
from tqdm import tqdm

from cutrend.errors import CUTrendError, ReplicateFailure
from cutrend.inference.diagnostics import chain_diagnostics
from cutrend.inference.pmmh import pmmh
from cutrend.inference.theta import INFERENCE_MODELS
from cutrend.io.artifacts import provenance, write_csv, write_json
from cutrend.io.config import LoggingSettings, RunConfig, apply_overrides, config_hash, load_config
from cutrend.model.trajectories import model_values
from cutrend.utils.logging import configure_logging, get_logger
from cutrend.utils.rng import METHOD, REPLICATE, TRUTH, RandomStream
from pipelines.evaluation.metrics import bias_by_bin, metrics_table
from pipelines.evaluation.results import MethodEstimate, ReplicateResult
from pipelines.evaluation.truth import generate_truth

logger = get_logger(__name__)

REPLICATES_FILE = "ensemble_replicates.csv"
METRICS_FILE = "ensemble_metrics.csv"
BIAS_BY_BIN_FILE = "ensemble_bias_by_bin.csv"
REPORT_FILE = "ensemble_report.json"


@dataclass
class EnsembleOutcome:
    results: List[ReplicateResult]
    metrics: pd.DataFrame
    roc: Dict[str, Dict[str, dict]]
    bias_bins: pd.DataFrame
    report: Dict[str, Any]


_worker_logging: Optional[Tuple[str, str, Optional[str]]] = None


def _configure_worker_logging(settings: LoggingSettings, parent_pid: int) -> None:
    """Apply the run's logging settings once in each worker process."""
    global _worker_logging
    key = (settings.level, settings.format, settings.file)
    if os.getpid() == parent_pid or _worker_logging == key:
        return
    configure_logging(settings.level, settings.format, settings.file)
    _worker_logging = key


def _fit_method(result: ReplicateResult, method: str, config: RunConfig, stream: RandomStream) -> MethodEstimate:
    inference = config.ensemble.inference_for(method)
    seed = stream.spawn(METHOD, INFERENCE_MODELS.index(method)).derive_seed()
    try:
        chain = pmmh(result.observations, method, config.pmmh_settings(seed, inference), config.grid.build())
        summary = chain_diagnostics(chain, thin=inference.thin, thresholds=config.ensemble.thresholds)
    except Exception as e:
        failure = ReplicateFailure(result.index, e)
        logger.warning(
            "method_failed", replicate=result.index, method=method,
            category=failure.category, error=str(e), exc_info=not isinstance(e, CUTrendError),
        )
        return MethodEstimate.failure(method, str(failure), failure.category)
    delta = summary.delta_cu
    return MethodEstimate(
        method=method,
        median=delta.median,
        mean=delta.mean,
        lower=delta.lower,
        upper=delta.upper,
        acceptance_rate=summary.acceptance_rate,
        draws=chain.delta_cu[chain.burn_in :: inference.thin].copy(),
    )


def run_replicate(index: int, config: RunConfig, parent_pid: Optional[int] = None) -> ReplicateResult:
    """
    Generate the truth of replicate ``index`` and fit every configured method.

    Errors never escape: a failed truth marks the whole replicate, a failed
    fit marks only its method. ``parent_pid`` lets worker processes pick up
    the run's logging settings.
    """
    if parent_pid is not None:
        _configure_worker_logging(config.logging, parent_pid)
    ensemble = config.ensemble
    stream = RandomStream(config.seed).spawn(REPLICATE, index)
    target_bin = index % ensemble.n_bins
    try:
        truth = generate_truth(
            ensemble,
            stream.spawn(TRUTH),
            target_bin,
            config.grid.build(),
            config.epi.n_fsw,
            (config.trajectories.delta_cu_start, config.trajectories.delta_cu_end),
        )
    except Exception as e:
        failure = ReplicateFailure(index, e)
        logger.error(
            "replicate_failed", replicate=index, category=failure.category, error=str(e),
            exc_info=not isinstance(e, CUTrendError),
        )
        return ReplicateResult(
            index=index, target_bin=target_bin, true_delta_cu=float("nan"),
            error=str(failure), error_category=failure.category,
        )

    result = ReplicateResult(
        index=index,
        target_bin=target_bin,
        true_delta_cu=truth.delta_cu,
        truth_parameters={**truth.epi_values, **model_values(truth.trajectory)},
        true_cu_path=truth.cu_path,
        observations=truth.observations,
        attempts=truth.attempts,
    )
    for method in ensemble.methods:
        result.estimates[method] = _fit_method(result, method, config, stream)
    return result


def replicates_frame(results: List[ReplicateResult], methods: List[str]) -> pd.DataFrame:
    """One row per replicate with the truth and every method's estimate."""
    rows = []
    for r in results:
        row: Dict[str, Any] = {
            "replicate": r.index,
            "bin": r.target_bin,
            "true_delta_cu": r.true_delta_cu,
            "attempts": r.attempts,
            "failed": int(r.failed),
            "error": r.error_category or "",
        }
        for method in methods:
            found = r.estimates.get(method)
            row[f"{method}_median"] = r.estimate(method)
            row[f"{method}_lower"] = found.lower if found else float("nan")
            row[f"{method}_upper"] = found.upper if found else float("nan")
            row[f"{method}_acceptance"] = found.acceptance_rate if found else float("nan")
            row[f"{method}_error"] = (found.error_category or "") if found else ""
        rows.append(row)
    return pd.DataFrame(rows)


def run_ensemble(config: RunConfig) -> EnsembleOutcome:
    """
    Execute the ensemble workflow and write its report.

    Returns:
        EnsembleOutcome with the replicate results, metric tables and report
    """
    ensemble = config.ensemble
    methods = list(ensemble.methods)
    logger.info(
        "ensemble_started", replicates=ensemble.replicates, generator=ensemble.generator,
        methods=methods, threads=config.threads,
    )
    jobs = Parallel(n_jobs=config.threads, return_as="generator")(
        delayed(run_replicate)(i, config, os.getpid()) for i in range(ensemble.replicates)
    )
    results = list(tqdm(
        jobs, total=ensemble.replicates, desc="replicates", disable=not config.logging.progress
    ))

    rng = RandomStream(config.seed).spawn(REPLICATE, ensemble.replicates).generator()
    metrics, roc = metrics_table(results, methods, ensemble.thresholds, ensemble.bootstrap_resamples, rng)
    edges = ensemble.bin_edges()
    bias_bins = pd.concat([bias_by_bin(results, m, edges) for m in methods], ignore_index=True)

    failed_replicates = sum(r.failed for r in results)
    failed_fits = sum(
        1 for r in results if not r.failed for e in r.estimates.values() if e.failed
    )
    report = {
        "header": {
            "workflow": "ensemble",
            "replicates": ensemble.replicates,
            "failures": failed_replicates,
            "failed_fits": failed_fits,
            "generator": ensemble.generator,
            "methods": methods,
            "thresholds": list(ensemble.thresholds),
        },
        "metrics": metrics.to_dict(orient="records"),
        "roc": roc,
        "bias_by_bin": bias_bins.to_dict(orient="records"),
        "failures": [
            {"replicate": r.index, "category": r.error_category, "message": r.error}
            for r in results if r.failed
        ],
    }

    out = Path(config.output_dir)
    prov = provenance(config_hash(config), config.seed)
    write_csv(replicates_frame(results, methods), out / REPLICATES_FILE, prov)
    write_csv(metrics, out / METRICS_FILE, prov)
    write_csv(bias_bins, out / BIAS_BY_BIN_FILE, prov)
    write_json(report, out / REPORT_FILE, prov)
    logger.info("ensemble_completed", failures=failed_replicates, output_dir=str(out))
    return EnsembleOutcome(results, metrics, roc, bias_bins, report)


def main() -> int:
    """Ensemble pipeline entry point."""
    parser = argparse.ArgumentParser(description="CUTrend Ensemble Evaluation")
    parser.add_argument("--config", type=str, help="Path to the YAML run configuration")
    parser.add_argument("--out", type=str, help="Output directory")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--threads", type=int, help="Parallel replicate workers")
    parser.add_argument("--iterations", type=int, help="PMMH iterations per fit")
    parser.add_argument("--particles", type=int, help="Particle count per fit")
    args = parser.parse_args()

    try:
        config = apply_overrides(
            load_config(args.config), workflow="ensemble", seed=args.seed, out=args.out,
            threads=args.threads, iterations=args.iterations, particles=args.particles,
        )
        configure_logging(config.logging.level, config.logging.format, config.logging.file)
        print(f"🚀 Starting CUTrend ensemble ({config.ensemble.replicates} replicates)")
        outcome = run_ensemble(config)
        print("\n📊 Ensemble metrics:")
        print(outcome.metrics.to_string(index=False, float_format=lambda v: f"{v:.3f}"))
        print(f"\n✅ Ensemble completed, artifacts in {config.output_dir}")
        return 0
    except CUTrendError as e:
        print(f"❌ Ensemble failed: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
