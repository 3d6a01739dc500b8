#!/usr/bin/env python3
"""
CUTrend Fitting Pipeline
Fits every configured trajectory model to one observation file and writes
chains, posterior summaries and plot-ready series.
"""

import argparse
import sys
from pathlib import Path
from typing import Any, Dict, List, Sequence, Tuple

from joblib import Parallel, delayed

from cutrend.errors import ConfigError, CUTrendError
from cutrend.inference.diagnostics import ChainSummary, chain_diagnostics
from cutrend.inference.pmmh import Chain, pmmh
from cutrend.inference.theta import INFERENCE_MODELS
from cutrend.io.artifacts import provenance, write_chain, write_csv, write_json, write_summary
from cutrend.io.config import RunConfig, apply_overrides, config_hash, load_config
from cutrend.io.observations import load_observations, observed_prevalence_table
from cutrend.model.epi import Observation
from cutrend.utils.logging import configure_logging, get_logger
from cutrend.utils.rng import METHOD, RandomStream

logger = get_logger(__name__)

FIT_SUMMARY_FILE = "fit_summary.json"
OBSERVED_FILE = "observed_prevalence.csv"


def chain_seed(master_seed: int, model: str) -> int:
    """Seed of the chain for ``model``; independent of which other models run."""
    return RandomStream(master_seed).spawn(METHOD, INFERENCE_MODELS.index(model)).derive_seed()


def fit_model(
    observations: Sequence[Observation], model: str, config: RunConfig
) -> Tuple[Chain, ChainSummary]:
    """
    Run one chain and summarise it.

    Args:
        observations: Survey data (at least one row)
        model: Trajectory model
        config: Run configuration

    Returns:
        Tuple of (chain, summary)
    """
    settings = config.pmmh_settings(chain_seed(config.seed, model))
    chain = pmmh(observations, model, settings, config.grid.build())
    summary = chain_diagnostics(
        chain, thin=config.inference.thin, thresholds=config.fit.thresholds
    )
    logger.info(
        "model_fitted", model=model, delta_cu_median=round(summary.delta_cu.median, 4),
        acceptance_rate=round(summary.acceptance_rate, 4),
    )
    return chain, summary


def _fit_and_write(
    observations: Sequence[Observation], model: str, config: RunConfig, prov: Dict[str, Any]
) -> Dict[str, Any]:
    chain, summary = fit_model(observations, model, config)
    directory = Path(config.output_dir) / model
    model_prov = dict(prov, model=model, chain_seed=chain.seed)
    write_chain(chain, directory, model_prov)
    write_summary(summary, directory, model_prov)
    return {
        "acceptance_rate": summary.acceptance_rate,
        "n_draws": summary.n_draws,
        "chain_seed": chain.seed,
        "delta_cu": summary.delta_cu.as_dict(),
        "min_ess": float(summary.parameters["ess"].min()),
    }


def run_fit(config: RunConfig) -> Dict[str, Any]:
    """
    Execute the fit workflow.

    Returns:
        The fit summary written to ``fit_summary.json``

    Raises:
        ConfigError: if no observation file is configured
        DataError: if the observation file is unusable
    """
    if not config.fit.observations:
        raise ConfigError("fit workflow needs fit.observations")
    grid = config.grid.build()
    observations = load_observations(config.fit.observations, grid)
    prov = provenance(config_hash(config), config.seed)
    out = Path(config.output_dir)

    models: List[str] = list(config.fit.models)
    n_jobs = min(config.threads, len(models))
    fitted = Parallel(n_jobs=n_jobs)(
        delayed(_fit_and_write)(observations, model, config, prov) for model in models
    )

    write_csv(observed_prevalence_table(observations), out / OBSERVED_FILE, prov)
    summary = {
        "workflow": "fit",
        "observations": len(observations),
        "thresholds": list(config.fit.thresholds),
        "models": dict(zip(models, fitted)),
    }
    write_json(summary, out / FIT_SUMMARY_FILE, prov)
    logger.info("fit_completed", models=models, output_dir=str(out))
    return summary


def main() -> int:
    """Fitting pipeline entry point."""
    parser = argparse.ArgumentParser(description="CUTrend Fitting Pipeline")
    parser.add_argument("--config", type=str, help="Path to the YAML run configuration")
    parser.add_argument("--data", type=str, help="Observation CSV (overrides fit.observations)")
    parser.add_argument("--out", type=str, help="Output directory")
    parser.add_argument("--model", choices=list(INFERENCE_MODELS), help="Fit a single trajectory model")
    parser.add_argument("--seed", type=int, help="Master seed")
    parser.add_argument("--iterations", type=int, help="PMMH iterations")
    parser.add_argument("--particles", type=int, help="Particle count")
    args = parser.parse_args()

    try:
        config = apply_overrides(
            load_config(args.config), workflow="fit", seed=args.seed, out=args.out,
            model=args.model, particles=args.particles, iterations=args.iterations,
            observations=args.data,
        )
        configure_logging(config.logging.level, config.logging.format, config.logging.file)
        print("🚀 Starting CUTrend fit")
        summary = run_fit(config)
        for model, result in summary["models"].items():
            delta = result["delta_cu"]
            print(f"  {model}: ΔCU median {delta['median']:.3f} [{delta['lower']:.3f}, {delta['upper']:.3f}]")
        print(f"✅ Fit completed, artifacts in {config.output_dir}")
        return 0
    except CUTrendError as e:
        print(f"❌ Fit failed: {e}")
        return e.exit_code


if __name__ == "__main__":
    sys.exit(main())
