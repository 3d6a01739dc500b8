"""
CUTrend CLI - Fit Command
Fits the configured trajectory models to an observation file.
"""

from typing import Any, Dict

from cli.commands import failure
from cutrend.io.config import RunConfig
from pipelines.fitting.fit import run_fit


def fit_command(config: RunConfig) -> Dict[str, Any]:
    """
    Run the fit workflow.

    Args:
        config: Run configuration with ``fit.observations`` set

    Returns:
        Dictionary with the per-model ΔCU summaries
    """
    try:
        summary = run_fit(config)
        return {
            "success": True,
            "output_dir": config.output_dir,
            "models": {m: r["delta_cu"] for m, r in summary["models"].items()},
        }
    except Exception as e:
        return failure(e)
