"""
CUTrend CLI - Ensemble Command
Runs the simulation-based evaluation of the inference methods.
"""

from typing import Any, Dict

from cli.commands import failure
from cutrend.io.config import RunConfig
from pipelines.evaluation.ensemble import run_ensemble


def ensemble_command(config: RunConfig) -> Dict[str, Any]:
    """
    Run the ensemble workflow.

    Returns:
        Dictionary with the report header and the metrics at the first threshold
    """
    try:
        outcome = run_ensemble(config)
        first = outcome.metrics[outcome.metrics["T"] == outcome.metrics["T"].min()]
        return {
            "success": True,
            "output_dir": config.output_dir,
            "header": outcome.report["header"],
            "metrics": first.set_index("method")[["bias", "mse", "sensitivity", "specificity", "auc"]].to_dict(orient="index"),
        }
    except Exception as e:
        return failure(e)
