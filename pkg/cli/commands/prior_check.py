"""
CUTrend CLI - Prior Check Command
Prior-implied ΔCU quantiles per trajectory model.
"""

from typing import Any, Dict

from cli.commands import failure
from cutrend.io.config import RunConfig
from pipelines.fitting.prior_check import run_prior_check


def prior_check_command(config: RunConfig) -> Dict[str, Any]:
    try:
        result = run_prior_check(config)
        return {"success": True, "output_dir": config.output_dir, **result}
    except Exception as e:
        return failure(e)
