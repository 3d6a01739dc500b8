"""
CUTrend CLI - Report Command
States the ΔCU lower bounds supported by a fit and an ensemble evaluation.
"""

from typing import Any, Dict

from cli.commands import failure
from cutrend.io.config import RunConfig
from pipelines.evaluation.report import run_report


def report_command(config: RunConfig) -> Dict[str, Any]:
    try:
        payload = run_report(config)
        return {
            "success": True,
            "output_dir": config.output_dir,
            "claims": {m: c["statement"] for m, c in payload["claims"].items()},
        }
    except Exception as e:
        return failure(e)
