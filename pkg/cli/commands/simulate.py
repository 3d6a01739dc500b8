"""
CUTrend CLI - Simulate Command
Writes a synthetic observation file with its known truth.
"""

from typing import Any, Dict

from cli.commands import failure
from cutrend.io.config import RunConfig
from pipelines.fitting.simulate import run_simulate


def simulate_command(config: RunConfig) -> Dict[str, Any]:
    try:
        record = run_simulate(config)
        return {
            "success": True,
            "output_dir": config.output_dir,
            "delta_cu": record["delta_cu"],
            "target_bin": record["target_bin"],
        }
    except Exception as e:
        return failure(e)
