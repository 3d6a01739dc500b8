"""
CUTrend Prior Check
Monte Carlo quantiles of the prior-implied ΔCU for each trajectory model.
"""

from pathlib import Path
from typing import Any, Dict

import numpy as np
import pandas as pd

from cutrend.inference.theta import INFERENCE_MODELS
from cutrend.io.artifacts import provenance, write_csv
from cutrend.io.config import RunConfig, config_hash
from cutrend.model.trajectories import prior_delta_cu
from cutrend.utils.logging import get_logger
from cutrend.utils.rng import PRIOR_CHECK, RandomStream

logger = get_logger(__name__)

PRIOR_QUANTILES_FILE = "prior_delta_cu_quantiles.csv"


def prior_quantiles(config: RunConfig) -> pd.DataFrame:
    """One row per (model, quantile) with the prior ΔCU value."""
    grid = config.grid.build()
    settings = config.prior_check
    rows = []
    for model in settings.models:
        rng = RandomStream(config.seed).spawn(PRIOR_CHECK, INFERENCE_MODELS.index(model)).generator()
        draws = prior_delta_cu(
            model,
            settings.draws,
            grid,
            rng,
            config.trajectories.delta_cu_start,
            config.trajectories.delta_cu_end,
            config.trajectories.volatility_unit_months,
        )
        values = np.quantile(draws, settings.quantiles)
        rows.extend(
            {"model": model, "quantile": float(q), "delta_cu": float(v)}
            for q, v in zip(settings.quantiles, values)
        )
        logger.info(
            "prior_delta_cu", model=model, draws=settings.draws,
            q025=round(float(np.quantile(draws, 0.025)), 4),
            q975=round(float(np.quantile(draws, 0.975)), 4),
        )
    return pd.DataFrame(rows, columns=["model", "quantile", "delta_cu"])


def run_prior_check(config: RunConfig) -> Dict[str, Any]:
    table = prior_quantiles(config)
    path = write_csv(
        table, Path(config.output_dir) / PRIOR_QUANTILES_FILE, provenance(config_hash(config), config.seed)
    )
    return {"path": str(path), "quantiles": table.to_dict(orient="records")}
