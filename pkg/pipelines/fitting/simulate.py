"""
CUTrend Simulation Workflow
Writes one synthetic dataset with its known truth for later fitting.
"""

from pathlib import Path
from typing import Any, Dict

import pandas as pd

from cutrend.io.artifacts import provenance, write_csv, write_json
from cutrend.io.config import RunConfig, config_hash
from cutrend.io.observations import write_observations
from cutrend.model.epi import Stratum
from cutrend.model.trajectories import model_values
from cutrend.utils.logging import get_logger
from cutrend.utils.rng import TRUTH, RandomStream
from pipelines.evaluation.truth import SimulatedTruth, generate_truth

logger = get_logger(__name__)

OBSERVATIONS_FILE = "observations.csv"
TRUTH_FILE = "truth.json"
TRUTH_PATHS_FILE = "truth_paths.csv"


def truth_record(truth: SimulatedTruth) -> Dict[str, Any]:
    return {
        "generator": truth.trajectory.kind,
        "trajectory": model_values(truth.trajectory),
        "epi": truth.epi_values,
        "delta_cu": truth.delta_cu,
        "target_bin": truth.target_bin,
        "attempts": truth.attempts,
    }


def truth_paths(truth: SimulatedTruth) -> pd.DataFrame:
    """True CU and prevalence at every grid node."""
    return pd.DataFrame(
        {
            "time": truth.state_path.grid.times(),
            "cu": truth.cu_path,
            "fsw_prevalence": truth.state_path.prevalence(Stratum.FSW),
            "client_prevalence": truth.state_path.prevalence(Stratum.CLIENT),
        }
    )


def run_simulate(config: RunConfig) -> Dict[str, Any]:
    """
    Execute the simulate workflow.

    The ΔCU bin comes from ``simulate.target_bin`` or, when unset, from a
    uniform draw over the ensemble bins.
    """
    stream = RandomStream(config.seed).spawn(TRUTH)
    target_bin = config.simulate.target_bin
    if target_bin is None:
        target_bin = int(stream.spawn(1).generator().integers(config.ensemble.n_bins))

    truth = generate_truth(
        config.ensemble,
        stream.spawn(0),
        target_bin,
        config.grid.build(),
        config.epi.n_fsw,
        (config.trajectories.delta_cu_start, config.trajectories.delta_cu_end),
    )
    out = Path(config.output_dir)
    prov = provenance(config_hash(config), config.seed)
    write_observations(truth.observations, out / OBSERVATIONS_FILE, prov)
    write_csv(truth_paths(truth), out / TRUTH_PATHS_FILE, prov)
    record = truth_record(truth)
    write_json(record, out / TRUTH_FILE, prov)
    logger.info(
        "dataset_simulated", delta_cu=round(truth.delta_cu, 4), bin=target_bin,
        observations=len(truth.observations), output_dir=str(out),
    )
    return record
