"""
CUTrend Simulated Truths
Draws plausible synthetic epidemics with a known CU trajectory and simulates
the prevalence surveys an analyst would have observed.
"""

from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from cutrend.errors import DomainError, NumericalInstabilityError, RejectionBudgetExceeded
from cutrend.inference.theta import epi_params_from_values
from cutrend.io.config import EnsembleConfig, SurveySpec
from cutrend.model.epi import EpiParams, Observation, StatePath, Stratum, integrate
from cutrend.model.grid import MONTHS_PER_YEAR, T0, TimeGrid
from cutrend.model.priors import DEFAULT_N_F, sample_epi_values
from cutrend.model.trajectories import (
    DELTA_CU_END,
    DELTA_CU_START,
    DSigm,
    Step,
    curve_path,
    delta_cu,
)
from cutrend.utils.logging import get_logger
from cutrend.utils.rng import RandomStream

logger = get_logger(__name__)

TruthTrajectory = Union[DSigm, Step]


@dataclass(frozen=True)
class SimulatedTruth:
    """
    One accepted synthetic epidemic.

    Attributes:
        epi_values: Drawn initial prevalences and transmission parameters
        params: The EpiParams built from them
        trajectory: True CU trajectory
        cu_path: True CU at every grid node
        state_path: Epidemic states along the true path
        delta_cu: True change in CU over the ΔCU window
        target_bin: Stratification bin the truth was drawn for
        observations: Simulated surveys
        attempts: Draws needed before acceptance
    """

    epi_values: Dict[str, float]
    params: EpiParams
    trajectory: TruthTrajectory
    cu_path: np.ndarray
    state_path: StatePath
    delta_cu: float
    target_bin: int
    observations: List[Observation]
    attempts: int


def bin_bounds(edges: Sequence[float], index: int) -> Tuple[float, float]:
    if not 0 <= index < len(edges) - 1:
        raise DomainError(f"bin {index} outside [0, {len(edges) - 2}]")
    return float(edges[index]), float(edges[index + 1])


def in_bin(value: float, edges: Sequence[float], index: int) -> bool:
    """Bins are half-open ``[low, high)``; the last bin includes its upper edge."""
    low, high = bin_bounds(edges, index)
    if index == len(edges) - 2:
        return low <= value <= high
    return low <= value < high


def _months(t: float) -> float:
    return (t - T0) * MONTHS_PER_YEAR


def _dsigm_truth(
    target: float, config: EnsembleConfig, rng: np.random.Generator, window: Tuple[float, float]
) -> Optional[DSigm]:
    cu0 = rng.uniform(0.0, 1.0 - target)
    k = rng.uniform(*config.dsigm_k_range)
    t_in = rng.uniform(config.min_shift_time, config.shift_time_max)
    tau_in = _months(t_in)
    rise = (1.0 + np.exp(-k * tau_in)) * (
        1.0 / (1.0 + np.exp(-k * (_months(window[1]) - tau_in)))
        - 1.0 / (1.0 + np.exp(-k * (_months(window[0]) - tau_in)))
    )
    if rise <= 0.0:
        return None
    eta = cu0 + target / rise
    if eta > 1.0:
        return None
    return DSigm(cu0=float(cu0), eta=float(eta), k=float(k), t_in=float(t_in))


def _step_truth(
    target: float, config: EnsembleConfig, rng: np.random.Generator, window: Tuple[float, float]
) -> Step:
    cu0 = rng.uniform(0.0, 1.0 - target)
    low = max(config.min_shift_time, window[0])
    high = min(config.shift_time_max, window[1])
    t_in = rng.uniform(low, high)
    return Step(cu0=float(cu0), cu1=float(cu0 + target), t_in=float(t_in))


def simulate_observations(
    state_path: StatePath, schedule: Sequence[SurveySpec], rng: np.random.Generator
) -> List[Observation]:
    """Binomial survey counts at the model prevalence of the nearest grid node."""
    observations = []
    for survey in schedule:
        prevalence = state_path.prevalence(survey.stratum)[state_path.grid.node_index(survey.time)]
        positives = int(rng.binomial(survey.sample_size, float(np.clip(prevalence, 0.0, 1.0))))
        observations.append(Observation(survey.time, survey.stratum, positives, survey.sample_size))
    return sorted(observations, key=lambda o: (o.time, o.stratum.value))


def generate_truth(
    config: EnsembleConfig,
    stream: RandomStream,
    target_bin: int,
    grid: Optional[TimeGrid] = None,
    n_fsw: int = DEFAULT_N_F,
    window: Tuple[float, float] = (DELTA_CU_START, DELTA_CU_END),
) -> SimulatedTruth:
    """
    Draw a truth whose ΔCU falls in ``target_bin`` and passes the plausibility filters.

    Transmission parameters come from their priors. The trajectory's ΔCU is
    aimed at a uniform draw inside the bin and checked on the grid; the
    shift must start after ``config.min_shift_time`` and the FSW prevalence at
    ``config.prevalence_check_time`` must fall within ``config.prevalence_bounds``.

    Raises:
        RejectionBudgetExceeded: if no draw is accepted within ``config.max_rejections``
    """
    grid = grid or TimeGrid()
    edges = config.bin_edges()
    low, high = bin_bounds(edges, target_bin)
    rng = stream.generator()
    check_node = grid.node_index(config.prevalence_check_time)

    for attempt in range(1, config.max_rejections + 1):
        epi_values = sample_epi_values(rng)
        target = rng.uniform(low, high)
        if config.generator == "dsigm":
            trajectory = _dsigm_truth(target, config, rng, window)
        else:
            trajectory = _step_truth(target, config, rng, window)
        if trajectory is None or not trajectory.t_in > config.min_shift_time:
            continue

        cu = curve_path(trajectory, grid)
        change = float(delta_cu(cu, grid, *window))
        if not in_bin(change, edges, target_bin):
            continue

        params = epi_params_from_values(epi_values, n_fsw)
        try:
            state_path = integrate(params, cu, grid)
        except NumericalInstabilityError:
            continue
        prevalence = float(state_path.prevalence(Stratum.FSW)[check_node])
        if not config.prevalence_bounds[0] <= prevalence <= config.prevalence_bounds[1]:
            continue

        observations = simulate_observations(state_path, config.schedule, rng)
        logger.debug(
            "truth_accepted", bin=target_bin, delta_cu=round(change, 4),
            attempts=attempt, generator=config.generator,
        )
        return SimulatedTruth(
            epi_values=epi_values,
            params=params,
            trajectory=trajectory,
            cu_path=cu,
            state_path=state_path,
            delta_cu=change,
            target_bin=target_bin,
            observations=observations,
            attempts=attempt,
        )

    raise RejectionBudgetExceeded(
        f"no plausible {config.generator} truth in bin [{low:.3f}, {high:.3f}] "
        f"after {config.max_rejections} draws",
        config.max_rejections,
    )
