"""
CUTrend PMMH Sampler
Particle-marginal Metropolis-Hastings over the joint parameter vector, with
an adaptive Gaussian random walk in transformed space.

The acceptance ratio uses the particle-filter likelihood estimate times the
prior density and the transform Jacobian. For deterministic trajectory priors
the filter returns the exact likelihood, which makes the sampler a plain
Metropolis-Hastings chain.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from cutrend.errors import DomainError, InitializationError
from cutrend.inference.particle_filter import FilterResult, particle_filter
from cutrend.inference.proposal import RunningCovariance, scaled_covariance
from cutrend.inference.theta import ThetaLayout, ThetaVector
from cutrend.model.epi import Observation, Stratum
from cutrend.model.grid import TimeGrid
from cutrend.model.priors import DEFAULT_N_F
from cutrend.model.trajectories import (
    DEFAULT_UNIT_MONTHS,
    DELTA_CU_END,
    DELTA_CU_START,
    delta_cu,
)
from cutrend.utils.logging import get_logger
from cutrend.utils.rng import ACCEPT, FILTER, INIT, PROPOSAL, RandomStream

logger = get_logger(__name__)


@dataclass(frozen=True)
class PMMHSettings:
    """
    Sampler settings.

    Attributes:
        iterations: Chain length M
        particles: Particle count N for stochastic trajectory priors
        burn_in_fraction: Share of the chain discarded by summaries
        adaptation_start: First iteration using the empirical covariance
        adaptation_freeze_fraction: Adaptation stops at this share of the burn-in
        proposal_scale: Multiplier of the prior-based initial proposal only;
            the adapted proposal uses the 2.38^2/d scaling alone
        adaptation_epsilon: Ridge added to the empirical covariance
        path_thin: Store the CU and prevalence paths every ``path_thin`` iterations
        max_init_draws: Prior draws tried before giving up on initialisation
        prior_covariance_draws: Prior draws used for the initial proposal
        covariance_record_every: Interval of the proposal covariance history
        record_states: Whether prevalence paths are stored
        seed: Master seed of the chain
    """

    iterations: int = 50000
    particles: int = 1000
    burn_in_fraction: float = 0.2
    adaptation_start: int = 500
    adaptation_freeze_fraction: float = 0.5
    proposal_scale: float = 0.5
    adaptation_epsilon: float = 1e-8
    path_thin: int = 1
    max_init_draws: int = 1000
    prior_covariance_draws: int = 1000
    covariance_record_every: int = 1000
    record_states: bool = True
    n_fsw: int = DEFAULT_N_F
    unit_months: float = DEFAULT_UNIT_MONTHS
    delta_cu_start: float = DELTA_CU_START
    delta_cu_end: float = DELTA_CU_END
    progress: bool = False
    seed: int = 0

    def __post_init__(self) -> None:
        if self.iterations < 1:
            raise DomainError("iterations must be at least 1")
        if self.particles < 1:
            raise DomainError("particles must be at least 1")
        if not 0.0 <= self.burn_in_fraction < 1.0:
            raise DomainError("burn_in_fraction must lie in [0, 1)")
        if not 0.0 <= self.adaptation_freeze_fraction <= 1.0:
            raise DomainError("adaptation_freeze_fraction must lie in [0, 1]")
        if self.path_thin < 1:
            raise DomainError("path_thin must be at least 1")
        if self.proposal_scale <= 0.0:
            raise DomainError("proposal_scale must be positive")

    @property
    def burn_in(self) -> int:
        return int(self.iterations * self.burn_in_fraction)

    @property
    def adaptation_freeze(self) -> int:
        return int(self.burn_in * self.adaptation_freeze_fraction)


@dataclass
class Chain:
    """Ordered record of PMMH draws."""

    model: str
    names: Tuple[str, ...]
    grid: TimeGrid
    seed: int
    burn_in: int
    theta: np.ndarray
    log_likelihood: np.ndarray
    log_prior: np.ndarray
    accepted: np.ndarray
    delta_cu: np.ndarray
    path_iterations: np.ndarray
    cu_paths: np.ndarray
    path_thin: int = 1
    fsw_prevalence: Optional[np.ndarray] = None
    client_prevalence: Optional[np.ndarray] = None
    proposal_history: List[Tuple[int, np.ndarray]] = field(default_factory=list)

    def __len__(self) -> int:
        return int(self.theta.shape[0])

    @property
    def acceptance_rate(self) -> float:
        return float(np.mean(self.accepted)) if len(self) else float("nan")

    def column(self, name: str) -> np.ndarray:
        return self.theta[:, self.names.index(name)]


def metropolis_accept(log_ratio: float, u: float) -> bool:
    """Accept with probability min(1, exp(log_ratio)); NaN and -inf never accept."""
    return bool(log_ratio >= 0.0 or u < np.exp(log_ratio))


def _initial_proposal(layout: ThetaLayout, settings: PMMHSettings, rng: np.random.Generator) -> np.ndarray:
    draws = np.array([
        layout.sample_prior(rng, settings.max_init_draws).transformed()
        for _ in range(max(settings.prior_covariance_draws, layout.dim + 1))
    ])
    covariance = np.atleast_2d(np.cov(draws, rowvar=False))
    return settings.proposal_scale ** 2 * scaled_covariance(covariance, settings.adaptation_epsilon)


def _initial_state(
    layout: ThetaLayout,
    observations: Sequence[Observation],
    grid: TimeGrid,
    settings: PMMHSettings,
    stream: RandomStream,
) -> Tuple[ThetaVector, FilterResult]:
    rng = stream.spawn(INIT).generator()
    for attempt in range(settings.max_init_draws):
        theta = layout.sample_prior(rng, settings.max_init_draws)
        result = particle_filter(
            theta, observations, grid, settings.particles,
            stream.spawn(INIT, 1, attempt), settings.record_states,
        )
        if np.isfinite(result.log_likelihood):
            return theta, result
    raise InitializationError(
        f"no starting point with finite likelihood in {settings.max_init_draws} prior draws"
    )


def pmmh(
    observations: Sequence[Observation],
    model: str,
    settings: PMMHSettings,
    grid: Optional[TimeGrid] = None,
) -> Chain:
    """
    Run particle-marginal Metropolis-Hastings for one trajectory model.

    Args:
        observations: Prevalence observations (may be empty: the chain then samples the prior)
        model: Trajectory model, one of "bm", "dbr", "dsigm"
        settings: Sampler settings, including the seed
        grid: Time grid (default 1985-2010 at half-month steps)

    Returns:
        Chain with one record per iteration

    Raises:
        InitializationError: if no in-support starting point is found
    """
    grid = grid or TimeGrid()
    layout = ThetaLayout(model, settings.n_fsw, settings.unit_months)
    stream = RandomStream(settings.seed)
    observations = sorted(observations, key=lambda o: (o.time, o.stratum.value))

    theta, result = _initial_state(layout, observations, grid, settings, stream)
    z = theta.transformed()
    values = layout.untransform(z)
    current_ll = result.log_likelihood
    current_lp = layout.log_prior(values) + layout.log_jacobian(values)
    current = result

    proposal_cov = _initial_proposal(layout, settings, stream.spawn(INIT, 2).generator())
    chol = np.linalg.cholesky(proposal_cov)
    running = RunningCovariance(layout.dim)

    m = settings.iterations
    n_paths = (m + settings.path_thin - 1) // settings.path_thin
    chain = Chain(
        model=model,
        names=layout.names,
        grid=grid,
        seed=settings.seed,
        burn_in=settings.burn_in,
        theta=np.empty((m, layout.dim)),
        log_likelihood=np.empty(m),
        log_prior=np.empty(m),
        accepted=np.zeros(m, dtype=bool),
        delta_cu=np.empty(m),
        path_iterations=np.arange(0, m, settings.path_thin),
        path_thin=settings.path_thin,
        cu_paths=np.empty((n_paths, grid.n_nodes)),
        fsw_prevalence=np.empty((n_paths, grid.n_nodes)) if settings.record_states else None,
        client_prevalence=np.empty((n_paths, grid.n_nodes)) if settings.record_states else None,
        proposal_history=[(0, proposal_cov.copy())],
    )
    current_delta = delta_cu(current.cu_path, grid, settings.delta_cu_start, settings.delta_cu_end)

    logger.info(
        "pmmh_started", model=model, iterations=m, particles=settings.particles,
        observations=len(observations), dim=layout.dim, seed=settings.seed,
    )
    freeze = settings.adaptation_freeze
    for it in tqdm(range(m), desc=f"pmmh[{model}]", disable=not settings.progress):
        gen = stream.spawn(PROPOSAL, it).generator()
        z_star = z + chol @ gen.standard_normal(layout.dim)
        values_star = layout.untransform(z_star)
        lp_star = layout.log_prior(values_star)
        if np.isfinite(lp_star):
            lp_star += layout.log_jacobian(values_star)
        accepted = False
        if np.isfinite(lp_star):
            proposal = particle_filter(
                layout.vector(values_star), observations, grid, settings.particles,
                stream.spawn(FILTER, it), settings.record_states,
            )
            log_ratio = proposal.log_likelihood + lp_star - (current_ll + current_lp)
            u = stream.spawn(ACCEPT, it).generator().uniform()
            accepted = metropolis_accept(log_ratio, u)
            if accepted:
                z, values = z_star, values_star
                current_ll, current_lp, current = proposal.log_likelihood, lp_star, proposal
                current_delta = delta_cu(
                    current.cu_path, grid, settings.delta_cu_start, settings.delta_cu_end
                )

        chain.theta[it] = values
        chain.log_likelihood[it] = current_ll
        chain.log_prior[it] = layout.log_prior(values)
        chain.accepted[it] = accepted
        chain.delta_cu[it] = current_delta
        if it % settings.path_thin == 0:
            row = it // settings.path_thin
            chain.cu_paths[row] = current.cu_path
            if settings.record_states and current.state_path is not None:
                chain.fsw_prevalence[row] = current.state_path.prevalence(Stratum.FSW)
                chain.client_prevalence[row] = current.state_path.prevalence(Stratum.CLIENT)

        running.update(z)
        if settings.adaptation_start <= it < freeze and running.n >= 2:
            try:
                chol = np.linalg.cholesky(running.proposal(settings.adaptation_epsilon))
            except np.linalg.LinAlgError:
                logger.warning("proposal_not_positive_definite", iteration=it)
            if (it + 1) % settings.covariance_record_every == 0 or it + 1 == freeze:
                chain.proposal_history.append((it + 1, chol @ chol.T))

    logger.info(
        "pmmh_finished", model=model, acceptance_rate=round(chain.acceptance_rate, 4),
        final_log_likelihood=float(current_ll),
    )
    return chain
