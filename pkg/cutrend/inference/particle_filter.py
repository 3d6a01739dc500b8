"""
CUTrend Particle Filter
Bootstrap particle filter over CU trajectories and the transmission ODE.

Particles propagate their CU path between consecutive observation nodes by
the trajectory prior's forward sampler, integrate the ODE alongside, and are
weighted by the binomial observation likelihood. Systematic resampling runs
at every observation epoch. Deterministic trajectory priors need no
particles: their likelihood is evaluated once along the single path.
"""

from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import logsumexp

from cutrend.errors import DomainError
from cutrend.inference.theta import ThetaVector
from cutrend.model.epi import (
    EpiParams,
    EpiState,
    Observation,
    StatePath,
    stratum_prevalence,
    group_by_node,
    integrate,
    integrate_batch,
    log_likelihood_along_path,
    log_obs_likelihood,
)
from cutrend.model.grid import MONTHS_PER_YEAR, TimeGrid
from cutrend.model.trajectories import (
    LatentPropagator,
    TrajectoryModel,
    curve_path,
    propagator,
)
from cutrend.utils.logging import get_logger
from cutrend.utils.rng import RandomStream, as_stream

logger = get_logger(__name__)

_TAIL_EPOCH = 1 << 20


def systematic_resample(weights: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """
    Systematic resampling: one uniform offset, N evenly spaced pointers.

    Args:
        weights: Normalised weights (N,)
        rng: Generator supplying the offset

    Returns:
        Ancestor indices (N,)
    """
    n = weights.shape[0]
    positions = (rng.uniform() + np.arange(n)) / n
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return np.clip(np.searchsorted(cumulative, positions, side="right"), 0, n - 1)


@dataclass
class ParticleSystem:
    """
    Particle population with its genealogy.

    Attributes:
        latent: Current latent value per particle (N,)
        infected: Current infected proportions per particle (N, 3)
        weights: Normalised weights after the last epoch (N,)
        log_likelihood: Running log-likelihood estimate
        latent_segments: Per-epoch latent values at the epoch's new nodes
        state_segments: Per-epoch infected proportions at the epoch's new nodes
        ancestors: Per-epoch resampling indices
    """

    latent: np.ndarray
    infected: np.ndarray
    weights: np.ndarray
    log_likelihood: float = 0.0
    initial_latent: np.ndarray = field(default_factory=lambda: np.empty(0))
    latent_segments: List[np.ndarray] = field(default_factory=list)
    state_segments: List[np.ndarray] = field(default_factory=list)
    ancestors: List[np.ndarray] = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.latent.shape[0]

    def resample(self, indices: np.ndarray) -> None:
        self.latent = self.latent[indices]
        self.infected = self.infected[indices]
        self.ancestors.append(indices)
        self.weights = np.full(self.size, 1.0 / self.size)

    def trace(self, j: int) -> Tuple[np.ndarray, np.ndarray]:
        """Latent and state path of particle ``j`` of the last epoch, back to node 0."""
        latent_parts: List[np.ndarray] = []
        state_parts: List[np.ndarray] = []
        for epoch in range(len(self.latent_segments) - 1, -1, -1):
            latent_parts.append(self.latent_segments[epoch][j])
            state_parts.append(self.state_segments[epoch][j])
            if epoch > 0:
                j = int(self.ancestors[epoch - 1][j])
        latent_parts.append(self.initial_latent[j : j + 1])
        latent = np.concatenate(latent_parts[::-1])
        states = np.concatenate(state_parts[::-1], axis=0) if state_parts else np.empty((0, 3))
        return latent, states


@dataclass(frozen=True)
class FilterResult:
    """Likelihood estimate and one CU/state path sampled from the filter."""

    log_likelihood: float
    cu_path: np.ndarray
    state_path: Optional[StatePath]

    @property
    def degenerate(self) -> bool:
        return self.log_likelihood == -np.inf


def _epoch_log_weights(observations: Sequence[Observation], infected: np.ndarray) -> np.ndarray:
    log_alpha = np.zeros(infected.shape[0])
    for obs in observations:
        h = np.clip(stratum_prevalence(infected, obs.stratum), 0.0, 1.0)
        log_alpha += log_obs_likelihood(obs, h)
    return log_alpha


def _deterministic_filter(
    model: TrajectoryModel,
    params: EpiParams,
    observations: Sequence[Observation],
    grid: TimeGrid,
    record_states: bool,
) -> FilterResult:
    cu = curve_path(model, grid)
    if not observations and not record_states:
        return FilterResult(0.0, cu, None)
    state_path = integrate(params, cu, grid)
    log_lik = log_likelihood_along_path(observations, state_path)
    return FilterResult(log_lik, cu, state_path if record_states else None)


def _draw_index(weights: np.ndarray, rng: np.random.Generator) -> int:
    cumulative = np.cumsum(weights)
    cumulative[-1] = 1.0
    return int(min(np.searchsorted(cumulative, rng.uniform(), side="right"), weights.shape[0] - 1))


def _propagate(
    prop: LatentPropagator,
    params: EpiParams,
    system: ParticleSystem,
    n_steps: int,
    grid: TimeGrid,
    start_node: int,
    gen: np.random.Generator,
) -> Tuple[np.ndarray, np.ndarray]:
    if n_steps == 0:
        return np.empty((system.size, 0)), np.empty((system.size, 0, 3))
    new_latent = prop.advance(system.latent, n_steps, gen)
    cu_nodes = prop.to_cu(np.concatenate([system.latent[:, None], new_latent], axis=1))
    start_time = grid.t0 + start_node * grid.delta / MONTHS_PER_YEAR
    states = integrate_batch(params, system.infected, cu_nodes[:, :-1], grid.delta, start_time)
    return new_latent, states


def particle_filter(
    theta: ThetaVector,
    observations: Sequence[Observation],
    grid: TimeGrid,
    n_particles: int,
    stream: Union[int, RandomStream],
    record_states: bool = True,
) -> FilterResult:
    """
    Estimate the marginal likelihood of ``theta`` and sample one CU path.

    Epoch ``e`` draws from the substream ``stream.spawn(e)``; the particle's
    row of each draw matrix is its own slice, so results do not depend on how
    particle work is split. Substreams are keyed per epoch, not per particle:
    permuting the particles within an epoch changes which draws each one
    receives, so results are reproducible only for a fixed particle order.

    Args:
        theta: Parameter vector
        observations: Observations, any order; grouped by grid node
        grid: Time grid
        n_particles: Particle count for stochastic trajectory priors
        stream: Random stream (or integer seed)
        record_states: Whether to return the sampled state path

    Returns:
        FilterResult; ``log_likelihood`` is -inf when every particle weight
        vanishes at some epoch, and the caller must reject the proposal
    """
    if n_particles < 1:
        raise DomainError(f"particle count must be at least 1, got {n_particles}")
    stream = as_stream(stream)
    params = theta.epi_params()
    model = theta.trajectory()
    groups = group_by_node(observations, grid)

    prop = propagator(model, grid)
    if prop is None:
        return _deterministic_filter(model, params, observations, grid, record_states)

    latent0 = prop.initial(n_particles)
    system = ParticleSystem(
        latent=latent0,
        infected=np.tile(EpiState.initial(params).infected, (n_particles, 1)),
        weights=np.full(n_particles, 1.0 / n_particles),
        initial_latent=latent0.copy(),
    )

    start = 0
    for epoch, (node, obs_group) in enumerate(groups):
        gen = stream.spawn(epoch).generator()
        new_latent, states = _propagate(prop, params, system, node - start, grid, start, gen)
        if new_latent.shape[1] > 0:
            system.latent = new_latent[:, -1]
            system.infected = states[:, -1, :]
        system.latent_segments.append(new_latent)
        system.state_segments.append(states)

        log_alpha = _epoch_log_weights(obs_group, system.infected)
        if np.all(log_alpha == -np.inf):
            logger.debug("filter_weights_degenerate", epoch=epoch, node=node)
            return FilterResult(-np.inf, np.full(grid.n_nodes, np.nan), None)
        system.log_likelihood += float(logsumexp(log_alpha) - np.log(n_particles))
        system.weights = np.exp(log_alpha - logsumexp(log_alpha))
        if epoch < len(groups) - 1:
            system.resample(systematic_resample(system.weights, gen))
        start = node

    tail_gen = stream.spawn(_TAIL_EPOCH).generator()
    if groups:
        latent, states = system.trace(_draw_index(system.weights, tail_gen))
    else:
        latent, states = system.initial_latent[:1], np.empty((0, 3))

    # extend the sampled path past the last observation to the end of the grid
    remaining = grid.n_steps - start
    if remaining > 0:
        last_latent = latent[-1:]
        tail = prop.advance(last_latent, remaining, tail_gen)[0]
        latent = np.concatenate([latent, tail])
    cu = prop.to_cu(latent)

    state_path = None
    if record_states:
        infected0 = EpiState.initial(params).infected[None, :]
        last_state = states[-1:] if states.shape[0] else infected0
        tail_states = integrate_batch(
            params, last_state, cu[None, start:-1], grid.delta,
            grid.t0 + start * grid.delta / MONTHS_PER_YEAR,
        )[0]
        state_path = StatePath(grid, np.vstack([infected0, states, tail_states]))
    return FilterResult(system.log_likelihood, cu, state_path)
