"""
CUTrend Transmission Model
Forces of infection, the six-compartment HIV ODE, fixed-step RK4 integration
over a piecewise-constant CU path, and the binomial observation model.

States are stored as within-group proportions. FSWs split evenly into high-
and low-risk groups (N_H = N_L = N_F / 2), so the FSW prevalence is the
unweighted mean of the two group prevalences.
"""

from dataclasses import dataclass, fields
from enum import Enum
from typing import Dict, Iterable, List, Sequence, Tuple, Union

import numpy as np
from scipy.stats import binom

from cutrend.errors import DomainError, NumericalInstabilityError
from cutrend.model.grid import MONTHS_PER_YEAR, TimeGrid

CONSERVATION_TOL = 1e-9
CLAMP_TOL = 1e-6

ArrayLike = Union[float, np.ndarray]


class Stratum(str, Enum):
    FSW = "fsw"
    CLIENT = "client"

    @classmethod
    def parse(cls, value: Union[str, "Stratum"]) -> "Stratum":
        if isinstance(value, Stratum):
            return value
        try:
            return cls(str(value).strip().lower())
        except ValueError:
            raise DomainError(
                f"unknown stratum {value!r}; expected one of "
                f"{[s.value for s in cls]}"
            ) from None


@dataclass(frozen=True)
class Observation:
    """One prevalence survey: ``positives`` out of ``sample_size`` at ``time``."""

    time: float
    stratum: Stratum
    positives: int
    sample_size: int

    def __post_init__(self) -> None:
        object.__setattr__(self, "stratum", Stratum.parse(self.stratum))
        if self.sample_size <= 0:
            raise DomainError(f"sample_size must be positive, got {self.sample_size}")
        if self.positives < 0:
            raise DomainError(f"positives must be non-negative, got {self.positives}")
        if self.positives > self.sample_size:
            raise DomainError(
                f"positives ({self.positives}) exceed sample_size ({self.sample_size})"
            )

    @property
    def prevalence(self) -> float:
        return self.positives / self.sample_size


@dataclass(frozen=True)
class EpiParams:
    """Static biological and behavioural parameters plus 1985 initial prevalences.

    Rates are per month.
    """

    p_S: float
    p_C: float
    e: float
    n: float
    C_H: float
    C_L: float
    N_F: int
    ratio_CF: float
    mu_S: float
    mu_C: float
    alpha: float
    init_prev_F: float
    init_prev_C: float

    def __post_init__(self) -> None:
        for name in ("p_S", "p_C", "e", "init_prev_F", "init_prev_C"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        for name in ("C_H", "C_L", "mu_S", "mu_C", "alpha", "ratio_CF"):
            value = getattr(self, name)
            if not value > 0.0:
                raise DomainError(f"{name} must be strictly positive, got {value}")
        if not self.n >= 1.0:
            raise DomainError(f"n must be at least 1, got {self.n}")
        if self.N_F < 2:
            raise DomainError(f"N_F must be at least 2, got {self.N_F}")

    @property
    def N_C(self) -> float:
        return self.ratio_CF * self.N_F

    @property
    def N_H(self) -> float:
        return self.N_F / 2.0

    @property
    def N_L(self) -> float:
        return self.N_F / 2.0

    @property
    def mixing_weights(self) -> Tuple[float, float]:
        """Share of client contacts with high- and low-risk FSWs."""
        high = self.C_H * self.N_H
        low = self.C_L * self.N_L
        return high / (high + low), low / (high + low)

    def as_dict(self) -> Dict[str, float]:
        return {f.name: getattr(self, f.name) for f in fields(self)}


@dataclass(frozen=True)
class EpiState:
    """Susceptible and infected proportions of each group at one time."""

    s_H: float
    i_H: float
    s_L: float
    i_L: float
    s_C: float
    i_C: float

    def __post_init__(self) -> None:
        for name in ("s_H", "i_H", "s_L", "i_L", "s_C", "i_C"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise DomainError(f"{name} must lie in [0, 1], got {value}")
        for s, i in (("s_H", "i_H"), ("s_L", "i_L"), ("s_C", "i_C")):
            total = getattr(self, s) + getattr(self, i)
            if abs(total - 1.0) > CONSERVATION_TOL:
                raise DomainError(f"{s} + {i} = {total}, expected 1")

    @classmethod
    def from_infected(cls, i_H: float, i_L: float, i_C: float) -> "EpiState":
        return cls(1.0 - i_H, i_H, 1.0 - i_L, i_L, 1.0 - i_C, i_C)

    @classmethod
    def initial(cls, params: EpiParams) -> "EpiState":
        return cls.from_infected(params.init_prev_F, params.init_prev_F, params.init_prev_C)

    @property
    def infected(self) -> np.ndarray:
        return np.array([self.i_H, self.i_L, self.i_C])


@dataclass(frozen=True)
class StateDerivative:
    ds_H: float
    di_H: float
    ds_L: float
    di_L: float
    ds_C: float
    di_C: float


@dataclass(frozen=True)
class StatePath:
    """Infected proportions ``(i_H, i_L, i_C)`` at every grid node.

    Susceptible proportions are ``1 - i``, which keeps per-group conservation
    exact.
    """

    grid: TimeGrid
    infected: np.ndarray

    def __post_init__(self) -> None:
        if self.infected.shape != (self.grid.n_nodes, 3):
            raise DomainError(
                f"state path shape {self.infected.shape} does not match "
                f"{self.grid.n_nodes} grid nodes"
            )

    def __len__(self) -> int:
        return self.grid.n_nodes

    def __getitem__(self, j: int) -> EpiState:
        i_H, i_L, i_C = (float(v) for v in self.infected[j])
        return EpiState.from_infected(i_H, i_L, i_C)

    def prevalence(self, stratum: Union[Stratum, str]) -> np.ndarray:
        """Prevalence of a stratum at every node."""
        return stratum_prevalence(self.infected, Stratum.parse(stratum))


def _transmission(p: float, e: float, n: float, cu: ArrayLike) -> ArrayLike:
    # 1 - (1 - p (1 - e cu))^n, accurate for small p
    return -np.expm1(n * np.log1p(-p * (1.0 - e * cu)))


def _check_cu(cu: ArrayLike) -> None:
    cu_arr = np.asarray(cu)
    if np.any(~np.isfinite(cu_arr)) or np.any(cu_arr < 0.0) or np.any(cu_arr > 1.0):
        raise DomainError("condom use must lie in [0, 1]")


def force_of_infection(params: EpiParams, cu: ArrayLike) -> Tuple[ArrayLike, ArrayLike, ArrayLike]:
    """
    Per-month forces of infection for high-risk FSWs, low-risk FSWs and clients.

    Args:
        params: Transmission parameters
        cu: Condom use, scalar or array

    Returns:
        Tuple (beta_H, beta_L, beta_C), broadcast like ``cu``
    """
    _check_cu(cu)
    to_fsw = _transmission(params.p_S, params.e, params.n, cu)
    to_client = _transmission(params.p_C, params.e, params.n, cu)
    client_scale = 0.5 * (params.C_H + params.C_L) * params.N_F / params.N_C
    beta_H = params.C_H * to_fsw
    beta_L = params.C_L * to_fsw
    beta_C = client_scale * to_client
    if np.ndim(cu) == 0:
        return float(beta_H), float(beta_L), float(beta_C)
    return beta_H, beta_L, beta_C


def _infected_rhs(
    infected: np.ndarray,
    beta_H: np.ndarray,
    beta_L: np.ndarray,
    beta_C: np.ndarray,
    params: EpiParams,
) -> np.ndarray:
    i_H = infected[..., 0]
    i_L = infected[..., 1]
    i_C = infected[..., 2]
    w_H, w_L = params.mixing_weights
    exit_F = params.mu_S + params.alpha
    exit_C = params.mu_C + params.alpha
    d = np.empty_like(infected)
    d[..., 0] = beta_H * (1.0 - i_H) * i_C - exit_F * i_H
    d[..., 1] = beta_L * (1.0 - i_L) * i_C - exit_F * i_L
    d[..., 2] = beta_C * (1.0 - i_C) * (w_H * i_H + w_L * i_L) - exit_C * i_C
    return d


def ode_rhs(state: EpiState, params: EpiParams, cu: float) -> StateDerivative:
    """
    Time derivatives of the six proportions under constant condom use.

    Retired and deceased individuals are replaced by susceptibles, so each
    susceptible derivative is the negated infected derivative.
    """
    beta_H, beta_L, beta_C = force_of_infection(params, cu)
    d = _infected_rhs(
        state.infected, np.float64(beta_H), np.float64(beta_L), np.float64(beta_C), params
    )
    di_H, di_L, di_C = (float(v) for v in d)
    return StateDerivative(-di_H, di_H, -di_L, di_L, -di_C, di_C)


def _clamp(infected: np.ndarray, time: float) -> np.ndarray:
    if np.any(infected < -CLAMP_TOL) or np.any(infected > 1.0 + CLAMP_TOL) or not np.all(
        np.isfinite(infected)
    ):
        raise NumericalInstabilityError(
            f"state proportion left [0, 1] at t={time:.4f}; reduce the grid step",
            time=time,
        )
    return np.clip(infected, 0.0, 1.0)


def integrate_batch(
    params: EpiParams,
    infected0: np.ndarray,
    cu_steps: np.ndarray,
    delta: float,
    start_time: float = 0.0,
) -> np.ndarray:
    """
    RK4-integrate a batch of particles over consecutive grid intervals.

    Args:
        params: Transmission parameters shared by the batch
        infected0: Array (N, 3) of infected proportions at the first node
        cu_steps: Array (N, S) of condom use held constant on each interval
        delta: Step size in months
        start_time: Calendar time of the first node, for error reports

    Returns:
        Array (N, S, 3) of infected proportions at the S following nodes
    """
    infected = np.array(infected0, dtype=float, copy=True)
    n_particles, n_steps = cu_steps.shape
    out = np.empty((n_particles, n_steps, 3))
    if n_steps == 0:
        return out
    beta_H, beta_L, beta_C = force_of_infection(params, cu_steps)
    half = 0.5 * delta
    for j in range(n_steps):
        bh, bl, bc = beta_H[:, j], beta_L[:, j], beta_C[:, j]
        k1 = _infected_rhs(infected, bh, bl, bc, params)
        k2 = _infected_rhs(infected + half * k1, bh, bl, bc, params)
        k3 = _infected_rhs(infected + half * k2, bh, bl, bc, params)
        k4 = _infected_rhs(infected + delta * k3, bh, bl, bc, params)
        infected = infected + (delta / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        infected = _clamp(infected, start_time + (j + 1) * delta / MONTHS_PER_YEAR)
        out[:, j, :] = infected
    return out


def integrate(params: EpiParams, cu_path: Sequence[float], grid: TimeGrid) -> StatePath:
    """
    Integrate the transmission ODE over the whole grid.

    Args:
        params: Transmission parameters and initial prevalences
        cu_path: Condom use at every grid node; node j's value holds on [t_j, t_j+1)
        grid: Time grid

    Returns:
        StatePath with one state per grid node
    """
    cu = np.asarray(cu_path, dtype=float)
    if cu.shape != (grid.n_nodes,):
        raise DomainError(
            f"CU path has {cu.size} values, grid has {grid.n_nodes} nodes"
        )
    infected0 = EpiState.initial(params).infected
    steps = integrate_batch(params, infected0[None, :], cu[None, :-1], grid.delta, grid.t0)
    infected = np.vstack([infected0[None, :], steps[0]])
    return StatePath(grid, infected)


def stratum_prevalence(infected: np.ndarray, stratum: Stratum) -> np.ndarray:
    if stratum is Stratum.FSW:
        return 0.5 * (infected[..., 0] + infected[..., 1])
    return infected[..., 2]


def observe_prevalence(state: EpiState, stratum: Union[Stratum, str]) -> float:
    """Model prevalence seen by a survey of the given stratum."""
    return float(stratum_prevalence(state.infected, Stratum.parse(stratum)))


def log_obs_likelihood(obs: Observation, h: ArrayLike) -> ArrayLike:
    """Binomial log-probability of the observed positives at model prevalence ``h``."""
    h_arr = np.asarray(h, dtype=float)
    if np.any(h_arr < 0.0) or np.any(h_arr > 1.0):
        raise DomainError("prevalence must lie in [0, 1]")
    with np.errstate(divide="ignore", invalid="ignore"):
        value = binom.logpmf(obs.positives, obs.sample_size, h_arr)
    if np.ndim(h) == 0:
        return float(value)
    return np.asarray(value)


def log_likelihood_along_path(
    observations: Iterable[Observation], state_path: StatePath
) -> float:
    """Sum of observation log-likelihoods along one deterministic state path."""
    total = 0.0
    for obs in observations:
        j = state_path.grid.node_index(obs.time)
        h = float(stratum_prevalence(state_path.infected[j], obs.stratum))
        total += log_obs_likelihood(obs, h)
    return total


def group_by_node(
    observations: Iterable[Observation], grid: TimeGrid
) -> List[Tuple[int, List[Observation]]]:
    """Observations grouped by grid node, in increasing node order."""
    groups: Dict[int, List[Observation]] = {}
    for obs in observations:
        groups.setdefault(grid.node_index(obs.time), []).append(obs)
    return sorted(groups.items())
