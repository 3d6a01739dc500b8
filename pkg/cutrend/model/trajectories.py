"""
CUTrend Trajectory Priors
Condom-use trajectory models: Brownian motion on the logit scale, the
Bertalanffy-Richards growth curve (dBR), the empirical sigmoid (dSigm),
stochastic growth around either curve, and the step function used to
generate simulation truths.

Curve time is measured in months since 1985.0. Rates k are per month. The
volatility sigma of BM and StochGrowth is expressed per square root of a
diffusion time unit of ``unit_months`` months (12 by default, i.e. years).
"""

from dataclasses import asdict, dataclass
from typing import Any, ClassVar, Dict, Mapping, Optional, Protocol, Tuple, Union

import numpy as np
from scipy.special import expit, logit

from cutrend.errors import DomainError
from cutrend.model.grid import MONTHS_PER_YEAR, T0, TimeGrid
from cutrend.model.priors import (
    CU_PRIORS,
    M_CAP,
    M_FLOOR,
    VOLATILITY_PRIOR,
)
from cutrend.utils.rng import RandomStream

DELTA_CU_START = 2003.0
DELTA_CU_END = 2009.25
DEFAULT_UNIT_MONTHS = MONTHS_PER_YEAR

RandomSource = Union[np.random.Generator, RandomStream]


def _generator(rng: RandomSource) -> np.random.Generator:
    if isinstance(rng, RandomStream):
        return rng.generator()
    return rng


def _check_unit(name: str, value: float, open_low: bool = False) -> None:
    ok = (0.0 < value <= 1.0) if open_low else (0.0 <= value <= 1.0)
    if not ok:
        raise DomainError(f"{name} must lie in {'(0' if open_low else '[0'}, 1], got {value}")


@dataclass(frozen=True)
class BM:
    """Brownian motion on logit(CU) anchored at ``cu0`` in 1985."""

    kind: ClassVar[str] = "bm"
    cu0: float
    sigma: float
    unit_months: float = DEFAULT_UNIT_MONTHS

    def __post_init__(self) -> None:
        if not 0.0 < self.cu0 < 1.0:
            raise DomainError(f"cu0 must lie in (0, 1), got {self.cu0}")
        if not (np.isfinite(self.sigma) and self.sigma >= 0.0):
            raise DomainError(f"sigma must be non-negative, got {self.sigma}")
        if not self.unit_months > 0.0:
            raise DomainError(f"unit_months must be positive, got {self.unit_months}")


@dataclass(frozen=True)
class DBR:
    """Bertalanffy-Richards curve through ``cu0`` in 1985 with inflection at ``t_in``."""

    kind: ClassVar[str] = "dbr"
    cu0: float
    eta: float
    m: float
    t_in: float

    def __post_init__(self) -> None:
        _check_unit("cu0", self.cu0, open_low=True)
        _check_unit("eta", self.eta, open_low=True)
        if not self.m >= M_FLOOR:
            raise DomainError(f"m must be at least {M_FLOOR}, got {self.m}")
        if not np.isfinite(self.t_in):
            raise DomainError("t_in must be finite")

    @property
    def in_support(self) -> bool:
        """Whether cu0 < m^(1/(1-m)) * eta, evaluated in logs."""
        return bool((self.m - 1.0) * np.log(self.eta / self.cu0) > np.log(self.m))


@dataclass(frozen=True)
class DSigm:
    """Empirical sigmoid from ``cu0`` in 1985 towards ``eta``, inflecting at ``t_in``."""

    kind: ClassVar[str] = "dsigm"
    cu0: float
    eta: float
    k: float
    t_in: float

    def __post_init__(self) -> None:
        _check_unit("cu0", self.cu0)
        _check_unit("eta", self.eta)
        if not (np.isfinite(self.k) and self.k > 0.0):
            raise DomainError(f"k must be strictly positive, got {self.k}")
        if not 1985.0 <= self.t_in <= 2009.0:
            raise DomainError(f"t_in must lie in [1985, 2009], got {self.t_in}")


@dataclass(frozen=True)
class StochGrowth:
    """Geometric Brownian perturbation of a growth curve's latent variable."""

    kind: ClassVar[str] = "stoch_growth"
    base: Union[DBR, DSigm]
    sigma: float
    unit_months: float = DEFAULT_UNIT_MONTHS

    def __post_init__(self) -> None:
        if not (np.isfinite(self.sigma) and self.sigma >= 0.0):
            raise DomainError(f"sigma must be non-negative, got {self.sigma}")
        if isinstance(self.base, DBR) and not self.base.in_support:
            raise DomainError("dBR base violates cu0 < m^(1/(1-m)) * eta")
        if isinstance(self.base, DSigm) and not self.base.eta > self.base.cu0:
            raise DomainError("dSigm base must grow: eta > cu0")


@dataclass(frozen=True)
class Step:
    """``cu0`` before ``t_in`` and ``cu1`` from ``t_in`` on."""

    kind: ClassVar[str] = "step"
    cu0: float
    cu1: float
    t_in: float

    def __post_init__(self) -> None:
        _check_unit("cu0", self.cu0)
        _check_unit("cu1", self.cu1)


TrajectoryModel = Union[BM, DBR, DSigm, StochGrowth, Step]

MODEL_TYPES: Dict[str, Any] = {
    "bm": BM,
    "dbr": DBR,
    "dsigm": DSigm,
    "step": Step,
}


def model_values(model: TrajectoryModel) -> Dict[str, float]:
    """Prior-bearing parameters of a model, flattened."""
    if isinstance(model, StochGrowth):
        values = {f"base_{k}": v for k, v in model_values(model.base).items()}
        values["sigma"] = model.sigma
        return values
    values = asdict(model)
    values.pop("unit_months", None)
    return values


def build_model(
    kind: str, values: Mapping[str, float], unit_months: float = DEFAULT_UNIT_MONTHS
) -> TrajectoryModel:
    """Construct a model of ``kind`` from its named parameters."""
    if kind not in MODEL_TYPES:
        raise DomainError(f"unknown trajectory model {kind!r}")
    names = CU_PRIORS[kind].keys()
    kwargs = {name: float(values[name]) for name in names}
    if kind == "bm":
        return BM(unit_months=unit_months, **kwargs)
    return MODEL_TYPES[kind](**kwargs)


# Closed forms, vectorised over parameters and time (months since 1985).

def _months_since_origin(t: Union[float, np.ndarray]) -> np.ndarray:
    return (np.asarray(t, dtype=float) - T0) * MONTHS_PER_YEAR


def _log_expm1(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    small = np.minimum(x, 30.0)
    return np.where(x > 30.0, x + np.log1p(-np.exp(-np.maximum(x, 30.0))), np.log(np.expm1(small)))


def _dbr_offset(cu0: Any, eta: Any, m: Any) -> np.ndarray:
    """log((cu0/eta)^(1-m) - 1), the value of k * tau_in + log(m - 1)."""
    return _log_expm1((np.asarray(m) - 1.0) * np.log(np.asarray(eta) / np.asarray(cu0)))


def _dbr_rate(cu0: Any, eta: Any, m: Any, t_in: Any) -> np.ndarray:
    tau_in = _months_since_origin(t_in)
    return (_dbr_offset(cu0, eta, m) - np.log(np.asarray(m) - 1.0)) / tau_in


def _dbr_from_log_factor(eta: Any, m: Any, offset: Any, log_g: Any) -> np.ndarray:
    # CU = eta * (1 + A g)^(-1/(m-1)) with A = exp(offset)
    return np.asarray(eta) * np.exp(-np.logaddexp(0.0, offset + log_g) / (np.asarray(m) - 1.0))


def _dbr_values(cu0: Any, eta: Any, m: Any, t_in: Any, months: Any) -> np.ndarray:
    k = _dbr_rate(cu0, eta, m, t_in)
    return _dbr_from_log_factor(eta, m, _dbr_offset(cu0, eta, m), -k * np.asarray(months))


def _dsigm_coefficients(cu0: Any, eta: Any, k: Any, t_in: Any) -> Tuple[np.ndarray, np.ndarray]:
    tau_in = _months_since_origin(t_in)
    b = (np.asarray(eta) - np.asarray(cu0)) * (1.0 + np.exp(-np.asarray(k) * tau_in))
    return np.asarray(eta) - b, b


def _dsigm_values(cu0: Any, eta: Any, k: Any, t_in: Any, months: Any) -> np.ndarray:
    a, b = _dsigm_coefficients(cu0, eta, k, t_in)
    tau_in = _months_since_origin(t_in)
    return a + b * expit(np.asarray(k) * (np.asarray(months) - tau_in))


def dbr_coefficients(model: DBR) -> Tuple[float, float]:
    """
    Recover (B, k) of CU(t) = eta (1 - B e^{-k t})^{1/(1-m)}.

    Solves CU(1985) = cu0 jointly with k * tau_in = log(B / (1 - m)), where
    tau_in is the inflection time in months since 1985.

    Raises:
        DomainError: if the support constraint fails or t_in is not after 1985
    """
    _require_dbr_support(model)
    k = float(_dbr_rate(model.cu0, model.eta, model.m, model.t_in))
    tau_in = float(_months_since_origin(model.t_in))
    with np.errstate(over="ignore"):
        B = (1.0 - model.m) * float(np.exp(k * tau_in))
    return B, k


def _require_dbr_support(model: DBR) -> None:
    if not model.in_support:
        raise DomainError(
            f"dBR requires cu0 < m^(1/(1-m)) * eta; got cu0={model.cu0}, "
            f"eta={model.eta}, m={model.m}"
        )
    if not model.t_in > T0:
        raise DomainError(f"dBR inflection time must follow {T0}, got {model.t_in}")


def dbr_curve(model: DBR, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """Evaluate the dBR curve at decimal year(s) ``t``."""
    _require_dbr_support(model)
    value = _dbr_values(model.cu0, model.eta, model.m, model.t_in, _months_since_origin(t))
    return float(value) if np.ndim(t) == 0 else value


def dsigm_curve(model: DSigm, t: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
    """
    Evaluate CU(t) = a + b / (1 + c x(t)) with x(t) = e^{-k (t - 1985)}.

    c = e^{k tau_in}, b = (1 + 1/c)(eta - cu0) and a = eta - b, so the curve
    starts at cu0, tends to eta and inflects at t_in.
    """
    value = _dsigm_values(model.cu0, model.eta, model.k, model.t_in, _months_since_origin(t))
    return float(value) if np.ndim(t) == 0 else value


def _grid_months(grid: TimeGrid) -> np.ndarray:
    return (grid.t0 - T0) * MONTHS_PER_YEAR + grid.months()


def step_path(model: Step, grid: TimeGrid) -> np.ndarray:
    """``cu0`` on nodes before ``t_in``, ``cu1`` on nodes at or after it."""
    switch = _months_since_origin(model.t_in)
    before = _grid_months(grid) < switch - 1e-9
    return np.where(before, model.cu0, model.cu1).astype(float)


class LatentPropagator(Protocol):
    """Forward sampler of a stochastic trajectory, one latent value per particle."""

    def initial(self, n: int) -> np.ndarray: ...

    def advance(self, latent: np.ndarray, n_steps: int, rng: np.random.Generator) -> np.ndarray: ...

    def to_cu(self, latent: np.ndarray) -> np.ndarray: ...


class BMPropagator:
    """Latent x = logit(CU) with independent N(0, sigma^2 h) increments."""

    def __init__(self, model: BM, grid: TimeGrid):
        self.model = model
        self.step_sd = model.sigma * np.sqrt(grid.delta / model.unit_months)

    def initial(self, n: int) -> np.ndarray:
        return np.full(n, float(logit(self.model.cu0)))

    def advance(self, latent: np.ndarray, n_steps: int, rng: np.random.Generator) -> np.ndarray:
        eps = rng.standard_normal((latent.shape[0], n_steps))
        return latent[:, None] + np.cumsum(self.step_sd * eps, axis=1)

    def to_cu(self, latent: np.ndarray) -> np.ndarray:
        return expit(latent)


class StochGrowthPropagator:
    """
    Latent log g, where the growth curve's latent variable is x(t) = x(t0) g(t).

    dx = -k x dt + sigma x dB is advanced by the exact log-space step, so g
    stays positive and CU stays strictly below eta.
    """

    def __init__(self, model: StochGrowth, grid: TimeGrid):
        self.model = model
        h = grid.delta
        h_unit = grid.delta / model.unit_months
        base = model.base
        if isinstance(base, DBR):
            _require_dbr_support(base)
            k = float(_dbr_rate(base.cu0, base.eta, base.m, base.t_in))
            self._offset = float(_dbr_offset(base.cu0, base.eta, base.m))
        else:
            k = base.k
            self._a, self._b = (float(v) for v in _dsigm_coefficients(base.cu0, base.eta, base.k, base.t_in))
            self._log_c = base.k * float(_months_since_origin(base.t_in))
        self.k = k
        self.drift = -k * h - 0.5 * model.sigma ** 2 * h_unit
        self.step_sd = model.sigma * np.sqrt(h_unit)
        self.start = (grid.t0 - T0) * MONTHS_PER_YEAR

    def initial(self, n: int) -> np.ndarray:
        return np.full(n, -self.k * self.start)

    def advance(self, latent: np.ndarray, n_steps: int, rng: np.random.Generator) -> np.ndarray:
        eps = rng.standard_normal((latent.shape[0], n_steps))
        return latent[:, None] + np.cumsum(self.drift + self.step_sd * eps, axis=1)

    def to_cu(self, latent: np.ndarray) -> np.ndarray:
        base = self.model.base
        if isinstance(base, DBR):
            return _dbr_from_log_factor(base.eta, base.m, self._offset, latent)
        return self._a + self._b * expit(-(self._log_c + latent))


def propagator(model: TrajectoryModel, grid: TimeGrid) -> Optional[LatentPropagator]:
    """Forward sampler for stochastic models, None for deterministic ones."""
    match model:
        case BM():
            return BMPropagator(model, grid)
        case StochGrowth():
            return StochGrowthPropagator(model, grid)
        case _:
            return None


def _simulate(prop: LatentPropagator, grid: TimeGrid, rng: RandomSource) -> np.ndarray:
    start = prop.initial(1)
    latent = np.concatenate([start[:, None], prop.advance(start, grid.n_steps, _generator(rng))], axis=1)
    return prop.to_cu(latent)[0]


def bm_sample_path(model: BM, grid: TimeGrid, rng: RandomSource) -> np.ndarray:
    """One BM trajectory at every grid node."""
    return _simulate(BMPropagator(model, grid), grid, rng)


def stoch_growth_sample_path(model: StochGrowth, grid: TimeGrid, rng: RandomSource) -> np.ndarray:
    """One stochastic-growth trajectory at every grid node."""
    return _simulate(StochGrowthPropagator(model, grid), grid, rng)


def curve_path(model: Union[DBR, DSigm, Step], grid: TimeGrid) -> np.ndarray:
    months = _grid_months(grid)
    match model:
        case DBR():
            _require_dbr_support(model)
            return _dbr_values(model.cu0, model.eta, model.m, model.t_in, months)
        case DSigm():
            return _dsigm_values(model.cu0, model.eta, model.k, model.t_in, months)
        case Step():
            return step_path(model, grid)
    raise DomainError(f"{type(model).__name__} is not a deterministic trajectory")


def sample_path(model: TrajectoryModel, grid: TimeGrid, rng: Optional[RandomSource] = None) -> np.ndarray:
    """CU at every grid node for any trajectory model."""
    match model:
        case BM():
            return bm_sample_path(model, grid, _require_rng(rng))
        case StochGrowth():
            return stoch_growth_sample_path(model, grid, _require_rng(rng))
        case _:
            return curve_path(model, grid)


def _require_rng(rng: Optional[RandomSource]) -> RandomSource:
    if rng is None:
        raise DomainError("stochastic trajectories need a random stream")
    return rng


def trajectory_log_prior(model: TrajectoryModel) -> float:
    """Log prior density of the model's parameters; -inf off support."""
    if isinstance(model, StochGrowth):
        return trajectory_log_prior(model.base) + VOLATILITY_PRIOR.logpdf(model.sigma)
    priors = CU_PRIORS[model.kind]
    values = model_values(model)
    total = 0.0
    for name, prior in priors.items():
        total += prior.logpdf(values[name])
        if total == -np.inf:
            return -np.inf
    if isinstance(model, DBR) and not model.in_support:
        return -np.inf
    return float(total)


def delta_cu(
    cu_path: np.ndarray,
    grid: TimeGrid,
    t_a: float = DELTA_CU_START,
    t_b: float = DELTA_CU_END,
) -> Union[float, np.ndarray]:
    """
    CU at the node nearest ``t_b`` minus CU at the node nearest ``t_a``.

    ``cu_path`` may hold one path or a stack of paths (last axis = nodes).

    Raises:
        OutOfRangeError: if either time lies outside the grid
    """
    j_a = grid.node_index(t_a)
    j_b = grid.node_index(t_b)
    paths = np.asarray(cu_path, dtype=float)
    if paths.shape[-1] != grid.n_nodes:
        raise DomainError(f"CU path has {paths.shape[-1]} nodes, grid has {grid.n_nodes}")
    value = paths[..., j_b] - paths[..., j_a]
    return float(value) if np.ndim(value) == 0 else value


def sample_trajectory(
    kind: str,
    rng: np.random.Generator,
    unit_months: float = DEFAULT_UNIT_MONTHS,
    max_draws: int = 10000,
) -> TrajectoryModel:
    """One draw from the trajectory prior of ``kind``; dBR draws respect the joint constraint."""
    priors = CU_PRIORS[kind]
    for _ in range(max_draws):
        values = {name: float(prior.sample(rng)) for name, prior in priors.items()}
        if kind == "dbr":
            values["m"] = float(np.clip(values["m"], M_FLOOR, M_CAP))
        if kind == "bm" and not 0.0 < values["cu0"] < 1.0:
            continue
        model = build_model(kind, values, unit_months)
        if np.isfinite(trajectory_log_prior(model)):
            return model
    raise DomainError(f"no in-support {kind} prior draw in {max_draws} attempts")


def _sample_value_arrays(kind: str, n: int, rng: np.random.Generator) -> Dict[str, np.ndarray]:
    priors = CU_PRIORS[kind]
    values = {name: np.asarray(prior.sample(rng, size=n), dtype=float) for name, prior in priors.items()}
    if kind == "dbr":
        values["m"] = np.clip(values["m"], M_FLOOR, M_CAP)
        valid = (values["m"] - 1.0) * np.log(values["eta"] / values["cu0"]) > np.log(values["m"])
        while not np.all(valid):
            redo = ~valid
            fresh = _sample_value_arrays("dbr", int(redo.sum()), rng)
            for name in values:
                values[name][redo] = fresh[name]
            valid = (values["m"] - 1.0) * np.log(values["eta"] / values["cu0"]) > np.log(values["m"])
    return values


def prior_delta_cu(
    kind: str,
    n_draws: int,
    grid: TimeGrid,
    rng: np.random.Generator,
    t_a: float = DELTA_CU_START,
    t_b: float = DELTA_CU_END,
    unit_months: float = DEFAULT_UNIT_MONTHS,
) -> np.ndarray:
    """
    Monte Carlo draws of the prior-implied change in CU between ``t_a`` and ``t_b``.

    BM values use the exact Gaussian marginals of x at the two nodes, which
    equal the sum of the grid-step increments in distribution.
    """
    j_a, j_b = grid.node_index(t_a), grid.node_index(t_b)
    months = _grid_months(grid)
    m_a, m_b = months[j_a], months[j_b]
    with np.errstate(divide="ignore"):
        values = _sample_value_arrays(kind, n_draws, rng)
    if kind == "bm":
        x0 = logit(values["cu0"])
        start = months[0]
        sd_a = values["sigma"] * np.sqrt((m_a - start) / unit_months)
        sd_ab = values["sigma"] * np.sqrt((m_b - m_a) / unit_months)
        x_a = x0 + sd_a * rng.standard_normal(n_draws)
        x_b = x_a + sd_ab * rng.standard_normal(n_draws)
        return expit(x_b) - expit(x_a)
    if kind == "dbr":
        args = (values["cu0"], values["eta"], values["m"], values["t_in"])
        return _dbr_values(*args, m_b) - _dbr_values(*args, m_a)
    if kind == "dsigm":
        args = (values["cu0"], values["eta"], values["k"], values["t_in"])
        return _dsigm_values(*args, m_b) - _dsigm_values(*args, m_a)
    raise DomainError(f"no prior ΔCU for trajectory model {kind!r}")
