"""
CUTrend Priors
Prior distributions for the transmission parameters, the initial
prevalences and the CU trajectory parameters.

Each prior also owns the bijection used by the random-walk sampler: bounded
uniforms are mapped through a scaled logit, half-normals through a shifted log.
"""

from dataclasses import dataclass
from typing import Dict, Mapping, Optional, Union

import numpy as np
from scipy.special import expit, logit
from scipy.stats import halfnorm, uniform

_LOG_SQRT_2PI = 0.5 * np.log(2.0 * np.pi)


@dataclass(frozen=True)
class Uniform:
    """Continuous uniform prior on ``[low, high]``."""

    low: float
    high: float

    def __post_init__(self) -> None:
        if not self.high > self.low:
            raise ValueError(f"empty uniform support [{self.low}, {self.high}]")

    def logpdf(self, x: float) -> float:
        if self.low <= x <= self.high:
            return -float(np.log(self.high - self.low))
        return -np.inf

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> Union[float, np.ndarray]:
        return rng.uniform(self.low, self.high, size=size)

    def transform(self, x: float) -> float:
        return float(logit((x - self.low) / (self.high - self.low)))

    def untransform(self, z: float) -> float:
        return float(self.low + (self.high - self.low) * expit(z))

    def log_jacobian(self, x: float) -> float:
        """log |dx/dz| at ``x``."""
        if not self.low < x < self.high:
            return -np.inf
        return float(np.log(x - self.low) + np.log(self.high - x) - np.log(self.high - self.low))

    def quantile(self, q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return self.low + (self.high - self.low) * np.asarray(q)

    def cdf(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return uniform.cdf(x, loc=self.low, scale=self.high - self.low)


@dataclass(frozen=True)
class HalfNormal:
    """Normal(loc, scale²) restricted to ``x > loc``."""

    loc: float
    scale: float

    def logpdf(self, x: float) -> float:
        if not x > self.loc:
            return -np.inf
        u = (x - self.loc) / self.scale
        return float(np.log(2.0) - _LOG_SQRT_2PI - np.log(self.scale) - 0.5 * u * u)

    def sample(self, rng: np.random.Generator, size: Optional[int] = None) -> Union[float, np.ndarray]:
        return self.loc + self.scale * np.abs(rng.standard_normal(size=size))

    def transform(self, x: float) -> float:
        return float(np.log(x - self.loc))

    def untransform(self, z: float) -> float:
        return float(self.loc + np.exp(z))

    def log_jacobian(self, x: float) -> float:
        if not x > self.loc:
            return -np.inf
        return float(np.log(x - self.loc))

    def quantile(self, q: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return halfnorm.ppf(q, loc=self.loc, scale=self.scale)

    def cdf(self, x: Union[float, np.ndarray]) -> Union[float, np.ndarray]:
        return halfnorm.cdf(x, loc=self.loc, scale=self.scale)


Prior = Union[Uniform, HalfNormal]

# Ranges for the reference district; durations are in months.
EPI_PRIORS: Dict[str, Uniform] = {
    "init_prev_F": Uniform(0.0, 0.05),
    "init_prev_C": Uniform(0.0, 0.05),
    "p_S": Uniform(0.0006, 0.0055),
    "p_C": Uniform(0.0001, 0.007),
    "e": Uniform(0.80, 0.95),
    "n": Uniform(1.0, 2.0),
    "C_H": Uniform(46.6, 54.0),
    "C_L": Uniform(20.0, 23.7),
    "ratio_CF": Uniform(7.0, 19.0),
    "fsw_career": Uniform(45.0, 54.0),
    "client_career": Uniform(154.0, 191.0),
    "hiv_survival": Uniform(87.0, 138.5),
}

DEFAULT_N_F = 1943

T_IN_PRIOR = Uniform(1985.0, 2009.0)
UNIT_PRIOR = Uniform(0.0, 1.0)
VOLATILITY_PRIOR = Uniform(0.0, 2.0)
SHAPE_PRIOR = HalfNormal(1.0, 1000.0)
RATE_PRIOR = HalfNormal(0.0, 1000.0)

CU_PRIORS: Dict[str, Mapping[str, Prior]] = {
    "bm": {"cu0": UNIT_PRIOR, "sigma": VOLATILITY_PRIOR},
    "dbr": {"cu0": UNIT_PRIOR, "eta": UNIT_PRIOR, "m": SHAPE_PRIOR, "t_in": T_IN_PRIOR},
    "dsigm": {"cu0": UNIT_PRIOR, "eta": UNIT_PRIOR, "k": RATE_PRIOR, "t_in": T_IN_PRIOR},
    "step": {"cu0": UNIT_PRIOR, "cu1": UNIT_PRIOR, "t_in": T_IN_PRIOR},
}

M_CAP = 1.0e6
M_FLOOR = 1.0 + 1e-9


def sample_epi_values(rng: np.random.Generator) -> Dict[str, float]:
    """One joint draw of the initial prevalences and transmission parameters."""
    return {name: float(prior.sample(rng)) for name, prior in EPI_PRIORS.items()}
