"""
CUTrend Parameter Vectors
Ordered parameter vectors for one trajectory-model choice, with the
per-coordinate transforms used by the random-walk sampler.
"""

from dataclasses import dataclass, field
from typing import Dict, Mapping, Tuple, Union

import numpy as np

from cutrend.errors import DomainError, InitializationError
from cutrend.model.epi import EpiParams
from cutrend.model.priors import CU_PRIORS, DEFAULT_N_F, EPI_PRIORS, M_CAP, M_FLOOR, Prior
from cutrend.model.trajectories import (
    DEFAULT_UNIT_MONTHS,
    DBR,
    TrajectoryModel,
    build_model,
)

INFERENCE_MODELS = ("bm", "dbr", "dsigm")


@dataclass(frozen=True)
class ThetaLayout:
    """
    Coordinate layout of the joint parameter vector for one trajectory model.

    Order is the initial prevalences, then the transmission parameters, then
    the trajectory parameters.
    """

    model: str
    n_fsw: int = DEFAULT_N_F
    unit_months: float = DEFAULT_UNIT_MONTHS
    names: Tuple[str, ...] = field(init=False)
    priors: Tuple[Prior, ...] = field(init=False)

    def __post_init__(self) -> None:
        if self.model not in INFERENCE_MODELS:
            raise DomainError(
                f"no inference prior for trajectory model {self.model!r}; "
                f"expected one of {INFERENCE_MODELS}"
            )
        cu_priors = CU_PRIORS[self.model]
        object.__setattr__(self, "names", tuple(EPI_PRIORS) + tuple(cu_priors))
        object.__setattr__(self, "priors", tuple(EPI_PRIORS.values()) + tuple(cu_priors.values()))

    @property
    def dim(self) -> int:
        return len(self.names)

    @property
    def cu_names(self) -> Tuple[str, ...]:
        return tuple(CU_PRIORS[self.model])

    def vector(self, values: Union[np.ndarray, Mapping[str, float]]) -> "ThetaVector":
        if isinstance(values, Mapping):
            values = np.array([float(values[name]) for name in self.names])
        return ThetaVector(self, np.asarray(values, dtype=float))

    def transform(self, values: np.ndarray) -> np.ndarray:
        return np.array([p.transform(v) for p, v in zip(self.priors, values)])

    def untransform(self, z: np.ndarray) -> np.ndarray:
        return np.array([p.untransform(v) for p, v in zip(self.priors, z)])

    def log_prior(self, values: np.ndarray) -> float:
        """Joint log prior density, including the dBR support constraint."""
        total = 0.0
        for prior, value in zip(self.priors, values):
            total += prior.logpdf(float(value))
            if total == -np.inf:
                return -np.inf
        if self.model == "dbr":
            cu = dict(zip(self.names, values))
            if not (cu["m"] >= M_FLOOR and cu["cu0"] > 0.0 and cu["eta"] > 0.0):
                return -np.inf
            if not DBR(cu["cu0"], cu["eta"], cu["m"], cu["t_in"]).in_support:
                return -np.inf
        return float(total)

    def log_jacobian(self, values: np.ndarray) -> float:
        """log |d theta / d z| of the transformed-space parameterisation."""
        return float(sum(p.log_jacobian(float(v)) for p, v in zip(self.priors, values)))

    def sample_prior(self, rng: np.random.Generator, max_draws: int = 1000) -> "ThetaVector":
        """One joint prior draw inside the support, by rejection."""
        for _ in range(max_draws):
            values = np.array([float(p.sample(rng)) for p in self.priors])
            if self.model == "dbr":
                j = self.names.index("m")
                values[j] = float(np.clip(values[j], M_FLOOR, M_CAP))
            if np.isfinite(self.log_prior(values)) and np.isfinite(self.log_jacobian(values)):
                return ThetaVector(self, values)
        raise InitializationError(
            f"no in-support {self.model} prior draw in {max_draws} attempts"
        )


@dataclass(frozen=True)
class ThetaVector:
    """Parameter values on their natural scale, laid out by a ThetaLayout."""

    layout: ThetaLayout
    values: np.ndarray

    def __post_init__(self) -> None:
        if self.values.shape != (self.layout.dim,):
            raise DomainError(
                f"expected {self.layout.dim} parameter values, got {self.values.shape}"
            )

    def as_dict(self) -> Dict[str, float]:
        return {name: float(v) for name, v in zip(self.layout.names, self.values)}

    def transformed(self) -> np.ndarray:
        return self.layout.transform(self.values)

    @property
    def log_prior(self) -> float:
        return self.layout.log_prior(self.values)

    def epi_params(self) -> EpiParams:
        return epi_params_from_values(self.as_dict(), self.layout.n_fsw)

    def trajectory(self) -> TrajectoryModel:
        v = self.as_dict()
        return build_model(self.layout.model, v, self.layout.unit_months)


def epi_params_from_values(values: Mapping[str, float], n_fsw: int = DEFAULT_N_F) -> EpiParams:
    """EpiParams from named prior draws; durations in months become monthly rates."""
    return EpiParams(
        p_S=values["p_S"],
        p_C=values["p_C"],
        e=values["e"],
        n=values["n"],
        C_H=values["C_H"],
        C_L=values["C_L"],
        N_F=n_fsw,
        ratio_CF=values["ratio_CF"],
        mu_S=1.0 / values["fsw_career"],
        mu_C=1.0 / values["client_career"],
        alpha=1.0 / values["hiv_survival"],
        init_prev_F=values["init_prev_F"],
        init_prev_C=values["init_prev_C"],
    )
