"""
CUTrend Chain Diagnostics
Posterior summaries of a PMMH chain: per-coordinate quantiles and effective
sample sizes, pointwise CU and prevalence bands, and the ΔCU summary.
"""

from dataclasses import dataclass, field
from typing import Dict, Optional, Sequence

import numpy as np
import pandas as pd

from cutrend.errors import DomainError
from cutrend.inference.pmmh import Chain
from cutrend.utils.logging import get_logger

logger = get_logger(__name__)

QUANTILES = (0.025, 0.25, 0.5, 0.75, 0.975)
DEFAULT_THRESHOLDS = (0.2, 0.3, 0.4)


def _quantile_label(q: float) -> str:
    return f"q{q * 100:g}".replace(".", "_")


def effective_sample_size(draws: Sequence[float]) -> float:
    """
    Effective sample size by Geyer's initial monotone sequence estimator.

    A constant chain carries no autocorrelation information and returns 1.
    """
    x = np.asarray(draws, dtype=float)
    n = x.size
    if n < 2:
        return float(n)
    centered = x - x.mean()
    if not np.any(centered) or not np.all(np.isfinite(centered)):
        return 1.0
    spectrum = np.fft.rfft(centered, n=2 * n)
    autocov = np.fft.irfft(spectrum * np.conjugate(spectrum))[:n]
    rho = autocov / autocov[0]

    n_pairs = n // 2
    pairs = rho[: 2 * n_pairs].reshape(n_pairs, 2).sum(axis=1)
    positive = pairs > 0.0
    cut = n_pairs if positive.all() else int(np.argmin(positive))
    pairs = np.minimum.accumulate(pairs[:cut])
    tau = -1.0 + 2.0 * float(pairs.sum())
    if tau <= 0.0:
        return float(n)
    return float(n / tau)


@dataclass(frozen=True)
class DeltaCUSummary:
    """Posterior summary of ΔCU computed from per-draw values."""

    mean: float
    median: float
    lower: float
    upper: float
    prob_above: Dict[float, float] = field(default_factory=dict)
    n_draws: int = 0

    def covers(self, value: float) -> bool:
        return self.lower <= value <= self.upper

    def as_dict(self) -> Dict[str, object]:
        return {
            "mean": self.mean,
            "median": self.median,
            "lower": self.lower,
            "upper": self.upper,
            "prob_above": {f"{t:g}": p for t, p in self.prob_above.items()},
            "n_draws": self.n_draws,
        }


def delta_cu_summary(
    draws: Sequence[float],
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
    level: float = 0.95,
) -> DeltaCUSummary:
    """
    Mean, median, equal-tailed credible interval and P(ΔCU > T) per threshold.

    Args:
        draws: Per-draw ΔCU values
        thresholds: Values T for the exceedance probabilities
        level: Credible level of the interval

    Returns:
        DeltaCUSummary
    """
    values = np.asarray(draws, dtype=float)
    if values.size == 0:
        raise DomainError("ΔCU summary needs at least one draw")
    alpha = (1.0 - level) / 2.0
    lower, median, upper = np.quantile(values, [alpha, 0.5, 1.0 - alpha])
    return DeltaCUSummary(
        mean=float(values.mean()),
        median=float(median),
        lower=float(lower),
        upper=float(upper),
        prob_above={float(t): float(np.mean(values > t)) for t in thresholds},
        n_draws=int(values.size),
    )


def pointwise_bands(paths: np.ndarray, times: np.ndarray) -> pd.DataFrame:
    """Per-node mean, median and 95% band of a stack of paths (draws × nodes)."""
    lower, median, upper = np.quantile(paths, [0.025, 0.5, 0.975], axis=0)
    return pd.DataFrame(
        {
            "time": times,
            "mean": paths.mean(axis=0),
            "median": median,
            "lower": lower,
            "upper": upper,
        }
    )


@dataclass
class ChainSummary:
    """
    Post-burn-in summary of one chain.

    Attributes:
        model: Trajectory model of the chain
        n_draws: Number of thinned post-burn-in parameter draws
        acceptance_rate: Acceptance rate over the whole chain
        parameters: One row per coordinate (mean, quantiles, ess, degenerate)
        cu_bands: Pointwise CU summary per grid node
        delta_cu: ΔCU summary from the per-draw values
        fsw_bands: Pointwise FSW prevalence summary, when states were stored
        client_bands: Pointwise client prevalence summary, when states were stored
    """

    model: str
    n_draws: int
    acceptance_rate: float
    parameters: pd.DataFrame
    cu_bands: pd.DataFrame
    delta_cu: DeltaCUSummary
    fsw_bands: Optional[pd.DataFrame] = None
    client_bands: Optional[pd.DataFrame] = None


def _path_rows(chain: Chain, burn_in: int, thin: int) -> np.ndarray:
    rows = np.flatnonzero(chain.path_iterations >= burn_in)
    return rows[:: max(1, thin // chain.path_thin)]


def chain_diagnostics(
    chain: Chain,
    burn_in: Optional[int] = None,
    thin: int = 1,
    thresholds: Sequence[float] = DEFAULT_THRESHOLDS,
) -> ChainSummary:
    """
    Summarise the post-burn-in, thinned draws of a chain.

    Args:
        chain: PMMH chain
        burn_in: Iterations discarded (defaults to the chain's own burn-in)
        thin: Keep every ``thin``-th draw after the burn-in
        thresholds: Thresholds for the ΔCU exceedance probabilities

    Returns:
        ChainSummary

    Raises:
        DomainError: if the burn-in leaves no draws
    """
    burn_in = chain.burn_in if burn_in is None else burn_in
    if not 0 <= burn_in < len(chain):
        raise DomainError(f"burn-in {burn_in} must lie in [0, {len(chain)})")
    if thin < 1:
        raise DomainError(f"thin must be at least 1, got {thin}")

    theta = chain.theta[burn_in::thin]
    records = []
    for j, name in enumerate(chain.names):
        column = theta[:, j]
        row: Dict[str, object] = {"parameter": name, "mean": float(column.mean())}
        row.update({_quantile_label(q): float(v) for q, v in zip(QUANTILES, np.quantile(column, QUANTILES))})
        row["ess"] = effective_sample_size(column)
        row["degenerate"] = bool(np.ptp(column) == 0.0)
        records.append(row)
    parameters = pd.DataFrame.from_records(records).set_index("parameter")

    times = chain.grid.times()
    rows = _path_rows(chain, burn_in, thin)
    if rows.size == 0:
        raise DomainError("no stored paths after the burn-in; lower path_thin or burn_in")
    summary = ChainSummary(
        model=chain.model,
        n_draws=int(theta.shape[0]),
        acceptance_rate=chain.acceptance_rate,
        parameters=parameters,
        cu_bands=pointwise_bands(chain.cu_paths[rows], times),
        delta_cu=delta_cu_summary(chain.delta_cu[burn_in::thin], thresholds),
    )
    if chain.fsw_prevalence is not None and chain.client_prevalence is not None:
        summary.fsw_bands = pointwise_bands(chain.fsw_prevalence[rows], times)
        summary.client_bands = pointwise_bands(chain.client_prevalence[rows], times)

    logger.debug(
        "chain_summarised", model=chain.model, draws=summary.n_draws,
        acceptance_rate=round(summary.acceptance_rate, 4),
        min_ess=float(parameters["ess"].min()),
    )
    return summary
