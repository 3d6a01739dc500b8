"""
CUTrend Ensemble Metrics
Bias, standard deviation and MSE of the posterior-median ΔCU estimator,
sensitivity and specificity of the decision rule "estimate > t", ROC curves,
AUC, coverage and bootstrap error bars.

Failed replicates (NaN estimates) are excluded from every denominator.
"""

from dataclasses import dataclass
from typing import Dict, List, Sequence, Tuple

import numpy as np
import pandas as pd
from sklearn.metrics import auc as trapezoid_auc

from cutrend.errors import DomainError, UndefinedRatioError
from cutrend.utils.logging import get_logger
from pipelines.evaluation.results import ReplicateResult

logger = get_logger(__name__)


@dataclass(frozen=True)
class ErrorMetrics:
    bias: float
    std: float
    mse: float
    n: int

    def as_dict(self) -> Dict[str, float]:
        return {"bias": self.bias, "std": self.std, "mse": self.mse, "n": self.n}


@dataclass(frozen=True)
class RocCurve:
    """ROC points for decision thresholds swept from +inf down to -inf."""

    thresholds: np.ndarray
    false_positive_rate: np.ndarray
    true_positive_rate: np.ndarray
    auc: float

    def as_dict(self) -> Dict[str, object]:
        return {
            "thresholds": self.thresholds.tolist(),
            "false_positive_rate": self.false_positive_rate.tolist(),
            "true_positive_rate": self.true_positive_rate.tolist(),
            "auc": self.auc,
        }


def paired_estimates(results: Sequence[ReplicateResult], method: str) -> Tuple[np.ndarray, np.ndarray]:
    """(estimates, truths) of the replicates where ``method`` produced an estimate."""
    estimates = np.array([r.estimate(method) for r in results], dtype=float)
    truths = np.array([r.true_delta_cu for r in results], dtype=float)
    keep = np.isfinite(estimates) & np.isfinite(truths)
    return estimates[keep], truths[keep]


def error_metrics(estimates: np.ndarray, truths: np.ndarray) -> ErrorMetrics:
    """Bias = mean error, MSE = mean squared error, Std = sqrt(MSE - bias²)."""
    estimates = np.asarray(estimates, dtype=float)
    truths = np.asarray(truths, dtype=float)
    if estimates.size == 0:
        raise DomainError("error metrics need at least one estimate")
    errors = estimates - truths
    bias = float(np.mean(errors))
    mse = float(np.mean(errors ** 2))
    return ErrorMetrics(bias=bias, std=float(np.sqrt(max(mse - bias ** 2, 0.0))), mse=mse, n=int(errors.size))


def compute_error_metrics(results: Sequence[ReplicateResult], method: str) -> ErrorMetrics:
    return error_metrics(*paired_estimates(results, method))


def rates(estimates: np.ndarray, truths: np.ndarray, T: float, t: float) -> Tuple[float, float]:
    """Sensitivity and specificity of ``estimate > t`` for the event ``truth > T``."""
    positive = truths > T
    detected = estimates > t
    n_pos = int(positive.sum())
    n_neg = int((~positive).sum())
    if n_pos == 0:
        raise UndefinedRatioError(f"no replicate with true ΔCU > {T}; sensitivity undefined")
    if n_neg == 0:
        raise UndefinedRatioError(f"no replicate with true ΔCU <= {T}; specificity undefined")
    sensitivity = float((detected & positive).sum() / n_pos)
    specificity = float((~detected & ~positive).sum() / n_neg)
    return sensitivity, specificity


def sensitivity_specificity(
    results: Sequence[ReplicateResult], method: str, T: float, t: float
) -> Dict[str, float]:
    """
    Args:
        results: Ensemble replicates
        method: Inference method
        T: Threshold defining a true shift (ΔCU > T)
        t: Decision threshold on the estimate (estimate > t)

    Returns:
        {"sensitivity": ..., "specificity": ...}

    Raises:
        UndefinedRatioError: if no positive or no negative replicate exists
    """
    sensitivity, specificity = rates(*paired_estimates(results, method), T, t)
    return {"sensitivity": sensitivity, "specificity": specificity}


def roc_from_arrays(estimates: np.ndarray, truths: np.ndarray, T: float) -> RocCurve:
    distinct = np.unique(estimates)[::-1]
    thresholds = np.concatenate([[np.inf], distinct, [-np.inf]])
    points = np.array([rates(estimates, truths, T, t) for t in thresholds])
    fpr = 1.0 - points[:, 1]
    tpr = points[:, 0]
    return RocCurve(thresholds, fpr, tpr, float(trapezoid_auc(fpr, tpr)))


def roc_auc(results: Sequence[ReplicateResult], method: str, T: float) -> RocCurve:
    """ROC curve over every distinct estimate plus the ±inf sentinels, and its trapezoidal AUC."""
    return roc_from_arrays(*paired_estimates(results, method), T)


def bias_by_bin(
    results: Sequence[ReplicateResult], method: str, edges: Sequence[float]
) -> pd.DataFrame:
    """Bias of the estimator within each true-ΔCU bin."""
    estimates, truths = paired_estimates(results, method)
    index = np.clip(np.searchsorted(edges, truths, side="right") - 1, 0, len(edges) - 2)
    rows = []
    for b in range(len(edges) - 1):
        mask = index == b
        rows.append({
            "method": method,
            "bin": b,
            "low": float(edges[b]),
            "high": float(edges[b + 1]),
            "n": int(mask.sum()),
            "bias": float(np.mean(estimates[mask] - truths[mask])) if mask.any() else float("nan"),
        })
    return pd.DataFrame(rows)


def bootstrap_bias_se(
    results: Sequence[ReplicateResult],
    method: str,
    n_resamples: int,
    rng: np.random.Generator,
) -> float:
    """Bootstrap standard error of the bias over replicates."""
    estimates, truths = paired_estimates(results, method)
    errors = estimates - truths
    if errors.size < 2:
        return float("nan")
    picks = rng.integers(0, errors.size, size=(n_resamples, errors.size))
    return float(np.std(errors[picks].mean(axis=1), ddof=1))


def coverage(results: Sequence[ReplicateResult], method: str) -> float:
    """Share of replicates whose 95% ΔCU interval contains the truth."""
    hits: List[bool] = []
    for r in results:
        found = r.estimates.get(method)
        if r.failed or found is None or found.failed:
            continue
        hits.append(found.lower <= r.true_delta_cu <= found.upper)
    return float(np.mean(hits)) if hits else float("nan")


def metrics_table(
    results: Sequence[ReplicateResult],
    methods: Sequence[str],
    thresholds: Sequence[float],
    n_resamples: int,
    rng: np.random.Generator,
) -> Tuple[pd.DataFrame, Dict[str, Dict[str, dict]]]:
    """
    One row per (method, T) with every metric, plus the ROC curves.

    Sensitivity, specificity and AUC use t = T. Undefined ratios are NaN.
    """
    rows = []
    curves: Dict[str, Dict[str, dict]] = {}
    for method in methods:
        estimates, truths = paired_estimates(results, method)
        n_failed = len(results) - int(estimates.size)
        base = error_metrics(estimates, truths).as_dict() if estimates.size else {
            "bias": float("nan"), "std": float("nan"), "mse": float("nan"), "n": 0
        }
        bias_se = bootstrap_bias_se(results, method, n_resamples, rng)
        cover = coverage(results, method)
        curves[method] = {}
        for T in thresholds:
            row = {"method": method, "T": float(T), **base, "bias_se": bias_se,
                   "coverage": cover, "failures": n_failed}
            try:
                row["sensitivity"], row["specificity"] = rates(estimates, truths, T, T)
                curve = roc_from_arrays(estimates, truths, T)
                row["auc"] = curve.auc
                curves[method][f"{T:g}"] = curve.as_dict()
            except UndefinedRatioError as e:
                logger.warning("metric_undefined", method=method, T=T, reason=str(e))
                row["sensitivity"] = row["specificity"] = row["auc"] = float("nan")
            rows.append(row)
    return pd.DataFrame(rows), curves
