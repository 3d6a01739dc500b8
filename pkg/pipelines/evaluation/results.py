"""
CUTrend Replicate Results
Per-replicate records of an ensemble run.
"""

from dataclasses import dataclass, field
from typing import Dict, List, Optional

import numpy as np

from cutrend.model.epi import Observation


@dataclass(frozen=True)
class MethodEstimate:
    """
    Posterior ΔCU summary of one inference method on one replicate.

    ``draws`` holds the post-burn-in, thinned per-draw ΔCU values the summary
    was computed from.
    """

    method: str
    median: float
    mean: float
    lower: float
    upper: float
    acceptance_rate: float
    draws: Optional[np.ndarray] = None
    error: Optional[str] = None
    error_category: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    @classmethod
    def failure(cls, method: str, error: str, category: str) -> "MethodEstimate":
        nan = float("nan")
        return cls(method, nan, nan, nan, nan, nan, None, error, category)


@dataclass
class ReplicateResult:
    """
    Truth, data and per-method estimates of one replicate.

    A replicate that failed before any method ran carries ``error`` and no
    estimates; a single failed method carries its own error instead.
    """

    index: int
    target_bin: int
    true_delta_cu: float
    truth_parameters: Dict[str, float] = field(default_factory=dict)
    true_cu_path: Optional[np.ndarray] = None
    observations: List[Observation] = field(default_factory=list)
    estimates: Dict[str, MethodEstimate] = field(default_factory=dict)
    attempts: int = 0
    error: Optional[str] = None
    error_category: Optional[str] = None

    @property
    def failed(self) -> bool:
        return self.error is not None

    def estimate(self, method: str) -> float:
        """Posterior-median ΔCU estimate, NaN when unavailable."""
        found = self.estimates.get(method)
        if self.failed or found is None or found.failed:
            return float("nan")
        return found.median
