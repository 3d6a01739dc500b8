"""
CUTrend Proposals
Adaptive Gaussian random-walk proposals in transformed parameter space.
"""

from typing import Optional

import numpy as np

OPTIMAL_SCALE = 2.38
ADAPTATION_EPSILON = 1e-8


def scaled_covariance(covariance: np.ndarray, epsilon: float = ADAPTATION_EPSILON) -> np.ndarray:
    d = covariance.shape[0]
    return (OPTIMAL_SCALE ** 2 / d) * (covariance + epsilon * np.eye(d))


def adapt_proposal(
    history: np.ndarray,
    base_scale: float = 1.0,
    epsilon: float = ADAPTATION_EPSILON,
) -> np.ndarray:
    """
    Random-walk covariance from a history of draws.

    Args:
        history: Array (n, d) of draws in transformed space, n >= 2
        base_scale: Multiplier applied to the proposal standard deviations
        epsilon: Ridge added to the empirical covariance

    Returns:
        base_scale^2 * (2.38^2 / d) * (C + epsilon I)
    """
    history = np.atleast_2d(np.asarray(history, dtype=float))
    if history.shape[0] < 2:
        raise ValueError("adaptation needs at least two draws")
    covariance = np.atleast_2d(np.cov(history, rowvar=False))
    return base_scale ** 2 * scaled_covariance(covariance, epsilon)


class RunningCovariance:
    """Welford mean/covariance of a growing history; each draw enters with weight 1/n."""

    def __init__(self, dim: int):
        self.n = 0
        self.mean = np.zeros(dim)
        self._m2 = np.zeros((dim, dim))

    def update(self, z: np.ndarray) -> None:
        self.n += 1
        delta = z - self.mean
        self.mean = self.mean + delta / self.n
        self._m2 = self._m2 + np.outer(delta, z - self.mean)

    @property
    def covariance(self) -> Optional[np.ndarray]:
        if self.n < 2:
            return None
        return self._m2 / (self.n - 1)

    def proposal(self, epsilon: float = ADAPTATION_EPSILON) -> np.ndarray:
        covariance = self.covariance
        if covariance is None:
            raise ValueError("adaptation needs at least two draws")
        return scaled_covariance(0.5 * (covariance + covariance.T), epsilon)
