"""
CUTrend Time Grid
Equidistant calendar-time discretisation shared by the ODE and the CU paths.
"""

from dataclasses import dataclass

import numpy as np

from cutrend.errors import DomainError, OutOfRangeError

T0 = 1985.0
T_END = 2010.0
MONTHS_PER_YEAR = 12.0

_GRID_TOL = 1e-12


@dataclass(frozen=True)
class TimeGrid:
    """
    Grid of nodes ``t0 + j * delta / 12`` for ``j = 0 .. n_steps``.

    Attributes:
        t0: Start of the horizon (decimal year)
        t_end: End of the horizon (decimal year)
        delta: Step size in months
    """

    t0: float = T0
    t_end: float = T_END
    delta: float = 0.5

    def __post_init__(self) -> None:
        if not self.delta > 0:
            raise DomainError(f"grid step must be positive, got {self.delta}")
        if not self.t_end > self.t0:
            raise DomainError(f"grid end {self.t_end} must follow start {self.t0}")
        steps = self.horizon_months / self.delta
        if abs(steps - round(steps)) > _GRID_TOL * max(1.0, steps):
            raise DomainError(
                f"horizon of {self.horizon_months} months is not a multiple "
                f"of the {self.delta}-month step"
            )

    @property
    def horizon_months(self) -> float:
        return (self.t_end - self.t0) * MONTHS_PER_YEAR

    @property
    def n_steps(self) -> int:
        return int(round(self.horizon_months / self.delta))

    @property
    def n_nodes(self) -> int:
        return self.n_steps + 1

    def months(self) -> np.ndarray:
        """Node offsets from ``t0`` in months."""
        return np.arange(self.n_nodes, dtype=float) * self.delta

    def times(self) -> np.ndarray:
        """Node calendar times in decimal years."""
        return self.t0 + self.months() / MONTHS_PER_YEAR

    def contains(self, t: float) -> bool:
        tol = self.delta / MONTHS_PER_YEAR / 2.0
        return self.t0 - tol <= t <= self.t_end + tol

    def node_index(self, t: float) -> int:
        """Index of the node nearest to calendar time ``t``."""
        if not self.contains(t):
            raise OutOfRangeError(
                f"time {t} outside grid [{self.t0}, {self.t_end}]"
            )
        offset = (t - self.t0) * MONTHS_PER_YEAR / self.delta
        return int(min(max(int(np.floor(offset + 0.5)), 0), self.n_steps))

    def snap(self, t: float) -> float:
        """Calendar time of the node nearest to ``t``."""
        return self.t0 + self.node_index(t) * self.delta / MONTHS_PER_YEAR
