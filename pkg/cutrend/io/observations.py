"""
CUTrend Observation Files
Loading and writing prevalence survey data.

Files are comma-separated with the header ``time,stratum,positives,sample_size``.
Lines starting with ``#`` are provenance or comments and are skipped.
"""

import io
import re
from pathlib import Path
from typing import Any, List, Mapping, Optional, Sequence, Tuple, Union

import numpy as np
import pandas as pd
from scipy.stats import binomtest

from cutrend.errors import (
    DataError,
    DomainError,
    EmptyDatasetError,
    ObservationParseError,
    ObservationValidationError,
)
from cutrend.io.artifacts import write_csv
from cutrend.model.epi import Observation, Stratum
from cutrend.model.grid import TimeGrid
from cutrend.utils.logging import get_logger

logger = get_logger(__name__)

COLUMNS = ["time", "stratum", "positives", "sample_size"]


def _data_lines(path: Path) -> Tuple[List[str], List[int]]:
    lines: List[str] = []
    numbers: List[int] = []
    with open(path, "r", encoding="utf-8-sig") as f:
        for number, line in enumerate(f, start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            lines.append(stripped)
            numbers.append(number)
    return lines, numbers


def _parse_integer(value: Any, column: str, line: int) -> int:
    number = float(value)
    if not number.is_integer():
        raise ObservationParseError(f"{column} must be an integer, got {value!r}", line)
    return int(number)


def load_observations(path: Union[str, Path], grid: Optional[TimeGrid] = None) -> List[Observation]:
    """
    Load, validate and sort an observation file.

    Args:
        path: CSV file
        grid: When given, every time must lie inside it

    Returns:
        Observations sorted by time (then stratum)

    Raises:
        ObservationParseError: malformed header or values (with line number)
        ObservationValidationError: an invariant is violated (with data row number)
        EmptyDatasetError: no data rows
    """
    path = Path(path)
    if not path.exists():
        raise DataError(f"observation file not found: {path}")
    lines, numbers = _data_lines(path)
    if not lines:
        raise EmptyDatasetError(f"{path}: no observations; fitting needs at least one")

    header = [h.strip().lower() for h in lines[0].split(",")]
    if header != COLUMNS:
        raise ObservationParseError(
            f"expected header {','.join(COLUMNS)}, got {lines[0]!r}", numbers[0]
        )
    if len(lines) == 1:
        raise EmptyDatasetError(f"{path}: header only; fitting needs at least one observation")

    try:
        frame = pd.read_csv(io.StringIO("\n".join(lines)), dtype=str, skipinitialspace=True)
    except pd.errors.ParserError as e:
        match = re.search(r"line (\d+)", str(e))
        line = numbers[min(int(match.group(1)), len(numbers)) - 1] if match else numbers[0]
        raise ObservationParseError(str(e).strip(), line) from e

    observations: List[Observation] = []
    seen = {}
    for row, record in enumerate(frame.itertuples(index=False), start=1):
        line = numbers[row]
        values = dict(zip(COLUMNS, record))
        if any(pd.isna(v) for v in values.values()):
            raise ObservationParseError("missing value", line)
        try:
            time = float(values["time"])
            positives = _parse_integer(values["positives"], "positives", line)
            sample_size = _parse_integer(values["sample_size"], "sample_size", line)
        except ValueError as e:
            raise ObservationParseError(f"non-numeric value ({e})", line) from None
        if not np.isfinite(time):
            raise ObservationParseError("time must be finite", line)
        try:
            obs = Observation(time, Stratum.parse(values["stratum"]), positives, sample_size)
        except DomainError as e:
            raise ObservationValidationError(str(e), row) from None
        if grid is not None and not grid.contains(obs.time):
            raise ObservationValidationError(
                f"time {obs.time} outside [{grid.t0}, {grid.t_end}]", row
            )
        key = (obs.time, obs.stratum)
        if key in seen:
            raise ObservationValidationError(
                f"duplicate {obs.stratum.value} observation at {obs.time} (first on row {seen[key]})", row
            )
        seen[key] = row
        observations.append(obs)

    observations.sort(key=lambda o: (o.time, o.stratum.value))
    logger.info("observations_loaded", path=str(path), count=len(observations))
    return observations


def observations_frame(observations: Sequence[Observation]) -> pd.DataFrame:
    return pd.DataFrame(
        {
            "time": [o.time for o in observations],
            "stratum": [o.stratum.value for o in observations],
            "positives": [o.positives for o in observations],
            "sample_size": [o.sample_size for o in observations],
        },
        columns=COLUMNS,
    )


def write_observations(
    observations: Sequence[Observation], path: Union[str, Path], prov: Mapping[str, Any]
) -> Path:
    """Write observations as counts in the loadable CSV format."""
    return write_csv(observations_frame(observations), path, prov)


def observed_prevalence_table(observations: Sequence[Observation], level: float = 0.95) -> pd.DataFrame:
    """Observed prevalences with exact (Clopper-Pearson) binomial intervals."""
    frame = observations_frame(observations)
    lower, upper = [], []
    for obs in observations:
        interval = binomtest(obs.positives, obs.sample_size).proportion_ci(
            confidence_level=level, method="exact"
        )
        lower.append(interval.low)
        upper.append(interval.high)
    frame["prevalence"] = [o.prevalence for o in observations]
    frame["lower"] = lower
    frame["upper"] = upper
    return frame
