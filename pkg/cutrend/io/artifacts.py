"""
CUTrend Artifacts
Atomic, provenance-stamped CSV and JSON artifacts, and the chain and summary
files written by the workflows.

CSV artifacts start with ``# key=value`` provenance lines followed by a
regular header row. Floats are written with 17 significant digits so that
re-loaded arrays equal the in-memory ones exactly.
"""

import json
import math
import os
import tempfile
from pathlib import Path
from typing import Any, Dict, List, Mapping, Optional, Tuple, Union

import numpy as np
import pandas as pd

from cutrend import SCHEMA_VERSION, __version__
from cutrend.errors import DataError
from cutrend.inference.diagnostics import ChainSummary
from cutrend.inference.pmmh import Chain
from cutrend.model.grid import TimeGrid
from cutrend.utils.logging import get_logger

logger = get_logger(__name__)

PathLike = Union[str, Path]
FLOAT_FORMAT = "%.17g"

CHAIN_FILE = "chain.csv"
CU_PATHS_FILE = "cu_paths.csv"
FSW_PATHS_FILE = "fsw_prevalence_paths.csv"
CLIENT_PATHS_FILE = "client_prevalence_paths.csv"
CHAIN_META_FILE = "chain_meta.json"
PARAMETERS_FILE = "parameter_summary.csv"
CU_SUMMARY_FILE = "cu_summary.csv"
FSW_BANDS_FILE = "fsw_prevalence_bands.csv"
CLIENT_BANDS_FILE = "client_prevalence_bands.csv"
DELTA_CU_FILE = "delta_cu_summary.json"


def provenance(config_hash: str, seed: int, **extra: Any) -> Dict[str, Any]:
    """Provenance record embedded in every artifact."""
    record: Dict[str, Any] = {
        "schema_version": SCHEMA_VERSION,
        "cutrend_version": __version__,
        "config_hash": config_hash,
        "seed": int(seed),
    }
    record.update(extra)
    return record


def atomic_write_text(path: PathLike, text: str) -> Path:
    """Write ``text`` to a temporary sibling file and rename it over ``path``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(prefix=f".{path.name}.", dir=path.parent)
    try:
        with os.fdopen(fd, "w", newline="") as f:
            f.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise
    return path


def to_jsonable(value: Any) -> Any:
    """Plain JSON types; NaN and infinities become null."""
    if isinstance(value, Mapping):
        return {str(k): to_jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [to_jsonable(v) for v in value]
    if isinstance(value, np.ndarray):
        return to_jsonable(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if math.isfinite(value) else None
    return value


def write_json(payload: Mapping[str, Any], path: PathLike, prov: Mapping[str, Any]) -> Path:
    document = dict(payload)
    document["provenance"] = dict(prov)
    text = json.dumps(to_jsonable(document), indent=2, sort_keys=True) + "\n"
    return atomic_write_text(path, text)


def read_json(path: PathLike) -> Dict[str, Any]:
    path = Path(path)
    if not path.exists():
        raise DataError(f"artifact not found: {path}")
    with open(path, "r") as f:
        return json.load(f)


def write_csv(frame: pd.DataFrame, path: PathLike, prov: Mapping[str, Any]) -> Path:
    header = "".join(f"# {key}={value}\n" for key, value in prov.items())
    body = frame.to_csv(index=False, float_format=FLOAT_FORMAT, lineterminator="\n")
    return atomic_write_text(path, header + body)


def read_csv(path: PathLike) -> Tuple[pd.DataFrame, Dict[str, str]]:
    """Read a CSV artifact; returns the table and its provenance lines."""
    path = Path(path)
    if not path.exists():
        raise DataError(f"artifact not found: {path}")
    prov: Dict[str, str] = {}
    skip = 0
    with open(path, "r") as f:
        for line in f:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition("=")
            prov[key.strip()] = value.strip()
            skip += 1
    frame = pd.read_csv(path, skiprows=skip, float_precision="round_trip")
    return frame, prov


def _path_frame(iterations: np.ndarray, paths: np.ndarray, times: np.ndarray) -> pd.DataFrame:
    frame = pd.DataFrame(paths, columns=[f"{t:.6f}" for t in times])
    frame.insert(0, "iteration", iterations)
    return frame


def write_chain(chain: Chain, directory: PathLike, prov: Mapping[str, Any]) -> List[Path]:
    """Write the draws table, the path files and the chain metadata of one chain."""
    directory = Path(directory)
    draws = pd.DataFrame(chain.theta, columns=list(chain.names))
    draws.insert(0, "iteration", np.arange(len(chain)))
    draws["log_likelihood"] = chain.log_likelihood
    draws["log_prior"] = chain.log_prior
    draws["accepted"] = chain.accepted.astype(int)
    draws["delta_cu"] = chain.delta_cu

    times = chain.grid.times()
    written = [
        write_csv(draws, directory / CHAIN_FILE, prov),
        write_csv(_path_frame(chain.path_iterations, chain.cu_paths, times), directory / CU_PATHS_FILE, prov),
    ]
    if chain.fsw_prevalence is not None and chain.client_prevalence is not None:
        written.append(write_csv(
            _path_frame(chain.path_iterations, chain.fsw_prevalence, times), directory / FSW_PATHS_FILE, prov
        ))
        written.append(write_csv(
            _path_frame(chain.path_iterations, chain.client_prevalence, times), directory / CLIENT_PATHS_FILE, prov
        ))
    meta = {
        "model": chain.model,
        "names": list(chain.names),
        "grid": {"t0": chain.grid.t0, "t_end": chain.grid.t_end, "delta": chain.grid.delta},
        "burn_in": chain.burn_in,
        "path_thin": chain.path_thin,
        "acceptance_rate": chain.acceptance_rate,
        "proposal_history": [
            {"iteration": it, "covariance": cov.tolist()} for it, cov in chain.proposal_history
        ],
    }
    written.append(write_json(meta, directory / CHAIN_META_FILE, prov))
    logger.info("chain_written", model=chain.model, directory=str(directory))
    return written


def _path_array(directory: Path, name: str) -> Optional[np.ndarray]:
    if not (directory / name).exists():
        return None
    frame, _ = read_csv(directory / name)
    return frame.drop(columns="iteration").to_numpy(dtype=float)


def load_chain(directory: PathLike) -> Chain:
    """Re-create a Chain from the files written by ``write_chain``."""
    directory = Path(directory)
    meta = read_json(directory / CHAIN_META_FILE)
    draws, prov = read_csv(directory / CHAIN_FILE)
    cu_frame, _ = read_csv(directory / CU_PATHS_FILE)
    names = tuple(meta["names"])
    return Chain(
        model=meta["model"],
        names=names,
        grid=TimeGrid(**meta["grid"]),
        seed=int(prov.get("seed", meta["provenance"]["seed"])),
        burn_in=int(meta["burn_in"]),
        theta=draws[list(names)].to_numpy(dtype=float),
        log_likelihood=draws["log_likelihood"].to_numpy(dtype=float),
        log_prior=draws["log_prior"].to_numpy(dtype=float),
        accepted=draws["accepted"].to_numpy().astype(bool),
        delta_cu=draws["delta_cu"].to_numpy(dtype=float),
        path_iterations=cu_frame["iteration"].to_numpy(dtype=int),
        cu_paths=cu_frame.drop(columns="iteration").to_numpy(dtype=float),
        path_thin=int(meta["path_thin"]),
        fsw_prevalence=_path_array(directory, FSW_PATHS_FILE),
        client_prevalence=_path_array(directory, CLIENT_PATHS_FILE),
        proposal_history=[
            (int(entry["iteration"]), np.asarray(entry["covariance"], dtype=float))
            for entry in meta["proposal_history"]
        ],
    )


def write_summary(summary: ChainSummary, directory: PathLike, prov: Mapping[str, Any]) -> List[Path]:
    """Write the parameter table, pointwise bands and ΔCU summary of one chain."""
    directory = Path(directory)
    written = [
        write_csv(summary.parameters.reset_index(), directory / PARAMETERS_FILE, prov),
        write_csv(summary.cu_bands, directory / CU_SUMMARY_FILE, prov),
        write_json(
            {
                "model": summary.model,
                "n_draws": summary.n_draws,
                "acceptance_rate": summary.acceptance_rate,
                "delta_cu": summary.delta_cu.as_dict(),
            },
            directory / DELTA_CU_FILE,
            prov,
        ),
    ]
    if summary.fsw_bands is not None:
        written.append(write_csv(summary.fsw_bands, directory / FSW_BANDS_FILE, prov))
    if summary.client_bands is not None:
        written.append(write_csv(summary.client_bands, directory / CLIENT_BANDS_FILE, prov))
    return written


def load_report(path: PathLike) -> Dict[str, Any]:
    """Load a JSON report artifact and check its schema version."""
    report = read_json(path)
    version = report.get("provenance", {}).get("schema_version")
    if version != SCHEMA_VERSION:
        raise DataError(f"{path}: unsupported schema version {version!r}")
    return report
