"""
CUTrend Report
Combines a fit with an ensemble evaluation: for each method, the largest
threshold T such that the ensemble specificity of "median ΔCU > T" reaches the
configured floor and the fit's posterior median exceeds T.
"""

from pathlib import Path
from typing import Any, Dict, List, Optional

from cutrend.errors import ConfigError
from cutrend.io.artifacts import load_report, provenance, write_json
from cutrend.io.config import RunConfig, config_hash
from cutrend.utils.logging import get_logger
from pipelines.evaluation.ensemble import REPORT_FILE
from pipelines.fitting.fit import FIT_SUMMARY_FILE

logger = get_logger(__name__)

CLAIMS_FILE = "claims.json"


def supported_lower_bound(
    median: float, metrics: List[Dict[str, Any]], method: str, specificity_floor: float
) -> Optional[float]:
    """Largest evaluated T with specificity >= floor and ``median > T``; None if none qualifies."""
    supported = [
        float(row["T"])
        for row in metrics
        if row["method"] == method
        and row.get("specificity") is not None
        and row["specificity"] >= specificity_floor
        and median > row["T"]
    ]
    return max(supported) if supported else None


def build_claims(
    fit_summary: Dict[str, Any], ensemble_report: Optional[Dict[str, Any]], specificity_floor: float
) -> Dict[str, Any]:
    claims: Dict[str, Any] = {}
    metrics = ensemble_report["metrics"] if ensemble_report else []
    for method, result in fit_summary["models"].items():
        delta = result["delta_cu"]
        bound = supported_lower_bound(delta["median"], metrics, method, specificity_floor)
        claims[method] = {
            "delta_cu_median": delta["median"],
            "credible_interval": [delta["lower"], delta["upper"]],
            "prob_above": delta["prob_above"],
            "lower_bound": bound,
            "statement": (
                f"ΔCU > {bound:g} (ensemble specificity >= {specificity_floor:g})"
                if bound is not None
                else "no evaluated threshold is supported"
            ),
        }
    return claims


def run_report(config: RunConfig) -> Dict[str, Any]:
    """
    Execute the report workflow from the artifacts of earlier runs.

    Raises:
        ConfigError: if no fit directory is configured
        DataError: if an artifact is missing or has another schema version
    """
    settings = config.report
    fit_dir = Path(settings.fit_dir or config.output_dir)
    if not (fit_dir / FIT_SUMMARY_FILE).exists() and settings.fit_dir is None:
        raise ConfigError("report workflow needs report.fit_dir or a fit in the output directory")
    fit_summary = load_report(fit_dir / FIT_SUMMARY_FILE)
    ensemble_report = None
    if settings.ensemble_dir is not None:
        ensemble_report = load_report(Path(settings.ensemble_dir) / REPORT_FILE)

    payload = {
        "workflow": "report",
        "specificity_floor": settings.specificity_floor,
        "ensemble": ensemble_report["header"] if ensemble_report else None,
        "claims": build_claims(fit_summary, ensemble_report, settings.specificity_floor),
    }
    path = write_json(payload, Path(config.output_dir) / CLAIMS_FILE, provenance(config_hash(config), config.seed))
    logger.info("report_written", path=str(path))
    return payload
