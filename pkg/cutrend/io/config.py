"""
CUTrend Configuration
Run configuration models, YAML loading, CLI overrides and the provenance hash.
"""

import hashlib
import json
import os
from pathlib import Path
from typing import Any, Dict, List, Literal, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, field_validator, model_validator

from cutrend.errors import ConfigError
from cutrend.inference.pmmh import PMMHSettings
from cutrend.model.epi import Stratum
from cutrend.model.grid import TimeGrid
from cutrend.model.priors import DEFAULT_N_F

THREADS_ENV = "CUTREND_THREADS"
DEFAULT_CONFIG_PATH = Path(__file__).resolve().parents[2] / "configs" / "default_config.yaml"

InferenceModel = Literal["bm", "dbr", "dsigm"]
Workflow = Literal["fit", "simulate", "ensemble", "prior-check", "report"]


def default_threads() -> int:
    """Thread count from the environment, 1 when unset."""
    raw = os.environ.get(THREADS_ENV)
    if raw is None or raw.strip() == "":
        return 1
    try:
        value = int(raw)
    except ValueError:
        raise ConfigError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 1:
        raise ConfigError(f"{THREADS_ENV} must be at least 1, got {value}")
    return value


class _Settings(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class GridSettings(_Settings):
    t0: float = Field(1985.0, description="Start of the horizon (decimal year)")
    t_end: float = Field(2010.0, description="End of the horizon (decimal year)")
    delta: float = Field(0.5, gt=0.0, description="Integration step in months")

    def build(self) -> TimeGrid:
        return TimeGrid(self.t0, self.t_end, self.delta)


class EpiSettings(_Settings):
    n_fsw: int = Field(DEFAULT_N_F, ge=2, description="Female sex worker population size")


class TrajectorySettings(_Settings):
    volatility_unit_months: float = Field(
        12.0, gt=0.0, description="Diffusion time unit of the BM volatility, in months"
    )
    delta_cu_start: float = Field(2003.0, description="Start of the ΔCU window")
    delta_cu_end: float = Field(2009.25, description="End of the ΔCU window")

    @model_validator(mode="after")
    def _window_ordered(self) -> "TrajectorySettings":
        if not self.delta_cu_end > self.delta_cu_start:
            raise ValueError("delta_cu_end must follow delta_cu_start")
        return self


class InferenceSettings(_Settings):
    iterations: int = Field(50000, ge=1, description="PMMH iterations M")
    particles: int = Field(1000, ge=1, description="Particle count N")
    burn_in_fraction: float = Field(0.2, ge=0.0, lt=1.0)
    adaptation_start: int = Field(500, ge=0)
    adaptation_freeze_fraction: float = Field(0.5, ge=0.0, le=1.0)
    proposal_scale: float = Field(0.5, gt=0.0)
    adaptation_epsilon: float = Field(1e-8, ge=0.0)
    path_thin: int = Field(1, ge=1, description="Store paths every n iterations")
    thin: int = Field(1, ge=1, description="Thinning of the posterior summaries")
    max_init_draws: int = Field(1000, ge=1)
    prior_covariance_draws: int = Field(1000, ge=2)
    covariance_record_every: int = Field(1000, ge=1)


class FitSettings(_Settings):
    observations: Optional[str] = Field(None, description="Observation CSV for the fit workflow")
    models: List[InferenceModel] = Field(default_factory=lambda: ["bm", "dbr", "dsigm"], min_length=1)
    thresholds: List[float] = Field(default_factory=lambda: [0.2, 0.3, 0.4])


class SurveySpec(_Settings):
    time: float
    stratum: Stratum
    sample_size: int = Field(425, ge=1)


def _default_schedule() -> List[SurveySpec]:
    return [
        SurveySpec(time=2005.0, stratum=Stratum.FSW),
        SurveySpec(time=2007.0, stratum=Stratum.FSW),
        SurveySpec(time=2008.75, stratum=Stratum.FSW),
        SurveySpec(time=2009.0, stratum=Stratum.CLIENT),
    ]


class EnsembleConfig(_Settings):
    replicates: int = Field(50, ge=1, description="Replicate count L")
    generator: Literal["dsigm", "step"] = "dsigm"
    methods: List[InferenceModel] = Field(default_factory=lambda: ["dbr", "dsigm", "bm"], min_length=1)
    schedule: List[SurveySpec] = Field(default_factory=_default_schedule, min_length=1)
    prevalence_bounds: Tuple[float, float] = (0.02, 0.40)
    prevalence_check_time: float = 2010.0
    min_shift_time: float = Field(1995.0, description="Truth CU shifts must start after this time")
    shift_time_max: float = 2009.0
    bins_low: float = 0.0
    bins_high: float = 0.9
    n_bins: int = Field(18, ge=1)
    dsigm_k_range: Tuple[float, float] = (0.02, 0.3)
    max_rejections: int = Field(10000, ge=1)
    thresholds: List[float] = Field(default_factory=lambda: [0.2, 0.3, 0.4])
    bootstrap_resamples: int = Field(1000, ge=1)
    inference: InferenceSettings = Field(
        default_factory=lambda: InferenceSettings(iterations=15000, particles=500)
    )
    method_inference: Dict[InferenceModel, InferenceSettings] = Field(default_factory=dict)

    @field_validator("prevalence_bounds", "dsigm_k_range")
    @classmethod
    def _ordered_pair(cls, value: Tuple[float, float]) -> Tuple[float, float]:
        if not value[1] > value[0] >= 0.0:
            raise ValueError(f"expected 0 <= low < high, got {value}")
        return value

    @model_validator(mode="after")
    def _bins_partition(self) -> "EnsembleConfig":
        if not self.bins_high > self.bins_low:
            raise ValueError("bins_high must exceed bins_low")
        if not self.shift_time_max > self.min_shift_time:
            raise ValueError("shift_time_max must exceed min_shift_time")
        return self

    def bin_edges(self) -> List[float]:
        width = (self.bins_high - self.bins_low) / self.n_bins
        return [self.bins_low + i * width for i in range(self.n_bins + 1)]

    def inference_for(self, method: str) -> InferenceSettings:
        return self.method_inference.get(method, self.inference)


class SimulateSettings(_Settings):
    target_bin: Optional[int] = Field(None, ge=0, description="ΔCU bin of the simulated truth")


class PriorCheckSettings(_Settings):
    models: List[InferenceModel] = Field(default_factory=lambda: ["bm", "dbr", "dsigm"], min_length=1)
    draws: int = Field(100000, ge=10)
    quantiles: List[float] = Field(default_factory=lambda: [0.025, 0.25, 0.5, 0.75, 0.975])


class ReportSettings(_Settings):
    fit_dir: Optional[str] = None
    ensemble_dir: Optional[str] = None
    specificity_floor: float = Field(0.9, ge=0.0, le=1.0)


class LoggingSettings(_Settings):
    level: str = "INFO"
    format: Literal["console", "json"] = "console"
    file: Optional[str] = None
    progress: bool = False


class RunConfig(_Settings):
    """Complete configuration of one CUTrend run."""

    workflow: Workflow = "fit"
    seed: int = Field(0, ge=0, lt=2 ** 64)
    output_dir: str = "results"
    threads: int = Field(default_factory=default_threads, ge=1)
    grid: GridSettings = Field(default_factory=GridSettings)
    epi: EpiSettings = Field(default_factory=EpiSettings)
    trajectories: TrajectorySettings = Field(default_factory=TrajectorySettings)
    inference: InferenceSettings = Field(default_factory=InferenceSettings)
    fit: FitSettings = Field(default_factory=FitSettings)
    simulate: SimulateSettings = Field(default_factory=SimulateSettings)
    ensemble: EnsembleConfig = Field(default_factory=EnsembleConfig)
    prior_check: PriorCheckSettings = Field(default_factory=PriorCheckSettings)
    report: ReportSettings = Field(default_factory=ReportSettings)
    logging: LoggingSettings = Field(default_factory=LoggingSettings)

    @model_validator(mode="after")
    def _grid_consistent(self) -> "RunConfig":
        grid = self.grid.build()
        for t in (self.trajectories.delta_cu_start, self.trajectories.delta_cu_end):
            if not grid.contains(t):
                raise ValueError(f"ΔCU window time {t} outside the grid")
        for survey in self.ensemble.schedule:
            if not grid.contains(survey.time):
                raise ValueError(f"scheduled survey time {survey.time} outside the grid")
        return self

    def pmmh_settings(
        self, seed: int, inference: Optional[InferenceSettings] = None
    ) -> PMMHSettings:
        """Sampler settings for one chain."""
        inf = inference or self.inference
        return PMMHSettings(
            iterations=inf.iterations,
            particles=inf.particles,
            burn_in_fraction=inf.burn_in_fraction,
            adaptation_start=inf.adaptation_start,
            adaptation_freeze_fraction=inf.adaptation_freeze_fraction,
            proposal_scale=inf.proposal_scale,
            adaptation_epsilon=inf.adaptation_epsilon,
            path_thin=inf.path_thin,
            max_init_draws=inf.max_init_draws,
            prior_covariance_draws=inf.prior_covariance_draws,
            covariance_record_every=inf.covariance_record_every,
            n_fsw=self.epi.n_fsw,
            unit_months=self.trajectories.volatility_unit_months,
            delta_cu_start=self.trajectories.delta_cu_start,
            delta_cu_end=self.trajectories.delta_cu_end,
            progress=self.logging.progress,
            seed=seed,
        )


def _validate(data: Dict[str, Any]) -> RunConfig:
    try:
        return RunConfig.model_validate(data)
    except ValidationError as e:
        first = e.errors()[0]
        location = ".".join(str(part) for part in first["loc"]) or "config"
        raise ConfigError(f"{location}: {first['msg']} ({e.error_count()} error(s))") from e


def load_config(path: Optional[Union[str, Path]] = None) -> RunConfig:
    """
    Load and validate a YAML run configuration.

    Args:
        path: YAML file; None yields the built-in defaults

    Returns:
        Validated RunConfig

    Raises:
        ConfigError: if the file is missing, malformed or invalid
    """
    if path is None:
        return _validate({})
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"config file not found: {path}")
    try:
        with open(path, "r") as f:
            data = yaml.safe_load(f) or {}
    except yaml.YAMLError as e:
        raise ConfigError(f"cannot parse {path}: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be a mapping")
    return _validate(data)


def apply_overrides(
    config: RunConfig,
    workflow: Optional[str] = None,
    seed: Optional[int] = None,
    out: Optional[str] = None,
    model: Optional[str] = None,
    particles: Optional[int] = None,
    iterations: Optional[int] = None,
    threads: Optional[int] = None,
    observations: Optional[str] = None,
    sections: Optional[Dict[str, Dict[str, Any]]] = None,
) -> RunConfig:
    """Return a re-validated copy of ``config`` with command-line values applied."""
    data = config.model_dump(mode="json")
    if workflow is not None:
        data["workflow"] = workflow
    if seed is not None:
        data["seed"] = seed
    if out is not None:
        data["output_dir"] = out
    if threads is not None:
        data["threads"] = threads
    if observations is not None:
        data["fit"]["observations"] = observations
    for section, values in (sections or {}).items():
        data[section].update({k: v for k, v in values.items() if v is not None})
    if model is not None:
        data["fit"]["models"] = [model]
        data["prior_check"]["models"] = [model]
        data["ensemble"]["methods"] = [model]
    for section in (data["inference"], data["ensemble"]["inference"], *data["ensemble"]["method_inference"].values()):
        if particles is not None:
            section["particles"] = particles
        if iterations is not None:
            section["iterations"] = iterations
    return _validate(data)


def config_hash(config: RunConfig) -> str:
    """First 16 hex digits of the SHA-256 of the canonical configuration.

    Output location, thread count and logging do not change results and are
    left out.
    """
    payload = config.model_dump(mode="json", exclude={"output_dir", "threads", "logging"})
    canonical = json.dumps(payload, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]
