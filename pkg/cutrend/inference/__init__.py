from cutrend.inference.diagnostics import (
    ChainSummary,
    DeltaCUSummary,
    chain_diagnostics,
    delta_cu_summary,
    effective_sample_size,
)
from cutrend.inference.particle_filter import FilterResult, particle_filter, systematic_resample
from cutrend.inference.pmmh import Chain, PMMHSettings, metropolis_accept, pmmh
from cutrend.inference.proposal import RunningCovariance, adapt_proposal
from cutrend.inference.theta import INFERENCE_MODELS, ThetaLayout, ThetaVector
