from cutrend.model.epi import (
    EpiParams,
    EpiState,
    Observation,
    StatePath,
    Stratum,
    force_of_infection,
    integrate,
    log_obs_likelihood,
    ode_rhs,
    observe_prevalence,
)
from cutrend.model.grid import TimeGrid
from cutrend.model.trajectories import (
    BM,
    DBR,
    DSigm,
    Step,
    StochGrowth,
    TrajectoryModel,
    bm_sample_path,
    dbr_curve,
    delta_cu,
    dsigm_curve,
    step_path,
    stoch_growth_sample_path,
    trajectory_log_prior,
)
