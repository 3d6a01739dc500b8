from cutrend.io.artifacts import (
    atomic_write_text,
    load_chain,
    load_report,
    provenance,
    read_csv,
    read_json,
    write_chain,
    write_csv,
    write_json,
    write_summary,
)
from cutrend.io.config import RunConfig, apply_overrides, config_hash, load_config
from cutrend.io.observations import load_observations, observed_prevalence_table, write_observations
