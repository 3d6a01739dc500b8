"""
CUTrend
Estimation of time-varying condom use from sparse HIV prevalence data.
"""

__version__ = "1.0.0"

SCHEMA_VERSION = "1"
