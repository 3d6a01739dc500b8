from cutrend.utils.logging import configure_logging, get_logger
from cutrend.utils.rng import RandomStream
