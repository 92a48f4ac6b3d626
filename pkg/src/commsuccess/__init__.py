"""Early-activity features and success prediction for online communities."""

from commsuccess.config import Config, load_config
from commsuccess.errors import (
    CommSuccessError,
    ConfigurationError,
    DataError,
    DegenerateStatisticsError,
)

__version__ = "0.1.0"

__all__ = [
    "CommSuccessError", "Config", "ConfigurationError", "DataError",
    "DegenerateStatisticsError", "__version__", "load_config",
]
