"""Benchmark problem generators: coverage search-and-rescue and the rover grid."""

from .isrs import (
    DEFAULT_ISRS_SENSORS,
    ISRS_STATES,
    IsrsConfig,
    RockUtility,
    generate_isrs_problem,
    isrs_utility,
)
from .sar import (
    DEFAULT_SAR_SENSORS,
    SAR_STATES,
    CoverageUtility,
    SarConfig,
    SarSensorConfig,
    coverage_utility,
    generate_sar_problem,
)

__all__ = [
    "DEFAULT_ISRS_SENSORS",
    "DEFAULT_SAR_SENSORS",
    "ISRS_STATES",
    "SAR_STATES",
    "CoverageUtility",
    "IsrsConfig",
    "RockUtility",
    "SarConfig",
    "SarSensorConfig",
    "coverage_utility",
    "generate_isrs_problem",
    "generate_sar_problem",
    "isrs_utility",
]
