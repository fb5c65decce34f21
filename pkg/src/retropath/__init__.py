"""General-equilibrium transition paths for residential decarbonization."""

from .calibration import CalibrationTargets, TargetReport, calibrate, verify_calibration
from .errors import (CalibrationError, ConfigurationError, DomainError,
                     InfeasiblePolicyError, RetropathError, SolverError)
from .functions import (composite_energy_price, evaluate_ces,
                        housing_energy_requirement, housing_services,
                        production_block, utility)
from .params import ModelParameters, TechnologyPaths, technology_paths
from .steady_state import SteadyState, solve_steady_state
from .structures import MultiplierSet, PeriodAllocation, PriceSystem

__version__ = "0.1.0"

__all__ = [
    "CalibrationError", "CalibrationTargets", "ConfigurationError", "DomainError",
    "InfeasiblePolicyError", "ModelParameters", "MultiplierSet", "PeriodAllocation",
    "PriceSystem", "RetropathError", "SolverError", "SteadyState", "TargetReport",
    "TechnologyPaths", "calibrate", "composite_energy_price", "evaluate_ces",
    "housing_energy_requirement", "housing_services", "production_block",
    "solve_steady_state", "technology_paths", "utility", "verify_calibration",
]
