"""Weak (relaxation-norm) trajectory tracking for quadratic control systems."""

__version__ = "0.1.0"

from .exceptions import BlowUp, BudgetExhausted, ConfigError, OrthantViolation  # noqa: E402
from .saturation import check_assumption1, representable, saturation_chain  # noqa: E402
from .signals import TimeGrid, relaxation_norm  # noqa: E402
from .synthesis import TargetCurve, synthesize_tracking_control  # noqa: E402
from .system import QuadraticSystem, make_system, system_from_dict  # noqa: E402
from .estimators import QuadraticTracker  # noqa: E402

__all__ = [
    "__version__",
    "BlowUp",
    "BudgetExhausted",
    "ConfigError",
    "OrthantViolation",
    "QuadraticSystem",
    "QuadraticTracker",
    "TargetCurve",
    "TimeGrid",
    "check_assumption1",
    "make_system",
    "relaxation_norm",
    "representable",
    "saturation_chain",
    "synthesize_tracking_control",
    "system_from_dict",
]
