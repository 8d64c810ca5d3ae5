"""Numerical laboratory for nonlocal-dispersal KPP fronts with free boundaries."""

from . import analysis, ap_ode, fb_solver, forcing, kernels, lyapunov
from .errors import (
    ConfigError,
    Degenerate,
    FrontierError,
    InsufficientData,
    NoConvergence,
    NonPositive,
    NotConverged,
    NotThinTailed,
    NumericsError,
    ParseError,
    StabilityViolation,
    ValidationError,
    WindowExhausted,
)

__all__ = [
    "analysis",
    "ap_ode",
    "fb_solver",
    "forcing",
    "kernels",
    "lyapunov",
    "ConfigError",
    "Degenerate",
    "FrontierError",
    "InsufficientData",
    "NoConvergence",
    "NonPositive",
    "NotConverged",
    "NotThinTailed",
    "NumericsError",
    "ParseError",
    "StabilityViolation",
    "ValidationError",
    "WindowExhausted",
]

__version__ = "0.1.0"
