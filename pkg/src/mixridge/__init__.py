"""Over-parameterized binary classification on symmetric Gaussian mixtures:
Gram-space ridge/interpolation solvers, closed-form bound evaluation, and
reproducible Monte-Carlo experiments."""

from . import bounds, events, experiments, model, solver, spectrum
from .errors import (
    ConfigError,
    DegenerateS,
    InvalidParams,
    InvalidSpectrum,
    MixridgeError,
    NoKStar,
    SchemaMismatch,
    SingularRegularization,
    TooFewTrials,
    ZeroSolution,
)

__version__ = "0.1.0"

__all__ = [
    "bounds",
    "events",
    "experiments",
    "model",
    "solver",
    "spectrum",
    "MixridgeError",
    "InvalidSpectrum",
    "InvalidParams",
    "NoKStar",
    "SingularRegularization",
    "DegenerateS",
    "ZeroSolution",
    "TooFewTrials",
    "SchemaMismatch",
    "ConfigError",
    "__version__",
]
