"""Radial ground states of a Kirchhoff equation with combined powers."""

from .core import (Controls, DEFAULT_CONTROLS, GroundStateSolution, LocalProfile, NormBundle,
                   ParameterError, ProblemParams, SolverError, classify_regime, validate_params)

__version__ = "0.1.0"

__all__ = ["Controls", "DEFAULT_CONTROLS", "GroundStateSolution", "LocalProfile", "NormBundle",
           "ParameterError", "ProblemParams", "SolverError", "classify_regime", "validate_params"]
