"""Exception types shared across the package."""

from __future__ import annotations


class TeamSearchError(Exception):
    """Base class for all package-specific failures."""


class ValidationError(TeamSearchError):
    """A cost spec, bounds object, or scenario config failed validation."""


class CostDomainError(TeamSearchError):
    """A cost-family evaluation left its numeric domain (non-finite result)."""


class SolverError(TeamSearchError):
    """A root-finding or optimization routine could not produce a consistent answer."""


class SimulationError(TeamSearchError):
    """A Monte Carlo run violated a hard runtime contract (e.g. censoring in strict mode)."""
