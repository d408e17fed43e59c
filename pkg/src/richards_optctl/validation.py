"""Small input-checking helpers shared by the estimator facade and the CLI."""
from __future__ import annotations

import numpy as np

from .exceptions import DomainError


def check_control(u, grid, aset=None):
    """Return ``u`` as a float array of length ``grid.Nt``; scalars are broadcast."""
    u = np.asarray(u, dtype=float)
    if u.ndim == 0:
        u = np.full(grid.Nt, float(u))
    if u.shape != (grid.Nt,):
        raise DomainError(f"control must have {grid.Nt} values, got shape {u.shape}")
    if not np.all(np.isfinite(u)):
        raise DomainError("control contains non-finite values")
    if aset is not None and not aset.contains(u):
        raise DomainError(f"control leaves the admissible box [{aset.lower}, {aset.upper}]")
    return u


def check_positive(name, value):
    if not (np.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be positive, got {value!r}")
    return value


def check_scenario(scenario):
    """Resolve a built-in name, YAML path or Scenario to a validated Scenario."""
    from .scenario import Scenario, load_scenario

    if isinstance(scenario, str):
        scenario = load_scenario(scenario)
    if not isinstance(scenario, Scenario):
        raise DomainError(f"expected a Scenario or scenario name, got {type(scenario).__name__}")
    return scenario.validate()
