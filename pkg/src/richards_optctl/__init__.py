"""Optimal irrigation through adjoint-based boundary control of the 1D Richards equation."""
from .adjoint import AdjointField, boundary_flux_gradient, solve_adjoint
from .estimator import IrrigationOptimizer
from .exceptions import (
    DomainError, InvalidBoundary, LineSearchStall, PicardDivergence, RichardsOptCtlError,
    SchemaError, UnknownScenario, ValidationError,
)
from .forward import BoundaryData, Grid1D, StateField, mass_balance_residual, solve_forward
from .optim import (
    AdmissibleSet, ControlProblem, OptimizationReport, PgdConfig, cost, gradient,
    gradient_check, line_search, pgd, project, reduced_cost,
)
from .output import OutputBundle, run
from .scenario import (
    BUILTINS, Scenario, builtin_scenario, dump_scenario, load_scenario, parse_scenario,
)
from .soil import (
    DiffusivityRegularization, HaverkampSoil, ValidityReport, VanGenuchtenSoil, diffusivity,
    diffusivity_regularized, dK_dtheta, hydraulic_conductivity, pressure_head,
    specific_capacity, validate_quasi_unsaturated, water_content,
)
from .uptake import FeddesUptake, adjoint_source, uptake, uptake_dtheta, uptake_hat

__version__ = "0.1.0"
