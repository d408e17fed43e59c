"""Tracking cost, box projection, golden-section step search and projected gradient descent.

The control ``u`` is the top-boundary water content above ``theta_r``, one
value per time level. Inner products and norms in time use trapezoidal
weights, so the gradient returned here is the L2(0, T) representative of
the derivative of the discrete reduced cost.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .adjoint import solve_adjoint
from .exceptions import DomainError, LineSearchStall
from .forward import CLAMP_FLOOR, BoundaryData, solve_forward

log = logging.getLogger(__name__)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0

TOLERANCE = "Tolerance"
MAX_ITERATIONS = "MaxIterations"
LINE_SEARCH_STALL = "LineSearchStall"


@dataclass(frozen=True)
class AdmissibleSet:
    """Closed box ``[lower, upper]`` for the control."""

    lower: float
    upper: float

    def __post_init__(self):
        if not self.lower < self.upper:
            raise DomainError(f"empty admissible set [{self.lower}, {self.upper}]")

    @classmethod
    def for_soil(cls, soil, margin):
        """``0 <= u <= theta_s - theta_r - margin``."""
        return cls(0.0, soil.theta_s - soil.theta_r - margin)

    def contains(self, u):
        u = np.asarray(u)
        return bool(np.all((u >= self.lower) & (u <= self.upper)))


@dataclass(frozen=True)
class PgdConfig:
    maxit: int = 100
    tol: float = 1e-5
    lam: float = 0.1
    epsilon: float = 1e-3
    picard_tol: float = 1e-8
    picard_maxit: int = 50
    ls_budget: int = 20
    adjoint_scheme: str = "discrete"
    track_normalized: bool = False

    def check(self):
        problems = []
        if not self.maxit >= 1:
            problems.append("pgd.maxit>=1")
        if not self.tol > 0:
            problems.append("pgd.tol>0")
        if not self.lam > 0:
            problems.append("pgd.lambda>0")
        if not self.epsilon > 0:
            problems.append("pgd.epsilon>0")
        if not self.ls_budget >= 2:
            problems.append("pgd.ls_budget>=2")
        if self.adjoint_scheme not in ("discrete", "continuous"):
            problems.append("pgd.adjoint_scheme in {discrete, continuous}")
        return problems


@dataclass
class OptimizationReport:
    iterations: int
    cost_history: list
    final_control: np.ndarray
    final_state: object
    final_adjoint: object
    exit_reason: str
    clamp_events: int = 0
    projected_gradient_norms: list = field(default_factory=list)
    step_sizes: list = field(default_factory=list)


def cost(uptake, soil, theta, u, lam, *, normalized=False, reg=None):
    """Tracking cost ``1/2 iint (g(theta) - 1)^2 + lam/2 int u^2`` by trapezoidal quadrature.

    ``g`` is the uptake ``f`` (or its normalised shape if ``normalized``).
    Water content is clamped into the open interval before evaluation, with
    the forward solver's limits when ``reg`` is given.
    """
    grid = theta.grid
    hi = soil.theta_s - (0.5 * reg.epsilon if reg is not None else 1e-12)
    c = np.clip(theta.values, soil.theta_r + CLAMP_FLOOR, hi)
    g, _ = uptake._tracked(soil, c, normalized)
    wz, wt = grid.space_weights(), grid.time_weights()
    u = np.asarray(u, dtype=float)
    return 0.5 * (wz @ (g - 1.0) ** 2 @ wt) + 0.5 * lam * (wt @ u**2)


def gradient(u, lam, boundary_flux):
    """``lam * u + boundary_flux``; the descent direction is its negative."""
    return lam * np.asarray(u, dtype=float) + np.asarray(boundary_flux, dtype=float)


def project(u, aset):
    """Componentwise clamp onto the admissible box."""
    return np.clip(np.asarray(u, dtype=float), aset.lower, aset.upper)


class ControlProblem:
    """A scenario compiled to fixed arrays: everything the reduced cost needs.

    The initial profile and bottom boundary are data; the control enters
    only through the top boundary ``theta_r + u`` at time levels ``n >= 1``.
    """

    def __init__(self, soil, uptake, reg, grid, ic, bottom, config=None, u_init=None):
        self.soil, self.uptake, self.reg, self.grid = soil, uptake, reg, grid
        self.ic = np.asarray(ic, dtype=float)
        self.bottom = np.asarray(bottom, dtype=float)
        self.config = config or PgdConfig(epsilon=reg.epsilon)
        self.aset = AdmissibleSet.for_soil(soil, reg.epsilon)
        self.u_init = np.zeros(grid.Nt) if u_init is None else np.asarray(u_init, dtype=float)

    def with_config(self, **changes):
        return ControlProblem(self.soil, self.uptake, self.reg, self.grid, self.ic, self.bottom,
                              replace(self.config, **changes), self.u_init)

    def forward(self, u):
        cfg = self.config
        bc = BoundaryData(self.soil.theta_r + np.asarray(u, dtype=float), self.bottom)
        return solve_forward(self.soil, self.uptake, self.reg, self.grid, self.ic, bc,
                             picard_tol=cfg.picard_tol, picard_maxit=cfg.picard_maxit)

    def cost(self, field, u):
        return cost(self.uptake, self.soil, field, u, self.config.lam,
                    normalized=self.config.track_normalized, reg=self.reg)

    def reduced_cost(self, u):
        return self.cost(self.forward(u), u)

    def adjoint(self, field):
        return solve_adjoint(self.soil, self.uptake, self.reg, field,
                             scheme=self.config.adjoint_scheme,
                             normalized=self.config.track_normalized)

    def gradient(self, u, field=None):
        """Return ``(grad, state, adjoint)`` at control ``u``."""
        if field is None:
            field = self.forward(u)
        adj = self.adjoint(field)
        return gradient(u, self.config.lam, adj.top_flux), field, adj

    def inner(self, a, b):
        """L2(0, T) inner product with trapezoidal weights."""
        return float(self.grid.time_weights() @ (np.asarray(a) * np.asarray(b)))


def _as_problem(scenario):
    return scenario if isinstance(scenario, ControlProblem) else scenario.to_problem()


def reduced_cost(scenario, u):
    """Cost of control ``u`` with the state eliminated through the forward solve."""
    return _as_problem(scenario).reduced_cost(u)


def golden_section(phi, s_max, budget, phi0):
    """Golden-section search for ``min phi(s)`` on ``[0, s_max]`` with ``budget`` evaluations.

    Returns the best evaluated ``(s, phi(s))``; ``phi0 = phi(0)`` is known
    and not re-evaluated. Raises LineSearchStall if nothing beats ``phi0``.
    """
    a, b = 0.0, s_max
    x1 = b - GOLDEN * (b - a)
    x2 = a + GOLDEN * (b - a)
    f1, f2 = phi(x1), phi(x2)
    best = min((phi0, 0.0), (f1, x1), (f2, x2))
    used = 2
    while used < budget:
        if f1 <= f2:
            b, x2, f2 = x2, x1, f1
            x1 = b - GOLDEN * (b - a)
            f1 = phi(x1)
            best = min(best, (f1, x1))
        else:
            a, x1, f1 = x1, x2, f2
            x2 = a + GOLDEN * (b - a)
            f2 = phi(x2)
            best = min(best, (f2, x2))
        used += 1
    if not best[0] < phi0:
        raise LineSearchStall(f"no improvement over J={phi0:.10g} in {budget} evaluations")
    return best[1], best[0]


def line_search(objective, u, r, aset, *, budget=20, j0=None):
    """Step size ``s >= 0`` approximately minimising ``objective(project(u + s r))``.

    ``objective`` may also be a scenario/problem, in which case its reduced
    cost is used. The bracket ``[0, s_max]`` is wide enough for the step to
    cross the whole box: ``s_max = (upper - lower) / max|r|``.

    Returns ``(s, J(s))``.
    """
    if not callable(objective):
        objective = _as_problem(objective).reduced_cost
    u = np.asarray(u, dtype=float)
    r = np.asarray(r, dtype=float)
    if j0 is None:
        j0 = objective(u)
    rmax = np.max(np.abs(r))
    if rmax == 0.0:
        return 0.0, j0
    s_max = (aset.upper - aset.lower) / rmax
    if np.array_equal(project(u + s_max * r, aset), u):
        # every component of r points out of the box from an active bound
        return 0.0, j0
    return golden_section(lambda s: objective(project(u + s * r, aset)), s_max, budget, j0)


def pgd(scenario, config=None, *, u0=None, callback=None):
    """Projected gradient descent on the reduced cost.

    Iterates ``u <- project(u + s r)`` with ``r = -(lam u + beta dp/dz|_0)``
    and ``s`` from a golden-section search, stopping when the cost change of
    the candidate step is below ``tol``, when the search stalls, or after
    ``maxit`` iterations.
    """
    prob = _as_problem(scenario)
    if config is not None:
        prob = prob.with_config(**{k: getattr(config, k) for k in config.__dataclass_fields__})
    cfg = prob.config
    aset = prob.aset
    u = project(prob.u_init if u0 is None else u0, aset)
    state = prob.forward(u)
    J = prob.cost(state, u)
    history = [J]
    pg_norms, steps = [], []
    clamps = state.clamp_events
    reason = MAX_ITERATIONS
    adj = None
    for it in range(1, cfg.maxit + 1):
        grad, state, adj = prob.gradient(u, state)
        pg_norms.append(float(np.max(np.abs(u - project(u - grad, aset)))))
        try:
            s, J_new = line_search(prob.reduced_cost, u, -grad, aset, budget=cfg.ls_budget, j0=J)
        except LineSearchStall:
            reason = LINE_SEARCH_STALL
            break
        steps.append(s)
        log.info("pgd it=%d J=%.10g s=%.4g dJ=%.3e", it, J, s, J_new - J)
        if abs(J_new - J) < cfg.tol:
            reason = TOLERANCE
            break
        u = project(u - s * grad, aset)
        state = prob.forward(u)
        J = J_new
        history.append(J)
        clamps += state.clamp_events
        if callback is not None:
            callback(it, u, J)
    else:
        it = cfg.maxit
        grad, state, adj = prob.gradient(u, state)
    return OptimizationReport(
        iterations=it, cost_history=history, final_control=u, final_state=state,
        final_adjoint=adj, exit_reason=reason, clamp_events=clamps,
        projected_gradient_norms=pg_norms, step_sizes=steps,
    )


def interior_control(aset, grid, level=0.2, wiggle=0.4):
    """A smooth control strictly inside the box, away from the active bounds."""
    t = grid.t
    return aset.lower + level * (aset.upper - aset.lower) * (
        1.0 + wiggle * np.sin(2.0 * np.pi * t / grid.T))


def gradient_check(scenario, *, directions=5, h=1e-5, seed=0, u=None):
    """Compare adjoint directional derivatives with central differences of the reduced cost.

    Directions are standard normal vectors scaled to unit max-norm. The
    default base point is :func:`interior_control`, where the projection is
    inactive and the reduced cost is differentiable.

    Returns
    -------
    list of (adjoint, finite_difference, relative_error)
    """
    prob = _as_problem(scenario)
    if u is None:
        u = interior_control(prob.aset, prob.grid)
    grad, _, _ = prob.gradient(u)
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(directions):
        d = rng.standard_normal(prob.grid.Nt)
        d /= np.max(np.abs(d))
        adj = prob.inner(grad, d)
        fd = (prob.reduced_cost(u + h * d) - prob.reduced_cost(u - h * d)) / (2.0 * h)
        out.append((adj, fd, abs(adj - fd) / max(abs(fd), 1e-300)))
    return out
