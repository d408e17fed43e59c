"""Implicit finite-difference solver for the truncated Richards equation in theta form.

The state equation is

    d(theta)/dt - d/dz( beta_eps(theta) d(theta)/dz ) + dK(theta)/dz = -f(theta)

on ``(0, Z) x (0, T)`` with ``z`` pointing downwards and Dirichlet data at
both ends; ``f >= 0`` is the root water uptake and removes water. Time
stepping is implicit Euler; every step is solved by a Picard iteration that
freezes ``beta_eps`` and ``f`` at the previous iterate and linearises ``K``
around it, so each inner solve is tridiagonal. Levels where Picard stalls,
such as a wet top meeting dry soil, are finished with damped Newton steps.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import solve_banded

from .exceptions import DomainError, InvalidBoundary, PicardDivergence

log = logging.getLogger(__name__)

# Lower clamp offset above theta_r applied to Picard iterates.
CLAMP_FLOOR = 1e-10
# Relaxation applied to a Picard update that reverses the previous one.
OSCILLATION_DAMPING = 0.5
# Smallest backtracking fraction of a Newton step before it is accepted anyway.
NEWTON_MIN_STEP = 1e-3


@dataclass(frozen=True)
class Grid1D:
    """Uniform space-time grid with ``Nz`` nodes on ``[0, Z]`` and ``Nt`` levels on ``[0, T]``."""

    Z: float
    T: float
    Nz: int = 141
    Nt: int = 241

    def __post_init__(self):
        if self.Nz < 3 or self.Nt < 2:
            raise DomainError(f"grid needs Nz >= 3 and Nt >= 2, got Nz={self.Nz}, Nt={self.Nt}")
        if not (self.Z > 0 and self.T > 0):
            raise DomainError("Z and T must be positive")

    @property
    def dz(self):
        return self.Z / (self.Nz - 1)

    @property
    def dt(self):
        return self.T / (self.Nt - 1)

    @property
    def z(self):
        return np.linspace(0.0, self.Z, self.Nz)

    @property
    def t(self):
        return np.linspace(0.0, self.T, self.Nt)

    def space_weights(self):
        """Trapezoidal quadrature weights in z (sum to Z)."""
        w = np.full(self.Nz, self.dz)
        w[[0, -1]] *= 0.5
        return w

    def time_weights(self):
        """Trapezoidal quadrature weights in t (sum to T)."""
        w = np.full(self.Nt, self.dt)
        w[[0, -1]] *= 0.5
        return w

    def with_resolution(self, Nz=None, Nt=None):
        return Grid1D(self.Z, self.T, Nz or self.Nz, Nt or self.Nt)


@dataclass(frozen=True)
class BoundaryData:
    """Dirichlet water content at ``z = 0`` (top) and ``z = Z`` (bottom), one value per time level."""

    top: np.ndarray
    bottom: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "top", np.asarray(self.top, dtype=float))
        object.__setattr__(self, "bottom", np.asarray(self.bottom, dtype=float))

    def check(self, soil, grid):
        for name, arr in (("top", self.top), ("bottom", self.bottom)):
            if arr.shape != (grid.Nt,):
                raise InvalidBoundary(f"{name} boundary must have {grid.Nt} values, got {arr.shape}")
            # theta_r itself is allowed: the admissible control set contains u = 0
            if np.any(arr < soil.theta_r) or np.any(arr >= soil.theta_s) or np.any(np.isnan(arr)):
                raise InvalidBoundary(
                    f"{name} boundary must stay in [theta_r, theta_s) = "
                    f"[{soil.theta_r}, {soil.theta_s}); range is [{arr.min()}, {arr.max()}]"
                )


@dataclass
class StateField:
    """Water content ``values[i, n]`` at node ``i`` and time level ``n``.

    Row ``n = 0`` holds the initial profile; columns ``i = 0`` and
    ``i = Nz - 1`` hold the boundary data for ``n >= 1``.
    """

    values: np.ndarray
    grid: Grid1D
    clamp_events: int = 0
    clamp_levels: list = field(default_factory=list)
    saturation_breach: bool = False
    picard_iterations: np.ndarray = None
    max_residual: float = 0.0

    @property
    def top(self):
        return self.values[0]

    @property
    def bottom(self):
        return self.values[-1]


class RichardsCoefficients:
    """Constitutive coefficients of the state equation, evaluated on clamped water content."""

    def __init__(self, soil, uptake, reg):
        self.soil = soil
        self.uptake = uptake
        self.reg = reg
        self.lo = soil.theta_r + CLAMP_FLOOR
        self.hi = soil.theta_s - 0.5 * reg.epsilon
        self.cut = soil.theta_s - reg.epsilon

    def clamp(self, theta):
        return np.clip(theta, self.lo, self.hi)

    def diffusivity(self, c):
        return self.soil._diffusivity(np.minimum(c, self.cut))

    def ddiffusivity(self, c):
        return np.where(c < self.cut, self.soil._ddiffusivity(np.minimum(c, self.cut)), 0.0)

    def conductivity(self, c):
        return self.soil._conductivity_theta(c)

    def dconductivity(self, c):
        return self.soil._dK_dtheta(c)

    def source(self, c):
        return -self.uptake._f(self.soil, c)

    def dsource(self, c):
        return -self.uptake._df(self.soil, c)


class FrozenCoefficients:
    """Constant diffusivity ``D``, linear conductivity ``K = a * theta`` and constant source ``q``.

    A test hook: with these coefficients the state equation is the linear
    advection-diffusion equation, for which closed-form solutions exist.
    """

    def __init__(self, D, a=0.0, source=0.0):
        self.D, self.a, self.q = float(D), float(a), float(source)

    def clamp(self, theta):
        return theta

    def diffusivity(self, c):
        return np.full_like(c, self.D)

    def ddiffusivity(self, c):
        return np.zeros_like(c)

    def conductivity(self, c):
        return self.a * c

    def dconductivity(self, c):
        return np.full_like(c, self.a)

    def source(self, c):
        return np.full_like(c, self.q)

    def dsource(self, c):
        return np.zeros_like(c)


def _profile(ic, grid):
    if callable(ic):
        ic = ic(grid.z)
    ic = np.array(ic, dtype=float)
    if ic.shape != (grid.Nz,):
        raise DomainError(f"initial profile must have {grid.Nz} values, got {ic.shape}")
    return ic


def face_fluxes(theta, coeffs, dz):
    """Darcy flux (downward positive) on the ``Nz - 1`` cell faces of one profile.

    ``q = -beta_face * dtheta/dz + K_upwind`` with arithmetic-mean face
    diffusivity and conductivity taken from the node above the face.
    """
    c = coeffs.clamp(theta)
    B = coeffs.diffusivity(c)
    Bf = 0.5 * (B[1:] + B[:-1])
    return -Bf * np.diff(theta) / dz + coeffs.conductivity(c)[:-1]


def step_residual(theta_new, theta_old, coeffs, dz, dt):
    """Nonlinear residual of one implicit Euler step at the interior nodes."""
    q = face_fluxes(theta_new, coeffs, dz)
    c = coeffs.clamp(theta_new)
    return (theta_new[1:-1] - theta_old[1:-1]) / dt + np.diff(q) / dz - coeffs.source(c)[1:-1]


def linearization(coeffs, theta):
    """Coefficients and their theta-derivatives at one profile.

    Derivatives vanish where the clamp is active, matching the clamped
    coefficients the solver actually uses.
    """
    c = coeffs.clamp(theta)
    free = c == theta
    return dict(
        B=coeffs.diffusivity(c),
        dB=np.where(free, coeffs.ddiffusivity(c), 0.0),
        K=coeffs.conductivity(c),
        dK=np.where(free, coeffs.dconductivity(c), 0.0),
        ds=np.where(free, coeffs.dsource(c), 0.0),
    )


def step_jacobian(theta, k, dz, dt):
    """Tridiagonal Jacobian of :func:`step_residual` w.r.t. the interior values.

    ``k`` is the output of :func:`linearization`. Returns
    ``(lower, diag, upper, dq0_dv)`` where ``dq0_dv`` is the derivative of
    the first face flux with respect to the top boundary value.
    """
    B, dB, dK, ds = k["B"], k["dB"], k["dK"], k["ds"]
    Bf = 0.5 * (B[1:] + B[:-1])
    grad = np.diff(theta) / dz
    # face flux q_j = -Bf_j * grad_j + K(theta_j)
    dq_left = -0.5 * dB[:-1] * grad + Bf / dz + dK[:-1]   # d q_j / d theta_j
    dq_right = -0.5 * dB[1:] * grad - Bf / dz             # d q_j / d theta_{j+1}
    diag = 1.0 / dt + (dq_left[1:] - dq_right[:-1]) / dz - ds[1:-1]
    upper = dq_right[1:-1] / dz                            # row i, column i+1
    lower = -dq_left[1:-1] / dz                            # row i, column i-1
    return lower, diag, upper, dq_left[0]


def _tridiag(lower, diag, upper):
    ab = np.zeros((3, diag.size))
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return ab


def _picard_level(coeffs, old, cur, dz, dt, tol, maxit):
    """Picard sweeps on one level; returns ``(iterations, last_update)``, ``cur`` updated in place."""
    inv_dz2 = 1.0 / dz**2
    update = np.inf
    prev = None
    for k in range(1, maxit + 1):
        c = coeffs.clamp(cur)
        B = coeffs.diffusivity(c)
        Bf = 0.5 * (B[1:] + B[:-1])
        Kc = coeffs.conductivity(c)
        Kp = coeffs.dconductivity(c)
        Kp[[0, -1]] = 0.0  # boundary values are data
        src = coeffs.source(c)

        lower = -Bf[:-1] * inv_dz2 - Kp[:-2] / dz      # coefficient of theta_{i-1}
        upper = -Bf[1:] * inv_dz2                      # coefficient of theta_{i+1}
        diag = 1.0 / dt + (Bf[1:] + Bf[:-1]) * inv_dz2 + Kp[1:-1] / dz
        lin = Kc - Kp * cur
        rhs = old[1:-1] / dt + src[1:-1] - (lin[1:-1] - lin[:-2]) / dz
        rhs[0] -= lower[0] * cur[0]
        rhs[-1] -= upper[-1] * cur[-1]

        step = solve_banded((1, 1), _tridiag(lower[1:], diag, upper[:-1]), rhs,
                            check_finite=False) - cur[1:-1]
        if prev is not None and step @ prev < 0.0:
            # oscillating iterates, typically a sharp front at a dry boundary
            step *= OSCILLATION_DAMPING
        prev = step
        update = np.max(np.abs(step))
        cur[1:-1] += step
        if update < tol:
            return k, update
    return None, update


def _newton_level(coeffs, old, cur, dz, dt, tol, maxit):
    """Newton steps with residual backtracking; same contract as :func:`_picard_level`."""
    update = np.inf
    res = step_residual(cur, old, coeffs, dz, dt)
    norm = np.linalg.norm(res)
    for k in range(1, maxit + 1):
        lower, diag, upper, _ = step_jacobian(cur, linearization(coeffs, cur), dz, dt)
        step = -solve_banded((1, 1), _tridiag(lower, diag, upper), res, check_finite=False)
        a = 1.0
        while True:
            trial = cur.copy()
            trial[1:-1] = coeffs.clamp(cur[1:-1] + a * step)
            trial_res = step_residual(trial, old, coeffs, dz, dt)
            trial_norm = np.linalg.norm(trial_res)
            if trial_norm < (1.0 - 1e-4 * a) * norm or a < NEWTON_MIN_STEP:
                break
            a *= 0.5
        update = np.max(np.abs(trial - cur))
        cur[:] = trial
        res, norm = trial_res, trial_norm
        if update < tol:
            return k, update
    return None, update


def integrate(coeffs, grid, ic, top, bottom, *, picard_tol=1e-8, picard_maxit=50):
    """Time-march the state equation for arbitrary coefficient providers.

    Each level is solved by Picard iteration; a level that has not
    converged after ``picard_maxit`` sweeps is restarted from the previous
    level with damped Newton steps under the same budget.

    Returns ``(values, iterations, clamp_levels, max_residual)``.
    """
    dz, dt = grid.dz, grid.dt
    Nz, Nt = grid.Nz, grid.Nt
    theta = np.empty((Nz, Nt))
    theta[:, 0] = ic
    iterations = np.zeros(Nt, dtype=int)
    clamp_levels = []
    max_res = 0.0

    for n in range(1, Nt):
        old = theta[:, n - 1]
        cur = old.copy()
        cur[0], cur[-1] = top[n], bottom[n]
        start = cur.copy()
        k, update = _picard_level(coeffs, old, cur, dz, dt, picard_tol, picard_maxit)
        if k is None:
            log.debug("level %d: Picard stalled at %.3e, switching to Newton", n, update)
            cur = start
            k, update = _newton_level(coeffs, old, cur, dz, dt, picard_tol, picard_maxit)
            if k is None:
                raise PicardDivergence(n, update, picard_maxit)
            k += picard_maxit
        iterations[n] = k
        theta[:, n] = cur
        if np.any(coeffs.clamp(cur[1:-1]) != cur[1:-1]):
            clamp_levels.append(n)
        res = np.max(np.abs(step_residual(cur, old, coeffs, dz, dt))) * dt
        max_res = max(max_res, res)
    return theta, iterations, clamp_levels, max_res


def solve_forward(soil, uptake, reg, grid, ic, bc, *, picard_tol=1e-8, picard_maxit=50,
                  coefficients=None):
    """Solve the state equation on ``grid``.

    Parameters
    ----------
    soil, uptake, reg
        Constitutive model, Feddes sink and diffusivity truncation.
    grid : Grid1D
    ic : array_like or callable
        Initial profile at the ``Nz`` nodes, or a function of depth.
    bc : BoundaryData
        Top and bottom water content at every time level.
    coefficients : optional
        Replaces the constitutive coefficients (test hook); ``soil``,
        ``uptake`` and ``reg`` are then only used for validation.

    Returns
    -------
    StateField
    """
    ic = _profile(ic, grid)
    if coefficients is None:
        bc.check(soil, grid)
        if np.any(ic < soil.theta_r) or np.any(ic >= soil.theta_s):
            raise DomainError("initial profile must lie in [theta_r, theta_s)")
        coefficients = RichardsCoefficients(soil, uptake, reg)
    values, its, levels, res = integrate(
        coefficients, grid, ic, bc.top, bc.bottom,
        picard_tol=picard_tol, picard_maxit=picard_maxit,
    )
    breach = False
    if soil is not None and reg is not None:
        breach = bool(np.any(values > soil.theta_s - 0.5 * reg.epsilon))
        if breach:
            log.warning("water content exceeded theta_s - eps/2")
    return StateField(
        values=values, grid=grid, clamp_events=len(levels), clamp_levels=levels,
        saturation_breach=breach, picard_iterations=its, max_residual=res,
    )


def mass_balance_residual(field, soil, uptake, reg, *, floor=1e-12):
    """Relative error of the water budget over the run.

    Storage and the sink integral use trapezoidal quadrature in depth; the
    boundary fluxes are the solver's own face fluxes next to each boundary,
    integrated in time with the implicit (right-endpoint) rule the solver
    uses. Returns ``|dS - (in - out) + uptake| / max(|dS|, floor)``.
    """
    coeffs = RichardsCoefficients(soil, uptake, reg)
    grid = field.grid
    th = field.values
    wz = grid.space_weights()
    storage = wz @ th
    d_storage = storage[-1] - storage[0]
    net_in = 0.0
    taken = 0.0
    for n in range(1, grid.Nt):
        q = face_fluxes(th[:, n], coeffs, grid.dz)
        net_in += grid.dt * (q[0] - q[-1])
        taken -= grid.dt * (wz @ coeffs.source(coeffs.clamp(th[:, n])))
    return abs(d_storage - net_in + taken) / max(abs(d_storage), floor)
