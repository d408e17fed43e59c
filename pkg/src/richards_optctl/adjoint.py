"""Backward-in-time adjoint of the state equation and the boundary term of the gradient.

Two discretisations are provided.

``"discrete"``
    The exact transpose of the linearised implicit Euler / Picard fixed
    point used by :func:`richards_optctl.forward.solve_forward`. The
    resulting gradient is the gradient of the discrete reduced cost.
``"continuous"``
    Implicit Euler in reversed time applied to the adjoint equation

        dp/dt + beta_eps(theta*) d2p/dz2 + dK/dtheta(theta*) dp/dz
              - df/dtheta(theta*) p = -(g(theta*) - 1) dg/dtheta(theta*)

    with centred second differences, upwinded first differences and
    coefficients frozen at the state's own time level. ``g`` is the tracked
    uptake (``f`` or its normalised shape).

Both return ``p`` normalised so that the top boundary term of the gradient
approximates ``beta_eps(theta*) dp/dz`` at ``z = 0``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import solve_banded

from .exceptions import DomainError
from .forward import RichardsCoefficients, linearization, step_jacobian

SCHEMES = ("discrete", "continuous")


@dataclass
class AdjointField:
    """Adjoint state ``values[i, n]`` on the state's grid.

    ``top_flux`` is the boundary term entering the gradient at every time
    level as computed consistently with ``scheme``; ``bottom_flux`` is the
    diagnostic ``-beta dp/dz`` at ``z = Z``.
    """

    values: np.ndarray
    grid: object
    scheme: str
    top_flux: np.ndarray
    bottom_flux: np.ndarray


class _AdjointCoefficients:
    """Per-level coefficients of the adjoint problem around a fixed state."""

    def __init__(self, soil, uptake, reg, normalized=False):
        self.c = RichardsCoefficients(soil, uptake, reg)
        self.soil, self.uptake = soil, uptake
        self.normalized = normalized

    def tracking(self, theta):
        """Pointwise ``(g - 1) * dg/dtheta``, zero where the clamp is active."""
        c = self.c.clamp(theta)
        g, dg = self.uptake._tracked(self.soil, c, self.normalized)
        return np.where(c == theta, (g - 1.0) * dg, 0.0)

    def level(self, theta):
        return linearization(self.c, theta)


def _banded(lower, diag, upper, transpose):
    n = diag.size
    ab = np.zeros((3, n))
    if transpose:
        lower, upper = upper, lower
    ab[0, 1:] = upper
    ab[1] = diag
    ab[2, :-1] = lower
    return ab


def _solve_discrete(coef, theta, grid, source):
    Nz, Nt = theta.shape
    dz, dt = grid.dz, grid.dt
    wz = grid.space_weights()
    wt = grid.time_weights()
    mu_next = np.zeros(Nz - 2)
    p = np.zeros((Nz, Nt))
    top = np.zeros(Nt)
    for n in range(Nt - 1, 0, -1):
        k = coef.level(theta[:, n])
        lower, diag, upper, dq0_dv = step_jacobian(theta[:, n], k, dz, dt)
        rhs = wt[n] * wz[1:-1] * source[1:-1, n] + mu_next / dt
        mu = solve_banded((1, 1), _banded(lower, diag, upper, True), rhs, check_finite=False)
        # dR_1/dv = -dq_0/dv / dz, and dJ/dv_n = wt*wz0*src0 - mu_1 * dR_1/dv
        top[n] = wz[0] * source[0, n] + mu[0] * dq0_dv / (dz * wt[n])
        p[1:-1, n - 1] = mu / (dt * dz)
        mu_next = mu
    return p, top


def _solve_continuous(coef, theta, grid, source):
    Nz, Nt = theta.shape
    dz, dt = grid.dz, grid.dt
    p = np.zeros((Nz, Nt))
    for n in range(Nt - 2, -1, -1):
        k = coef.level(theta[:, n])
        B, a, r = k["B"][1:-1], k["dK"][1:-1], k["ds"][1:-1]
        # (p^n - p^{n+1})/dt = B p_zz + a (p_{i+1} - p_i)/dz + r p + source
        diag = 1.0 / dt + 2.0 * B / dz**2 + a / dz - r
        upper = -B / dz**2 - a / dz
        lower = -B / dz**2
        rhs = p[1:-1, n + 1] / dt + source[1:-1, n]
        p[1:-1, n] = solve_banded((1, 1), _banded(lower[1:], diag, upper[:-1], False), rhs,
                                  check_finite=False)
    return p


def solve_adjoint(soil, uptake, reg, theta_star, *, scheme="discrete", normalized=False,
                  source=None, coefficients=None):
    """Solve the adjoint problem around ``theta_star``.

    Parameters
    ----------
    theta_star : StateField
    scheme : {"discrete", "continuous"}
    normalized : bool
        Track the normalised uptake shape instead of the scaled uptake.
    source : ndarray, optional
        Replaces the pointwise tracking source ``(g - 1) dg/dtheta``
        (shape ``(Nz, Nt)``); test hook for linearity checks.
    coefficients : optional
        Replaces the per-level coefficient provider (test hook); must offer
        ``level(theta)`` returning ``B, dB, K, dK, ds`` arrays (``ds`` is the
        derivative of the right-hand-side source of the state equation).

    Returns
    -------
    AdjointField
    """
    if scheme not in SCHEMES:
        raise DomainError(f"scheme must be one of {SCHEMES}, got {scheme!r}")
    grid = theta_star.grid
    theta = theta_star.values
    coef = _AdjointCoefficients(soil, uptake, reg, normalized) if soil is not None else None
    if source is None:
        source = coef.tracking(theta)
    source = np.broadcast_to(np.asarray(source, dtype=float), theta.shape)
    if coefficients is not None:
        coef = coefficients
    if scheme == "discrete":
        p, top = _solve_discrete(coef, theta, grid, source)
        bottom = _stencil_flux(coef, theta, p, grid, bottom=True)
    else:
        p = _solve_continuous(coef, theta, grid, source)
        top = _stencil_flux(coef, theta, p, grid)
        bottom = _stencil_flux(coef, theta, p, grid, bottom=True)
    return AdjointField(values=p, grid=grid, scheme=scheme, top_flux=top, bottom_flux=bottom)


def _stencil_flux(coef, theta, p, grid, bottom=False):
    dz = grid.dz
    if bottom:
        B = np.array([coef.level(theta[:, n])["B"][-1] for n in range(grid.Nt)])
        dp = (3.0 * p[-1] - 4.0 * p[-2] + p[-3]) / (2.0 * dz)
        return -B * dp
    B = np.array([coef.level(theta[:, n])["B"][0] for n in range(grid.Nt)])
    return B * (-3.0 * p[0] + 4.0 * p[1] - p[2]) / (2.0 * dz)


def boundary_flux_gradient(soil, reg, theta_star, p):
    """``beta_eps(theta*(0, t_n)) * dp/dz(0, t_n)`` with the second-order one-sided stencil.

    ``(-3 p_0 + 4 p_1 - p_2) / (2 dz)``; exact for quadratics in ``z``.
    """
    values = p.values if isinstance(p, AdjointField) else np.asarray(p, dtype=float)
    grid = theta_star.grid
    coeffs = RichardsCoefficients(soil, None, reg)
    B = coeffs.diffusivity(coeffs.clamp(theta_star.values[0]))
    return B * (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * grid.dz)
