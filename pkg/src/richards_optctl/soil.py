"""Soil hydraulic constitutive relations for the quasi-unsaturated model.

Two families are supported, Haverkamp and Van Genuchten-Mualem. Each soil
class exposes unchecked, vectorised kernels (methods prefixed ``_``) that the
solvers call on clamped arrays; the module-level functions are the public,
argument-checking API.

Pressure head ``h`` is in cm and negative in the unsaturated zone, water
content ``theta`` is volumetric, conductivity is in cm/h.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Union

import numpy as np

from .exceptions import DomainError

# Margin used when solver inner loops clamp theta into the open interval.
ENDPOINT_MARGIN = 1e-12


class _SoilBase:
    theta_r: float
    theta_s: float

    @property
    def span(self):
        return self.theta_s - self.theta_r

    def clamp(self, theta, margin=ENDPOINT_MARGIN):
        return np.clip(theta, self.theta_r + margin, self.theta_s - margin)

    # theta-parametrised kernels, built on the h-parametrised ones.
    def _conductivity_theta(self, theta):
        return self._conductivity(self._head(theta))

    def _diffusivity(self, theta):
        h = self._head(theta)
        return self._conductivity(h) / self._capacity(h)

    def _dK_dtheta(self, theta):
        h = self._head(theta)
        return self._dK_dh(h) / self._capacity(h)

    def _ddiffusivity(self, theta):
        """d(beta)/d(theta) from the quotient rule in h."""
        h = self._head(theta)
        C = self._capacity(h)
        K = self._conductivity(h)
        return (self._dK_dh(h) * C - K * self._dC_dh(h)) / C**3


@dataclass(frozen=True)
class HaverkampSoil(_SoilBase):
    """Haverkamp retention curve and conductivity.

    ``theta(h) = theta_r + alpha (theta_s - theta_r) / (alpha + |h|**beta2)``
    and ``K(h) = K_s A / (A + |h|**beta1)``.
    """

    theta_r: float
    theta_s: float
    alpha: float
    beta2: float
    A: float
    beta1: float
    K_s: float

    family = "haverkamp"

    def _theta(self, h):
        s = np.abs(h)
        return self.theta_r + self.alpha * self.span / (self.alpha + s**self.beta2)

    def _head(self, theta):
        # alpha*span/(theta-theta_r) - alpha, rewritten to avoid cancellation near theta_s
        sb = self.alpha * (self.theta_s - theta) / (theta - self.theta_r)
        return -(sb ** (1.0 / self.beta2))

    def _conductivity(self, h):
        s = np.abs(h)
        return self.K_s * self.A / (self.A + s**self.beta1)

    def _capacity(self, h):
        s = np.abs(h)
        b2 = self.beta2
        return self.alpha * self.span * b2 * s ** (b2 - 1.0) / (self.alpha + s**b2) ** 2

    def _dK_dh(self, h):
        s = np.abs(h)
        b1 = self.beta1
        return self.K_s * self.A * b1 * s ** (b1 - 1.0) / (self.A + s**b1) ** 2

    def _dC_dh(self, h):
        s = np.abs(h)
        b2 = self.beta2
        q = self.alpha + s**b2
        dC_ds = self.alpha * self.span * b2 * (
            (b2 - 1.0) * s ** (b2 - 2.0) / q**2 - 2.0 * b2 * s ** (2.0 * b2 - 2.0) / q**3
        )
        return -dC_ds


@dataclass(frozen=True)
class VanGenuchtenSoil(_SoilBase):
    """Van Genuchten retention curve with Mualem conductivity, ``m = 1 - 1/n``."""

    theta_r: float
    theta_s: float
    alpha: float
    n: float
    K_s: float

    family = "van_genuchten"

    @property
    def m(self):
        return 1.0 - 1.0 / self.n

    def vg_saturation_fraction(self, h):
        """``1 / (1 + |alpha h|**n)``; equals effective saturation to the power 1/m."""
        return 1.0 / (1.0 + np.abs(self.alpha * h) ** self.n)

    def _theta(self, h):
        return self.theta_r + self.span * self.vg_saturation_fraction(h) ** self.m

    def _head(self, theta):
        log_se = np.log1p(-(self.theta_s - theta) / self.span)
        return -(np.expm1(-log_se / self.m) ** (1.0 / self.n)) / self.alpha

    def _conductivity(self, h):
        phi = self.vg_saturation_fraction(h)
        m = self.m
        # 1 - (1-phi)**m written with expm1/log1p for accuracy at phi -> 0
        with np.errstate(divide="ignore"):  # phi = 1 at h = 0 gives log1p(-1) = -inf, inner = 1
            inner = -np.expm1(m * np.log1p(-phi))
        return self.K_s * phi ** (m / 2.0) * inner**2

    def _capacity(self, h):
        s = np.abs(h)
        n, m, a = self.n, self.m, self.alpha
        phi = self.vg_saturation_fraction(h)
        return self.span * m * n * a**n * s ** (n - 1.0) * phi ** (m + 1.0)

    def _dK_dh(self, h):
        s = np.abs(h)
        n, m, a = self.n, self.m, self.alpha
        phi = self.vg_saturation_fraction(h)
        inner = -np.expm1(m * np.log1p(-phi))
        one_minus = 1.0 - phi
        dK_dphi = self.K_s * (
            0.5 * m * phi ** (m / 2.0 - 1.0) * inner**2
            + 2.0 * m * phi ** (m / 2.0) * inner * one_minus ** (m - 1.0)
        )
        dphi_dh = n * a**n * s ** (n - 1.0) * phi**2
        return dK_dphi * dphi_dh

    def _dC_dh(self, h):
        s = np.abs(h)
        n, m, a = self.n, self.m, self.alpha
        phi = self.vg_saturation_fraction(h)
        dC_ds = (
            self.span * m * n * a**n * s ** (n - 2.0) * phi ** (m + 1.0)
            * ((n - 1.0) - (m + 1.0) * n * (a * s) ** n * phi)
        )
        return -dC_ds


SoilModel = Union[HaverkampSoil, VanGenuchtenSoil]


@dataclass(frozen=True)
class DiffusivityRegularization:
    """Truncation of the diffusivity at ``theta_s - epsilon``."""

    epsilon: float = 1e-3

    def check(self, soil):
        if not 0.0 < self.epsilon < soil.span:
            raise DomainError(
                f"epsilon must lie in (0, theta_s - theta_r) = (0, {soil.span}); got {self.epsilon}"
            )


@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    violations: tuple = ()

    def __bool__(self):
        return self.valid


def _out(x):
    x = np.asarray(x, dtype=float)
    return x[()] if x.ndim == 0 else x


def _require_head(h, *, strict=False):
    h = np.asarray(h, dtype=float)
    bad = h >= 0 if strict else h > 0
    if np.any(bad) or np.any(np.isnan(h)):
        rel = "< 0" if strict else "<= 0"
        raise DomainError(f"pressure head must be {rel} (unsaturated model); got {h[bad] if h.ndim else h}")
    return h


def _require_theta(soil, theta):
    theta = np.asarray(theta, dtype=float)
    bad = ~((theta > soil.theta_r) & (theta < soil.theta_s))
    if np.any(bad):
        raise DomainError(
            f"water content must lie in the open interval ({soil.theta_r}, {soil.theta_s})"
        )
    return theta


def water_content(soil, h):
    """Retention curve ``theta(h)`` for ``h <= 0``."""
    h = _require_head(h)
    return _out(soil._theta(h))


def pressure_head(soil, theta):
    """Closed-form inverse of the retention curve on ``(theta_r, theta_s)``."""
    theta = _require_theta(soil, theta)
    return _out(soil._head(theta))


def hydraulic_conductivity(soil, h):
    h = _require_head(h)
    return _out(soil._conductivity(h))


def conductivity_of_theta(soil, theta):
    theta = _require_theta(soil, theta)
    return _out(soil._conductivity_theta(theta))


def specific_capacity(soil, h):
    """Specific water capacity ``C(h) = d theta / d h`` for ``h < 0``.

    At ``h = 0`` the derivative either vanishes or is unbounded depending on
    the exponents, so the saturated point is rejected.
    """
    h = _require_head(h, strict=True)
    return _out(soil._capacity(h))


def diffusivity(soil, theta):
    """Water diffusivity ``beta = K / C`` expressed in water content."""
    theta = _require_theta(soil, theta)
    return _out(soil._diffusivity(theta))


def diffusivity_regularized(soil, reg, theta):
    """Diffusivity truncated to its value at ``theta_s - epsilon``.

    Arguments above ``theta_s - epsilon`` (including ``>= theta_s``) are
    accepted; only ``theta <= theta_r`` is rejected.
    """
    reg.check(soil)
    theta = np.asarray(theta, dtype=float)
    if np.any(~(theta > soil.theta_r)):
        raise DomainError(f"water content must exceed theta_r = {soil.theta_r}")
    return _out(soil._diffusivity(np.minimum(theta, soil.theta_s - reg.epsilon)))


def dK_dtheta(soil, theta):
    """``dK/dtheta = (dK/dh) / C(h)`` evaluated at ``h = pressure_head(theta)``."""
    theta = _require_theta(soil, theta)
    return _out(soil._dK_dtheta(theta))


def validate_quasi_unsaturated(soil):
    """Check the parameter set against the quasi-unsaturated admissibility conditions.

    Never raises; every violated condition is named in the returned report.
    """
    v = []
    if not (0.0 <= soil.theta_r < soil.theta_s < 1.0):
        v.append("0<=theta_r<theta_s<1")
    if not soil.alpha > 0:
        v.append("alpha>0")
    if not soil.K_s > 0:
        v.append("K_s>0")
    if isinstance(soil, HaverkampSoil):
        if not soil.A > 0:
            v.append("A>0")
        if not soil.beta1 > 0:
            v.append("beta1>0")
        if not soil.beta2 > 1:
            v.append("beta2>1")
    elif isinstance(soil, VanGenuchtenSoil):
        if not soil.n > 1:
            v.append("n>1")
    else:
        v.append(f"unknown soil family {type(soil).__name__}")
    return ValidityReport(valid=not v, violations=tuple(v))
