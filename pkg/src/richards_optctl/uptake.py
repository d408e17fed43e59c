"""Feddes-type root water uptake expressed as a function of water content."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .exceptions import DomainError
from .soil import _out, _require_head, _require_theta


@dataclass(frozen=True)
class FeddesUptake:
    """Piecewise-linear uptake ``f(h) = varphi * fhat(h)``.

    ``fhat`` is 0 on ``[h1, 0]`` and below ``h4``, 1 on ``[h3, h2]`` and
    linear in between. Breakpoints are pressure heads in cm.
    """

    varphi: float
    h1: float = 0.0
    h2: float = -350.0
    h3: float = -400.0
    h4: float = -820.0

    def check(self):
        problems = []
        if not (self.h4 < self.h3 < self.h2 < self.h1 <= 0.0):
            problems.append("h4<h3<h2<h1<=0")
        if not self.varphi >= 0.0:
            problems.append("varphi>=0")
        return problems

    def _hat(self, h):
        h = np.asarray(h, dtype=float)
        wet = (h - self.h1) / (self.h2 - self.h1)
        dry = (h - self.h4) / (self.h3 - self.h4)
        out = np.where(h >= self.h1, 0.0, wet)
        out = np.where(h <= self.h2, 1.0, out)
        out = np.where(h < self.h3, dry, out)
        out = np.where(h <= self.h4, 0.0, out)
        return out

    def _dhat(self, h):
        # right-limit (wetter side) value at each breakpoint
        h = np.asarray(h, dtype=float)
        out = np.zeros_like(h)
        out = np.where((h >= self.h2) & (h < self.h1), 1.0 / (self.h2 - self.h1), out)
        out = np.where((h >= self.h4) & (h < self.h3), 1.0 / (self.h3 - self.h4), out)
        return out

    # theta-parametrised kernels on pre-clamped input
    def _f(self, soil, theta):
        return self.varphi * self._hat(soil._head(theta))

    def _df(self, soil, theta):
        h = soil._head(theta)
        return self.varphi * self._dhat(h) / soil._capacity(h)

    def _tracked(self, soil, theta, normalized=False):
        """Tracked uptake and its theta-derivative (``fhat`` if normalized)."""
        h = soil._head(theta)
        scale = 1.0 if normalized else self.varphi
        return scale * self._hat(h), scale * self._dhat(h) / soil._capacity(h)


def uptake_hat(model, h):
    """Normalised uptake fraction in ``[0, 1]``."""
    h = _require_head(h)
    return _out(model._hat(h))


def uptake(model, soil, theta):
    """Sink rate ``varphi * fhat(h(theta))``."""
    theta = _require_theta(soil, theta)
    return _out(model._f(soil, theta))


def uptake_dtheta(model, soil, theta):
    """``df/dtheta = varphi * fhat'(h) / C(h)`` with right-limit values at breakpoints."""
    theta = _require_theta(soil, theta)
    return _out(model._df(soil, theta))


def adjoint_source(model, soil, theta):
    """``F(theta) = (f(theta) - 1) * df/dtheta``."""
    theta = _require_theta(soil, theta)
    return _out((model._f(soil, theta) - 1.0) * model._df(soil, theta))


def default_uptake(Z):
    """Breakpoints ``h4=-820, h3=-400, h2=-350, h1=0`` with ``varphi = 0.1 / Z``."""
    if not Z > 0:
        raise DomainError("depth Z must be positive")
    return FeddesUptake(varphi=0.1 / Z)
