import numpy as np
import pytest

from richards_optctl import DiffusivityRegularization, FeddesUptake, HaverkampSoil, VanGenuchtenSoil


@pytest.fixture
def sand():
    return HaverkampSoil(theta_r=0.075, theta_s=0.287, alpha=1.611e6, beta2=3.96,
                         A=1.175e6, beta1=4.74, K_s=34.0)


@pytest.fixture
def berino():
    return VanGenuchtenSoil(theta_r=0.0286, theta_s=0.3658, alpha=0.0280, n=2.2390, K_s=22.5416)


@pytest.fixture
def glendale():
    return VanGenuchtenSoil(theta_r=0.1060, theta_s=0.4686, alpha=0.0104, n=1.3954, K_s=0.5458)


@pytest.fixture(params=["sand", "berino", "glendale"])
def soil(request):
    return request.getfixturevalue(request.param)


@pytest.fixture
def reg():
    return DiffusivityRegularization(1e-3)


@pytest.fixture
def feddes():
    return FeddesUptake(varphi=0.1 / 70.0)


def theta_sweep(soil, n=1000, lo=1e-4, hi=1e-4):
    return np.linspace(soil.theta_r + lo, soil.theta_s - hi, n)
