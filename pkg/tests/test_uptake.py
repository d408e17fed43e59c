import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from richards_optctl import (
    DomainError, FeddesUptake, adjoint_source, uptake, uptake_dtheta, uptake_hat, water_content,
)
from richards_optctl.uptake import default_uptake


@pytest.mark.parametrize("h,expected", [
    (0.0, 0.0), (-175.0, 0.5), (-350.0, 1.0), (-375.0, 1.0), (-400.0, 1.0),
    (-610.0, 0.5), (-820.0, 0.0), (-1e4, 0.0),
])
def test_hat_breakpoints(h, expected):
    assert uptake_hat(FeddesUptake(1.0), h) == pytest.approx(expected, abs=1e-15)


def test_hat_rejects_positive_head():
    with pytest.raises(DomainError):
        uptake_hat(FeddesUptake(1.0), 1.0)


def test_uptake_scaled_by_varphi(sand):
    model = default_uptake(70.0)
    theta = water_content(sand, -375.0)
    assert uptake(model, sand, theta) == pytest.approx(0.1 / 70.0, rel=1e-12)


def test_default_uptake_rejects_bad_depth():
    with pytest.raises(DomainError):
        default_uptake(0.0)


def test_check_lists_problems():
    assert FeddesUptake(-1.0, h2=-500.0).check() == ["h4<h3<h2<h1<=0", "varphi>=0"]
    assert FeddesUptake(0.1).check() == []


def test_dtheta_matches_finite_difference(soil):
    model = FeddesUptake(0.1 / 50.0)
    # heads inside the two sloped pieces, away from the kinks
    h = np.concatenate([-np.linspace(20.0, 330.0, 40), -np.linspace(420.0, 800.0, 40)])
    theta = water_content(soil, h)
    d = 1e-8
    fd = (uptake(model, soil, theta + d) - uptake(model, soil, theta - d)) / (2 * d)
    assert np.allclose(uptake_dtheta(model, soil, theta), fd, rtol=1e-4)


def test_dtheta_zero_on_plateau(sand, feddes):
    theta = water_content(sand, np.array([-360.0, -390.0, -900.0]))
    assert np.all(uptake_dtheta(feddes, sand, theta) == 0.0)


def test_dtheta_uses_wetter_side_at_breakpoints():
    model = FeddesUptake(1.0)
    d = model._dhat(np.array([-350.0, -820.0, -400.0]))
    assert d[0] == pytest.approx(-1 / 350.0)
    assert d[1] == pytest.approx(1 / 420.0)
    assert d[2] == 0.0


def test_adjoint_source_formula(berino):
    model = FeddesUptake(0.1 / 50.0)
    theta = water_content(berino, -np.linspace(10.0, 900.0, 50))
    f = uptake(model, berino, theta)
    df = uptake_dtheta(model, berino, theta)
    assert np.allclose(adjoint_source(model, berino, theta), (f - 1.0) * df, rtol=0, atol=0)


@settings(max_examples=100, deadline=None)
@given(st.floats(-2000.0, 0.0), st.floats(0.0, 1.0))
def test_uptake_range_property(h, varphi):
    v = uptake_hat(FeddesUptake(varphi), h)
    assert 0.0 <= v <= 1.0
