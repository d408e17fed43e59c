import numpy as np
import pytest

from richards_optctl import (
    BoundaryData, DomainError, FeddesUptake, Grid1D, InvalidBoundary, PicardDivergence,
    builtin_scenario, mass_balance_residual, solve_forward,
)
from richards_optctl.forward import FrozenCoefficients, RichardsCoefficients, step_jacobian, linearization, step_residual


def series_solution(z, t, Z, D, top, bottom, modes):
    """Separation-of-variables solution for constant diffusivity and Dirichlet data."""
    out = top + (bottom - top) * z / Z
    for k, amp in modes:
        kk = k * np.pi / Z
        out = out + amp * np.exp(-D * kk**2 * t) * np.sin(kk * z)
    return out


def frozen_error(N, T=2e-4, D=1.0, Z=1.0, modes=((8, 0.1), (3, 0.05))):
    g = Grid1D(Z, T, N, N)
    bc = BoundaryData(np.full(N, 0.3), np.full(N, 0.1))
    ic = series_solution(g.z, 0.0, Z, D, 0.3, 0.1, modes)
    f = solve_forward(None, None, None, g, ic, bc, coefficients=FrozenCoefficients(D))
    return max(np.max(np.abs(f.values[:, n] - series_solution(g.z, t, Z, D, 0.3, 0.1, modes)))
               for n, t in enumerate(g.t))


def test_frozen_diffusion_matches_series():
    assert frozen_error(101) < 1e-3


def test_frozen_diffusion_converges_under_refinement():
    assert frozen_error(101) / frozen_error(201) >= 3.0


def test_linear_profile_is_steady():
    # constant diffusivity, no advection: a linear profile is reproduced to round-off
    g = Grid1D(2.0, 1.0, 21, 11)
    ic = 0.2 + 0.05 * g.z
    bc = BoundaryData(np.full(11, ic[0]), np.full(11, ic[-1]))
    f = solve_forward(None, None, None, g, ic, bc, coefficients=FrozenCoefficients(3.0))
    assert np.allclose(f.values, ic[:, None], atol=1e-14)


def test_uniform_state_with_constant_source_grows_linearly():
    # interior exactness: theta_t = q with matching boundary data
    g = Grid1D(1.0, 1.0, 11, 6)
    q = 0.02
    top = 0.1 + q * g.t
    bc = BoundaryData(top, top)
    f = solve_forward(None, None, None, g, np.full(11, 0.1), bc,
                      coefficients=FrozenCoefficients(1.0, a=0.5, source=q))
    assert np.allclose(f.values, top[None, :], atol=1e-13)


def _ex1_field(Nz=81, Nt=81, u=0.0):
    sc = builtin_scenario("haverkamp-ex1").with_overrides(Nz=Nz, Nt=Nt)
    prob = sc.to_problem()
    return sc, prob, prob.forward(np.full(Nt, u))


def test_initial_row_and_boundary_columns_are_data():
    sc, prob, f = _ex1_field(u=0.05)
    assert np.array_equal(f.values[:, 0], prob.ic)
    assert np.all(f.values[0, 1:] == sc.soil.theta_r + 0.05)
    assert np.array_equal(f.values[-1, 1:], prob.bottom[1:])


def test_state_stays_in_bounds(reg):
    sc, prob, f = _ex1_field(u=0.1)
    assert f.values.min() >= sc.soil.theta_r
    assert f.values.max() <= sc.soil.theta_s - 0.5 * reg.epsilon
    assert not f.saturation_breach


def test_mass_balance_ex1():
    sc, prob, f = _ex1_field(161, 161)
    assert mass_balance_residual(f, sc.soil, sc.uptake, prob.reg) < 1e-2


def test_step_residual_small_at_solution():
    sc, prob, f = _ex1_field(u=0.1)
    assert f.max_residual < 1e-6


def test_step_jacobian_matches_finite_difference():
    sc, prob, f = _ex1_field(41, 41, u=0.08)
    co = RichardsCoefficients(sc.soil, sc.uptake, prob.reg)
    g = f.grid
    new, old = f.values[:, 5].copy(), f.values[:, 4]
    lower, diag, upper, _ = step_jacobian(new, linearization(co, new), g.dz, g.dt)
    J = np.diag(diag) + np.diag(upper, 1) + np.diag(lower, -1)
    rng = np.random.default_rng(1)
    d = np.zeros_like(new)
    d[1:-1] = rng.standard_normal(new.size - 2)
    h = 1e-7
    fd = (step_residual(new + h * d, old, co, g.dz, g.dt)
          - step_residual(new - h * d, old, co, g.dz, g.dt)) / (2 * h)
    assert np.allclose(J @ d[1:-1], fd, rtol=1e-5, atol=1e-8 * np.abs(fd).max())


def test_wet_top_falls_back_to_newton():
    # a near-saturated top over dry sand stalls plain Picard sweeps
    sc = builtin_scenario("berino-ex3")
    prob = sc.to_problem()
    f = prob.forward(np.full(sc.grid.Nt, prob.aset.upper))
    assert f.picard_iterations.max() > prob.config.picard_maxit
    assert f.max_residual < 1e-6


def test_divergence_raised_when_budget_exhausted():
    sc = builtin_scenario("haverkamp-ex1").with_overrides(Nz=41, Nt=21)
    prob = sc.to_problem().with_config(picard_maxit=1, picard_tol=1e-14)
    with pytest.raises(PicardDivergence) as err:
        prob.forward(np.full(21, 0.1))
    assert err.value.time_level == 1


def test_boundary_validation(sand, reg):
    g = Grid1D(70.0, 3.0, 11, 5)
    ic = np.full(11, 0.1)
    with pytest.raises(InvalidBoundary):
        solve_forward(sand, FeddesUptake(0.0), reg, g, ic, BoundaryData(np.full(5, 0.3), np.full(5, 0.1)))
    with pytest.raises(InvalidBoundary):
        solve_forward(sand, FeddesUptake(0.0), reg, g, ic, BoundaryData(np.full(4, 0.1), np.full(5, 0.1)))
    with pytest.raises(DomainError):
        solve_forward(sand, FeddesUptake(0.0), reg, g, np.full(11, 0.05),
                      BoundaryData(np.full(5, 0.1), np.full(5, 0.1)))


def test_grid_rejects_degenerate_sizes():
    with pytest.raises(DomainError):
        Grid1D(1.0, 1.0, 2, 5)
    with pytest.raises(DomainError):
        Grid1D(-1.0, 1.0, 5, 5)


def test_quadrature_weights_sum_to_extent():
    g = Grid1D(70.0, 3.0, 141, 241)
    assert g.space_weights().sum() == pytest.approx(70.0)
    assert g.time_weights().sum() == pytest.approx(3.0)


def test_forward_is_deterministic():
    _, _, a = _ex1_field(u=0.07)
    _, _, b = _ex1_field(u=0.07)
    assert np.array_equal(a.values, b.values)
