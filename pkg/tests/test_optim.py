from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from richards_optctl import (
    AdmissibleSet, DomainError, FeddesUptake, LineSearchStall, PgdConfig, builtin_scenario,
    line_search, pgd, project, reduced_cost,
)
from richards_optctl.optim import LINE_SEARCH_STALL, TOLERANCE, golden_section, gradient, interior_control


def _small(name="haverkamp-ex1", N=41, **pgd_changes):
    sc = builtin_scenario(name).with_overrides(Nz=N, Nt=N)
    return replace(sc, pgd=replace(sc.pgd, **pgd_changes)) if pgd_changes else sc


def test_reduced_cost_regression_anchor():
    # recorded from this solver at the default grid with u = 0
    assert reduced_cost(builtin_scenario("haverkamp-ex1"), np.zeros(241)) == pytest.approx(
        104.91649882360544, rel=1e-10)


def test_cost_without_uptake_is_half_domain_area():
    sc = builtin_scenario("glendale-ex4").with_overrides(Nz=21, Nt=21)
    sc = replace(sc, uptake=FeddesUptake(0.0))
    u = np.full(21, 0.1)
    lam = sc.pgd.lam
    expected = 0.5 * sc.grid.Z * sc.grid.T + 0.5 * lam * sc.grid.T * 0.01
    assert reduced_cost(sc, u) == pytest.approx(expected, rel=1e-12)


def test_gradient_adds_penalty():
    assert np.allclose(gradient([1.0, 2.0], 0.5, [0.1, -0.1]), [0.6, 0.9])


def test_admissible_set_for_soil(sand):
    aset = AdmissibleSet.for_soil(sand, 1e-3)
    assert aset.lower == 0.0 and aset.upper == pytest.approx(0.211)
    with pytest.raises(DomainError):
        AdmissibleSet(1.0, 1.0)


@settings(max_examples=100, deadline=None)
@given(st.lists(st.floats(-10, 10), min_size=1, max_size=20))
def test_projection_idempotent_and_admissible(values):
    aset = AdmissibleSet(0.0, 0.2)
    p = project(values, aset)
    assert aset.contains(p)
    assert np.array_equal(project(p, aset), p)


def test_golden_section_finds_quadratic_minimum():
    s, val = golden_section(lambda s: (s - 0.3) ** 2, 1.0, 40, 0.09)
    assert s == pytest.approx(0.3, abs=1e-6) and val < 1e-12


def test_golden_section_stalls_on_increasing_function():
    with pytest.raises(LineSearchStall):
        golden_section(lambda s: s, 1.0, 20, 0.0)


def test_line_search_zero_direction_returns_zero_step():
    aset = AdmissibleSet(0.0, 1.0)
    assert line_search(lambda u: float(u @ u), np.ones(3), np.zeros(3), aset, j0=3.0) == (0.0, 3.0)


def test_line_search_blocked_direction_returns_zero_step():
    aset = AdmissibleSet(0.0, 1.0)
    s, j = line_search(lambda u: float(u @ u), np.zeros(3), -np.ones(3), aset)
    assert s == 0.0 and j == 0.0


def test_line_search_respects_box():
    aset = AdmissibleSet(0.0, 1.0)
    target = np.array([0.2, 2.0])
    s, j = line_search(lambda u: float(((u - target) ** 2).sum()), np.zeros(2),
                       np.array([1.0, 1.0]), aset, budget=40)
    assert j < float((target**2).sum())
    assert 0.0 < s <= 1.0


def test_pgd_exact_minimizer_without_uptake():
    sc = _small()
    sc = replace(sc, uptake=FeddesUptake(0.0))
    rep = pgd(sc)
    assert rep.iterations == 1 and rep.exit_reason == TOLERANCE
    assert np.all(rep.final_control == 0.0)
    assert rep.cost_history == [pytest.approx(0.5 * sc.grid.Z * sc.grid.T, rel=1e-12)]


def _interior(sc):
    prob = sc.to_problem()
    return interior_control(prob.aset, prob.grid)


def test_pgd_stationary_start_on_coarse_grid():
    # on 41 x 41 no wetting reaches the uptake-sensitive nodes in 3 h: the gradient at u = 0 vanishes
    rep = pgd(_small())
    assert rep.exit_reason == TOLERANCE and rep.iterations == 1
    assert rep.projected_gradient_norms == [0.0]


def test_pgd_decreases_cost_from_interior_start():
    sc = _small()
    rep = pgd(sc, u0=_interior(sc))
    hist = np.array(rep.cost_history)
    assert rep.exit_reason in (TOLERANCE, LINE_SEARCH_STALL)
    assert hist.size >= 2 and np.all(np.diff(hist) < 0)


def test_pgd_respects_maxit():
    sc = _small(maxit=1, tol=1e-14)
    rep = pgd(sc, u0=_interior(sc))
    assert rep.iterations == 1 and rep.exit_reason == "MaxIterations"
    assert rep.final_adjoint is not None


def test_pgd_control_admissible_and_callback():
    seen = []
    sc = _small()
    rep = pgd(sc, u0=_interior(sc), callback=lambda it, u, J: seen.append((it, J)))
    aset = AdmissibleSet.for_soil(builtin_scenario("haverkamp-ex1").soil, 1e-3)
    assert aset.contains(rep.final_control)
    assert [J for _, J in seen] == rep.cost_history[1:]


def test_first_order_optimality_sample():
    sc = _small()
    rep = pgd(sc)  # stationary start, see above
    prob = sc.to_problem()
    grad, _, _ = prob.gradient(rep.final_control)
    rng = np.random.default_rng(0)
    eta = 10 * sc.pgd.tol
    for _ in range(100):
        w = rng.uniform(prob.aset.lower, prob.aset.upper, sc.grid.Nt)
        assert prob.inner(grad, w - rep.final_control) >= -eta


def test_config_check_lists_problems():
    bad = PgdConfig(maxit=0, tol=-1.0, lam=0.0, epsilon=0.0, ls_budget=1, adjoint_scheme="x")
    assert len(bad.check()) == 6
