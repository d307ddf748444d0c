import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from railcommute.closed_form import omega_ratio, regime_thresholds, zeta_factors
from railcommute.core import TABLE2_COST, TABLE2_PARAMS, CostParams, DemandWT1, min_travel_time
from railcommute.equilibrium import InflowProfile, solve_wt1
from railcommute.errors import DomainError, EmptyResultError
from railcommute.timetable import (
    TwoLevelTimetable,
    appendix_constraints,
    build_two_level_inflow,
    evaluate_scenario,
    ff_optimum,
    ff_ratio,
    grid_cap,
    grid_optimize,
    solve_scenario,
    tc_two_level_ff,
)

P, C = TABLE2_PARAMS, TABLE2_COST
T0 = min_travel_time(P)
D = DemandWT1(4.0, 30000.0)


def test_timetable_invariants():
    with pytest.raises(DomainError):
        TwoLevelTimetable(5.0, 6.0)
    with pytest.raises(DomainError):
        TwoLevelTimetable(5.0, 0.0)
    tt = TwoLevelTimetable(18.7, 10.1, a0=18.0)
    assert tt.mean_inflow(C) == pytest.approx(14.0, abs=0.05)
    assert tt.within_capacity(C)
    assert not TwoLevelTimetable(30.0, 20.0, a0=18.0).within_capacity(C)


def test_a1_window_length_example():
    tm = 4.0
    t0 = tm - 15.14 / C.beta
    on, off = TwoLevelTimetable(18.7, 10.1).switch_times(t0, tm, C, P)
    assert off - on == pytest.approx(1.136, abs=1e-3)


@settings(max_examples=100, deadline=None)
@given(t0=st.floats(0.0, 5.0), x=st.floats(0.01, 5.0))
def test_a1_share_of_rush_is_omega(t0, x):
    tm = t0 + x
    ted = tm + C.beta / C.gamma * (tm - t0)
    inflow = build_two_level_inflow(18.0, 9.0, t0, tm, C, P)
    on, off = inflow.starts
    assert off - on == pytest.approx((1 - C.beta / C.alpha) * (tm - t0), rel=1e-9)
    assert (off - on) / (ted - t0) == pytest.approx(omega_ratio(C), rel=1e-9)
    assert inflow.rate(on - 1e-9) == 9.0
    assert inflow.rate(on) == 18.0
    assert inflow.rate(off) == 9.0


def test_equal_levels_give_constant_inflow():
    assert build_two_level_inflow(12.0, 12.0, 2.0, 4.0, C, P).is_constant


def test_equal_levels_reproduce_constant_case(base_solution):
    assert evaluate_scenario(12.0, 12.0, P, C, D) == pytest.approx(base_solution.TC_e, rel=1e-12)


def test_capacity_violation_is_infeasible():
    assert evaluate_scenario(30.0, 20.0, P, C, D, a0=18.0) == math.inf


def test_negative_arrival_rate_is_infeasible():
    assert evaluate_scenario(15.0, 15.0, P, C, D) == math.inf


def test_switch_times_consistent_with_solution():
    sol = solve_scenario(18.7, 10.1, P, C, D)
    on, off = sol.inflow.starts
    assert on == pytest.approx(sol.t0 - T0)
    assert off == pytest.approx(sol.tm - sol.travel_time(sol.tm))


def test_ff_scenario_matches_formula():
    # (12, 6.5) stays in free flow throughout
    sol = solve_scenario(12.0, 6.5, P, C, D)
    assert sol.pattern == "FF"
    assert sol.TC_e == pytest.approx(tc_two_level_ff(12.0, 6.5, 30000, C, P), rel=1e-9)


def test_free_flow_constraint_values():
    g1, g2 = appendix_constraints(1e-6, 1e-6, 30000, P, C)
    assert g1 < 1e-3 and g2 < 1e-3
    n_ff = regime_thresholds(12, C, P).N_p_FF
    assert appendix_constraints(12.0, 12.0, n_ff, P, C)[1] == pytest.approx(1.0, rel=1e-9)


@pytest.mark.parametrize("a1, a2", [(10.0, 5.0), (15.0, 8.0), (20.0, 12.0), (25.0, 20.0)])
def test_free_flow_constraint_partial_signs(a1, a2):
    h = 1e-4
    g = appendix_constraints(a1, a2, 30000, P, C)
    d1 = appendix_constraints(a1 + h, a2, 30000, P, C)
    d2 = appendix_constraints(a1, a2 + h, 30000, P, C)
    assert d1[0] > g[0] and d1[1] < g[1]
    assert d2[1] > g[1] and d2[0] < g[0]


def test_ff_optimum_binds_both_constraints():
    opt = ff_optimum(P, C, D)
    g1, g2 = appendix_constraints(opt.a1, opt.a2, 30000, P, C)
    assert g1 == pytest.approx(1.0, abs=1e-6)
    assert g2 == pytest.approx(1.0, abs=1e-6)
    assert opt.ratio == pytest.approx(1.846, abs=1e-3)
    z1, z2 = zeta_factors(C)
    assert z1 * opt.a1 == pytest.approx(z2 * opt.a2)
    assert not opt.capacity_binding


def test_ff_optimum_capacity_binding():
    opt = ff_optimum(P, C, D, a0=8.0)
    assert opt.capacity_binding
    assert TwoLevelTimetable(opt.a1, opt.a2).mean_inflow(C) == pytest.approx(8.0)
    assert opt.a1 / opt.a2 == pytest.approx(opt.ratio)


@pytest.mark.parametrize("cost", [CostParams(20, 10, 25), CostParams(20, 8, 30), CostParams(18, 8, 25)])
def test_ratio_law(cost):
    assert ff_ratio(cost) > ff_ratio(C)


def test_grid_cap():
    assert grid_cap(18.0, C) == pytest.approx(min(54.0, 18.0 * 11 / 5))


@pytest.fixture(scope="module")
def coarse_grid():
    return grid_optimize(P, C, D, 18.0, 1.0)


def test_coarse_grid_deterministic(coarse_grid):
    again = grid_optimize(P, C, D, 18.0, 1.0)
    assert again.best == coarse_grid.best
    assert [(r.a1, r.a2, r.TC_e) for r in again.surface] == [(r.a1, r.a2, r.TC_e) for r in coarse_grid.surface]


def test_parallel_matches_serial(coarse_grid):
    par = grid_optimize(P, C, D, 18.0, 1.0, workers=2)
    assert par.best == coarse_grid.best
    assert [(r.a1, r.a2, r.TC_e) for r in par.surface] == [(r.a1, r.a2, r.TC_e) for r in coarse_grid.surface]


def test_grid_optimum_is_minimal(coarse_grid):
    feasible = [r.TC_e for r in coarse_grid.surface if r.feasible]
    assert coarse_grid.TC_e == min(feasible)
    assert all(r.a2 <= r.a1 for r in coarse_grid.surface)
    assert coarse_grid.breakdown.TC_e == pytest.approx(coarse_grid.TC_e)


def test_paradox_witness(coarse_grid):
    a1, a2 = coarse_grid.best
    more = evaluate_scenario(23.1, 12.5, P, C, D, a0=18.0)
    assert 23.1 > a1 and 12.5 > a2
    assert math.isfinite(more) and more > coarse_grid.TC_e


def test_single_cell_when_step_exceeds_a0():
    with pytest.raises(EmptyResultError) as info:
        grid_optimize(P, C, DemandWT1(4.0, 1000.0), 5.0, 10.0)
    assert len(info.value.surface) == 1


def test_bad_grid_arguments():
    with pytest.raises(DomainError):
        grid_optimize(P, C, D, 18.0, 0.0)


def test_small_demand_optimum_near_ff_point():
    demand = DemandWT1(4.0, 3000.0)
    opt = ff_optimum(P, C, demand)
    grid = grid_optimize(P, C, demand, 30.0, 1.0)
    assert abs(grid.best[0] - opt.a1) <= 1.5
    assert abs(grid.best[1] - opt.a2) <= 1.5
    assert grid.TC_e == pytest.approx(opt.TC_e, rel=0.02)


def test_evaluate_matches_direct_solve():
    inflow = TwoLevelTimetable(16.0, 9.0).inflow_for(C, P)
    direct = solve_wt1(P, C, D, inflow)
    assert evaluate_scenario(16.0, 9.0, P, C, D) == pytest.approx(direct.TC_e, rel=1e-12)
    assert isinstance(direct.inflow, InflowProfile)
