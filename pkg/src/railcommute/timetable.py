"""Two-level timetable optimisation under user equilibrium.

The timetable dispatches ``a2`` trains/h, switches to ``a1`` for the trains
that serve the rush up to the on-time passenger, then returns to ``a2``.
Because the switch times are tied to the rush boundaries, the inflow handed
to the solver is a function of the candidate ``(t0, tm)``; at the converged
t0 the timetable and the equilibrium are therefore mutually consistent.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from scipy.optimize import brentq

from .closed_form import omega_ratio, zeta_factors
from .core import CostParams, DemandWT1, OperationalParams, min_travel_time
from .equilibrium import CostBreakdown, EquilibriumSolution, InflowProfile, solve_wt1
from .errors import DomainError, EmptyResultError, InfeasibleStateError, SolverError

# ties within this many dollars go to the lexicographically smallest (a1, a2)
TIE_TOLERANCE = 1e-6


@dataclass(frozen=True)
class TwoLevelTimetable:
    a1: float
    a2: float
    a0: float | None = None

    def __post_init__(self):
        if not (self.a1 >= self.a2 > 0):
            raise DomainError(f"need a1 >= a2 > 0, got a1={self.a1!r}, a2={self.a2!r}")

    def mean_inflow(self, cost: CostParams) -> float:
        w = omega_ratio(cost)
        return w * self.a1 + (1 - w) * self.a2

    def within_capacity(self, cost: CostParams) -> bool:
        return self.a0 is None or self.mean_inflow(cost) <= self.a0 * (1 + 1e-12)

    def switch_times(self, t0: float, tm: float, cost: CostParams, params: OperationalParams) -> tuple[float, float]:
        """Entry-clock times at which a1 starts and ends."""
        T0 = min_travel_time(params)
        return t0 - T0, tm - (T0 + cost.beta / cost.alpha * (tm - t0))

    def inflow_for(self, cost: CostParams, params: OperationalParams):
        """Callable ``(t0, tm) -> InflowProfile`` for the equilibrium solver."""

        def build(t0, tm):
            return build_two_level_inflow(self.a1, self.a2, t0, tm, cost, params)

        return build


def build_two_level_inflow(
    a1: float, a2: float, t0: float, tm: float, cost: CostParams, params: OperationalParams
) -> InflowProfile:
    """Inflow a2, then a1 from the first rush train's entry until the on-time train's entry, then a2."""
    if not a1 >= a2 > 0:
        raise DomainError(f"need a1 >= a2 > 0, got a1={a1!r}, a2={a2!r}")
    T0 = min_travel_time(params)
    on, off = t0 - T0, tm - (T0 + cost.beta / cost.alpha * (tm - t0))
    if a1 == a2 or off <= on:
        return InflowProfile.constant(a2)
    return InflowProfile((on, off), (a1, a2), before=a2)


@dataclass(frozen=True)
class ScenarioResult:
    a1: float
    a2: float
    TC_e: float  # math.inf when infeasible
    reason: str = ""

    @property
    def feasible(self) -> bool:
        return math.isfinite(self.TC_e)


@dataclass
class OptResult:
    best: tuple[float, float]
    TC_e: float
    surface: list[ScenarioResult]
    breakdown: CostBreakdown | None = None
    solution: EquilibriumSolution | None = field(default=None, repr=False)
    nonconverged: list[tuple[float, float]] = field(default_factory=list)


def solve_scenario(
    a1: float, a2: float, params: OperationalParams, cost: CostParams, demand: DemandWT1, **solver_options
) -> EquilibriumSolution:
    """Full equilibrium solution under the two-level timetable (raises on infeasibility)."""
    timetable = TwoLevelTimetable(a1, a2)
    return solve_wt1(params, cost, demand, timetable.inflow_for(cost, params), **solver_options)


def evaluate_scenario(
    a1: float,
    a2: float,
    params: OperationalParams,
    cost: CostParams,
    demand: DemandWT1,
    a0: float | None = None,
    **solver_options,
) -> float:
    """Equilibrium cost of a timetable, or ``math.inf`` if capacity or a_p bounds are violated.

    Solver non-convergence propagates as :class:`SolverError`.
    """
    return _evaluate(a1, a2, params, cost, demand, a0, solver_options).TC_e


def _evaluate(a1, a2, params, cost, demand, a0, solver_options) -> ScenarioResult:
    timetable = TwoLevelTimetable(a1, a2, a0)
    if not timetable.within_capacity(cost):
        return ScenarioResult(a1, a2, math.inf, "capacity")
    options = dict(solver_options)
    options.setdefault("detail", False)
    try:
        sol = solve_wt1(params, cost, demand, timetable.inflow_for(cost, params), **options)
    except InfeasibleStateError:
        return ScenarioResult(a1, a2, math.inf, "infeasible")
    return ScenarioResult(a1, a2, sol.TC_e)


def _grid_values(step: float, cap: float) -> list[float]:
    count = int(math.floor(cap / step + 1e-9))
    return [round(i * step, 10) for i in range(1, count + 1)]


def grid_cap(a0: float, cost: CostParams) -> float:
    return min(3 * a0, a0 / omega_ratio(cost))


def _evaluate_cell(args):
    a1, a2, params, cost, demand, a0, options = args
    try:
        return _evaluate(a1, a2, params, cost, demand, a0, options)
    except SolverError as err:
        return ScenarioResult(a1, a2, math.nan, f"nonconverged: {err}")


def grid_optimize(
    params: OperationalParams,
    cost: CostParams,
    demand: DemandWT1,
    a0: float,
    step: float = 0.1,
    *,
    workers: int | None = 1,
    **solver_options,
) -> OptResult:
    """Brute-force search over a2 <= a1 <= cap on a lattice of spacing ``step``.

    Cells violating the capacity constraint are kept in the surface as
    infeasible without solving.  ``workers`` > 1 evaluates cells in a process
    pool; the reduction is independent of completion order.
    """
    if step <= 0 or a0 <= 0:
        raise DomainError("step and a0 must be positive")
    values = _grid_values(step, grid_cap(a0, cost))
    if not values:
        values = [round(step, 10)]
    cells = [(a1, a2) for a1 in values for a2 in values if a2 <= a1]
    tasks = [(a1, a2, params, cost, demand, a0, solver_options) for a1, a2 in cells]
    if workers is None:
        workers = os.cpu_count() or 1
    if workers > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            surface = list(pool.map(_evaluate_cell, tasks, chunksize=256))
    else:
        surface = [_evaluate_cell(t) for t in tasks]

    feasible = [r for r in surface if r.feasible]
    if not feasible:
        raise EmptyResultError("no feasible timetable on the grid", surface)
    best_tc = min(r.TC_e for r in feasible)
    best = min((r.a1, r.a2) for r in feasible if r.TC_e <= best_tc + TIE_TOLERANCE)
    best_tc = next(r.TC_e for r in feasible if (r.a1, r.a2) == best)
    options = {k: v for k, v in solver_options.items() if k != "detail"}
    solution = solve_scenario(best[0], best[1], params, cost, demand, **options)
    return OptResult(
        best=best,
        TC_e=best_tc,
        surface=surface,
        breakdown=solution.breakdown,
        solution=solution,
        nonconverged=[(r.a1, r.a2) for r in surface if math.isnan(r.TC_e)],
    )


def tc_two_level_ff(a1: float, a2: float, N_p: float, cost: CostParams, params: OperationalParams) -> float:
    """Equilibrium cost of the two-level timetable when every train runs in free flow."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    weight = (1 / b - 1 / a) * a1 + (1 / g + 1 / a) * a2
    return math.sqrt(2 * a * params.L * N_p / (params.mu * params.l * weight))


def appendix_constraints(
    a1: float, a2: float, N_p: float, params: OperationalParams, cost: CostParams
) -> tuple[float, float]:
    """Free-flow constraint values (G1, G2); free flow throughout iff both <= 1."""
    z1, z2 = zeta_factors(cost)
    tc = tc_two_level_ff(a1, a2, N_p, cost, params)
    bracket = params.l / params.L * (min_travel_time(params) + tc / cost.alpha) - (params.l - params.delta) / params.v_f + params.tau
    return z1 * a1 * bracket, z2 * a2 * bracket


@dataclass(frozen=True)
class FFOptimum:
    a1: float
    a2: float
    TC_e: float
    ratio: float
    capacity_binding: bool = False


def ff_ratio(cost: CostParams) -> float:
    z1, z2 = zeta_factors(cost)
    return z2 / z1


def ff_optimum(params: OperationalParams, cost: CostParams, demand: DemandWT1, a0: float | None = None) -> FFOptimum:
    """Analytical free-flow optimum: largest (a1, a2) with G1 = G2 = 1.

    Both constraints bind at a common equilibrium flow zeta1*a1 = zeta2*a2,
    found by a scalar root solve.  If the capacity constraint is violated
    there, the point is pulled back along the same ratio onto it.
    """
    z1, z2 = zeta_factors(cost)
    ratio = z2 / z1

    def excess(flow):
        return appendix_constraints(flow / z1, flow / z2, demand.N_p, params, cost)[1] - 1.0

    hi = 1.0 / params.min_headway
    while excess(hi) < 0:
        hi *= 2
    flow = brentq(excess, 1e-9 * hi, hi, xtol=1e-14)
    a1, a2 = flow / z1, flow / z2
    binding = False
    if a0 is not None:
        w = omega_ratio(cost)
        if w * a1 + (1 - w) * a2 > a0:
            a2 = a0 / (w * ratio + 1 - w)
            a1 = ratio * a2
            binding = True
    return FFOptimum(a1, a2, tc_two_level_ff(a1, a2, demand.N_p, cost, params), ratio, binding)
