"""Analytical results for a constant train inflow ``a_c``.

Covers the cost-ratio factors, closed-form state profiles, the FF and FCF
equilibrium costs, the regime-occurrence thresholds and pattern
classification.  The FCCF cost has no closed form here; classification
falls back to the numeric solver for it.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.optimize import brentq

from .core import CostParams, DemandWT1, OperationalParams, Regime, min_travel_time
from .errors import FeasibilityError, InfeasibleStateError, NoRealSolutionError, SolverError

PATTERNS = ("FF", "FCF", "FCCF", "Infeasible")


@dataclass(frozen=True)
class ClosedFormConstants:
    zeta1: float
    zeta2: float
    eta: float
    R: float
    S: float
    U: float
    omega: float


@dataclass(frozen=True)
class Thresholds:
    TC_FF: float
    TC_FCF: float
    TC_FCCF: float
    N_p_FF: float
    N_p_FCF: float | None  # None when the FCF quadratic has no real root at TC_FCF


@dataclass(frozen=True)
class PatternReport:
    pattern: str
    TC_e: float | None
    thresholds: Thresholds


def zeta_factors(cost: CostParams) -> tuple[float, float]:
    """Ratios of equilibrium train flow to inflow before and after t_m."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    if not a > b:
        raise FeasibilityError("alpha > beta is required for positive equilibrium flow")
    return 2 * (a - b) / (2 * a - b), 2 * (a + g) / (2 * a + g)


def omega_ratio(cost: CostParams) -> float:
    """Share of the rush served by the high inflow in the two-level timetable."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    if not a > b:
        raise FeasibilityError("alpha > beta is required")
    return g * (a - b) / (a * (b + g))


def state_profiles(t, a_c, t0, tm, cost: CostParams, params: OperationalParams) -> tuple[float, float]:
    """Average train flow and density of the train leaving at ``t``."""
    z1, z2 = zeta_factors(cost)
    T = _T(t, t0, tm, cost, params)
    z = z1 if t < tm else z2
    return z * a_c, z * a_c * T / params.L


def _T(t, t0, tm, cost, params):
    T0 = min_travel_time(params)
    if t < tm:
        return T0 + cost.beta / cost.alpha * (t - t0)
    return T0 + cost.beta / cost.alpha * (tm - t0) - cost.gamma / cost.alpha * (t - tm)


def arrival_rate_closed_form(t, a_c, t0, tm, cost: CostParams, params: OperationalParams, regime: Regime) -> float:
    """Passenger arrival rate of the train leaving at ``t`` on the given FD branch."""
    z1, z2 = zeta_factors(cost)
    a, b, g = cost.alpha, cost.beta, cost.gamma
    l, L, mu, delta = params.l, params.L, params.mu, params.delta
    z = z1 if t < tm else z2
    if regime is Regime.FREE_FLOW:
        if t < tm:
            delay = b / a * (t - t0)
        else:
            delay = b / a * (tm - t0) - g / a * (t - tm)
        a_p = mu * z * l / L * a_c * delay
    else:
        T = _T(t, t0, tm, cost, params)
        a_p = mu / (l - delta) * (l - a_c * (delta * z * l / L * T + params.eta * z))
    if not -1e-9 * mu <= a_p < mu:
        raise InfeasibleStateError(f"closed-form arrival rate {a_p:.6g} outside [0, mu)")
    return max(a_p, 0.0)


def tc_ff(N_p: float, a_c: float, cost: CostParams, params: OperationalParams) -> float:
    """Equilibrium cost when every train runs in free flow."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    return math.sqrt(2 * a * params.L * N_p / (params.mu * params.l * a_c * (1 / b + 1 / g)))


def n_p_for_tc_ff(tc: float, a_c: float, cost: CostParams, params: OperationalParams) -> float:
    """Inverse of :func:`tc_ff`."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    return tc * tc * params.mu * params.l * a_c * (1 / b + 1 / g) / (2 * a * params.L)


def _tc_bound(z, a_c, cost, params):
    l, L, delta = params.l, params.L, params.delta
    return cost.alpha * L * (1 + z * a_c * ((l - delta) / params.v_f - params.tau)) / (z * l * a_c) - cost.alpha * min_travel_time(params)


def tc_fccf_bound(a_c, cost: CostParams, params: OperationalParams) -> float:
    """Largest cost at which the first congested train after t_m still has a_p >= 0."""
    _, z2 = zeta_factors(cost)
    l = params.l
    return cost.alpha * params.L * (l - params.eta * z2 * a_c) / (params.delta * z2 * l * a_c) - cost.alpha * min_travel_time(params)


def fccf_exists(a_c, cost: CostParams, params: OperationalParams) -> bool:
    """Sufficient-and-necessary inequality for TC_FCCF > TC_FCF."""
    z1, z2 = zeta_factors(cost)
    l, delta = params.l, params.delta
    lhs = (1 / (delta * z2) - 1 / (l * z1)) / a_c
    rhs = (1 / delta - 1 / l) * params.min_headway
    return lhs > rhs


def fcf_coefficients(a_c, cost: CostParams, params: OperationalParams) -> tuple[float, float, float]:
    """Coefficients R, S, U of the FCF conservation quadratic."""
    a, b, g = cost.alpha, cost.beta, cost.gamma
    l, L, mu, delta = params.l, params.L, params.mu, params.delta
    eta = params.eta
    _, z2 = zeta_factors(cost)
    T0 = min_travel_time(params)
    tcff = _tc_bound(z2, a_c, cost, params)
    late = 1 + g / (2 * a)
    R = mu * b / ((l - delta) * g) * late * (l - eta * z2 * a_c - delta * z2 * l / L * a_c * T0)
    S = mu * late * tcff / g * (
        l / (2 * a * L) * z2 * a_c * tcff + delta / (l - delta) * z2 * l / (2 * a * L) * a_c * (2 * a * T0 + tcff)
    ) + mu * late * tcff / g * (eta / (l - delta) * z2 * a_c - l / (l - delta))
    U = mu * l / (2 * L) * a_c * (b / a * (1 - b / a) - delta * b * b / ((l - delta) * a * g) * (1 + g / a))
    return R, S, U


def closed_form_constants(a_c, cost: CostParams, params: OperationalParams) -> ClosedFormConstants:
    z1, z2 = zeta_factors(cost)
    R, S, U = fcf_coefficients(a_c, cost, params)
    return ClosedFormConstants(z1, z2, params.eta, R, S, U, omega_ratio(cost))


def _discriminant(N_p, R, S, U):
    return R * R - 4 * U * (S - N_p)


def tc_fcf(N_p: float, a_c: float, cost: CostParams, params: OperationalParams) -> tuple[float, float, float, float]:
    """FCF equilibrium cost; returns ``(TC_e, R, S, U)``."""
    R, S, U = fcf_coefficients(a_c, cost, params)
    disc = _discriminant(N_p, R, S, U)
    if disc < 0:
        raise NoRealSolutionError(f"FCF discriminant {disc:.6g} < 0")
    if U == 0:
        # conservation is linear in x = tm - t0
        return cost.beta * (N_p - S) / R, R, S, U
    return cost.beta * (-R + math.sqrt(disc)) / (2 * U), R, S, U


def tc_fcf_sensitivity(N_p: float, a_c: float, cost: CostParams, params: OperationalParams) -> float:
    """dTC_e/dN_p in the FCF pattern."""
    R, S, U = fcf_coefficients(a_c, cost, params)
    disc = _discriminant(N_p, R, S, U)
    if disc <= 0:
        raise NoRealSolutionError(f"FCF discriminant {disc:.6g} <= 0")
    return cost.beta / math.sqrt(disc)


def regime_thresholds(a_c, cost: CostParams, params: OperationalParams) -> Thresholds:
    z1, z2 = zeta_factors(cost)
    tc_ff_max = _tc_bound(z2, a_c, cost, params)
    tc_fcf_max = _tc_bound(z1, a_c, cost, params)
    np_ff = n_p_for_tc_ff(max(tc_ff_max, 0.0), a_c, cost, params)
    return Thresholds(
        TC_FF=tc_ff_max,
        TC_FCF=tc_fcf_max,
        TC_FCCF=tc_fccf_bound(a_c, cost, params),
        N_p_FF=np_ff,
        N_p_FCF=_n_p_fcf(tc_fcf_max, np_ff, a_c, cost, params),
    )


def _n_p_fcf(target, np_ff, a_c, cost, params) -> float | None:
    """Demand at which the FCF cost reaches ``target`` (bisection to 1 pax)."""

    def excess(N):
        return tc_fcf(N, a_c, cost, params)[0] - target

    lo = np_ff
    try:
        if excess(lo) >= 0:
            return lo
    except NoRealSolutionError:
        return None
    hi = max(2 * lo, 1.0)
    for _ in range(200):
        try:
            if excess(hi) >= 0:
                break
        except NoRealSolutionError:
            return None
        lo, hi = hi, 2 * hi
    else:
        return None
    while hi - lo > 1.0:
        mid = 0.5 * (lo + hi)
        if excess(mid) >= 0:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def classify_pattern(N_p: float, a_c: float, cost: CostParams, params: OperationalParams, solver_options=None) -> PatternReport:
    """Operation pattern and equilibrium cost for constant inflow.

    FF and FCF costs are closed-form; an FCCF cost is obtained from the numeric
    solver, and demand it cannot serve is reported as Infeasible.
    """
    th = regime_thresholds(a_c, cost, params)
    tc = tc_ff(N_p, a_c, cost, params)
    if tc <= th.TC_FF:
        return PatternReport("FF", tc, th)
    try:
        tc = tc_fcf(N_p, a_c, cost, params)[0]
    except NoRealSolutionError:
        tc = None
    if tc is not None and tc <= th.TC_FCF:
        # the post-tm congested train needs a_p >= 0 as well
        if tc <= th.TC_FCCF * (1 + 1e-9):
            return PatternReport("FCF", tc, th)
        return PatternReport("Infeasible", None, th)
    from .equilibrium import InflowProfile, solve_wt1

    try:
        sol = solve_wt1(params, cost, DemandWT1(0.0, N_p), InflowProfile.constant(a_c), **(solver_options or {}))
    except (InfeasibleStateError, SolverError):
        return PatternReport("Infeasible", None, th)
    if sol.TC_e <= th.TC_FCCF * (1 + 1e-9):
        return PatternReport("FCCF", sol.TC_e, th)
    return PatternReport("Infeasible", None, th)


def closed_form_tc(N_p: float, a_c: float, cost: CostParams, params: OperationalParams) -> float | None:
    """Formula cost: the FF expression up to TC_FF, the FCF quadratic above it.

    The FCF value is returned whenever the quadratic has a real root, even
    where FCF no longer describes the equilibrium; use :func:`classify_pattern`
    for the pattern.  None if the discriminant is negative.
    """
    th = regime_thresholds(a_c, cost, params)
    tc = tc_ff(N_p, a_c, cost, params)
    if tc <= th.TC_FF:
        return tc
    try:
        return tc_fcf(N_p, a_c, cost, params)[0]
    except NoRealSolutionError:
        return None
