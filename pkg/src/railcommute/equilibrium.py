"""Departure-time-choice user equilibrium on a rail line with a given timetable.

Under equilibrium the travel time T(t) is piecewise linear in the exit time t
(slope beta/alpha before t_m, -gamma/alpha after).  With a piecewise-constant
train inflow, the rush window [t0, ted] splits into pieces on which the train
flow is constant and density and passenger arrival rate are linear in t.  The
solver builds those pieces exactly (including the points where the FD regime
switches), so the passenger conservation integral is evaluated without
quadrature error and the train grid ``dn`` only controls output resolution.
"""
from __future__ import annotations

import bisect
import math
from dataclasses import dataclass, field
from typing import Callable, Sequence, Union

import numpy as np
from scipy.optimize import brentq

from .core import (
    CostParams,
    DemandWT1,
    DemandWT2,
    OperationalParams,
    Regime,
    congested_rate,
    free_flow_rate,
    min_travel_time,
)
from .errors import DomainError, InfeasibleStateError, SolverError

DEFAULT_DT = 1 / 60
DEFAULT_DN = 0.1
DEFAULT_EPS_P = 100.0
DEFAULT_MAX_ITER = 10_000

# a_p this close below zero is rounding noise at the rush boundaries
_AP_SLACK = 1e-9


@dataclass(frozen=True)
class InflowProfile:
    """Piecewise-constant train arrival rate a(t).

    Segment ``i`` is active from ``starts[i]`` until the next start.  Before
    ``starts[0]`` the rate is ``before`` (default: the first rate).
    ``cumulative`` counts trains from ``starts[0]``.
    """

    starts: tuple[float, ...]
    rates: tuple[float, ...]
    before: float | None = None
    _cum: tuple[float, ...] = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        starts = tuple(float(s) for s in self.starts)
        rates = tuple(float(r) for r in self.rates)
        if not starts or len(starts) != len(rates):
            raise DomainError("inflow needs one rate per segment start")
        if self.before is not None and not (self.before > 0 and math.isfinite(self.before)):
            raise DomainError("inflow rates must be positive")
        if any(r <= 0 or not math.isfinite(r) for r in rates):
            raise DomainError("inflow rates must be positive")
        if any(b <= a for a, b in zip(starts, starts[1:])):
            raise DomainError("inflow segment starts must be strictly increasing")
        cum = [0.0]
        for i in range(1, len(starts)):
            cum.append(cum[-1] + rates[i - 1] * (starts[i] - starts[i - 1]))
        object.__setattr__(self, "starts", starts)
        object.__setattr__(self, "rates", rates)
        object.__setattr__(self, "_cum", tuple(cum))

    @classmethod
    def constant(cls, rate: float) -> "InflowProfile":
        return cls((0.0,), (rate,))

    @classmethod
    def from_segments(cls, segments: Sequence[tuple[float, float]]) -> "InflowProfile":
        starts, rates = zip(*segments)
        return cls(tuple(starts), tuple(rates))

    @property
    def is_constant(self) -> bool:
        return len(set(self.rates) | {self.initial_rate}) == 1

    @property
    def initial_rate(self) -> float:
        return self.rates[0] if self.before is None else self.before

    @property
    def segments(self) -> list[tuple[float, float]]:
        return list(zip(self.starts, self.rates))

    def rate(self, t: float) -> float:
        i = bisect.bisect_right(self.starts, t) - 1
        return self.initial_rate if i < 0 else self.rates[i]

    def cumulative(self, t: float) -> float:
        i = bisect.bisect_right(self.starts, t) - 1
        if i < 0:
            return self.initial_rate * (t - self.starts[0])
        return self._cum[i] + self.rates[i] * (t - self.starts[i])


InflowSpec = Union[InflowProfile, Callable[[float, float], InflowProfile]]


def _resolve_inflow(inflow: InflowSpec, t0: float, tm: float) -> InflowProfile:
    return inflow if isinstance(inflow, InflowProfile) else inflow(t0, tm)


@dataclass(slots=True)
class TrainState:
    n: float
    t_dep: float
    t_arr: float
    T: float
    h_a: float
    h_d: float
    h_bar: float
    s_bar: float
    q: float
    k: float
    a_p: float
    regime: Regime
    jump: bool = False  # first state after a discontinuity (same n as the previous one)


@dataclass(frozen=True)
class CostBreakdown:
    sum_TDC: float
    sum_SDC: float
    sum_TC: float
    TC_e: float


@dataclass(frozen=True)
class CumulativeCurves:
    t: np.ndarray
    A: np.ndarray
    D: np.ndarray
    Ap: np.ndarray
    Dp: np.ndarray


@dataclass(frozen=True)
class _Piece:
    ta: float
    tb: float
    slope: float
    a: float
    q: float
    regime: Regime
    ap_a: float
    ap_b: float
    n_a: float
    n_b: float

    @property
    def passengers(self) -> float:
        # integrand a_p * h_bar * dn/dt = a_p * (1 - slope/2), a_p linear in t
        return (self.tb - self.ta) * (1 - 0.5 * self.slope) * 0.5 * (self.ap_a + self.ap_b)

    def passengers_until(self, t: float) -> float:
        if t <= self.ta:
            return 0.0
        if t >= self.tb:
            return self.passengers
        frac = (t - self.ta) / (self.tb - self.ta)
        ap_t = self.ap_a + frac * (self.ap_b - self.ap_a)
        return (t - self.ta) * (1 - 0.5 * self.slope) * 0.5 * (self.ap_a + ap_t)


@dataclass
class EquilibriumSolution:
    case: str
    params: OperationalParams
    cost: CostParams
    demand: Union[DemandWT1, DemandWT2]
    inflow: InflowProfile
    t0: float
    tm: float
    ted: float
    T0: float
    TC_e: float
    passengers: float
    trains: list[TrainState]
    converged: bool
    iterations: int
    dn: float
    pieces: tuple[_Piece, ...] = field(repr=False, default=())
    breakdown: CostBreakdown | None = None

    def travel_time(self, t: float) -> float:
        """T(t), extended by T_0 outside the rush window."""
        if self.ted <= self.t0 or t <= self.t0 or t >= self.ted:
            return self.T0
        return _travel_time(t, self.t0, self.tm, self.T0, self.cost)

    def served_until(self, t: float) -> float:
        """D_p(t): passengers that have left the system by exit time ``t``."""
        return sum(p.passengers_until(t) for p in self.pieces)

    @property
    def pattern(self) -> str:
        return pattern_of(self.pieces, self.tm)

    def arrays(self) -> dict[str, np.ndarray]:
        names = ("n", "t_dep", "t_arr", "T", "h_a", "h_d", "h_bar", "s_bar", "q", "k", "a_p")
        out = {name: np.array([getattr(s, name) for s in self.trains], dtype=float) for name in names}
        out["congested"] = np.array([s.regime is Regime.CONGESTED for s in self.trains], dtype=bool)
        out["jump"] = np.array([s.jump for s in self.trains], dtype=bool)
        return out


def _travel_time(t, t0, tm, T0, cost):
    if t < tm:
        return T0 + cost.beta / cost.alpha * (t - t0)
    return T0 + cost.beta / cost.alpha * (tm - t0) - cost.gamma / cost.alpha * (t - tm)


def rush_end(t0: float, tm: float, cost: CostParams) -> float:
    return tm + cost.beta / cost.gamma * (tm - t0)


def travel_time_profile(t: float, t0: float, tm: float, cost: CostParams, params: OperationalParams) -> float:
    """Equilibrium travel time of a passenger leaving the system at ``t``."""
    ted = rush_end(t0, tm, cost)
    slack = 1e-12 * max(1.0, abs(ted))
    if not t0 - slack <= t <= ted + slack:
        raise DomainError(f"t={t!r} outside rush window [{t0!r}, {ted!r}]")
    return _travel_time(t, t0, tm, min_travel_time(params), cost)


def outflow_profile(
    t: float, inflow: InflowProfile, t0: float, tm: float, cost: CostParams, params: OperationalParams
) -> float:
    """Train outflow d(t) from FIFO; right-sided at t_m."""
    T = travel_time_profile(t, t0, tm, cost, params)
    slope = cost.beta / cost.alpha if t < tm else -cost.gamma / cost.alpha
    return inflow.rate(t - T) * (1 - slope)


def _build_pieces(
    t0: float, tm: float, inflow: InflowProfile, cost: CostParams, params: OperationalParams
) -> list[_Piece]:
    ted = rush_end(t0, tm, cost)
    if not ted > t0:
        return []
    T0 = min_travel_time(params)
    r1 = cost.beta / cost.alpha
    r2 = cost.gamma / cost.alpha

    cuts = {t0, tm, ted}
    for s in inflow.starts if inflow.before is not None else inflow.starts[1:]:
        # exit times whose entry time t - T(t) hits an inflow switch
        early = (s + T0 - r1 * t0) / (1 - r1)
        late = (s + T0 + r1 * (tm - t0) + r2 * tm) / (1 + r2)
        if t0 < early < tm:
            cuts.add(early)
        if tm < late < ted:
            cuts.add(late)
    cuts = sorted(cuts)

    L = params.L
    n_ref = inflow.cumulative(t0 - T0)
    pieces = []
    for ta, tb in zip(cuts, cuts[1:]):
        if tb - ta <= 1e-14 * max(1.0, abs(tb)):
            continue
        mid = 0.5 * (ta + tb)
        slope = r1 if mid < tm else -r2
        Tm = _travel_time(mid, t0, tm, T0, cost)
        a = inflow.rate(mid - Tm)
        q = 2 * a * (1 - slope) / (2 - slope)
        ka = q * _travel_time(ta, t0, tm, T0, cost) / L
        kb = q * _travel_time(tb, t0, tm, T0, cost) / L
        fa, fb = free_flow_rate(q, ka, params), free_flow_rate(q, kb, params)
        ca, cb = congested_rate(q, ka, params), congested_rate(q, kb, params)
        da, db = fa - ca, fb - cb
        splits = [(ta, tb, fa, fb, ca, cb)]
        if (da < 0 < db) or (db < 0 < da):
            frac = da / (da - db)
            ts = ta + frac * (tb - ta)
            fs = fa + frac * (fb - fa)
            splits = [(ta, ts, fa, fs, ca, fs), (ts, tb, fs, fb, fs, cb)]
        d = a * (1 - slope)
        for sa, sb, f0, f1, c0, c1 in splits:
            free = (f0 + f1) <= (c0 + c1)
            regime = Regime.FREE_FLOW if free else Regime.CONGESTED
            ap0, ap1 = (f0, f1) if free else (c0, c1)
            n_a = inflow.cumulative(sa - _travel_time(sa, t0, tm, T0, cost)) - n_ref
            n_b = n_a + d * (sb - sa)
            pieces.append(_Piece(sa, sb, slope, a, q, regime, ap0, ap1, n_a, n_b))
    _check_feasible(pieces, params)
    return pieces


def _check_feasible(pieces: list[_Piece], params: OperationalParams) -> None:
    slack = _AP_SLACK * params.mu
    for i, p in enumerate(pieces):
        for n, ap in ((p.n_a, p.ap_a), (p.n_b, p.ap_b)):
            if ap < -slack or ap >= params.mu:
                raise InfeasibleStateError(
                    f"passenger arrival rate {ap:.6g} pax/h outside [0, mu) at train n={n:.4f}", train=n
                )
        if p.ap_a < 0 or p.ap_b < 0:
            pieces[i] = _replace_ap(p, max(p.ap_a, 0.0), max(p.ap_b, 0.0))


def _replace_ap(p: _Piece, ap_a: float, ap_b: float) -> _Piece:
    return _Piece(p.ta, p.tb, p.slope, p.a, p.q, p.regime, ap_a, ap_b, p.n_a, p.n_b)


def pattern_of(pieces: Sequence[_Piece], tm: float) -> str:
    """Regime sequence of a rush (e.g. 'FF', 'FCF', 'FCCF'), runs compressed per side of t_m."""
    out = ""
    for side in (True, False):
        run = ""
        for p in pieces:
            if (p.tb <= tm) == side:
                letter = p.regime.letter
                if not run.endswith(letter):
                    run += letter
        out += run
    return out


def _states_from_pieces(pieces: Sequence[_Piece], t0, tm, cost, params, dn: float) -> list[TrainState]:
    T0 = min_travel_time(params)
    L = params.L
    states: list[TrainState] = []
    for p in pieces:
        d = p.a * (1 - p.slope)
        gap = 1e-9 * dn
        inner = [
            j * dn
            for j in range(math.floor(p.n_a / dn), math.ceil(p.n_b / dn) + 1)
            if p.n_a + gap < j * dn < p.n_b - gap
        ]
        ns = [p.n_a] + inner + [p.n_b]
        for i, n in enumerate(ns):
            t = p.tb if i == len(ns) - 1 else p.ta + (n - p.n_a) / d
            frac = (t - p.ta) / (p.tb - p.ta)
            ap = p.ap_a + frac * (p.ap_b - p.ap_a)
            T = _travel_time(t, t0, tm, T0, cost)
            h_a = 1 / p.a
            h_d = 1 / d
            h_bar = 0.5 * (h_a + h_d)
            s_bar = L / T * h_bar
            state = TrainState(n, t, t - T, T, h_a, h_d, h_bar, s_bar, 1 / h_bar, 1 / s_bar, ap, p.regime)
            if i == 0 and states:
                prev = states[-1]
                if abs(prev.n - n) < 1e-9 * max(1.0, abs(n)):
                    if abs(prev.q - state.q) <= 1e-12 * state.q and abs(prev.a_p - ap) <= 1e-9 * params.mu:
                        continue
                    state.jump = True
            states.append(state)
    return states


def train_state_series(
    t0: float,
    tm: float,
    inflow: InflowSpec,
    cost: CostParams,
    params: OperationalParams,
    dn: float = DEFAULT_DN,
) -> list[TrainState]:
    """Per-train equilibrium states on a grid of step ``dn`` (n = 0 at t0).

    Rush boundaries, t_m, inflow switches and regime switches are always
    included; at discontinuities both one-sided states are kept and the
    right-hand one is flagged ``jump``.
    """
    if dn <= 0:
        raise DomainError("dn must be positive")
    pieces = _build_pieces(t0, tm, _resolve_inflow(inflow, t0, tm), cost, params)
    return _states_from_pieces(pieces, t0, tm, cost, params, dn)


def passengers_served(states: Sequence[TrainState]) -> float:
    """Trapezoidal sum of a_p * h_bar over the train index."""
    total = 0.0
    for s0, s1 in zip(states, states[1:]):
        total += 0.5 * (s0.a_p * s0.h_bar + s1.a_p * s1.h_bar) * (s1.n - s0.n)
    return total


def _served(pieces: Sequence[_Piece]) -> float:
    return math.fsum(p.passengers for p in pieces)


def _guess_early_window(N_p, inflow: InflowProfile, tm, cost, params) -> float:
    a = inflow.rate(tm - min_travel_time(params))
    tc = math.sqrt(2 * cost.alpha * params.L * N_p / (params.mu * params.l * a * (1 / cost.beta + 1 / cost.gamma)))
    return tc / cost.beta


class _Counter:
    def __init__(self):
        self.count = 0


def _solve_t0(tm, N_p, inflow: InflowSpec, cost, params, eps_p, max_iter, dt, counter: _Counter) -> float:
    """Early-window length x = tm - t0 at which passenger conservation holds."""

    def excess(x):
        counter.count += 1
        if counter.count > max_iter:
            raise SolverError(f"no convergence within {max_iter} evaluations")
        t0 = tm - x
        return _served(_build_pieces(t0, tm, _resolve_inflow(inflow, t0, tm), cost, params)) - N_p

    x = max(_guess_early_window(N_p, _resolve_inflow(inflow, tm - 1.0, tm), tm, cost, params), dt)
    lo, hi = 0.0, None
    while hi is None:
        try:
            f = excess(x)
        except InfeasibleStateError as err:
            hi = _feasibility_edge(lo, x, excess, N_p, err)
            break
        if f >= 0:
            hi = x
        else:
            lo, x = x, 2 * x
    if hi == lo:
        return lo
    root = brentq(excess, lo, hi, xtol=1e-12, rtol=4 * np.finfo(float).eps, maxiter=max_iter)
    if abs(excess(root)) > eps_p:
        raise SolverError(f"conservation error exceeds eps_p={eps_p} at t0={tm - root:.9g}")
    return root


def _feasibility_edge(lo, bad, excess, N_p, err) -> float:
    """Bisect between a feasible short window and an infeasible long one.

    Returns a feasible window serving at least N_p passengers, or raises when
    the demand cannot be served before the equilibrium turns infeasible.
    """
    for _ in range(200):
        mid = 0.5 * (lo + bad)
        try:
            f = excess(mid)
        except InfeasibleStateError as exc:
            bad, err = mid, exc
        else:
            if f >= 0:
                return mid
            lo = mid
        if bad - lo <= 1e-12 * max(1.0, bad):
            break
    raise InfeasibleStateError(
        f"demand N_p={N_p:g} cannot be served by a feasible equilibrium: {err}", train=getattr(err, "train", None)
    )


def _finish(case, params, cost, demand, inflow_spec, t0, tm, dn, counter, eps_p, detail=True) -> EquilibriumSolution:
    inflow = _resolve_inflow(inflow_spec, t0, tm)
    pieces = tuple(_build_pieces(t0, tm, inflow, cost, params))
    states = _states_from_pieces(pieces, t0, tm, cost, params, dn) if detail else []
    served = _served(pieces)
    sol = EquilibriumSolution(
        case=case,
        params=params,
        cost=cost,
        demand=demand,
        inflow=inflow,
        t0=t0,
        tm=tm,
        ted=rush_end(t0, tm, cost),
        T0=min_travel_time(params),
        TC_e=cost.beta * (tm - t0),
        passengers=served,
        trains=states,
        converged=abs(served - demand.N_p) <= eps_p,
        iterations=counter.count,
        dn=dn,
        pieces=pieces,
    )
    if detail:
        sol.breakdown = cost_breakdown(sol, demand)
    return sol


def _check_inputs(params, cost, dn, dt, eps_p):
    from .core import validate

    report = validate(params, cost)
    if not report:
        raise DomainError("invalid parameters: " + ", ".join(report.failures))
    if dn <= 0 or dt <= 0 or eps_p <= 0:
        raise DomainError("dn, dt and eps_p must be positive")


def solve_wt1(
    params: OperationalParams,
    cost: CostParams,
    demand: DemandWT1,
    inflow: InflowSpec,
    *,
    dt: float = DEFAULT_DT,
    dn: float = DEFAULT_DN,
    eps_p: float = DEFAULT_EPS_P,
    max_iter: int = DEFAULT_MAX_ITER,
    detail: bool = True,
) -> EquilibriumSolution:
    """Equilibrium for a common desired departure time.

    ``inflow`` is either a fixed profile or a callable ``(t0, tm) -> profile``
    for timetables whose switch times follow the rush boundaries.
    """
    _check_inputs(params, cost, dn, dt, eps_p)
    tm = demand.t_star
    counter = _Counter()
    x = 0.0 if demand.N_p <= 0 else _solve_t0(tm, demand.N_p, inflow, cost, params, eps_p, max_iter, dt, counter)
    return _finish("wt1", params, cost, demand, inflow, tm - x, tm, dn, counter, eps_p, detail)


def solve_wt2(
    params: OperationalParams,
    cost: CostParams,
    demand: DemandWT2,
    inflow: InflowSpec,
    *,
    dt: float = DEFAULT_DT,
    dn: float = DEFAULT_DN,
    eps_p: float = DEFAULT_EPS_P,
    max_iter: int = DEFAULT_MAX_ITER,
    detail: bool = True,
) -> EquilibriumSolution:
    """Equilibrium for desired departure times spread over a window.

    The zero-schedule-delay instant t_m is found by bisection on
    D_p(t_m) - W_p(t_m), with the conservation solve for t0 nested inside.
    """
    _check_inputs(params, cost, dn, dt, eps_p)
    counter = _Counter()
    N_p = demand.N_p
    if N_p <= 0:
        return _finish("wt2", params, cost, demand, inflow, demand.w_start, demand.w_start, dn, counter, eps_p, detail)

    cache: dict[float, float] = {}

    def gap(tm):
        x = _solve_t0(tm, N_p, inflow, cost, params, eps_p, max_iter, dt, counter)
        cache[tm] = x
        t0 = tm - x
        pieces = _build_pieces(t0, tm, _resolve_inflow(inflow, t0, tm), cost, params)
        return sum(p.passengers_until(tm) for p in pieces) - demand.wish(tm)

    lo, hi = demand.w_start, demand.w_end
    g_hi = gap(hi)
    if g_hi >= 0:
        tm = hi
    else:
        if gap(lo) <= 0:
            raise SolverError("no zero-schedule-delay instant inside the wish window")
        tm = brentq(gap, lo, hi, xtol=1e-11, maxiter=max_iter)
        gap(tm)
    return _finish("wt2", params, cost, demand, inflow, tm - cache[tm], tm, dn, counter, eps_p, detail)


def schedule_delay(t, t_star, cost: CostParams):
    """Piecewise-linear schedule delay cost; works on scalars and arrays."""
    early = cost.beta * (np.asarray(t_star) - np.asarray(t))
    late = cost.gamma * (np.asarray(t) - np.asarray(t_star))
    out = np.where(np.asarray(t) < np.asarray(t_star), early, late)
    return float(out) if out.ndim == 0 else out


def desired_times(solution: EquilibriumSolution) -> np.ndarray:
    """Desired departure time of the passengers on each train of the series."""
    demand = solution.demand
    if isinstance(demand, DemandWT1):
        return np.full(len(solution.trains), demand.t_star)
    return np.array([demand.desired_time(solution.served_until(s.t_dep)) for s in solution.trains])


def passenger_costs(solution: EquilibriumSolution) -> np.ndarray:
    """Travel cost alpha(T - T0) + s(t, t*) of the passengers on each train."""
    arr = solution.arrays()
    tdc = solution.cost.alpha * (arr["T"] - solution.T0)
    return tdc + schedule_delay(arr["t_dep"], desired_times(solution), solution.cost)


def cost_breakdown(solution: EquilibriumSolution, demand=None) -> CostBreakdown:
    """Total travel-delay and schedule-delay cost, summed over the train series."""
    demand = demand if demand is not None else solution.demand
    if not solution.trains:
        return CostBreakdown(0.0, 0.0, 0.0, solution.TC_e)
    arr = solution.arrays()
    pax_rate = arr["a_p"] * arr["h_bar"]  # passengers per unit train index
    if isinstance(demand, DemandWT1):
        t_star = np.full(len(arr["n"]), demand.t_star)
    else:
        t_star = desired_times(solution)
    tdc = solution.cost.alpha * (arr["T"] - solution.T0) * pax_rate
    sdc = schedule_delay(arr["t_dep"], t_star, solution.cost) * pax_rate
    sum_tdc = float(np.trapezoid(tdc, arr["n"]))
    sum_sdc = float(np.trapezoid(sdc, arr["n"]))
    return CostBreakdown(sum_tdc, sum_sdc, sum_tdc + sum_sdc, solution.TC_e)


def cumulative_curves(solution: EquilibriumSolution, dt: float = DEFAULT_DT) -> CumulativeCurves:
    """Sample A(t), D(t), A_p(t), D_p(t) from the first rush entry to ted.

    Train counts are relative to the first rush train (D(t0) = 0).  A_p(t)
    counts passengers whose train entered the system by t, i.e.
    A_p(t - T(t)) = D_p(t).
    """
    if dt <= 0:
        raise DomainError("dt must be positive")
    T0 = solution.T0
    start, stop = solution.t0 - T0, solution.ted
    count = max(int(math.ceil((stop - start) / dt - 1e-9)), 1)
    t = np.array([start + i * dt for i in range(count)] + [stop])
    inflow = solution.inflow
    n_ref = inflow.cumulative(solution.t0 - T0)
    A = np.array([inflow.cumulative(x) - n_ref for x in t])
    D = np.array([inflow.cumulative(x - solution.travel_time(x)) - n_ref for x in t])
    Dp = np.array([solution.served_until(x) for x in t])
    Ap = np.array([solution.served_until(_exit_time(solution, x)) for x in t])
    return CumulativeCurves(t, A, D, Ap, Dp)


def _exit_time(solution: EquilibriumSolution, u: float) -> float:
    """Exit time of the train entering at ``u`` (inverse of t - T(t))."""
    cost, T0 = solution.cost, solution.T0
    if solution.ted <= solution.t0 or u <= solution.t0 - T0:
        return u + T0
    r1, r2 = cost.beta / cost.alpha, cost.gamma / cost.alpha
    u_m = solution.tm - solution.travel_time(solution.tm)
    if u < u_m:
        return (u + T0 - r1 * solution.t0) / (1 - r1)
    t = (u + T0 + r1 * (solution.tm - solution.t0) + r2 * solution.tm) / (1 + r2)
    return t if t <= solution.ted else u + T0


def local_maxima(values: Sequence[float], rel_tol: float = 1e-9) -> list[int]:
    """Indices of strict local maxima, treating flat runs as a single point."""
    vals = list(values)
    tol = rel_tol * max((abs(v) for v in vals), default=0.0)
    # collapse plateaus
    idx, comp = [], []
    for i, v in enumerate(vals):
        if comp and abs(v - comp[-1]) <= tol:
            continue
        idx.append(i)
        comp.append(v)
    peaks = []
    for j, v in enumerate(comp):
        left = comp[j - 1] if j > 0 else -math.inf
        right = comp[j + 1] if j + 1 < len(comp) else -math.inf
        if v > left and v > right:
            peaks.append(idx[j])
    return peaks


def shoelace_area(x: Sequence[float], y: Sequence[float]) -> float:
    """Signed area of the closed polygon through (x, y); positive if counter-clockwise."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(np.roll(x, -1), y))
