"""Parameter types and the train fundamental diagram (train-FD).

All quantities use hours, kilometres, dollars, trains and passengers.
The FD for a fixed passenger arrival rate ``a_p`` is triangular in the train
density ``k``: a free-flow line through the origin's neighbourhood and a
congested line of slope ``-delta*l/eta``, meeting at the critical point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

from .errors import DomainError, InfeasibleStateError

# relative slack (of mu) absorbing floating-point noise around a_p = 0
ROUNDING_SLACK = 1e-12


class Regime(str, enum.Enum):
    FREE_FLOW = "FreeFlow"
    CONGESTED = "Congested"

    @property
    def letter(self) -> str:
        return "F" if self is Regime.FREE_FLOW else "C"


@dataclass(frozen=True)
class OperationalParams:
    """Line and train constants.

    l: inter-station distance (km), L: trip length (km), v_f: free-flow speed
    (km/h), t_b0: buffer dwell time (h), mu: max boarding rate (pax/h),
    delta: minimum spacing (km), tau: reaction time (h).
    """

    l: float
    L: float
    v_f: float
    t_b0: float
    mu: float
    delta: float
    tau: float

    @property
    def eta(self) -> float:
        return (self.l - self.delta) * self.t_b0 + self.tau * self.l

    @property
    def wave_speed(self) -> float:
        # magnitude of the congested-branch slope
        return self.delta * self.l / self.eta

    @property
    def free_headway_per_station(self) -> float:
        # t_b0 + l/v_f: time a free-flowing train spends per station spacing
        return self.t_b0 + self.l / self.v_f

    @property
    def min_headway(self) -> float:
        # t_b0 + delta/v_f + tau = 1/q*(0)
        return self.t_b0 + self.delta / self.v_f + self.tau


@dataclass(frozen=True)
class CostParams:
    alpha: float
    beta: float
    gamma: float


@dataclass(frozen=True)
class DemandWT1:
    """All passengers share the desired departure time ``t_star`` (h)."""

    t_star: float
    N_p: float


@dataclass(frozen=True)
class DemandWT2:
    """Desired departure times spread uniformly at ``w_p`` pax/h over a window."""

    w_start: float
    w_end: float
    w_p: float
    N_p: float

    def wish(self, t: float) -> float:
        """Cumulative number of passengers wishing to depart by ``t``."""
        if t <= self.w_start:
            return 0.0
        if t >= self.w_end:
            return self.N_p
        return min(self.N_p, self.w_p * (t - self.w_start))

    def desired_time(self, rank: float) -> float:
        """Desired departure time of the passenger with cumulative rank ``rank``."""
        rank = min(max(rank, 0.0), self.N_p)
        return self.w_start + rank / self.w_p


@dataclass(frozen=True)
class FdPoint:
    k: float
    q: float
    a_p: float
    regime: Regime


@dataclass
class ValidationReport:
    failures: list[str] = field(default_factory=list)

    @property
    def ok(self) -> bool:
        return not self.failures

    def __bool__(self) -> bool:
        return self.ok


def validate(params: OperationalParams, cost: CostParams, demand=None) -> ValidationReport:
    """Check every parameter invariant; the report names each violated rule."""
    report = ValidationReport()
    fail = report.failures.append
    for name in ("l", "L", "v_f", "t_b0", "mu", "delta", "tau"):
        value = getattr(params, name)
        if not (math.isfinite(value) and value > 0):
            fail(f"{name} > 0")
    if not params.l > params.delta:
        fail("l > delta")
    if not params.L >= params.l:
        fail("L >= l")
    if not cost.beta > 0:
        fail("beta > 0")
    if not cost.gamma > 0:
        fail("gamma > 0")
    if not cost.alpha > cost.beta:
        fail("alpha > beta")
    if demand is not None:
        if not demand.N_p >= 0:
            fail("N_p >= 0")
        if isinstance(demand, DemandWT2):
            if not demand.w_end > demand.w_start:
                fail("w_end > w_start")
            if not demand.w_p > 0:
                fail("w_p > 0")
            elif abs(demand.w_p * (demand.w_end - demand.w_start) - demand.N_p) > 1.0:
                fail("w_p * (w_end - w_start) = N_p")
    return report


def _check_rate(a_p: float, params: OperationalParams) -> None:
    if not 0 <= a_p < params.mu:
        raise DomainError(f"passenger arrival rate {a_p!r} outside [0, mu={params.mu!r})")


def critical_point(a_p: float, params: OperationalParams) -> tuple[float, float]:
    """Return ``(q_star, k_star)`` at passenger arrival rate ``a_p``."""
    _check_rate(a_p, params)
    x = a_p / params.mu
    q_star = (1 - x) / params.min_headway
    k_star = (1 - x) * params.free_headway_per_station / (params.min_headway * params.l) + x / params.l
    return q_star, k_star


def jam_density(a_p: float, params: OperationalParams) -> float:
    """Density at which the congested branch reaches zero flow."""
    q_star, k_star = critical_point(a_p, params)
    return k_star + q_star / params.wave_speed


def _free_branch(k, a_p, params):
    return (k * params.l - a_p / params.mu) / params.free_headway_per_station


def _congested_branch(k, a_p, params):
    # algebraically identical to -w (k - k*) + q*, with w = delta*l/eta
    return (params.l - (a_p / params.mu) * (params.l - params.delta) - params.delta * params.l * k) / params.eta


def fd_flow(k: float, a_p: float, params: OperationalParams) -> float:
    """Train flow Q(k, a_p), clamped at zero beyond jam density."""
    if k < 0:
        raise DomainError(f"negative density {k!r}")
    _check_rate(a_p, params)
    _, k_star = critical_point(a_p, params)
    if k <= k_star:
        q = _free_branch(k, a_p, params)
    else:
        q = _congested_branch(k, a_p, params)
    return max(q, 0.0)


def free_flow_rate(q, k, params: OperationalParams):
    """Passenger rate solving the free-flow branch for given (q, k). Works on arrays."""
    return params.mu * (k * params.l - q * params.free_headway_per_station)


def congested_rate(q, k, params: OperationalParams):
    """Passenger rate solving the congested branch for given (q, k). Works on arrays."""
    return params.mu * (params.l - params.eta * q - params.delta * params.l * k) / (params.l - params.delta)


def invert_passenger_rate(q: float, k: float, params: OperationalParams) -> tuple[float, Regime]:
    """Invert the FD at fixed density: the ``a_p`` with ``fd_flow(k, a_p) == q``.

    For fixed k the FD is the minimum of two lines decreasing in a_p, so the
    inverse is the smaller of the two per-branch solutions; the branch that
    attains it is the regime (ties, up to rounding, go to free flow).
    """
    if not (q > 0 and k > 0):
        raise DomainError(f"inversion needs q > 0 and k > 0, got q={q!r}, k={k!r}")
    a_free = free_flow_rate(q, k, params)
    a_cong = congested_rate(q, k, params)
    if a_free <= a_cong + ROUNDING_SLACK * params.mu:
        a_p, regime = min(a_free, a_cong), Regime.FREE_FLOW
    else:
        a_p, regime = a_cong, Regime.CONGESTED
    if -ROUNDING_SLACK * params.mu <= a_p < 0:
        a_p = 0.0  # rounding noise at the a_p = 0 boundary
    if not 0 <= a_p < params.mu:
        raise InfeasibleStateError(
            f"no passenger arrival rate in [0, mu) reproduces q={q:.6g} at k={k:.6g} (got {a_p:.6g})"
        )
    return a_p, regime


def min_travel_time(params: OperationalParams) -> float:
    """Free-flow trip time with empty platforms, T_0."""
    return params.L / params.l * params.free_headway_per_station


TABLE2_PARAMS = OperationalParams(
    l=1.2, L=18.0, v_f=40.0, t_b0=20 / 3600, mu=36000.0, delta=0.4, tau=1 / 60
)
TABLE2_COST = CostParams(alpha=20.0, beta=8.0, gamma=25.0)
