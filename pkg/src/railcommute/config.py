"""Flat ``key = value`` experiment configuration.

Times take an optional unit suffix (``s``, ``min``, ``h``); bare numbers are
minutes.  Lengths are km, speeds km/h, rates per hour, costs $/h.  All values
are converted to hours on load.

Inflow is given either as a constant ``a_c`` or as explicit segments,
``inflow = 0min:12, 230min:18, 260min:12`` (start time : rate).
"""
from __future__ import annotations

import re
from dataclasses import dataclass, field
from pathlib import Path

from .core import CostParams, DemandWT1, DemandWT2, OperationalParams, validate
from .equilibrium import DEFAULT_DN, DEFAULT_DT, DEFAULT_EPS_P, InflowProfile
from .errors import ConfigError, ConfigParseError, ConfigValidationError, DomainError

_TIME_UNITS = {"s": 1 / 3600, "sec": 1 / 3600, "min": 1 / 60, "h": 1.0}
_NUMBER = r"[-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?"
_TIME_RE = re.compile(rf"^\s*({_NUMBER})\s*(s|sec|min|h)?\s*$")

TIME_KEYS = ("t_b0", "tau", "t_star", "w_start", "w_end", "dt")
FLOAT_KEYS = ("l", "L", "v_f", "mu", "delta", "alpha", "beta", "gamma", "N_p", "w_p", "a_c", "a1", "a2", "a0", "dn", "eps_p")
REQUIRED_KEYS = ("l", "L", "v_f", "t_b0", "mu", "delta", "tau", "alpha", "beta", "gamma", "t_star", "N_p")
KNOWN_KEYS = frozenset(TIME_KEYS + FLOAT_KEYS + ("inflow", "out"))

BUNDLED_TABLE2 = Path(__file__).with_name("data") / "table2.cfg"


@dataclass(frozen=True)
class ExperimentConfig:
    params: OperationalParams
    cost: CostParams
    demand: DemandWT1
    demand_wt2: DemandWT2 | None = None
    a_c: float | None = None
    inflow_segments: tuple[tuple[float, float], ...] | None = None
    a1: float | None = None
    a2: float | None = None
    a0: float | None = None
    dt: float = DEFAULT_DT
    dn: float = DEFAULT_DN
    eps_p: float = DEFAULT_EPS_P
    out: str | None = None
    wt2_failures: tuple[str, ...] = ()  # reported only when the wish-window case is run
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @property
    def inflow(self) -> InflowProfile:
        if self.inflow_segments is not None:
            return InflowProfile.from_segments(self.inflow_segments)
        return InflowProfile.constant(self.a_c)

    @property
    def is_constant_inflow(self) -> bool:
        return self.inflow_segments is None or self.inflow.is_constant

    @property
    def constant_rate(self) -> float:
        return self.a_c if self.inflow_segments is None else self.inflow.initial_rate

    def solver_options(self) -> dict:
        return {"dt": self.dt, "dn": self.dn, "eps_p": self.eps_p}

    def to_text(self) -> str:
        """Resolved config in canonical units (hours), reloadable by :func:`parse_config`."""
        p, c, d = self.params, self.cost, self.demand
        rows = [
            ("l", p.l), ("L", p.L), ("v_f", p.v_f), ("t_b0", f"{p.t_b0!r}h"), ("mu", p.mu),
            ("delta", p.delta), ("tau", f"{p.tau!r}h"), ("alpha", c.alpha), ("beta", c.beta),
            ("gamma", c.gamma), ("t_star", f"{d.t_star!r}h"), ("N_p", d.N_p),
        ]
        if self.demand_wt2 is not None:
            w = self.demand_wt2
            rows += [("w_p", w.w_p), ("w_start", f"{w.w_start!r}h"), ("w_end", f"{w.w_end!r}h")]
        if self.inflow_segments is not None:
            rows.append(("inflow", ", ".join(f"{s!r}h:{r!r}" for s, r in self.inflow_segments)))
        else:
            rows.append(("a_c", self.a_c))
        for key in ("a1", "a2", "a0"):
            if getattr(self, key) is not None:
                rows.append((key, getattr(self, key)))
        rows += [("dt", f"{self.dt!r}h"), ("dn", self.dn), ("eps_p", self.eps_p)]
        return "".join(f"{k} = {v!r}\n" if isinstance(v, float) else f"{k} = {v}\n" for k, v in rows)


def parse_time(text: str) -> float:
    """Time string to hours; bare numbers are minutes."""
    m = _TIME_RE.match(text)
    if not m:
        raise ValueError(f"not a time: {text!r}")
    return float(m.group(1)) * _TIME_UNITS[m.group(2) or "min"]


def _parse_segments(text: str) -> tuple[tuple[float, float], ...]:
    segments = []
    for item in text.split(","):
        start, sep, rate = item.partition(":")
        if not sep:
            raise ValueError(f"inflow segment {item.strip()!r} is not start:rate")
        segments.append((parse_time(start), float(rate)))
    return tuple(segments)


def parse_config(text: str) -> ExperimentConfig:
    raw: dict[str, str] = {}
    lines: dict[str, int] = {}
    for number, line in enumerate(text.splitlines(), start=1):
        body = line.split("#", 1)[0].strip()
        if not body:
            continue
        key, sep, value = body.partition("=")
        key, value = key.strip(), value.strip()
        if not sep or not key or not value:
            raise ConfigParseError(f"expected 'key = value', got {line.strip()!r}", number)
        if key not in KNOWN_KEYS:
            raise ConfigParseError(f"unknown key {key!r}", number)
        if key in raw:
            raise ConfigParseError(f"duplicate key {key!r}", number)
        raw[key] = value
        lines[key] = number
    return build_config(raw, lines)


def build_config(raw: dict, lines: dict | None = None) -> ExperimentConfig:
    """Convert and validate raw string values."""
    lines = lines or {}
    missing = [k for k in REQUIRED_KEYS if k not in raw]
    if "a_c" not in raw and "inflow" not in raw:
        missing.append("a_c or inflow")
    if missing:
        raise ConfigParseError("missing required keys: " + ", ".join(missing))
    values: dict = {}
    for key, text in raw.items():
        try:
            if key in TIME_KEYS:
                values[key] = parse_time(text)
            elif key in FLOAT_KEYS:
                values[key] = float(text)
            elif key == "inflow":
                values[key] = _parse_segments(text)
            else:
                values[key] = text
        except ValueError as err:
            raise ConfigParseError(f"{key}: {err}", lines.get(key)) from None

    params = OperationalParams(*(values[k] for k in ("l", "L", "v_f", "t_b0", "mu", "delta", "tau")))
    cost = CostParams(values["alpha"], values["beta"], values["gamma"])
    demand = DemandWT1(values["t_star"], values["N_p"])
    wt2 = None
    if "w_p" in values:
        w_p, N_p = values["w_p"], values["N_p"]
        span = N_p / w_p if w_p > 0 else 0.0
        start = values.get("w_start", values["t_star"] - span / 2)
        wt2 = DemandWT2(start, values.get("w_end", start + span), w_p, N_p)

    failures = list(validate(params, cost, demand).failures)
    wt2_failures = ()
    if wt2 is not None:
        wt2_failures = tuple(f for f in validate(params, cost, wt2).failures if f not in failures)
    for key in ("a_c", "a1", "a2", "a0", "dt", "dn", "eps_p"):
        if key in values and not values[key] > 0:
            failures.append(f"{key} > 0")
    if "a1" in values and "a2" in values and not values["a1"] >= values["a2"]:
        failures.append("a1 >= a2")
    inflow_segments = values.get("inflow")
    if inflow_segments is not None:
        try:
            InflowProfile.from_segments(inflow_segments)
        except DomainError as err:
            failures.append(f"inflow: {err}")
    if failures:
        raise ConfigValidationError(failures)

    return ExperimentConfig(
        params=params,
        cost=cost,
        demand=demand,
        demand_wt2=wt2,
        a_c=values.get("a_c"),
        inflow_segments=inflow_segments,
        a1=values.get("a1"),
        a2=values.get("a2"),
        a0=values.get("a0"),
        dt=values.get("dt", DEFAULT_DT),
        dn=values.get("dn", DEFAULT_DN),
        eps_p=values.get("eps_p", DEFAULT_EPS_P),
        out=values.get("out"),
        wt2_failures=wt2_failures,
        raw=dict(raw),
    )


def load_config(path) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise ConfigError(f"config file not found: {path}") from None
    except OSError as err:
        raise ConfigError(f"cannot read config file {path}: {err}") from None
    return parse_config(text)


def load_table2() -> ExperimentConfig:
    return load_config(BUNDLED_TABLE2)


def apply_overrides(config: ExperimentConfig, pairs) -> ExperimentConfig:
    """Apply ``key=value`` strings (file units) on top of a loaded config."""
    overrides = {}
    for pair in pairs or ():
        key, sep, value = pair.partition("=")
        key = key.strip()
        if not sep or key not in KNOWN_KEYS:
            raise ConfigParseError(f"bad override {pair!r}")
        overrides[key] = value.strip()
    if not overrides:
        return config
    # explicit segments and a constant rate are alternatives
    raw = dict(config.raw)
    if "a_c" in overrides:
        raw.pop("inflow", None)
    if "inflow" in overrides:
        raw.pop("a_c", None)
    raw.update(overrides)
    return build_config(raw)


__all__ = [
    "ExperimentConfig", "load_config", "load_table2", "parse_config", "build_config",
    "apply_overrides", "parse_time", "BUNDLED_TABLE2",
]
