"""Experiment configuration: defaults per scenario, a flat ``key = value`` file
format, and validation.

File format (UTF-8)::

    # comment
    n = 200
    epsilon = 0.1, 0.05        # lists are comma separated
    mu_rule = eps_power        # fixed:<mu> | eps_power | r_rule
    grid_step = auto           # auto -> 1/(5n)

CLI flags override file values, which override scenario defaults.
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Any

from ..errors import ConfigError

SCENARIOS = (
    "geometry",
    "stationarity",
    "local-brownian",
    "airy-sheet",
    "long-time",
    "invariance-123",
    "argmax-uniqueness",
)

INITIAL_KINDS = ("narrow_wedge", "flat", "brownian", "power")


@dataclass(frozen=True)
class ExperimentConfig:
    scenario: str
    n: float = 50.0
    grid_step: float | None = None      # LPP grid step; None -> 1/(5n)
    z_halfwidth: float | None = None    # None -> a + 4 t^{2/3} (+ mu t / 2 for drifted data)
    a: float = 1.0
    t: tuple[float, ...] = (1.0,)
    epsilon: tuple[float, ...] = ()
    mu_rule: str = "eps_power"
    replications: int = 200
    master_seed: int = 7
    out_dir: str | None = None
    initial: tuple[str, ...] = ("narrow_wedge",)
    x0: float = 0.0
    offsets: tuple[float, ...] = (0.25, 0.5, 1.0)
    eta: float = 0.5
    gamma: tuple[float, ...] = (1.0, 2.0)
    beta: tuple[float, ...] = (0.1, 0.3, 0.45)
    zeta: float = 0.5
    a_grid: tuple[float, ...] = (0.05, 0.1, 0.2, 0.4)
    # gates (calibrated thresholds, not derived quantities)
    var_lo: float = 0.85
    var_hi: float = 1.15
    ks_max: float = 0.0                 # 0 disables the KS gate
    ks_max_identity: float = 0.05
    sandwich_min: float = 0.0           # 0 disables the event-frequency gate
    holder_ratio: float = 2.0
    rho_max: float = 0.15
    stderr_k: float = 2.0
    plots: bool = False
    sample_format: str = "csv"
    extra: dict = field(default_factory=dict, compare=False, repr=False)

    def to_record(self) -> dict:
        """Config echo for reports (run-location fields excluded)."""
        d = dataclasses.asdict(self)
        for k in ("out_dir", "extra"):
            d.pop(k)
        for k, v in d.items():
            if isinstance(v, tuple):
                d[k] = list(v)
        return d

    def fixed_mu(self) -> float:
        return float(self.mu_rule.split(":", 1)[1])

    def mu_for(self, epsilon: float | None = None, t: float | None = None) -> float:
        """Drift from the configured rule."""
        if self.mu_rule.startswith("fixed:"):
            return self.fixed_mu()
        if self.mu_rule == "eps_power":
            return float(epsilon) ** -0.25
        # r_rule: r_t = (t^{2/3}/a)^{1/4}, mu = r_t / (4 t^{1/3})
        r = (t ** (2.0 / 3.0) / self.a) ** 0.25
        return r / (4.0 * t ** (1.0 / 3.0))

    def step(self) -> float:
        return self.grid_step if self.grid_step else 1.0 / (5.0 * self.n)


DEFAULTS: dict[str, dict[str, Any]] = {
    "geometry": dict(n=50.0, grid_step=0.01, z_halfwidth=2.0, a=1.0, t=(1.0,),
                     replications=200, mu_rule="fixed:1.0",
                     initial=("narrow_wedge", "flat", "brownian", "power")),
    "stationarity": dict(n=200.0, t=(1.0,), epsilon=(1.0,), initial=("brownian",),
                         replications=1000, var_lo=0.85, var_hi=1.15, ks_max=0.08,
                         mu_rule="eps_power", a=1.0),
    "local-brownian": dict(n=100.0, t=(4.0,), epsilon=(0.1, 0.05), initial=("narrow_wedge",),
                           replications=1000, var_lo=0.7, var_hi=1.3, sandwich_min=0.9,
                           mu_rule="eps_power", a=1.0),
    "airy-sheet": dict(n=200.0, t=(1.0,), epsilon=(0.1,), replications=1000,
                       offsets=(0.5, 1.0), var_lo=0.7, var_hi=1.3, ks_max=0.08, a=1.0),
    "long-time": dict(n=50.0, t=(1.0, 4.0, 16.0), a=1.0, eta=0.5, replications=500,
                      initial=("flat",), mu_rule="r_rule"),
    "invariance-123": dict(n=200.0, t=(1.0,), gamma=(1.0, 2.0), x0=0.5,
                           initial=("flat", "narrow_wedge"), replications=1000,
                           ks_max=0.12, ks_max_identity=0.05, z_halfwidth=4.0),
    "argmax-uniqueness": dict(n=50.0, t=(1.0,), replications=2000, z_halfwidth=3.0,
                              a_grid=(0.05, 0.1, 0.2, 0.4)),
}

_FIELD_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _parse_value(name: str, raw: str):
    typ = str(_FIELD_TYPES[name])
    raw = raw.strip()
    try:
        if name == "grid_step" or name == "z_halfwidth":
            return None if raw.lower() in ("auto", "none", "") else float(raw)
        if name in ("out_dir",):
            return raw or None
        if typ.startswith("tuple[float"):
            return tuple(float(x) for x in raw.split(",") if x.strip())
        if typ.startswith("tuple[str"):
            return tuple(x.strip() for x in raw.split(",") if x.strip())
        if typ == "bool":
            if raw.lower() not in ("true", "false", "1", "0", "yes", "no"):
                raise ValueError(raw)
            return raw.lower() in ("true", "1", "yes")
        if typ == "int":
            return int(raw, 0)
        if typ == "float":
            return float(raw)
        return raw
    except ValueError as exc:
        raise ConfigError(f"cannot parse {name} = {raw!r}") from exc


def parse_config_text(text: str) -> dict[str, Any]:
    out: dict[str, Any] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"line {lineno}: expected 'key = value'")
        key, val = (s.strip() for s in line.split("=", 1))
        key = key.replace("-", "_")
        if key == "seed":
            key = "master_seed"
        if key not in _FIELD_TYPES or key == "extra":
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        out[key] = _parse_value(key, val)
    return out


def load_config_file(path: str | Path) -> dict[str, Any]:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return parse_config_text(text)


def build_config(scenario: str, file_values: dict | None = None,
                 overrides: dict | None = None) -> ExperimentConfig:
    """Scenario defaults, then file values, then explicit overrides; validated."""
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; choose from {', '.join(SCENARIOS)}")
    values: dict[str, Any] = dict(DEFAULTS[scenario])
    for src in (file_values or {}, overrides or {}):
        for k, v in src.items():
            if v is not None:
                values[k] = v
    values.pop("scenario", None)
    if (file_values or {}).get("scenario", scenario) != scenario:
        raise ConfigError("config file scenario differs from the requested one")
    try:
        cfg = ExperimentConfig(scenario=scenario, **values)
    except TypeError as exc:
        raise ConfigError(str(exc)) from exc
    validate(cfg)
    return cfg


def _positive(name: str, x) -> None:
    if x is None or not (isinstance(x, (int, float)) and math.isfinite(x) and x > 0):
        raise ConfigError(f"{name} must be positive, got {x!r}")


def validate(cfg: ExperimentConfig) -> None:
    if cfg.n < 1:
        raise ConfigError(f"n must be >= 1, got {cfg.n}")
    for name in ("a", "eta", "holder_ratio", "rho_max", "stderr_k", "ks_max_identity"):
        _positive(name, getattr(cfg, name))
    if cfg.grid_step is not None:
        _positive("grid_step", cfg.grid_step)
    if cfg.z_halfwidth is not None:
        _positive("z_halfwidth", cfg.z_halfwidth)
    if cfg.replications < 1:
        raise ConfigError("replications must be >= 1")
    if not 0 <= cfg.master_seed < 2**64:
        raise ConfigError("master_seed must be an unsigned 64-bit integer")
    if not cfg.t or any(not (x > 0) for x in cfg.t):
        raise ConfigError("t must be a nonempty list of positive times")
    if list(cfg.t) != sorted(cfg.t) or len(set(cfg.t)) != len(cfg.t):
        raise ConfigError("t list must be strictly increasing")
    for name in ("epsilon", "offsets", "gamma", "a_grid"):
        for x in getattr(cfg, name):
            _positive(name, x)
    if any(b < 0 or b > 1 for b in cfg.beta):
        raise ConfigError("beta values must lie in [0, 1]")
    if not 0 <= cfg.zeta <= 1:
        raise ConfigError("zeta must lie in [0, 1]")
    for k in cfg.initial:
        if k not in INITIAL_KINDS:
            raise ConfigError(f"unknown initial kind {k!r}")
    if not (cfg.mu_rule in ("eps_power", "r_rule") or cfg.mu_rule.startswith("fixed:")):
        raise ConfigError(f"mu_rule must be fixed:<mu>, eps_power or r_rule, got {cfg.mu_rule!r}")
    if cfg.mu_rule.startswith("fixed:"):
        try:
            mu = cfg.fixed_mu()
        except ValueError as exc:
            raise ConfigError(f"bad fixed mu in {cfg.mu_rule!r}") from exc
        if not math.isfinite(mu) or mu < 0:
            raise ConfigError("fixed mu must be finite and >= 0")
    if not cfg.var_lo < cfg.var_hi:
        raise ConfigError("var_lo must be < var_hi")
    if cfg.sample_format not in ("csv", "json"):
        raise ConfigError("sample_format must be csv or json")
    if cfg.scenario in ("local-brownian", "stationarity", "airy-sheet") and not cfg.epsilon:
        raise ConfigError("epsilon list must be nonempty")
    if cfg.scenario == "long-time" and len(cfg.t) < 2:
        raise ConfigError("long-time needs at least two times")
