"""Experiment configuration: INI-style files with CLI-flag overrides.

Grammar (all sections and keys optional; flags win over file values):

    [model]
    n_sources = 5            # N
    n_channels = 1           # d
    p = 0.65                 # transfer success probability
    q = uniform:0.5          # or an explicit vector: 0.5,0.4,0.3
    horizon = 1000           # T

    [sweep]
    p = 0.2, 0.5, 0.8        # grids; `simulate` crosses them,
    n_sources = 5, 25, 100   # `sweep` runs one axis at a time
    n_channels = 1, 3
    horizon = 500, 1000
    q = uniform:0.3 uniform:0.7   # space-separated q specs

    [run]
    policies = delta, pi, rr # first listed is the improvement baseline
    replications = 200
    base_seed = 42
    rr_mode = work-conserving   # or: strict
    initial_state = fresh       # or a literal like g=[psi,0];h=[3,1]
    state_cap = 5000000

    [output]
    path = results.csv
    format = csv             # or: json
    timestamp = true         # first header line; suppress for byte-stable diffs
"""

from __future__ import annotations

import configparser
import hashlib
from dataclasses import dataclass

from .model import InvalidState, ModelParams, SystemState, fresh_state, parse_state
from .policies import POLICY_NAMES

RR_MODES = ("work-conserving", "strict")
FORMATS = ("csv", "json")
DEFAULT_STATE_CAP = 5_000_000


class ConfigError(ValueError):
    """Bad configuration value; the message names the offending field."""


@dataclass
class SweepConfig:
    n_sources: int = 5
    n_channels: int = 1
    p: float | None = None  # None = unset; resolves to 0.5
    q_spec: str = "uniform:0.5"
    horizon: int = 1000
    p_grid: tuple[float, ...] | None = None
    n_grid: tuple[int, ...] | None = None
    d_grid: tuple[int, ...] | None = None
    t_grid: tuple[int, ...] | None = None
    q_grid: tuple[str, ...] | None = None
    policies: tuple[str, ...] = ("delta", "pi", "rr")
    replications: int = 200
    base_seed: int = 42
    rr_mode: str = "work-conserving"
    initial_state: str = "fresh"
    state_cap: int = DEFAULT_STATE_CAP
    out: str | None = None
    fmt: str = "csv"
    timestamp: bool = True

    @property
    def base_p(self) -> float:
        return 0.5 if self.p is None else self.p


_SECTIONS = {
    "model": {"n_sources", "n_channels", "p", "q", "horizon"},
    "sweep": {"p", "n_sources", "n_channels", "horizon", "q"},
    "run": {"policies", "replications", "base_seed", "rr_mode", "initial_state", "state_cap"},
    "output": {"path", "format", "timestamp"},
}


def _get(parser, section, key, conv, cfg_field, cfg):
    if parser.has_option(section, key):
        raw = parser.get(section, key)
        try:
            setattr(cfg, cfg_field, conv(raw))
        except (ValueError, ConfigError) as exc:
            raise ConfigError(f"[{section}] {key} = {raw!r}: {exc}") from None


def _float_list(raw: str) -> tuple[float, ...]:
    vals = tuple(float(tok) for tok in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _prob(raw: str) -> float:
    v = float(raw)
    if not 0.0 <= v <= 1.0:
        raise ValueError(f"probability {v} outside [0,1]")
    return v


def _prob_list(raw: str) -> tuple[float, ...]:
    vals = _float_list(raw)
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValueError("probabilities must lie in [0,1]")
    return vals


def _int_list(raw: str) -> tuple[int, ...]:
    vals = tuple(int(tok) for tok in raw.replace(",", " ").split())
    if not vals:
        raise ValueError("empty list")
    return vals


def _str_list(raw: str) -> tuple[str, ...]:
    vals = tuple(tok.strip() for tok in raw.split(",") if tok.strip())
    if not vals:
        raise ValueError("empty list")
    return vals


def _q_spec(raw: str) -> str:
    validate_q_spec(raw.strip())
    return raw.strip()


def _q_spec_list(raw: str) -> tuple[str, ...]:
    specs = tuple(tok for tok in raw.split() if tok)
    if not specs:
        raise ValueError("empty list")
    for spec in specs:
        validate_q_spec(spec)
    return specs


def _policy_list(raw: str) -> tuple[str, ...]:
    names = _str_list(raw)
    for name in names:
        if name not in POLICY_NAMES:
            raise ValueError(f"unknown policy {name!r}; choose from {POLICY_NAMES}")
    return names


def _rr_mode(raw: str) -> str:
    if raw not in RR_MODES:
        raise ValueError(f"must be one of {RR_MODES}")
    return raw


def _format(raw: str) -> str:
    if raw not in FORMATS:
        raise ValueError(f"must be one of {FORMATS}")
    return raw


def _bool(raw: str) -> bool:
    low = raw.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected a boolean")


def load_config(path: str) -> SweepConfig:
    """Parse an INI config file into a SweepConfig, validating every field."""
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path!r}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path!r}: {exc}") from None
    for section in parser.sections():
        if section not in _SECTIONS:
            raise ConfigError(f"unknown section [{section}] in {path!r}")
        for key in parser.options(section):
            if key not in _SECTIONS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}] of {path!r}")
    cfg = SweepConfig()
    _get(parser, "model", "n_sources", int, "n_sources", cfg)
    _get(parser, "model", "n_channels", int, "n_channels", cfg)
    _get(parser, "model", "p", _prob, "p", cfg)
    _get(parser, "model", "q", _q_spec, "q_spec", cfg)
    _get(parser, "model", "horizon", int, "horizon", cfg)
    _get(parser, "sweep", "p", _prob_list, "p_grid", cfg)
    _get(parser, "sweep", "n_sources", _int_list, "n_grid", cfg)
    _get(parser, "sweep", "n_channels", _int_list, "d_grid", cfg)
    _get(parser, "sweep", "horizon", _int_list, "t_grid", cfg)
    _get(parser, "sweep", "q", _q_spec_list, "q_grid", cfg)
    _get(parser, "run", "policies", _policy_list, "policies", cfg)
    _get(parser, "run", "replications", int, "replications", cfg)
    _get(parser, "run", "base_seed", int, "base_seed", cfg)
    _get(parser, "run", "rr_mode", _rr_mode, "rr_mode", cfg)
    _get(parser, "run", "initial_state", str.strip, "initial_state", cfg)
    _get(parser, "run", "state_cap", int, "state_cap", cfg)
    _get(parser, "output", "path", str.strip, "out", cfg)
    _get(parser, "output", "format", _format, "fmt", cfg)
    _get(parser, "output", "timestamp", _bool, "timestamp", cfg)
    return cfg


def validate_q_spec(spec: str) -> None:
    if spec.startswith("uniform:"):
        v = float(spec.split(":", 1)[1])
        if not 0.0 <= v <= 1.0:
            raise ValueError(f"uniform q value {v} outside [0,1]")
        return
    vals = tuple(float(tok) for tok in spec.split(",") if tok)
    if not vals:
        raise ValueError(f"empty q spec {spec!r}")
    if any(not 0.0 <= v <= 1.0 for v in vals):
        raise ValueError(f"q entries outside [0,1] in {spec!r}")


def expand_q(spec: str, n_sources: int) -> tuple[float, ...]:
    """Turn a q spec into a length-N vector."""
    if spec.startswith("uniform:"):
        return (float(spec.split(":", 1)[1]),) * n_sources
    vals = tuple(float(tok) for tok in spec.split(",") if tok)
    if len(vals) != n_sources:
        raise ConfigError(
            f"q vector {spec!r} has {len(vals)} entries but n_sources = {n_sources}"
        )
    return vals


def resolve_initial_state(spec: str, n_sources: int) -> SystemState:
    if spec == "fresh":
        return fresh_state(n_sources)
    try:
        x0 = parse_state(spec)
    except InvalidState as exc:
        raise ConfigError(f"initial_state {spec!r}: {exc}") from None
    if len(x0.g) != n_sources:
        raise ConfigError(
            f"initial_state {spec!r} has {len(x0.g)} sources but n_sources = {n_sources}"
        )
    return x0


@dataclass(frozen=True)
class GridPoint:
    n_sources: int
    n_channels: int
    p: float
    horizon: int
    q_spec: str

    def params(self) -> ModelParams:
        return ModelParams(
            self.n_sources,
            self.n_channels,
            self.p,
            expand_q(self.q_spec, self.n_sources),
            self.horizon,
        )


def grid_points(cfg: SweepConfig) -> list[GridPoint]:
    """Cross product of all grids (base values where no grid is given), in a
    fixed documented order: n_sources, n_channels, horizon, q, p (p fastest)."""
    ns = cfg.n_grid or (cfg.n_sources,)
    ds = cfg.d_grid or (cfg.n_channels,)
    ts = cfg.t_grid or (cfg.horizon,)
    qs = cfg.q_grid or (cfg.q_spec,)
    ps = cfg.p_grid or (cfg.base_p,)
    return [
        GridPoint(n, d, p, t, q)
        for n in ns
        for d in ds
        for t in ts
        for q in qs
        for p in ps
    ]


def grid_point_seed(base_seed: int, point: GridPoint) -> int:
    """Stable per-point seed: adding grid points never shifts other points' streams."""
    q = expand_q(point.q_spec, point.n_sources)
    canon = (
        f"N={point.n_sources};d={point.n_channels};p={point.p!r};"
        f"T={point.horizon};q=" + ",".join(repr(v) for v in q)
    )
    digest = hashlib.sha256(f"{base_seed}|{canon}".encode("utf-8")).digest()
    return int.from_bytes(digest[:8], "big")
