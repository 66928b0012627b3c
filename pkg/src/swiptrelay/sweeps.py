"""Experiment runner: declarative sweep configs in, tidy tables out.

Configs are flat TOML tables (see ``figs/``).  Powers are given in dB and
converted once in :meth:`SweepConfig.from_mapping`; everything downstream
is linear.

Row layout
----------
``x1, x2`` are the independent variables of the experiment:

=====================  ==================  ==========================
experiment             x1                  x2
=====================  ==================  ==========================
RateVsPower            P_S (dB)            empty
GainVsPower            P_S (dB)            empty
OptParamVsPower        P_S (dB)            empty
RelayLineSweep         d_SR / d_SD         H_SD (1 or 0)
PositionHeatmap        relay x             relay y
BaselineComparison     d_SR / d_SD         empty
=====================  ==================  ==========================
"""

from __future__ import annotations

import csv
import enum
import io
import json
import math
import sys as _sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, fields
from typing import Optional

import numpy as np

if _sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import baselines
from .channel import (
    ChannelState,
    DegenerateGeometryError,
    SystemParams,
    Topology,
    c_sd,
    channel_from_topology,
    db_to_linear,
    gains_from_position,
)
from .optimizers import Protocol, ProtocolSolution, optimize_ps_fixed_rho, optimize_ts_fixed_alpha2, solve, verify_solution
from .protocols import Method

CSV_HEADER = ("x1", "x2", "protocol", "method", "rate_nats", "gain", "lambda", "rho", "alpha1", "alpha2", "alpha3", "relay_power")
VERIFY_TOL = 1e-9

PS_FIXED = "PS-fixed"
TS_FIXED = "TS-fixed"
NONSWIPT_RC = "NonSwiptRC"
NONSWIPT_NORC = "NonSwiptNoRC"
BASELINE_NAMES = (NONSWIPT_RC, NONSWIPT_NORC)


class ConfigError(ValueError):
    """Invalid sweep configuration."""


class Experiment(enum.Enum):
    RATE_VS_POWER = "RateVsPower"
    GAIN_VS_POWER = "GainVsPower"
    OPT_PARAM_VS_POWER = "OptParamVsPower"
    RELAY_LINE_SWEEP = "RelayLineSweep"
    POSITION_HEATMAP = "PositionHeatmap"
    BASELINE_COMPARISON = "BaselineComparison"


_POWER_EXPERIMENTS = (Experiment.RATE_VS_POWER, Experiment.GAIN_VS_POWER, Experiment.OPT_PARAM_VS_POWER)


def expand_range(spec, name="range"):
    """Inclusive ``[start, stop, step]`` grid; a bare number is a one-point grid."""
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return (float(spec),)
    try:
        start, stop, step = (float(v) for v in spec)
    except (TypeError, ValueError):
        raise ConfigError(f"{name} must be a number or [start, stop, step], got {spec!r}") from None
    if not step > 0.0:
        raise ConfigError(f"{name}: step must be > 0, got {step!r}")
    if stop < start:
        raise ConfigError(f"{name}: empty range (stop {stop!r} < start {start!r})")
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return tuple(float(v) for v in np.round(start + step * np.arange(n), 12))


@dataclass(frozen=True)
class SweepConfig:
    """Declarative description of one experiment.

    Ranges are stored expanded.  ``ps_db`` holds the source powers in dB;
    experiments that are not swept over power need exactly one value.
    """

    experiment: Experiment
    protocols: tuple = (Protocol.IDEAL, Protocol.PS, Protocol.TS)
    methods: tuple = (Method.IA,)
    ps_db: tuple = (10.0,)
    zeta: float = 4.0 / 3.0
    theta_deg: float = 180.0
    kappa: float = 4.0
    eta: float = 1.0
    epsilon: float = 1e-3
    sigma_a2: float = 1.0
    sigma_b2: float = 1.0
    sigma_D2: float = 2.0
    fixed_rho: Optional[float] = None
    fixed_alpha2: Optional[float] = None
    d_sr: tuple = ()
    direct_link: tuple = (True,)
    grid: tuple = ()
    baselines: tuple = ()
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    @classmethod
    def from_mapping(cls, data: dict) -> "SweepConfig":
        data = dict(data)
        known = {f.name for f in fields(cls)} - {"raw"}
        unknown = sorted(set(data) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        if "experiment" not in data:
            raise ConfigError("config needs an 'experiment' key")
        kw = {"raw": dict(data)}
        try:
            kw["experiment"] = Experiment(data.pop("experiment"))
            if "protocols" in data:
                kw["protocols"] = tuple(Protocol(p) for p in _as_list(data.pop("protocols")))
            if "methods" in data:
                kw["methods"] = tuple(Method(m) for m in _as_list(data.pop("methods")))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
        if "ps_db" in data:
            kw["ps_db"] = expand_range(data.pop("ps_db"), "ps_db")
        if "d_sr" in data:
            kw["d_sr"] = expand_range(data.pop("d_sr"), "d_sr")
        if "direct_link" in data:
            kw["direct_link"] = tuple(bool(v) for v in _as_list(data.pop("direct_link")))
        if "grid" in data:
            g = data.pop("grid")
            try:
                lo, hi, num = float(g[0]), float(g[1]), int(g[2])
            except (TypeError, ValueError, IndexError):
                raise ConfigError(f"grid must be [min, max, num], got {g!r}") from None
            if num < 1 or hi < lo:
                raise ConfigError(f"grid: empty grid {g!r}")
            kw["grid"] = (lo, hi, num)
        if "baselines" in data:
            kw["baselines"] = tuple(str(b) for b in _as_list(data.pop("baselines")))
        for key, value in data.items():
            if isinstance(value, bool) or not isinstance(value, (int, float)):
                raise ConfigError(f"{key} must be a number, got {value!r}")
            kw[key] = float(value)
        return cls(**kw)

    def __post_init__(self):
        if not self.protocols or not self.methods:
            raise ConfigError("protocols and methods must be non-empty")
        for b in self.baselines:
            if b not in BASELINE_NAMES:
                raise ConfigError(f"unknown baseline {b!r}; choose from {BASELINE_NAMES}")
        if self.experiment not in _POWER_EXPERIMENTS and len(self.ps_db) != 1:
            raise ConfigError(f"{self.experiment.value} needs a single ps_db value")
        if self.experiment in (Experiment.RELAY_LINE_SWEEP, Experiment.BASELINE_COMPARISON):
            if not self.d_sr:
                raise ConfigError(f"{self.experiment.value} needs d_sr = [start, stop, step]")
            if not all(0.0 < d < 1.0 for d in self.d_sr):
                raise ConfigError("d_sr values must lie in (0, 1)")
        if self.experiment is Experiment.RELAY_LINE_SWEEP and not self.direct_link:
            raise ConfigError("direct_link must list at least one of true/false")
        if self.experiment is Experiment.POSITION_HEATMAP and not self.grid:
            raise ConfigError("PositionHeatmap needs grid = [min, max, num]")
        if self.fixed_rho is not None and not 0.0 <= self.fixed_rho <= 1.0:
            raise ConfigError(f"fixed_rho must lie in [0, 1], got {self.fixed_rho!r}")
        if self.fixed_alpha2 is not None and not 0.0 <= self.fixed_alpha2 < 1.0:
            raise ConfigError(f"fixed_alpha2 must lie in [0, 1), got {self.fixed_alpha2!r}")
        try:
            Topology(self.zeta, math.radians(self.theta_deg), self.kappa)
            for p in self.ps_db:
                SystemParams(db_to_linear(p), self.eta, self.epsilon)
            ChannelState(1.0, 1.0, 1.0, self.sigma_a2, self.sigma_b2, self.sigma_D2)
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def system(self, ps_db: float) -> SystemParams:
        return SystemParams(db_to_linear(ps_db), self.eta, self.epsilon)

    def noise(self) -> dict:
        return {"sigma_a2": self.sigma_a2, "sigma_b2": self.sigma_b2, "sigma_D2": self.sigma_D2}

    def to_dict(self) -> dict:
        out = {}
        for f in fields(self):
            if f.name == "raw":
                continue
            v = getattr(self, f.name)
            if isinstance(v, enum.Enum):
                v = v.value
            elif isinstance(v, tuple):
                v = [x.value if isinstance(x, enum.Enum) else x for x in v]
            out[f.name] = v
        return out


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def load_config(path=None, overrides=()) -> SweepConfig:
    """Read a TOML config and apply ``key=value`` overrides (values in TOML syntax)."""
    data = {}
    if path is not None:
        try:
            with open(path, "rb") as fh:
                data = tomllib.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read config {path}: {exc.strerror}") from None
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from None
    for item in overrides:
        key, sep, text = item.partition("=")
        key = key.strip()
        if not sep or not key:
            raise ConfigError(f"override must look like key=value, got {item!r}")
        try:
            value = tomllib.loads(f"v = {text.strip()}")["v"]
        except tomllib.TOMLDecodeError:
            value = text.strip()
        data[key] = value
    return SweepConfig.from_mapping(data)


# ---------------------------------------------------------------------------
# rows


@dataclass
class Row:
    x1: Optional[float]
    x2: Optional[float]
    protocol: str
    method: str
    rate: Optional[float]
    gain: Optional[float] = None
    lam: Optional[float] = None
    rho: Optional[float] = None
    alpha1: Optional[float] = None
    alpha2: Optional[float] = None
    alpha3: Optional[float] = None
    relay_power: Optional[float] = None
    diagnostics: dict = field(default_factory=dict)

    def values(self):
        return (self.x1, self.x2, self.protocol, self.method, self.rate, self.gain, self.lam, self.rho,
                self.alpha1, self.alpha2, self.alpha3, self.relay_power)


@dataclass
class SweepResult:
    config: Optional[SweepConfig]
    rows: list


def _gain(rate, direct):
    return rate / direct if direct > 0.0 else None


def _solution_row(x1, x2, sol: ProtocolSolution, direct, label=None, requested=None):
    alpha = sol.alpha_star or (None, None, None)
    diag = {k: v for k, v in sol.diagnostics.items()}
    if requested is not None:
        diag["requested"] = requested
    return Row(x1, x2, label or sol.protocol.value, sol.method.value, sol.rate, _gain(sol.rate, direct),
               sol.lambda_star, sol.rho_star, alpha[0], alpha[1], alpha[2], sol.relay_power, diag)


def _check(row, value):
    if not abs(value - row.rate) <= VERIFY_TOL * max(1.0, abs(row.rate)):
        raise RuntimeError(f"row {row.protocol}/{row.method} at ({row.x1}, {row.x2}): reported rate {row.rate!r} "
                           f"differs from re-evaluated {value!r}")


def _protocol_rows(cfg, x1, x2, channel, sys):
    direct = c_sd(channel, sys)
    rows = []
    for proto in cfg.protocols:
        for method in cfg.methods:
            sol = solve(proto, method, channel, sys)
            row = _solution_row(x1, x2, sol, direct, requested=proto.value)
            _check(row, verify_solution(sol, channel, sys))
            rows.append(row)
        if proto is Protocol.PS and cfg.fixed_rho is not None:
            for method in cfg.methods:
                sol = optimize_ps_fixed_rho(channel, sys, method, cfg.fixed_rho)
                label = PS_FIXED if sol.protocol is Protocol.PS else None
                row = _solution_row(x1, x2, sol, direct, label, requested=PS_FIXED)
                _check(row, verify_solution(sol, channel, sys))
                rows.append(row)
        if proto is Protocol.TS and cfg.fixed_alpha2 is not None:
            for method in cfg.methods:
                sol = optimize_ts_fixed_alpha2(channel, sys, method, cfg.fixed_alpha2)
                label = TS_FIXED if sol.protocol is Protocol.TS else None
                row = _solution_row(x1, x2, sol, direct, label, requested=TS_FIXED)
                _check(row, verify_solution(sol, channel, sys))
                rows.append(row)
    return rows


def _baseline_rows(cfg, x1, x2, channel, sys):
    direct = c_sd(channel, sys)
    rows = []

    def add(name, method, alloc):
        row = Row(x1, x2, name, method.value, alloc.rate, _gain(alloc.rate, direct), lam=alloc.lam,
                  relay_power=alloc.P_R_tilde, diagnostics={"P_S_tilde": alloc.P_S_tilde})
        _check(row, float(baselines.nonswipt_rate(alloc.lam, alloc.P_S_tilde, alloc.P_R_tilde, method, channel)))
        rows.append(row)

    if NONSWIPT_RC in cfg.baselines:
        for method in cfg.methods:
            add(NONSWIPT_RC, method, baselines.optimize_nonswipt_rc(channel, sys, method))
    if NONSWIPT_NORC in cfg.baselines:
        add(NONSWIPT_NORC, Method.EA, baselines.rate_nonswipt_norc(channel, sys))
    return rows


def _degenerate_rows(cfg, x1, x2, message):
    return [Row(x1, x2, p.value, m.value, None, diagnostics={"degenerate": message})
            for p in cfg.protocols for m in cfg.methods]


def points(cfg: SweepConfig) -> list:
    """Independent-variable tuples in output order."""
    exp = cfg.experiment
    if exp in _POWER_EXPERIMENTS:
        return [(p, None) for p in cfg.ps_db]
    if exp is Experiment.RELAY_LINE_SWEEP:
        return [(d, 1.0 if link else 0.0) for d in cfg.d_sr for link in cfg.direct_link]
    if exp is Experiment.BASELINE_COMPARISON:
        return [(d, None) for d in cfg.d_sr]
    lo, hi, num = cfg.grid
    axis = [float(v) for v in np.round(np.linspace(lo, hi, num), 12)]
    return [(x, y) for x in axis for y in axis]


def build_instance(cfg: SweepConfig, point):
    """``(channel, sys)`` for one grid point.

    Raises :class:`~swiptrelay.channel.DegenerateGeometryError` for a relay
    on top of the source.
    """
    x1, x2 = point
    exp = cfg.experiment
    noise = cfg.noise()
    if exp in _POWER_EXPERIMENTS:
        topo = Topology(cfg.zeta, math.radians(cfg.theta_deg), cfg.kappa)
        return channel_from_topology(topo, **noise), cfg.system(x1)
    sys = cfg.system(cfg.ps_db[0])
    if exp is Experiment.POSITION_HEATMAP:
        h_sr, h_rd = gains_from_position(x1, x2, cfg.kappa)
        return ChannelState(1.0, h_sr, h_rd, **noise), sys
    topo = Topology((1.0 - x1) / x1, math.radians(cfg.theta_deg), cfg.kappa)
    # pathloss stays referenced to d_SD = 1 even when the S-D link is cut
    channel = channel_from_topology(topo, **noise)
    if x2 == 0.0:
        channel = channel.without_direct_link()
    return channel, sys


def evaluate_point(cfg: SweepConfig, point) -> list:
    """All rows for one grid point (pure; safe to run in a worker process)."""
    x1, x2 = point
    try:
        channel, sys = build_instance(cfg, point)
    except DegenerateGeometryError as exc:
        return _degenerate_rows(cfg, x1, x2, str(exc))
    rows = _protocol_rows(cfg, x1, x2, channel, sys)
    if cfg.baselines:
        rows.extend(_baseline_rows(cfg, x1, x2, channel, sys))
    return rows


def _evaluate_star(args):
    return evaluate_point(*args)


def run_sweep(cfg: SweepConfig, jobs: int = 1) -> SweepResult:
    """Evaluate every grid point; rows come back in :func:`points` order
    whatever the worker count."""
    pts = points(cfg)
    if jobs is None or jobs <= 1 or len(pts) <= 1:
        chunks = [evaluate_point(cfg, p) for p in pts]
    else:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            chunksize = max(1, len(pts) // (4 * jobs))
            chunks = list(pool.map(_evaluate_star, [(cfg, p) for p in pts], chunksize=chunksize))
    return SweepResult(cfg, [row for chunk in chunks for row in chunk])


# ---------------------------------------------------------------------------
# output


def format_number(v) -> str:
    if v is None:
        return ""
    if isinstance(v, str):
        return v
    return format(float(v), ".12g")


def _json_safe(v):
    if isinstance(v, float) and not math.isfinite(v):
        return None
    if isinstance(v, (np.floating, np.integer)):
        return _json_safe(v.item())
    if isinstance(v, enum.Enum):
        return v.value
    if isinstance(v, dict):
        return {str(k): _json_safe(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_json_safe(x) for x in v]
    return v


def render(result: SweepResult, fmt: str = "csv") -> str:
    if fmt == "csv":
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(CSV_HEADER)
        for row in result.rows:
            writer.writerow([format_number(v) for v in row.values()])
        return buf.getvalue()
    if fmt == "json":
        records = []
        for row in result.rows:
            rec = dict(zip(CSV_HEADER, row.values()))
            rec["diagnostics"] = row.diagnostics
            records.append(rec)
        doc = {"config": result.config.to_dict() if result.config else None, "rows": records}
        return json.dumps(_json_safe(doc), indent=1, sort_keys=False) + "\n"
    raise ValueError(f"unknown output format {fmt!r}")


def emit(result: SweepResult, fmt: str = "csv", path=None) -> str:
    """Render ``result``; write it to ``path`` when given.  Returns the text."""
    text = render(result, fmt)
    if path is not None:
        try:
            with open(path, "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            raise OSError(exc.errno, f"cannot write {path}: {exc.strerror}") from None
    return text


def parse_csv(text: str) -> list:
    """Inverse of the CSV renderer: list of dicts, numbers as floats, blanks as None."""
    reader = csv.DictReader(io.StringIO(text))
    out = []
    for rec in reader:
        parsed = {}
        for k, v in rec.items():
            if k in ("protocol", "method"):
                parsed[k] = v
            else:
                parsed[k] = float(v) if v != "" else None
        out.append(parsed)
    return out
