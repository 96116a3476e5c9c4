"""INI-style scenario configuration with explicit units.

Every dimensional value carries its unit after the number, for example
``omega = 6 GHz_times_2pi`` or ``g_d = 50 Mrad_per_s``. A frequency written
without a unit is rejected, so no factor of 2 pi is ever implied. Numbers may
be simple expressions in ``pi`` (``theta = pi/2``); grid keys accept a comma
list or ``linspace(a, b, n)``.

Sections and keys
-----------------
[params]    omega, omega_q, chi, g_d, omega_d, kerr (frequency); epsilon, theta;
            gate_time, tau_r, tau_q, tau_phi (time); temperature; resonator_dim
[protocol]  backend, frame, phi_star, dephasing_factor, tol, grid_points, theta_b, phi_b
[sweep]     theta_b, phi_b (grids), jobs
[geometry]  l0 [H/m], c0 [F/m], d [m], cj [F], ej (frequency), flux_bias, modes
[wigner]    state, fock_n, extent, points, theta_b, phi_b
[output]    path, format, figures

A run manifest (``*.manifest.json``) is also accepted as a config: its
``config`` block is parsed exactly like the file it was written from.
"""

from __future__ import annotations

import ast
import configparser
import json
import math
import operator
import re
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConfigError, InconsistentParametersError, InvalidStateError
from .model import PhysicalParams
from .protocol import EQUATOR_PROBE, BlochPoint
from .squid import SquidResonatorGeometry
from .units import FREQUENCY_UNITS, TEMPERATURE_UNITS, TIME_UNITS

SCENARIOS = ("simulate", "sweep", "optimize-phi", "modes", "wigner")
BACKENDS = ("ideal", "unitary", "lindblad")
FRAMES = ("default", "rwa", "driven")
FORMATS = ("csv", "json")
WIGNER_STATES = ("vacuum", "fock", "squeezed", "code_plus", "code_minus", "branch_plus", "branch_minus")

# key -> kind; kinds decide how the raw string is parsed
SCHEMA: dict[str, dict[str, str]] = {
    "params": {
        "omega": "frequency",
        "omega_q": "frequency",
        "chi": "frequency",
        "g_d": "frequency",
        "omega_d": "frequency",
        "kerr": "frequency",
        "epsilon": "number",
        "theta": "number",
        "gate_time": "time",
        "tau_r": "time",
        "tau_q": "time",
        "tau_phi": "time",
        "temperature": "temperature",
        "resonator_dim": "int",
    },
    "protocol": {
        "backend": "choice:" + "|".join(BACKENDS),
        "frame": "choice:" + "|".join(FRAMES),
        "phi_star": "phi",
        "dephasing_factor": "number",
        "tol": "number",
        "grid_points": "int",
        "theta_b": "number",
        "phi_b": "number",
    },
    "sweep": {"theta_b": "grid", "phi_b": "grid", "jobs": "int"},
    "geometry": {
        "l0": "number",
        "c0": "number",
        "d": "number",
        "cj": "number",
        "ej": "frequency",
        "flux_bias": "number",
        "modes": "int",
    },
    "wigner": {
        "state": "choice:" + "|".join(WIGNER_STATES),
        "fock_n": "int",
        "extent": "number",
        "points": "int",
        "theta_b": "number",
        "phi_b": "number",
    },
    "output": {"path": "text", "format": "choice:" + "|".join(FORMATS), "figures": "bool"},
}

_UNITS = {"frequency": FREQUENCY_UNITS, "time": TIME_UNITS, "temperature": TEMPERATURE_UNITS}

_BINOPS = {ast.Add: operator.add, ast.Sub: operator.sub, ast.Mult: operator.mul, ast.Div: operator.truediv, ast.Pow: operator.pow}
_UNARY = {ast.UAdd: operator.pos, ast.USub: operator.neg}
_NAMES = {"pi": math.pi, "e": math.e, "inf": math.inf}
_FUNCS = {"sqrt": math.sqrt, "atan": math.atan, "exp": math.exp, "log": math.log, "cos": math.cos, "sin": math.sin}


def evaluate(expr: str) -> float:
    """Evaluate a numeric expression built from literals, ``pi`` and a few math functions."""

    def ev(node):
        if isinstance(node, ast.Expression):
            return ev(node.body)
        if isinstance(node, ast.Constant) and isinstance(node.value, (int, float)) and not isinstance(node.value, bool):
            return float(node.value)
        if isinstance(node, ast.BinOp) and type(node.op) in _BINOPS:
            return _BINOPS[type(node.op)](ev(node.left), ev(node.right))
        if isinstance(node, ast.UnaryOp) and type(node.op) in _UNARY:
            return _UNARY[type(node.op)](ev(node.operand))
        if isinstance(node, ast.Name) and node.id in _NAMES:
            return _NAMES[node.id]
        if isinstance(node, ast.Call) and isinstance(node.func, ast.Name) and node.func.id in _FUNCS and not node.keywords:
            return _FUNCS[node.func.id](*[ev(a) for a in node.args])
        raise ValueError(f"unsupported expression element {ast.dump(node)[:40]}")

    try:
        value = ev(ast.parse(expr.strip(), mode="eval"))
    except (SyntaxError, ZeroDivisionError, OverflowError, TypeError) as exc:
        raise ValueError(str(exc)) from None
    return float(value)


_LINSPACE = re.compile(r"^linspace\((.*)\)$")


def parse_grid(text: str) -> list[float]:
    text = text.strip()
    m = _LINSPACE.match(text)
    if m:
        parts = m.group(1).split(",")
        if len(parts) != 3:
            raise ValueError("linspace needs (start, stop, count)")
        n = evaluate(parts[2])
        if not math.isfinite(n) or n != int(n) or n < 1:
            raise ValueError(f"linspace count must be a positive integer, got {parts[2].strip()}")
        return [float(v) for v in np.linspace(evaluate(parts[0]), evaluate(parts[1]), int(n))]
    items = [t for t in text.split(",") if t.strip()]
    if not items:
        raise ValueError("empty grid")
    return [evaluate(t) for t in items]


def parse_quantity(text: str, kind: str) -> float:
    """``"6 GHz_times_2pi"`` -> rad/ns; the unit is mandatory."""
    units = _UNITS[kind]
    parts = text.strip().rsplit(None, 1)
    if len(parts) != 2 or parts[1] not in units:
        raise ValueError(f"needs a {kind} unit, one of {', '.join(units)}")
    return evaluate(parts[0]) * units[parts[1]]


def parse_bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError("expected true or false")


def _parse_value(kind: str, text: str):
    if kind in _UNITS:
        return parse_quantity(text, kind)
    if kind == "number":
        return evaluate(text)
    if kind == "int":
        v = evaluate(text)
        if not math.isfinite(v) or v != int(v):
            raise ValueError("expected an integer")
        return int(v)
    if kind == "grid":
        return parse_grid(text)
    if kind == "bool":
        return parse_bool(text)
    if kind == "phi":
        return None if text.strip() == "analytic" else evaluate(text)
    if kind.startswith("choice:"):
        choices = kind[7:].split("|")
        if text.strip() not in choices:
            raise ValueError(f"expected one of {', '.join(choices)}")
        return text.strip()
    return text.strip()


@dataclass
class ScenarioConfig:
    scenario: str
    params: PhysicalParams
    backend: str = "unitary"
    frame: str | None = None
    phi_star: float | None = None
    dephasing_factor: float = 0.5
    tol: float = 1e-9
    grid_points: int = 61
    point: BlochPoint = EQUATOR_PROBE
    sweep_theta: list[float] = field(default_factory=lambda: [0.0, math.pi / 2, math.pi])
    sweep_phi: list[float] = field(default_factory=lambda: [0.0, math.pi / 2])
    jobs: int = 1
    geometry: SquidResonatorGeometry | None = None
    modes: int = 4
    wigner: dict = field(default_factory=dict)
    out_path: str = "csq_out"
    out_format: str = ""
    figures: bool = True
    raw: dict[str, dict[str, str]] = field(default_factory=dict)
    source: str = "<defaults>"

    def echo(self) -> dict:
        """Every effective setting as config text in canonical units; feeding it back reproduces the run."""
        canon = {"frequency": "rad_per_ns", "time": "ns", "temperature": "K"}

        def fmt(kind, value):
            if kind in canon:
                return f"{float(value)!r} {canon[kind]}"
            if kind == "grid":
                return ", ".join(repr(float(v)) for v in value)
            if kind == "bool":
                return "true" if value else "false"
            if kind == "phi":
                return "analytic" if value is None else repr(float(value))
            if kind in ("number",):
                return repr(float(value))
            return str(value)

        p = self.params
        geo = self.geometry
        current = {
            "params": {k: getattr(p, k) for k in SCHEMA["params"]},
            "protocol": {
                "backend": self.backend,
                "frame": self.frame or "default",
                "phi_star": self.phi_star,
                "dephasing_factor": self.dephasing_factor,
                "tol": self.tol,
                "grid_points": self.grid_points,
                "theta_b": self.point.theta_b,
                "phi_b": self.point.phi_b,
            },
            "sweep": {"theta_b": self.sweep_theta, "phi_b": self.sweep_phi, "jobs": self.jobs},
            "geometry": {**{k: getattr(geo, k) for k in SCHEMA["geometry"] if k != "modes"}, "modes": self.modes},
            "wigner": dict(self.wigner),
            "output": {"path": self.out_path, "format": self.out_format, "figures": self.figures},
        }
        return {
            sec: {k: fmt(SCHEMA[sec][k], v) for k, v in sorted(current[sec].items())}
            for sec in sorted(current)
        }


DEFAULT_GEOMETRY = {"l0": 4.2e-7, "c0": 1.7e-10, "d": 4.9e-3, "cj": 1e-15, "ej": 2.5e4, "flux_bias": 0.3}


class _Located:
    """Line numbers of ``key = value`` entries so errors can point into the file."""

    def __init__(self, text: str | None, source: str):
        self.source = source
        self.lines: dict[tuple[str, str], int] = {}
        if text is None:
            return
        section = None
        for no, line in enumerate(text.splitlines(), 1):
            s = line.strip()
            if s.startswith("[") and s.endswith("]"):
                section = s[1:-1].strip()
                self.lines.setdefault((section, ""), no)
            elif section and "=" in s and not s.startswith(("#", ";")):
                self.lines.setdefault((section, s.split("=", 1)[0].strip().lower()), no)

    def error(self, section: str, key: str, msg: str) -> ConfigError:
        no = self.lines.get((section, key))
        where = f"{self.source}:{no}" if no else self.source
        label = f"[{section}] {key}" if key else f"[{section}]"
        return ConfigError(f"{where}: {label}: {msg}")


def read_raw(path: str | Path) -> tuple[dict[str, dict[str, str]], _Located]:
    """Section -> key -> raw string from an INI file or a run manifest."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config ({exc.strerror})") from None
    if path.suffix == ".json":
        try:
            data = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}:{exc.lineno}: invalid JSON ({exc.msg})") from None
        cfg = data.get("config") if isinstance(data, dict) else None
        if not isinstance(cfg, dict):
            raise ConfigError(f"{path}: manifest has no 'config' block")
        return {str(s): {str(k): str(v) for k, v in keys.items()} for s, keys in cfg.items()}, _Located(None, str(path))
    parser = configparser.ConfigParser(interpolation=None, strict=True)
    try:
        parser.read_string(text, source=str(path))
    except configparser.Error as exc:
        msg = str(exc).replace("\n", " ")
        raise ConfigError(f"{path}: {msg}") from None
    raw = {sec: dict(parser.items(sec)) for sec in parser.sections()}
    return raw, _Located(text, str(path))


def apply_overrides(raw: dict[str, dict[str, str]], overrides: dict[str, str]) -> dict[str, dict[str, str]]:
    """``{"protocol.backend": "lindblad"}`` style overrides; flags win over file values."""
    out = {sec: dict(keys) for sec, keys in raw.items()}
    for dotted, value in overrides.items():
        if value is None:
            continue
        sec, key = dotted.split(".", 1)
        out.setdefault(sec, {})[key] = str(value)
    return out


def build(scenario: str, raw: dict[str, dict[str, str]], where: _Located | None = None) -> ScenarioConfig:
    where = where or _Located(None, "<config>")
    if scenario not in SCENARIOS:
        raise ConfigError(f"unknown scenario {scenario!r}; expected one of {', '.join(SCENARIOS)}")
    values: dict[str, dict] = {}
    for sec, keys in raw.items():
        if sec not in SCHEMA:
            raise where.error(sec, "", f"unknown section; expected one of {', '.join(SCHEMA)}")
        for key, text in keys.items():
            kind = SCHEMA[sec].get(key)
            if kind is None:
                raise where.error(sec, key, f"unknown key; allowed: {', '.join(SCHEMA[sec])}")
            try:
                values.setdefault(sec, {})[key] = _parse_value(kind, text)
            except ValueError as exc:
                raise where.error(sec, key, f"{exc} (got {text.strip()!r})") from None

    try:
        params = PhysicalParams(**values.get("params", {}))
    except InconsistentParametersError as exc:
        raise ConfigError(f"{where.source}: [params]: {exc}") from None

    proto = values.get("protocol", {})
    frame = proto.get("frame", "default")
    cfg = ScenarioConfig(
        scenario=scenario,
        params=params,
        backend=proto.get("backend", "unitary"),
        frame=None if frame == "default" else frame,
        phi_star=proto.get("phi_star"),
        dephasing_factor=proto.get("dephasing_factor", 0.5),
        tol=proto.get("tol", 1e-9),
        grid_points=proto.get("grid_points", 61),
        raw={sec: dict(keys) for sec, keys in raw.items()},
        source=where.source,
    )
    try:
        cfg.point = BlochPoint(proto.get("theta_b", EQUATOR_PROBE.theta_b), proto.get("phi_b", EQUATOR_PROBE.phi_b))
    except InvalidStateError as exc:
        raise ConfigError(f"{where.source}: [protocol]: {exc}") from None
    if not (cfg.tol > 0 and cfg.grid_points >= 3 and cfg.dephasing_factor >= 0):
        raise ConfigError(f"{where.source}: [protocol]: need tol > 0, grid_points >= 3, dephasing_factor >= 0")

    sweep = values.get("sweep", {})
    cfg.sweep_theta = sweep.get("theta_b", cfg.sweep_theta)
    cfg.sweep_phi = sweep.get("phi_b", cfg.sweep_phi)
    cfg.jobs = sweep.get("jobs", 1)
    if cfg.jobs < 1:
        raise where.error("sweep", "jobs", "must be >= 1")
    for key, grid in (("theta_b", cfg.sweep_theta), ("phi_b", cfg.sweep_phi)):
        if not all(math.isfinite(v) for v in grid):
            raise where.error("sweep", key, "grid values must be finite")
    if not all(0.0 <= t <= math.pi for t in cfg.sweep_theta):
        raise where.error("sweep", "theta_b", "polar angles must lie in [0, pi]")

    geo = dict(DEFAULT_GEOMETRY)
    geo.update({k: v for k, v in values.get("geometry", {}).items() if k != "modes"})
    cfg.modes = values.get("geometry", {}).get("modes", 4)
    try:
        cfg.geometry = SquidResonatorGeometry(**geo)
    except ValueError as exc:
        raise ConfigError(f"{where.source}: [geometry]: {exc}") from None
    if cfg.modes < 1:
        raise where.error("geometry", "modes", "must be >= 1")

    w = {"state": "vacuum", "fock_n": 0, "extent": 5.0, "points": 201, "theta_b": 0.0, "phi_b": 0.0}
    w.update(values.get("wigner", {}))
    if w["points"] < 2 or w["extent"] <= 0:
        raise ConfigError(f"{where.source}: [wigner]: need points >= 2 and extent > 0")
    if not 0 <= w["fock_n"] < params.resonator_dim:
        raise where.error("wigner", "fock_n", f"must lie in [0, {params.resonator_dim})")
    cfg.wigner = w

    out = values.get("output", {})
    cfg.out_path = out.get("path", "csq_out")
    cfg.out_format = out.get("format", "csv" if scenario == "sweep" else "json")
    cfg.figures = out.get("figures", True)
    return cfg


def load(scenario: str, path: str | Path | None = None, overrides: dict[str, str] | None = None) -> ScenarioConfig:
    if path is None:
        raw, where = {}, _Located(None, "<defaults>")
    else:
        raw, where = read_raw(path)
    raw = apply_overrides(raw, overrides or {})
    return build(scenario, raw, where)
