"""Run configuration files: INI text with an explicit unit on every physical quantity.

Layout
------
::

    [mesh]      width, height (length); nx, ny; pattern
    [model]     element; mass
    [material]  E (pressure); nu; rho_s, rho_f (density); n_f; K_h (velocity); g (acceleration)
    [time]      dt = <time> | auto-cfl ; cfl_safety ; t_end (time)
    [load]      history = step | ramp | table ; rise_time ; times ; values
    [boundary.<side>] or [boundary.<side>.<tag>]
                skeleton = free | fixed | normal_fixed | traction ; traction = <tx>, <ty> (pressure)
                fluid = impermeable | drained ; pressure (pressure) ; span = <a>, <b> (length)
    [probe.<label>]  quantity = u | v | a | w | p ; point = <x>, <y> (length) ; component = x | y
    [output]    snapshots = <t1>, <t2>, ... (time)

A value such as ``3 kN/m2`` is converted to SI on reading; a bare number is
rejected for dimensional quantities so that unit mistakes surface early.
"""

from __future__ import annotations

import configparser
import re
from dataclasses import dataclass, field
from pathlib import Path

from .assembly import BCSpec, FluidBC, LoadHistory, MaterialParams, SkeletonBC, normalize_element, normalize_mass_mode
from .benchmarks import BenchmarkCase, ProbeSpec
from .mesh import SIDES, MeshSpec, generate
from .timestepper import cfl_timestep

UNITS = {
    "pressure": {"Pa": 1.0, "N/m2": 1.0, "kPa": 1e3, "kN/m2": 1e3, "MPa": 1e6, "MN/m2": 1e6, "GPa": 1e9},
    "length": {"m": 1.0, "cm": 1e-2, "mm": 1e-3},
    "velocity": {"m/s": 1.0, "cm/s": 1e-2, "mm/s": 1e-3},
    "density": {"kg/m3": 1.0, "t/m3": 1e3, "g/cm3": 1e3},
    "time": {"s": 1.0, "ms": 1e-3},
    "acceleration": {"m/s2": 1.0},
}

_NUMBER = re.compile(r"^\s*([-+]?(?:\d+\.?\d*|\.\d+)(?:[eE][-+]?\d+)?)\s*(.*?)\s*$")


class ConfigError(ValueError):
    """Invalid or incomplete run configuration."""


def parse_quantity(text: str, kind: str | None) -> float:
    """``"3 kN/m2"`` -> 3000.0 for ``kind="pressure"``; ``kind=None`` expects a plain number."""
    m = _NUMBER.match(str(text))
    if not m:
        raise ConfigError(f"cannot read a number from {text!r}")
    value, unit = float(m.group(1)), m.group(2).replace("²", "2").replace("³", "3")
    if kind is None:
        if unit:
            raise ConfigError(f"{text!r}: expected a dimensionless number")
        return value
    table = UNITS[kind]
    if not unit:
        raise ConfigError(f"{text!r}: missing unit ({kind}: one of {', '.join(table)})")
    if unit not in table:
        raise ConfigError(f"{text!r}: unknown {kind} unit {unit!r} (expected one of {', '.join(table)})")
    return value * table[unit]


def parse_list(text: str, kind: str | None) -> tuple:
    items = [s for s in str(text).split(",") if s.strip()]
    return tuple(parse_quantity(s, kind) for s in items)


@dataclass
class RunConfig:
    """A fully resolved simulation request."""

    case: BenchmarkCase
    dt_mode: str = "fixed"  # "fixed" or "auto-cfl"
    cfl_safety: float | None = None
    source: str = ""
    raw: dict = field(default_factory=dict)

    @property
    def dt(self) -> float:
        return self.case.dt


def _get(sec, key, kind=None, default=None, required=True):
    if key not in sec:
        if required and default is None:
            raise ConfigError(f"[{sec.name}] is missing {key!r}")
        return default
    return parse_quantity(sec[key], kind)


def _history(cp) -> LoadHistory:
    if "load" not in cp:
        return LoadHistory()
    sec = cp["load"]
    kind = sec.get("history", "step").strip().lower()
    try:
        if kind == "ramp":
            return LoadHistory("ramp", rise_time=_get(sec, "rise_time", "time"))
        if kind == "table":
            return LoadHistory("table", times=parse_list(sec["times"], "time"), values=parse_list(sec["values"], None))
        return LoadHistory(kind)
    except KeyError as exc:
        raise ConfigError(f"[load] is missing {exc.args[0]!r}") from None
    except ValueError as exc:
        raise ConfigError(f"[load]: {exc}") from None


def _boundary(cp, history: LoadHistory) -> BCSpec:
    skel, fluid = {}, {}
    for name in cp.sections():
        parts = name.split(".")
        if parts[0] != "boundary":
            continue
        if len(parts) < 2 or parts[1] not in SIDES:
            raise ConfigError(f"section [{name}]: side must be one of {SIDES}")
        side, sec = parts[1], cp[name]
        span = parse_list(sec["span"], "length") if "span" in sec else None
        if span is not None and len(span) != 2:
            raise ConfigError(f"[{name}] span needs two values")
        try:
            sk = sec.get("skeleton", "free").strip().lower()
            traction = parse_list(sec["traction"], "pressure") if "traction" in sec else (0.0, 0.0)
            if len(traction) != 2:
                raise ConfigError(f"[{name}] traction needs two components")
            skel.setdefault(side, []).append(SkeletonBC(sk, traction, history, span))
            fl = sec.get("fluid", "impermeable").strip().lower()
            pressure = _get(sec, "pressure", "pressure", default=0.0, required=False)
            fluid.setdefault(side, []).append(FluidBC(fl, pressure, history, span))
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(f"[{name}]: {exc}") from None
    for side in SIDES:
        skel.setdefault(side, [SkeletonBC()])
        fluid.setdefault(side, [FluidBC()])
    return BCSpec(skeleton=skel, fluid=fluid)


def _probes(cp) -> tuple:
    out = []
    for name in cp.sections():
        if not name.startswith("probe."):
            continue
        sec, label = cp[name], name[len("probe.") :]
        q = sec.get("quantity", "").strip().lower()
        if "point" not in sec:
            raise ConfigError(f"[{name}] is missing 'point'")
        point = parse_list(sec["point"], "length")
        if len(point) != 2:
            raise ConfigError(f"[{name}] point needs two coordinates")
        comp = sec.get("component", "y").strip().lower()
        comp = {"x": 0, "y": 1, "0": 0, "1": 1}.get(comp)
        try:
            out.append(ProbeSpec(label, q, point, None if q == "p" else comp))
        except ValueError as exc:
            raise ConfigError(str(exc)) from None
    return tuple(out)


def load_config(path) -> RunConfig:
    """Read and validate a configuration file; raises ``ConfigError``."""
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str  # keys are case sensitive (E vs e)
    try:
        with open(path, encoding="utf-8") as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc}") from None
    except configparser.Error as exc:
        raise ConfigError(f"{path}: {exc}") from None
    return config_from_parser(cp, source=str(path))


def config_from_parser(cp: configparser.ConfigParser, source: str = "") -> RunConfig:
    for required in ("mesh", "material", "time"):
        if required not in cp:
            raise ConfigError(f"missing section [{required}]")
    m = cp["mesh"]
    try:
        spec = MeshSpec(
            _get(m, "width", "length"),
            _get(m, "height", "length"),
            int(_get(m, "nx")),
            int(_get(m, "ny")),
            m.get("pattern", "crisscross").strip(),
        )
        mat_sec = cp["material"]
        mat = MaterialParams(
            E=_get(mat_sec, "E", "pressure"),
            nu=_get(mat_sec, "nu"),
            rho_s=_get(mat_sec, "rho_s", "density"),
            rho_f=_get(mat_sec, "rho_f", "density"),
            n_f=_get(mat_sec, "n_f"),
            K_h=_get(mat_sec, "K_h", "velocity"),
            g=_get(mat_sec, "g", "acceleration", default=9.81, required=False),
        )
        model = cp["model"] if "model" in cp else {}
        element = normalize_element(model.get("element", "P1RT0").strip())
        mass = normalize_mass_mode(model.get("mass", "hinton").strip())
    except ConfigError:
        raise
    except ValueError as exc:
        raise ConfigError(str(exc)) from None

    history = _history(cp)
    bc = _boundary(cp, history)
    probes = _probes(cp)
    t = cp["time"]
    t_end = _get(t, "t_end", "time")
    dt_text = t.get("dt", "").strip().lower()
    if not dt_text:
        raise ConfigError("[time] is missing 'dt'")
    safety = None
    if dt_text in ("auto-cfl", "auto_cfl", "auto"):
        safety = _get(t, "cfl_safety", default=1.0, required=False)
        if not 0.0 < safety <= 1.0:
            raise ConfigError("[time] cfl_safety must lie in (0, 1]")
        dt = safety * cfl_timestep(generate(spec), mat)
        mode = "auto-cfl"
    else:
        dt = parse_quantity(t["dt"], "time")
        mode = "fixed"
    if not dt > 0 or not t_end > 0:
        raise ConfigError("time step and duration must be positive")
    snaps = ()
    if "output" in cp and "snapshots" in cp["output"]:
        snaps = parse_list(cp["output"]["snapshots"], "time")
        if any(s < 0 or s > t_end * (1 + 1e-12) for s in snaps):
            raise ConfigError("snapshot times must lie in [0, t_end]")
    case = BenchmarkCase(
        name=cp["run"].get("name", "custom") if "run" in cp else "custom",
        mesh_spec=spec,
        material=mat,
        bc=bc,
        dt=dt,
        t_end=t_end,
        element=element,
        mass_mode=mass,
        probes=probes,
        snapshot_times=snaps,
    )
    raw = {s: dict(cp[s]) for s in cp.sections()}
    return RunConfig(case=case, dt_mode=mode, cfl_safety=safety, source=source, raw=raw)


def read_config_text(text: str) -> RunConfig:
    cp = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    cp.optionxform = str
    try:
        cp.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(str(exc)) from None
    return config_from_parser(cp, source="<string>")
