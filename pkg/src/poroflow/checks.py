"""Pass/fail checks evaluated on benchmark runs.

Each check returns a ``Check`` carrying the measured value and the threshold,
so verdict files can be audited without re-running anything.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, replace

import numpy as np

from .benchmarks import (
    RunArtifacts,
    block_ex2,
    bracket_ex3,
    column_ex1,
    column_wavefront,
    dominant_frequency,
    phase_correlation,
    run,
)
from .stability import checkerboard_metric
from .timestepper import terzaghi_settlement

SETTLEMENT_TOL = 0.05
WAVE_SPEED_RANGE = (50.0, 95.0)
BALANCE_TOL = 1e-6
CONSTRAINT_TOL = 1e-9
CHECKERBOARD_RATIO = 10.0
FREQUENCY_TOL = 0.10
FREQUENCY_WINDOW = 2.0
DAMPING_TIME = 2.0


@dataclass
class Check:
    name: str
    passed: bool
    value: object
    threshold: object
    detail: str = ""

    def line(self) -> str:
        return f"{self.name}: {'pass' if self.passed else 'fail'} (value={self.value}, threshold={self.threshold})"

    def as_dict(self) -> dict:
        d = asdict(self)
        d["value"] = _plain(d["value"])
        d["threshold"] = _plain(d["threshold"])
        return d


def _plain(x):
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, (list, tuple, np.ndarray)):
        return [_plain(v) for v in x]
    return x


def energy_checks(art: RunArtifacts, prefix: str = "") -> list[Check]:
    bal = float(np.max(art.balance_error[1:])) if len(art.balance_error) > 1 else 0.0
    con = float(np.max(art.constraint))
    ec = float(np.max(np.abs(art.energy["E_C"])) / max(np.max(np.abs(art.energy["E_In"])), 1e-300))
    return [
        Check(prefix + "energy_balance", bal <= BALANCE_TOL, bal, BALANCE_TOL),
        Check(prefix + "constraint", con <= CONSTRAINT_TOL and ec <= CONSTRAINT_TOL, max(con, ec), CONSTRAINT_TOL),
    ]


def column_checks(art: RunArtifacts) -> list[Check]:
    case = art.case
    ds = terzaghi_settlement(case.material, case.meta["load"], case.meta["length"])
    final = -float(art.probe("top displacement")[-1])
    rel = abs(final - ds) / ds
    wf = column_wavefront(art)
    speeds = [float(v) for v in wf.window_speeds]
    lo, hi = WAVE_SPEED_RANGE
    ok = all(lo <= v <= hi for v in speeds) and all(a > b for a, b in zip(speeds, speeds[1:]))
    return [
        Check("terzaghi", rel <= SETTLEMENT_TOL, rel, SETTLEMENT_TOL, f"settlement {final:.6g} m vs {ds:.6g} m"),
        Check("wavefront", ok, speeds, [lo, hi], "window speeds in m/s, must decrease"),
        *energy_checks(art),
    ]


def _value_at(art: RunArtifacts, series, t: float) -> float:
    return float(np.interp(t, art.times, series))


def block_checks(high: RunArtifacts, low: RunArtifacts) -> list[Check]:
    """``high``/``low``: the same block case at the larger and smaller conductivity."""
    ed_hi = _value_at(high, high.energy["E_D"], DAMPING_TIME)
    ed_lo = _value_at(low, low.energy["E_D"], DAMPING_TIME)
    checks = [Check("damping_ordering", ed_hi > ed_lo, [ed_hi, ed_lo], "first > second")]
    for corner in (1, 2):
        label = f"corner {corner} displacement"
        try:
            f_hi = dominant_frequency(high.times, high.probe(label), FREQUENCY_WINDOW)
            f_lo = dominant_frequency(low.times, low.probe(label), FREQUENCY_WINDOW)
            rel = abs(f_hi - f_lo) / f_lo
            checks.append(Check(f"frequency_corner_{corner}", rel <= FREQUENCY_TOL, [f_hi, f_lo, rel], FREQUENCY_TOL))
        except ValueError as exc:
            checks.append(Check(f"frequency_corner_{corner}", False, None, FREQUENCY_TOL, str(exc)))
    period = 1.0 / dominant_frequency(low.times, low.probe("corner 1 displacement"), FREQUENCY_WINDOW)
    r = phase_correlation(low.times, low.probe("corner 1 velocity"), low.probe("corner 1 darcy velocity"), 0.0, period)
    checks.append(Check("phase_opposition", r < 0, r, "< 0", "loaded corner, first period, low conductivity"))
    checks += energy_checks(high, "high_conductivity_") + energy_checks(low, "low_conductivity_")
    return checks


def bracket_checks(p1: RunArtifacts, p2: RunArtifacts) -> list[Check]:
    out = []
    for t in p1.case.snapshot_times:
        a = checkerboard_metric(p1.mesh, p1.snapshot(t).p)
        b = checkerboard_metric(p2.mesh, p2.snapshot(t).p)
        ratio = a / max(b, 1e-300)
        out.append(Check(f"checkerboard_ratio_t={t:g}", ratio >= CHECKERBOARD_RATIO, ratio, CHECKERBOARD_RATIO))
    return out


def run_benchmark(name: str, element=None, mass_mode=None, pattern=None, level=None, progress=print):
    """Run a named case with optional overrides; returns ``(checks, artifacts dict)``."""
    over = {}
    if pattern is not None:
        over["pattern"] = pattern
    if name == "column_ex1":
        case = column_ex1()
        if pattern is not None:
            case = case.with_(mesh_spec=replace(case.mesh_spec, pattern=pattern))
        progress(f"running {name}")
        art = run(case, element=element, mass_mode=mass_mode)
        return column_checks(art), {"column_ex1": art}
    if name == "block_ex2":
        if level is not None:
            over["level"] = level
        arts = {}
        for K in (1e-1, 1e-4):
            progress(f"running {name} K_h={K:g} m/s")
            arts[f"block_ex2_K{K:g}"] = run(block_ex2(K_h=K, **over), element=element, mass_mode=mass_mode)
        hi, lo = arts["block_ex2_K0.1"], arts["block_ex2_K0.0001"]
        return block_checks(hi, lo), arts
    if name == "bracket_ex3":
        if level is not None:
            over["level"] = level
        arts = {}
        for el in ("P1RT0", "P2RT0"):
            progress(f"running {name} {el}")
            arts[f"bracket_ex3_{el}"] = run(bracket_ex3(element=el, **over), mass_mode=mass_mode)
        return bracket_checks(arts["bracket_ex3_P1RT0"], arts["bracket_ex3_P2RT0"]), arts
    raise ValueError(f"unknown benchmark case {name!r}")
