"""Command-line entry point: ``python -m poroflow {simulate,infsup,benchmark}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure,
4 acceptance failure.
"""

from __future__ import annotations

import argparse
import csv
import json
import os
import sys
from dataclasses import asdict, replace
from pathlib import Path

import numpy as np

from . import __version__
from .assembly import ELEMENTS, normalize_element, normalize_mass_mode
from .benchmarks import CASES, ENERGY_NAMES, RunArtifacts, run
from .checks import run_benchmark
from .config import ConfigError, load_config
from .linsolve import SingularSystemError
from .mesh import normalize_pattern
from .stability import LEVELS, infsup_test

EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL, EXIT_ACCEPTANCE = 0, 2, 3, 4
FMT = "%.17g"


def _workers() -> int:
    try:
        return max(1, int(os.environ.get("POROFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _fmt(x) -> str:
    return FMT % x


# --------------------------------------------------------------------------
# writers


def write_timehistory(art: RunArtifacts, path: Path) -> None:
    labels = [pr.label for pr in art.case.probes]
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", *labels, *ENERGY_NAMES, "balance_error"])
        for i, t in enumerate(art.times):
            row = [t, *(art.probes[l][i] for l in labels), *(art.energy[e][i] for e in ENERGY_NAMES)]
            w.writerow([_fmt(v) for v in row] + [_fmt(art.balance_error[i])])


def write_snapshot(art: RunArtifacts, t: float, path: Path) -> None:
    snap = art.snapshot(t)
    c = art.mesh.nodes[art.mesh.triangles].mean(axis=1)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "x", "y", "p", "wx", "wy"])
        for m in range(art.mesh.n_triangles):
            w.writerow([m, *(_fmt(v) for v in (c[m, 0], c[m, 1], snap.p[m], snap.w[m, 0], snap.w[m, 1]))])


def snapshot_name(t: float) -> str:
    return f"snapshot_t{t:.6f}s.csv"


def _case_manifest(art: RunArtifacts) -> dict:
    case = art.case
    return {
        "name": case.name,
        "mesh": asdict(case.mesh_spec),
        "element": art.element,
        "mass_mode": art.mass_mode,
        "material": asdict(case.material),
        "dt": case.dt,
        "t_end": case.t_end,
        "n_steps": case.n_steps,
        "probes": [asdict(p) for p in case.probes],
        "snapshot_times": list(case.snapshot_times),
        "n_triangles": art.mesh.n_triangles,
        "max_balance_error": float(np.max(art.balance_error[1:])) if len(art.times) > 1 else 0.0,
        "max_constraint_residual": float(np.max(art.constraint)),
    }


def write_run(art: RunArtifacts, out: Path, extra: dict | None = None) -> dict:
    out.mkdir(parents=True, exist_ok=True)
    write_timehistory(art, out / "timehistory.csv")
    files = ["timehistory.csv"]
    for t in art.case.snapshot_times:
        name = snapshot_name(t)
        write_snapshot(art, t, out / name)
        files.append(name)
    manifest = {"version": __version__, **_case_manifest(art), "files": files, **(extra or {})}
    with open(out / "manifest.json", "w", encoding="utf-8") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
    return manifest


# --------------------------------------------------------------------------
# subcommands


def cmd_simulate(args) -> int:
    if not args.config:
        print("simulate: --config is required", file=sys.stderr)
        return EXIT_CONFIG
    try:
        cfg = load_config(args.config)
        case = cfg.case
        if args.element:
            case = case.with_(element=normalize_element(args.element))
        if args.mass:
            case = case.with_(mass_mode=normalize_mass_mode(args.mass))
        if args.pattern:
            case = case.with_(mesh_spec=replace(case.mesh_spec, pattern=normalize_pattern(args.pattern)))
    except (ConfigError, ValueError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    stage = "mesh/assembly"
    try:
        art = run(case)
    except SingularSystemError as exc:
        print(f"numerical failure ({stage}/IC/solve): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except ValueError as exc:  # e.g. a probe on a constrained component
        print(f"config error ({stage}): {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure (solve): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    if not all(np.all(np.isfinite(v)) for v in art.probes.values()):
        print("numerical failure (solve): non-finite probe values", file=sys.stderr)
        return EXIT_NUMERICAL
    extra = {"config": cfg.raw, "dt_mode": cfg.dt_mode, "cfl_safety": cfg.cfl_safety, "source": cfg.source}
    write_run(art, Path(args.out), extra)
    print(f"wrote {args.out} ({case.n_steps} steps, dt={case.dt:.6g} s)")
    return EXIT_OK


def _parse_levels(text):
    if not text:
        return LEVELS
    try:
        levels = tuple(int(s) for s in text.split(",") if s.strip())
    except ValueError:
        raise ValueError(f"levels must be a comma-separated list of integers, got {text!r}") from None
    if not levels or min(levels) < 1:
        raise ValueError("levels must be positive")
    return levels


def cmd_infsup(args) -> int:
    try:
        elements = [normalize_element(args.element)[:2]] if args.element else ["P1", "P2"]
        patterns = [normalize_pattern(args.pattern)] if args.pattern else ["criss", "crisscross", "union_jack"]
        levels = _parse_levels(args.levels)
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    reports = []
    try:
        for el in elements:
            for pat in patterns:
                reports.append(infsup_test(el, pat, levels, workers=_workers()))
    except (np.linalg.LinAlgError, RuntimeError) as exc:
        print(f"numerical failure (eigensolver): {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    lines = [f"{'element':8s} {'pattern':12s} {'local':>5s} {'global':>6s} {'inf-sup':>7s}"]
    with open(out / "infsup_table.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "pattern", "local", "global", "infsup", "local_deficiency", "global_deficiency", "verdict"])
        for r in reports:
            a, b, c = r.row
            w.writerow([r.element, r.pattern, a, b, c, _fmt(r.local_deficiency), r.global_deficiency, r.verdict])
            lines.append(f"{r.element:8s} {r.pattern:12s} {a:>5s} {b:>6s} {c:>7s}")
    with open(out / "infsup_values.csv", "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["element", "pattern", "N", "value", "zero_modes"])
        for r in reports:
            for n, v, z in zip(r.levels, r.values, r.zero_modes):
                w.writerow([r.element, r.pattern, n, _fmt(v), z])
    text = "\n".join(lines) + "\n"
    (out / "infsup_table.txt").write_text(text, encoding="utf-8")
    print(text, end="")
    return EXIT_OK


def cmd_benchmark(args) -> int:
    if args.case not in CASES:
        print(f"config error: unknown case {args.case!r}; expected one of {CASES}", file=sys.stderr)
        return EXIT_CONFIG
    try:
        element = normalize_element(args.element) if args.element else None
        mass = normalize_mass_mode(args.mass) if args.mass else None
        pattern = normalize_pattern(args.pattern) if args.pattern else None
        levels = _parse_levels(args.levels) if args.levels else None
    except ValueError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    level = levels[-1] if levels else None
    try:
        checks, arts = run_benchmark(args.case, element, mass, pattern, level, progress=lambda m: print(m, flush=True))
    except SingularSystemError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    out = Path(args.out)
    for name, art in arts.items():
        write_run(art, out / name)
    verdict = {
        "case": args.case,
        "passed": all(c.passed for c in checks),
        "checks": [c.as_dict() for c in checks],
    }
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "verdict.json", "w", encoding="utf-8") as fh:
        json.dump(verdict, fh, indent=2)
    for c in checks:
        print(c.line())
    return EXIT_OK if verdict["passed"] else EXIT_ACCEPTANCE


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", default="out", help="output directory (default: out)")
    common.add_argument("--element", type=str.lower, choices=[e.lower() for e in ELEMENTS])
    common.add_argument("--mass", type=str.lower, choices=["consistent", "lobatto", "hinton"])
    common.add_argument("--pattern", type=str.lower, choices=["criss", "crisscross", "unionjack", "union_jack"])
    common.add_argument("--levels", help="comma-separated refinement levels, e.g. 1,2,4,8,16")
    common.add_argument("--config", help="run configuration file (INI with units)")

    p = argparse.ArgumentParser(prog="poroflow", description="Dynamic incompressible poroelasticity simulator")
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("simulate", parents=[common], help="run a configuration file").set_defaults(fn=cmd_simulate)
    sub.add_parser("infsup", parents=[common], help="constraint-rank and inf-sup tests").set_defaults(fn=cmd_infsup)
    b = sub.add_parser("benchmark", parents=[common], help="run a reference case and judge it")
    b.add_argument("case", help=f"one of {', '.join(CASES)}")
    b.set_defaults(fn=cmd_benchmark)
    return p


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_CONFIG if exc.code else EXIT_OK
    return args.fn(args)


if __name__ == "__main__":
    sys.exit(main())
