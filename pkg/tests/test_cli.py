"""Configuration parsing, output writers and the command-line interface."""

import csv
import json
from pathlib import Path

import numpy as np
import pytest

from poroflow.benchmarks import column_ex1
from poroflow.cli import main
from poroflow.config import ConfigError, load_config, parse_quantity, read_config_text

CONFIGS = Path(__file__).resolve().parents[1] / "configs"

SMALL = """
[mesh]
width = 0.1 m
height = 1 m
nx = 1
ny = 10
pattern = crisscross

[material]
E = 14516 kN/m2
nu = 0.3
rho_s = 2000 kg/m3
rho_f = 1000 kg/m3
n_f = 0.33
K_h = 1e-2 m/s

[time]
dt = {dt}
cfl_safety = {safety}
t_end = 0.01 s

[boundary.top]
skeleton = traction
traction = 0 kPa, {load}
fluid = drained

[boundary.bottom]
skeleton = normal_fixed

[boundary.left]
skeleton = normal_fixed

[boundary.right]
skeleton = normal_fixed

[probe.top]
quantity = u
point = 0 m, 1 m

[probe.mid pressure]
quantity = p
point = 0.05 m, 0.5 m

[output]
snapshots = 0.005 s
"""


def _write(tmp_path, dt="1e-4 s", safety="1", load="-3 kN/m2"):
    p = tmp_path / "run.ini"
    p.write_text(SMALL.format(dt=dt, safety=safety, load=load))
    return p


class TestUnits:
    @pytest.mark.parametrize(
        "text,kind,value",
        [("3 kN/m2", "pressure", 3e3), ("14.516 MPa", "pressure", 14.516e6), ("2 kPa", "pressure", 2e3),
         ("10 cm", "length", 0.1), ("5 ms", "time", 5e-3), ("1e-2 m/s", "velocity", 1e-2),
         ("1.0 t/m3", "density", 1e3), ("9.81 m/s2", "acceleration", 9.81), ("0.3", None, 0.3)],
    )
    def test_conversions(self, text, kind, value):
        assert parse_quantity(text, kind) == pytest.approx(value, rel=1e-14)

    @pytest.mark.parametrize("text,kind", [("3", "pressure"), ("3 psi", "pressure"), ("abc", "length"), ("2 m", None)])
    def test_rejections(self, text, kind):
        with pytest.raises(ConfigError):
            parse_quantity(text, kind)


class TestConfig:
    def test_shipped_configs_match_cases(self):
        cfg = load_config(CONFIGS / "column_ex1.ini")
        ref = column_ex1()
        assert cfg.case.mesh_spec == ref.mesh_spec
        assert cfg.case.material == ref.material
        assert cfg.case.dt == ref.dt and cfg.case.t_end == ref.t_end
        for name in ("block_ex2.ini", "bracket_ex3.ini"):
            load_config(CONFIGS / name)

    def test_auto_cfl(self, tmp_path):
        text = (CONFIGS / "column_ex1.ini").read_text().replace("dt = 1e-4 s", "dt = auto-cfl\ncfl_safety = 0.12")
        cfg = read_config_text(text)
        assert cfg.dt_mode == "auto-cfl"
        assert cfg.dt == pytest.approx(1e-4, rel=0.01)

    @pytest.mark.parametrize("safety", ["0", "1.5"])
    def test_bad_safety(self, tmp_path, safety):
        with pytest.raises(ConfigError):
            load_config(_write(tmp_path, dt="auto-cfl", safety=safety))

    def test_missing_section(self):
        with pytest.raises(ConfigError, match="material"):
            read_config_text("[mesh]\nwidth = 1 m\n[time]\ndt = 1 s\nt_end = 1 s\n")

    def test_missing_unit(self, tmp_path):
        with pytest.raises(ConfigError, match="missing unit"):
            load_config(_write(tmp_path, load="-3000"))

    def test_load_histories(self):
        base = (CONFIGS / "column_ex1.ini").read_text()
        ramp = read_config_text(base.replace("history = step", "history = ramp\nrise_time = 0.1 s"))
        h = ramp.case.bc.skeleton["top"][0].history
        assert h(0.05) == pytest.approx(0.5)
        table = read_config_text(base.replace("history = step", "history = table\ntimes = 0 s, 8 s\nvalues = 0, 1"))
        assert table.case.bc.skeleton["top"][0].history(4.0) == pytest.approx(0.5)


def _read_csv(path):
    with open(path) as fh:
        rows = list(csv.reader(fh))
    return rows[0], np.array(rows[1:], dtype=float)


class TestSimulate:
    def test_outputs(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(_write(tmp_path)), "--out", str(out)]) == 0
        head, data = _read_csv(out / "timehistory.csv")
        assert head == ["t", "top", "mid pressure", "E_Ks", "E_Kf", "E_S", "E_D", "E_In", "E_C", "balance_error"]
        assert data.shape == (101, 10)
        assert data[-1, 1] < 0
        assert np.max(data[1:, -1]) <= 1e-6
        shead, sdata = _read_csv(out / "snapshot_t0.005000s.csv")
        assert shead == ["element", "x", "y", "p", "wx", "wy"] and sdata.shape == (40, 6)
        manifest = json.loads((out / "manifest.json").read_text())
        assert manifest["n_steps"] == 100 and manifest["dt_mode"] == "fixed"
        # at least 12 significant digits
        with open(out / "timehistory.csv") as fh:
            fh.readline()
            last = fh.readlines()[-1].split(",")[1]
        assert len(last.lstrip("-").replace(".", "").split("e")[0].lstrip("0")) >= 12

    def test_zero_load(self, tmp_path):
        out = tmp_path / "out"
        assert main(["simulate", "--config", str(_write(tmp_path, load="0 kPa")), "--out", str(out)]) == 0
        _, data = _read_csv(out / "timehistory.csv")
        assert not np.any(data[:, 1:3])

    def test_bitwise_repeatable(self, tmp_path):
        cfg = str(_write(tmp_path))
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "a")])
        main(["simulate", "--config", cfg, "--out", str(tmp_path / "b")])
        for name in ("timehistory.csv", "snapshot_t0.005000s.csv"):
            assert (tmp_path / "a" / name).read_bytes() == (tmp_path / "b" / name).read_bytes()

    def test_overrides(self, tmp_path):
        out = tmp_path / "o"
        assert main(["simulate", "--config", str(_write(tmp_path)), "--out", str(out), "--element", "p2rt0", "--mass", "consistent"]) == 0
        m = json.loads((out / "manifest.json").read_text())
        assert m["element"] == "P2RT0" and m["mass_mode"] == "consistent"

    def test_config_errors(self, tmp_path):
        assert main(["simulate", "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--config", str(tmp_path / "missing.ini"), "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--config", str(_write(tmp_path, dt="-1 s")), "--out", str(tmp_path)]) == 2
        assert main(["simulate", "--bogus"]) == 2

    def test_probe_on_fixed_component(self, tmp_path):
        p = _write(tmp_path)
        p.write_text(p.read_text() + "\n[probe.base]\nquantity = u\npoint = 0 m, 0 m\ncomponent = y\n")
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 2

    def test_singular_system(self, tmp_path):
        text = SMALL.format(dt="1e-4 s", safety="1", load="0 kPa")
        text = text[: text.index("[boundary.top]")] + "".join(
            f"[boundary.{s}]\nskeleton = fixed\nfluid = impermeable\n\n" for s in ("top", "bottom", "left", "right"))
        p = tmp_path / "closed.ini"
        p.write_text(text)
        # a sealed, clamped box leaves the pressure constant undetermined
        assert main(["simulate", "--config", str(p), "--out", str(tmp_path / "o")]) == 3


class TestInfsupCommand:
    def test_table(self, tmp_path, capsys):
        assert main(["infsup", "--element", "p1rt0", "--pattern", "crisscross", "--levels", "1,2", "--out", str(tmp_path)]) == 0
        head = (tmp_path / "infsup_values.csv").read_text().splitlines()[0].split(",")
        assert head == ["element", "pattern", "N", "value", "zero_modes"]
        row = (tmp_path / "infsup_table.csv").read_text().splitlines()[1].split(",")
        assert row[:4] == ["P1", "crisscross", "X", "X"]
        assert "crisscross" in capsys.readouterr().out

    def test_bad_levels(self, tmp_path):
        assert main(["infsup", "--levels", "a,b", "--out", str(tmp_path)]) == 2


class TestBenchmarkCommand:
    def test_unknown_case(self, tmp_path):
        out = tmp_path / "b"
        assert main(["benchmark", "dam_break", "--out", str(out)]) == 2
        assert not out.exists()

    def test_bracket(self, tmp_path):
        out = tmp_path / "b"
        code = main(["benchmark", "bracket_ex3", "--out", str(out)])
        verdict = json.loads((out / "verdict.json").read_text())
        assert code == (0 if verdict["passed"] else 4)
        names = [c["name"] for c in verdict["checks"]]
        assert names == ["checkerboard_ratio_t=0.3", "checkerboard_ratio_t=2.5", "checkerboard_ratio_t=4.1"]
        assert verdict["passed"]
