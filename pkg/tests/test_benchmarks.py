"""Reference cases, probes and the signal post-processing used to judge runs."""

import numpy as np
import pytest

from poroflow.benchmarks import (
    CASES,
    WAVEFRONT_THRESHOLD,
    ProbeSpec,
    block_ex2,
    bracket_ex3,
    column_ex1,
    column_wavefront,
    containing_triangle,
    dominant_frequency,
    get_case,
    high_frequency_count,
    measure_wavefront,
    phase_correlation,
    run,
    spectral_peak,
    zero_crossings,
)
from poroflow.mesh import generate


@pytest.fixture(scope="module")
def column_early():
    return run(column_ex1(t_end=0.15))


class TestCases:
    def test_column(self):
        c = column_ex1()
        assert generate(c.mesh_spec).n_triangles == 400
        assert c.dt == 1e-4 and c.mesh_spec.pattern == "crisscross"
        assert c.bc.fluid["top"][0].kind == "drained"
        assert all(c.bc.fluid[s][0].kind == "impermeable" for s in ("bottom", "left", "right"))

    def test_block(self):
        c = block_ex2(K_h=1e-4)
        assert c.material.K_h == 1e-4 and c.dt == 5e-3
        top = c.bc.skeleton["top"]
        assert top[0].traction == (0.0, -15e3) and top[0].span == (0.0, 1.0)
        assert [f.kind for f in c.bc.fluid["top"]] == ["impermeable", "drained"]

    def test_bracket(self):
        c = bracket_ex3()
        assert c.material.K_h == 1e-7
        assert c.bc.skeleton["left"][0].kind == "fixed"
        assert c.snapshot_times == (0.3, 2.5, 4.1)

    def test_get_case(self):
        for name in CASES:
            assert get_case(name).name == name
        with pytest.raises(ValueError):
            get_case("dam_break")

    def test_invalid_case(self):
        with pytest.raises(ValueError):
            column_ex1(dt=0.0)
        with pytest.raises(ValueError):
            ProbeSpec("x", "stress", (0, 0))


class TestProbes:
    def test_outside_point(self):
        with pytest.raises(ValueError):
            containing_triangle(generate(column_ex1().mesh_spec), (1.0, 1.0))

    def test_constrained_component(self):
        case = column_ex1(t_end=1e-3)
        case = case.with_(probes=(ProbeSpec("bottom", "u", (0.0, 0.0), 1),))
        with pytest.raises(ValueError, match="constrained"):
            run(case)

    def test_histories(self, column_early):
        a = column_early
        assert len(a.times) == 1501 and a.times[0] == 0.0
        assert a.probe("top displacement")[0] == 0.0
        assert a.probe("top displacement")[-1] < 0
        assert set(a.snapshots) == {0.025, 0.075, 0.15}
        s = a.snapshot(0.075)
        assert s.p.shape == (400,) and s.w.shape == (400, 2)

    def test_deterministic(self):
        a = run(column_ex1(t_end=0.01))
        b = run(column_ex1(t_end=0.01))
        for k in a.probes:
            assert np.array_equal(a.probes[k], b.probes[k])


class TestWavefront:
    def test_translation(self):
        z = np.linspace(0, 10, 2001)
        times = (0.01, 0.03, 0.06)
        prof = {t: np.where(z > 10 - 80 * t, 1e-3 * (z - (10 - 80 * t)), 0.0) for t in times}
        res = measure_wavefront(z, prof, 1e-9, z_top=10.0)
        np.testing.assert_allclose(res.window_speeds, 80.0, atol=1.0)

    def test_example_one_first_window(self, column_early):
        res = column_wavefront(column_early)
        assert 80.0 <= res.window_speeds[0] <= 95.0

    def test_threshold_sensitivity(self, column_early):
        a = column_wavefront(column_early, WAVEFRONT_THRESHOLD).window_speeds[0]
        b = column_wavefront(column_early, WAVEFRONT_THRESHOLD / 2).window_speeds[0]
        assert abs(b - a) / a < 0.10

    def test_never_arrives(self):
        z = np.linspace(0, 10, 11)
        with pytest.raises(ValueError):
            measure_wavefront(z, {0.1: np.zeros(11)}, 1e-6, z_top=10.0)


class TestSignals:
    def test_zero_crossings(self):
        t = np.linspace(0, 1, 1001)
        zc = zero_crossings(t, np.sin(2 * np.pi * 3 * t + 0.1))
        np.testing.assert_allclose(np.diff(zc), 1 / 6, atol=1e-4)

    def test_dominant_frequency_with_trend(self):
        t = np.arange(0, 2.0, 5e-3)
        y = -1e-3 * (1 - np.exp(-t)) + 2e-4 * np.sin(2 * np.pi * 18.0 * t)
        assert dominant_frequency(t, y, 2.0) == pytest.approx(18.0, rel=0.02)
        assert spectral_peak(t, 2e-4 * np.sin(2 * np.pi * 18.0 * t), 2.0) == pytest.approx(18.0, rel=0.02)

    def test_too_short(self):
        with pytest.raises(ValueError):
            dominant_frequency(np.linspace(0, 1, 50), np.linspace(-1, 1, 50), detrend=None)

    def test_phase(self):
        t = np.linspace(0, 1, 501)
        assert phase_correlation(t, np.sin(9 * t), -np.sin(9 * t), 0, 1) == pytest.approx(-1.0)

    def test_high_frequency_count(self):
        t = np.linspace(0, 1, 1001)
        smooth = high_frequency_count(t, np.sin(2 * np.pi * t), 0, 1)
        noisy = high_frequency_count(t, np.sin(2 * np.pi * t) + 1e-3 * (-1.0) ** np.arange(1001), 0, 1)
        assert smooth <= 2 < noisy


class TestBlockMeshContrast:
    def test_coarse_criss_overdamps(self):
        coarse = run(block_ex2(K_h=1e-4, level=4, pattern="criss", t_end=2.0))
        fine = run(block_ex2(K_h=1e-4, level=16, pattern="crisscross", t_end=2.0))

        def late_swing(a):
            u = a.probe("corner 1 displacement")
            return np.ptp(u[a.times >= 1.5])

        assert coarse.energy["E_D"][-1] > 1.2 * fine.energy["E_D"][-1]
        assert late_swing(fine) > 10 * late_swing(coarse)
