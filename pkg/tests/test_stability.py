"""Constraint-rank tests, the normalized inf-sup value and pressure oscillation indices."""

import numpy as np
import pytest

from poroflow.mesh import MeshSpec, generate
from poroflow.stability import (
    checkerboard_metric,
    classify,
    constraint_matrix,
    global_spurious_test,
    infsup_test,
    infsup_value,
    local_spurious_test,
    neighbor_jump,
    rank_deficiency,
)


class TestRank:
    @pytest.mark.parametrize(
        "element,pattern,expected",
        [("P1", "criss", 0), ("P1", "crisscross", 1), ("P1", "union_jack", 0), ("P2", "criss", 0), ("P2", "crisscross", 0), ("P2", "union_jack", 0)],
    )
    def test_local(self, element, pattern, expected):
        assert local_spurious_test(element, pattern) == expected

    def test_local_is_per_macroelement(self):
        assert local_spurious_test("P1", "crisscross", n=3) == pytest.approx(1.0)

    @pytest.mark.parametrize(
        "element,pattern,ok", [("P1", "criss", True), ("P1", "union_jack", False), ("P2", "crisscross", True)]
    )
    def test_global(self, element, pattern, ok):
        d = global_spurious_test(element, pattern)
        assert (d == 0) if ok else (d >= 1)

    def test_permutation_invariance(self):
        Q, _ = constraint_matrix(generate(MeshSpec(1, 1, 2, 2, "crisscross")), "P1")
        rng = np.random.default_rng(0)
        Qd = Q.toarray()
        P = Qd[rng.permutation(Qd.shape[0])][:, rng.permutation(Qd.shape[1])]
        assert rank_deficiency(P) == rank_deficiency(Q)


class TestInfSup:
    def test_scale_invariance(self):
        a, _ = infsup_value("P2", "criss", 2, size=1.0)
        b, _ = infsup_value("P2", "criss", 2, size=7.5)
        assert b == pytest.approx(a, rel=1e-10)

    @pytest.mark.parametrize("pattern", ["criss", "crisscross", "union_jack"])
    def test_p1_decreases(self, pattern):
        v = [infsup_value("P1", pattern, n)[0] for n in (1, 2, 4, 8)]
        assert all(x > y for x, y in zip(v, v[1:]))

    def test_p2_bounded_below(self):
        v = [infsup_value("P2", "criss", n)[0] for n in (1, 2, 4, 8)]
        assert min(v) > 0.5

    def test_report(self):
        r = infsup_test("P2", "criss", levels=(1, 2))
        assert r.verdict == "undetermined" and r.row[:2] == ("✓", "✓")
        assert all(v > 0 for v in r.values)


class TestClassify:
    def test_rules(self):
        assert classify((4, 8, 16), (0.8, 0.75, 0.72)) == "passes"
        assert classify((4, 8, 16), (0.4, 0.2, 0.1)) == "fails"
        assert classify((4, 8, 16), (0.5, 0.4, 0.3)) == "fails"  # still dropping by 25 %

    def test_needs_levels(self):
        with pytest.raises(ValueError):
            classify((1, 2), (1.0, 1.0))


class TestOscillationIndex:
    def setup_method(self):
        self.mesh = generate(MeshSpec(1, 1, 4, 4, "crisscross"))

    def test_constant_is_zero(self):
        assert checkerboard_metric(self.mesh, np.full(self.mesh.n_triangles, 3.0)) == 0.0
        assert neighbor_jump(self.mesh, np.full(self.mesh.n_triangles, 3.0)) == 0.0

    def test_alternating_field(self):
        m = self.mesh
        p = np.where(np.arange(m.n_triangles) % 2 == 0, 1.0, -1.0)
        inner = m.interior_edges
        a, b = m.edge_to_tri[inner].T
        direct = np.sum((p[a] - p[b]) ** 2 * m.edge_length[inner]) / np.sum(p**2 * m.tri_area)
        assert checkerboard_metric(m, p) == pytest.approx(direct, rel=1e-14)
        # the four spokes of every cell separate opposite signs
        spokes = 4 * 16 * np.hypot(0.125, 0.125)
        assert checkerboard_metric(m, p) >= 4 * spokes / 1.0

    def test_smooth_vs_rough_under_refinement(self):
        smooth, rough = [], []
        for n in (4, 8, 16):
            m = generate(MeshSpec(1, 1, n, n, "crisscross"))
            c = m.centroids
            smooth.append(neighbor_jump(m, 1.0 + c[:, 0] + c[:, 1]))
            rough.append(neighbor_jump(m, np.where(np.arange(m.n_triangles) % 2 == 0, 1.0, -1.0)))
        assert smooth[0] > smooth[1] > smooth[2]
        assert min(rough) > 1.0

    def test_shape_check(self):
        with pytest.raises(ValueError):
            checkerboard_metric(self.mesh, np.zeros(3))
