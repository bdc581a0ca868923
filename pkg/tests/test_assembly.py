"""Global coefficient matrices, lumping, loads and boundary-condition handling."""

import numpy as np
import pytest
import scipy.sparse as sp
from hypothesis import given, settings
from hypothesis import strategies as st

from poroflow.assembly import (
    BCSpec,
    FluidBC,
    LoadHistory,
    MaterialParams,
    SkeletonBC,
    assemble,
    build_dofmap,
    displacement_node_coordinates,
    element_mass_matrix,
    load_vectors,
    lump_mass,
)
from poroflow.benchmarks import EX1_MATERIAL
from poroflow.mesh import MeshSpec, from_arrays, generate

MAT = MaterialParams(E=1e6, nu=0.3, rho_s=2000.0, rho_f=1000.0, n_f=0.4, K_h=1e-3)
UNIT = np.array([[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]])
SIDES = ("bottom", "right", "top", "left")


def _bc(top_skel=None, top_fluid=None):
    return BCSpec(
        skeleton={s: (top_skel if s == "top" and top_skel else SkeletonBC()) for s in SIDES},
        fluid={s: (top_fluid if s == "top" and top_fluid else FluidBC()) for s in SIDES},
    )


class TestMaterial:
    def test_example_one_density(self):
        assert EX1_MATERIAL.rho == pytest.approx(1670.0, abs=1e-9)

    def test_lame(self):
        m = MaterialParams(E=1.0, nu=0.25, rho_s=1, rho_f=1, n_f=0.5, K_h=1)
        assert m.lam == pytest.approx(0.4)
        assert m.G == pytest.approx(0.4)

    @pytest.mark.parametrize(
        "kw", [dict(E=0), dict(nu=0.5), dict(nu=0), dict(rho_s=-1), dict(n_f=1.0), dict(K_h=0), dict(g=0)]
    )
    def test_rejects_invalid(self, kw):
        base = dict(E=1.0, nu=0.3, rho_s=1, rho_f=1, n_f=0.5, K_h=1)
        base.update(kw)
        with pytest.raises(ValueError):
            MaterialParams(**base)


class TestLoadHistory:
    def test_step_and_ramp(self):
        assert LoadHistory()(0.0) == 1.0
        r = LoadHistory("ramp", rise_time=0.2)
        assert r(0.1) == pytest.approx(0.5)
        assert r(1.0) == 1.0

    def test_table(self):
        h = LoadHistory("table", times=(0.0, 1.0), values=(0.0, 2.0))
        assert h(0.25) == pytest.approx(0.5)
        with pytest.raises(ValueError):
            h(1.5)

    def test_negative_time(self):
        with pytest.raises(ValueError):
            LoadHistory()(-1.0)


class TestSingleTriangle:
    def setup_method(self):
        self.mesh = from_arrays(UNIT, np.array([[0, 1, 2]]))

    def test_b_entries(self):
        sysm, _ = assemble(self.mesh, "P1RT0", MAT)
        B = sysm.B.toarray()[:, 0]
        te = self.mesh.tri_to_edge[0]
        np.testing.assert_allclose(B[te], self.mesh.sign[0] * self.mesh.edge_length[te], rtol=1e-14)

    @pytest.mark.parametrize("element", ["P1RT0", "P2RT0"])
    def test_mass_row_sums(self, element):
        for mode in ("consistent", "hinton", "lobatto"):
            sysm, _ = assemble(self.mesh, element, MAT, mass_mode=mode)
            r = np.asarray(sysm.M.sum(axis=1)).ravel()
            assert r[0::2].sum() == pytest.approx(MAT.rho * 0.5, rel=1e-12)
            assert r[1::2].sum() == pytest.approx(MAT.rho * 0.5, rel=1e-12)


class TestLumping:
    def test_p1_both_methods(self):
        Me = element_mass_matrix("P1", UNIT, rho=3.0)
        for method in ("hinton", "lobatto"):
            np.testing.assert_allclose(np.diag(lump_mass(Me, method)), np.full(3, 0.5 * 3.0 / 3), rtol=1e-14)

    def test_p2_hinton_ratio(self):
        Me = element_mass_matrix("P2", UNIT)
        d = np.diag(lump_mass(Me, "hinton"))
        assert d.sum() == pytest.approx(Me.sum(), rel=1e-14)
        assert d[0] / d[3] == pytest.approx(Me[0, 0] / Me[3, 3], rel=1e-12)
        assert d[0] / d[3] == pytest.approx(3 / 16, rel=1e-12)  # consistent diagonal A/30 : 8A/45

    def test_p2_lobatto(self):
        Me = element_mass_matrix("P2", UNIT, rho=2.0)
        np.testing.assert_allclose(np.diag(lump_mass(Me, "lobatto")), [0, 0, 0, 1 / 3, 1 / 3, 1 / 3], atol=1e-14)

    def test_unknown_method(self):
        with pytest.raises(ValueError):
            lump_mass(element_mass_matrix("P1", UNIT), "diagonal")

    @pytest.mark.parametrize("element", ["P1RT0", "P2RT0"])
    @pytest.mark.parametrize("mode", ["hinton", "lobatto"])
    def test_total_mass_preserved(self, element, mode):
        mesh = generate(MeshSpec(2, 1, 3, 2, "union_jack"))
        a, _ = assemble(mesh, element, MAT, mass_mode="consistent")
        b, _ = assemble(mesh, element, MAT, mass_mode=mode)
        assert b.M.sum() == pytest.approx(a.M.sum(), rel=1e-12)
        assert sp.linalg.norm(b.M - sp.diags(b.M.diagonal())) == 0.0
        # the fluid block is never lumped
        assert sp.linalg.norm(a.A - b.A) == 0.0


class TestGlobalProperties:
    @pytest.mark.parametrize("element", ["P1RT0", "P2RT0"])
    @pytest.mark.parametrize("pattern", ["criss", "crisscross", "union_jack"])
    def test_symmetry_exact(self, element, pattern):
        sysm, _ = assemble(generate(MeshSpec(1, 1, 2, 2, pattern)), element, MAT, mass_mode="consistent")
        for X in (sysm.M, sysm.A, sysm.K):
            assert (X - X.T).count_nonzero() == 0

    def test_worker_count_invariance(self):
        mesh = generate(MeshSpec(1, 1, 40, 40, "crisscross"))  # > one chunk of triangles
        a, _ = assemble(mesh, "P2RT0", MAT, workers=1)
        b, _ = assemble(mesh, "P2RT0", MAT, workers=3)
        for name in ("M", "Mf", "A", "K", "Q", "B"):
            x, y = getattr(a, name), getattr(b, name)
            assert np.array_equal(x.indptr, y.indptr) and np.array_equal(x.indices, y.indices)
            assert np.array_equal(x.data, y.data)

    @pytest.mark.parametrize("element", ["P1RT0", "P2RT0"])
    def test_rigid_body_modes(self, element):
        mesh = generate(MeshSpec(1, 2, 2, 3, "crisscross"))
        sysm, _ = assemble(mesh, element, MAT)
        X = displacement_node_coordinates(mesh, element[:2])
        modes = [np.tile([1.0, 0.0], len(X)), np.tile([0.0, 1.0], len(X)), np.column_stack([-X[:, 1], X[:, 0]]).ravel()]
        scale = abs(sysm.K).max()
        for r in modes:
            assert np.abs(sysm.K @ r).max() <= 1e-9 * scale * np.abs(r).max()

    @pytest.mark.parametrize("element", ["P1RT0", "P2RT0"])
    def test_definiteness(self, element):
        bc = BCSpec(
            skeleton={"left": SkeletonBC("fixed"), "right": SkeletonBC(), "top": SkeletonBC(), "bottom": SkeletonBC()},
            fluid={s: FluidBC("drained") for s in SIDES},
        )
        sysm, _ = assemble(generate(MeshSpec(1, 1, 2, 2, "criss")), element, MAT, bc, "consistent")
        assert np.linalg.eigvalsh(sysm.M.toarray()).min() > 0
        assert np.linalg.eigvalsh(sysm.A.toarray()).min() > 0
        assert np.linalg.eigvalsh(sysm.K.toarray()).min() > 0

    @settings(max_examples=15, deadline=None)
    @given(st.lists(st.floats(-2, 2), min_size=4, max_size=4), st.sampled_from(["P1RT0", "P2RT0"]))
    def test_q_against_divergence(self, c, element):
        """1^T Q^T u equals the integral of div u for a linear displacement field."""
        mesh = generate(MeshSpec(2, 1, 2, 2, "criss"))
        sysm, _ = assemble(mesh, element, MAT)
        X = displacement_node_coordinates(mesh, element[:2])
        u = np.column_stack([c[0] * X[:, 0] + c[1] * X[:, 1], c[2] * X[:, 0] + c[3] * X[:, 1]]).ravel()
        per_tri = sysm.Q.T @ u
        np.testing.assert_allclose(per_tri, (c[0] + c[3]) * mesh.tri_area, atol=1e-12)

    def test_b_columns(self):
        mesh = generate(MeshSpec(1, 1, 2, 2, "crisscross"))
        sysm, _ = assemble(mesh, "P1RT0", MAT)
        B = sysm.B.tocsc()
        for m in range(mesh.n_triangles):
            col = B[:, m].toarray().ravel()
            te = mesh.tri_to_edge[m]
            assert set(np.flatnonzero(col)) == set(te)
            np.testing.assert_allclose(col[te], mesh.sign[m] * mesh.edge_length[te], rtol=1e-14)


class TestBoundaryConditions:
    def test_elimination_partitions_dofs(self):
        mesh = generate(MeshSpec(1, 1, 2, 2, "crisscross"))
        bc = BCSpec(
            skeleton={"bottom": SkeletonBC("fixed"), "left": SkeletonBC("normal_fixed"), "right": SkeletonBC(), "top": SkeletonBC()},
            fluid={"top": FluidBC("drained"), "bottom": FluidBC(), "left": FluidBC(), "right": FluidBC()},
        )
        dm = build_dofmap(mesh, "P1RT0", bc)
        assert len(set(dm.free_disp) | set(dm.fixed_disp)) == dm.n_disp
        assert not set(dm.free_disp) & set(dm.fixed_disp)
        assert dm.n_el == mesh.n_triangles
        # 3 bottom nodes fully fixed, 2 more left nodes fixed in x
        assert len(dm.fixed_disp) == 3 * 2 + 2

    def test_missing_side_rejected(self):
        mesh = generate(MeshSpec(1, 1, 1, 1))
        with pytest.raises(ValueError, match="no skeleton condition"):
            assemble(mesh, "P1RT0", MAT, BCSpec(skeleton={"top": SkeletonBC()}, fluid={s: FluidBC() for s in SIDES}))

    def test_overlapping_spans_rejected(self):
        mesh = generate(MeshSpec(2, 1, 4, 2))
        bc = _bc()
        bc.skeleton["top"] = [SkeletonBC(span=(0, 1.5)), SkeletonBC(span=(0.5, 2))]
        with pytest.raises(ValueError, match="exactly once"):
            assemble(mesh, "P1RT0", MAT, bc)

    def test_unknown_kinds(self):
        with pytest.raises(ValueError):
            SkeletonBC("roller")
        with pytest.raises(ValueError):
            FluidBC("leaky")


class TestLoads:
    def test_p1_traction(self):
        mesh = generate(MeshSpec(1, 1, 1, 1, "criss"))
        _, dm = assemble(mesh, "P1RT0", MAT)
        P, F = load_vectors(mesh, dm, _bc(SkeletonBC("traction", (0.0, -5.0))), 0.0)
        top = mesh.side_nodes("top")
        np.testing.assert_allclose(P[2 * top + 1], -5.0 * 0.5)
        assert np.count_nonzero(P) == 2 and not np.any(F)

    def test_p2_traction(self):
        mesh = generate(MeshSpec(1, 1, 1, 1, "criss"))
        _, dm = assemble(mesh, "P2RT0", MAT)
        P, _ = load_vectors(mesh, dm, _bc(SkeletonBC("traction", (0.0, 6.0))), 0.0)
        top = mesh.side_nodes("top")
        np.testing.assert_allclose(P[2 * top + 1], 1.0, rtol=1e-14)
        edge = mesh.boundary_edge_tags["top"][0]
        assert P[2 * (mesh.n_nodes + edge) + 1] == pytest.approx(4.0, rel=1e-14)
        assert P[1::2].sum() == pytest.approx(6.0, rel=1e-14)

    def test_drained_pressure(self):
        mesh = generate(MeshSpec(1, 1, 2, 1, "criss"))
        bc = _bc(top_fluid=FluidBC("drained", 10.0))
        sysm, dm = assemble(mesh, "P1RT0", MAT, bc)
        _, F = load_vectors(mesh, dm, bc, 0.0)
        pos = {e: i for i, e in enumerate(dm.free_edges)}
        for e in mesh.boundary_edge_tags["top"]:
            assert F[pos[e]] == pytest.approx(-10.0 * mesh.edge_length[e])
        _, F0 = load_vectors(mesh, dm, _bc(top_fluid=FluidBC("drained", 0.0)), 0.0)
        assert not np.any(F0)

    def test_history_scaling(self):
        mesh = generate(MeshSpec(1, 1, 1, 1, "criss"))
        bc = _bc(SkeletonBC("traction", (0.0, -1.0), LoadHistory("ramp", rise_time=2.0)))
        sysm, dm = assemble(mesh, "P1RT0", MAT, bc)
        np.testing.assert_allclose(sysm.loads(1.0)[0], 0.5 * sysm.loads(3.0)[0])
        np.testing.assert_allclose(sysm.loads(1.0)[0], load_vectors(mesh, dm, bc, 1.0)[0])
