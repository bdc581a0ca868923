"""Constraint-rank, inf-sup and checkerboard diagnostics for the nodal/P0 pairs.

Everything here works on the incompressible-elasticity limit, where the only
coupling left is the divergence matrix ``Q`` between displacement and
elemental pressure.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import splu

from .assembly import BCSpec, FluidBC, MaterialParams, SkeletonBC, assemble, vector_laplacian
from .mesh import Mesh, MeshSpec, generate

LEVELS = (1, 2, 4, 8, 16)
ZERO_EIG = 1e-10  # eigenvalues below this fraction of the largest count as zero
RANK_TOL = 1e-10
FAIL_DROP = 2.0  # N=4 -> N=16 drop factor that marks failure
PASS_CHANGE = 0.2  # N=8 -> N=16 relative change accepted as an asymptote

# Q does not depend on material constants; any admissible set will do.
_UNIT = MaterialParams(E=1.0, nu=0.25, rho_s=1.0, rho_f=1.0, n_f=0.5, K_h=1.0)


def cantilever_bc() -> BCSpec:
    """Left side clamped, the other sides traction-free; all sides impermeable."""
    return BCSpec(
        skeleton={"left": SkeletonBC("fixed"), "right": SkeletonBC(), "top": SkeletonBC(), "bottom": SkeletonBC()},
        fluid={s: FluidBC() for s in ("left", "right", "top", "bottom")},
    )


def _kind(element: str) -> str:
    k = element.upper()[:2]
    if k not in ("P1", "P2"):
        raise ValueError(f"unknown element {element!r}")
    return k


def constraint_matrix(mesh: Mesh, kind: str, bc: BCSpec | None = None):
    """Divergence coupling ``Q`` (free displacement DOFs x triangles) and its DOF map."""
    sysm, dofmap = assemble(mesh, kind + "RT0", _UNIT, bc)
    return sysm.Q, dofmap


def rank_deficiency(Q, tol: float = RANK_TOL) -> int:
    """Number of pressure modes with ``Q p = 0`` (column-rank deficiency)."""
    Qd = Q.toarray() if hasattr(Q, "toarray") else np.asarray(Q)
    if Qd.size == 0:
        return Qd.shape[1]
    s = np.linalg.svd(Qd, compute_uv=False)
    rank = int(np.sum(s > tol * s.max())) if s.size and s.max() > 0 else 0
    return Qd.shape[1] - rank


def local_spurious_test(element: str, pattern: str, n: int = 1) -> float:
    """Redundant constraints per macroelement on an ``n x n`` patch with no boundary conditions."""
    mesh = generate(MeshSpec(1.0, 1.0, n, n, pattern))
    Q, _ = constraint_matrix(mesh, _kind(element), None)
    return rank_deficiency(Q) / (n * n)


def global_spurious_test(element: str, pattern: str, bc: BCSpec | None = None, n: int = 1, size: float = 1.0) -> int:
    """Dimension of the pressure kernel of the assembled ``Q`` with boundary conditions applied."""
    mesh = generate(MeshSpec(size, size, n, n, pattern))
    Q, _ = constraint_matrix(mesh, _kind(element), cantilever_bc() if bc is None else bc)
    return rank_deficiency(Q)


def infsup_value(element: str, pattern: str, n: int, size: float = 1.0) -> tuple[float, int]:
    """Normalized inf-sup value of the clamped square and the number of zero modes.

    Solves ``Q^T S^{-1} Q x = mu T x`` with ``S`` the H1-seminorm matrix on the
    free displacement DOFs and ``T`` the elemental pressure mass; returns
    ``sqrt`` of the smallest eigenvalue above ``ZERO_EIG * mu_max``.
    """
    kind = _kind(element)
    mesh = generate(MeshSpec(size, size, n, n, pattern))
    Q, dofmap = constraint_matrix(mesh, kind, cantilever_bc())
    S = vector_laplacian(mesh, kind, dofmap.free_disp).tocsc()
    lu = splu(S)
    G = Q.toarray()
    X = lu.solve(G)
    H = G.T @ X
    H = 0.5 * (H + H.T)
    mu = sla.eigh(H, np.diag(mesh.tri_area), eigvals_only=True)
    mu_max = mu.max()
    nonzero = mu[mu > ZERO_EIG * mu_max]
    return float(np.sqrt(nonzero.min())), int(len(mu) - len(nonzero))


def classify(levels, values) -> str:
    """``passes`` when the sequence levels off, ``fails`` when it keeps dropping."""
    v = dict(zip(levels, values))
    if not all(k in v for k in (4, 8, 16)):
        raise ValueError("classification needs levels 4, 8 and 16")
    if v[4] / v[16] > FAIL_DROP:
        return "fails"
    if abs(v[16] / v[8] - 1.0) <= PASS_CHANGE:
        return "passes"
    return "fails"


@dataclass
class InfSupReport:
    element: str
    pattern: str
    levels: tuple
    values: list
    zero_modes: list
    verdict: str
    local_deficiency: float
    global_deficiency: int
    notes: dict = field(default_factory=dict)

    @property
    def row(self) -> tuple[str, str, str]:
        """Table-style marks: element-wise, assembled (N=1), inf-sup."""
        mark = lambda ok: "✓" if ok else "X"  # noqa: E731
        return (mark(self.local_deficiency == 0), mark(self.global_deficiency == 0), mark(self.verdict == "passes"))


def infsup_test(element: str, pattern: str, levels=LEVELS, workers: int = 1) -> InfSupReport:
    levels = tuple(int(n) for n in levels)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(lambda n: infsup_value(element, pattern, n), levels))
    else:
        results = [infsup_value(element, pattern, n) for n in levels]
    values = [r[0] for r in results]
    zeros = [r[1] for r in results]
    verdict = classify(levels, values) if {4, 8, 16} <= set(levels) else "undetermined"
    return InfSupReport(
        element=_kind(element),
        pattern=generate(MeshSpec(1, 1, 1, 1, pattern)).spec.pattern,
        levels=levels,
        values=values,
        zero_modes=zeros,
        verdict=verdict,
        local_deficiency=local_spurious_test(element, pattern),
        global_deficiency=global_spurious_test(element, pattern),
    )


def checkerboard_metric(mesh: Mesh, p, eps: float = 1e-300) -> float:
    """Length-weighted squared pressure jumps over interior edges, relative to ``sum p^2 A``."""
    p = np.asarray(p, dtype=float)
    if p.shape != (mesh.n_triangles,):
        raise ValueError("pressure must have one value per triangle")
    inner = mesh.interior_edges
    a, b = mesh.edge_to_tri[inner, 0], mesh.edge_to_tri[inner, 1]
    jumps = np.sum((p[a] - p[b]) ** 2 * mesh.edge_length[inner])
    return float(jumps / (np.sum(p**2 * mesh.tri_area) + eps))


def neighbor_jump(mesh: Mesh, p) -> float:
    """Mean pressure jump across interior edges relative to the mean ``|p|``.

    O(h) for a smooth field, O(1) for a checkerboard.
    """
    p = np.asarray(p, dtype=float)
    inner = mesh.interior_edges
    jump = np.abs(p[mesh.edge_to_tri[inner, 0]] - p[mesh.edge_to_tri[inner, 1]]).mean()
    return float(jump / max(np.abs(p).mean(), 1e-300))
