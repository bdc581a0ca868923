"""Global coefficient matrices for the coupled nodal / RT0 discretization.

Unknown layout
--------------
* displacement: two interleaved components per node, ``2 * node + c``. P2
  meshes append one node per edge, numbered ``n_nodes + edge``.
* Darcy velocity: one normal-flux unknown per edge.
* pressure: one constant per triangle.

Essential conditions (fixed displacement components, impermeable edges) are
homogeneous and removed by slicing; pressure enters only weakly.
"""

from __future__ import annotations

import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import basis
from .mesh import SIDES, Mesh, boundary_edges

ELEMENTS = ("P1RT0", "P2RT0")
MASS_MODES = ("consistent", "lobatto", "hinton")

_MASS_ALIASES = {
    "consistent": "consistent",
    "lobatto": "lobatto",
    "lobatto_lumped": "lobatto",
    "hinton": "hinton",
    "hinton_lumped": "hinton",
    "hrz": "hinton",
    "lumped": "hinton",
}


def normalize_element(element: str) -> str:
    key = element.upper().replace("-", "").replace("_", "")
    if key not in ELEMENTS:
        raise ValueError(f"unknown element {element!r}; expected one of {ELEMENTS}")
    return key


def normalize_mass_mode(mode: str) -> str:
    try:
        return _MASS_ALIASES[mode.lower()]
    except KeyError:
        raise ValueError(f"unknown mass mode {mode!r}; expected one of {MASS_MODES}") from None


def nodal_kind(element: str) -> str:
    return normalize_element(element)[:2]


@dataclass(frozen=True)
class MaterialParams:
    """Skeleton and pore-fluid constants in SI units (Biot-Willis coefficient 1)."""

    E: float
    nu: float
    rho_s: float
    rho_f: float
    n_f: float
    K_h: float
    g: float = 9.81

    def __post_init__(self):
        if not self.E > 0:
            raise ValueError("Young's modulus must be positive")
        if not 0.0 < self.nu < 0.5:
            raise ValueError("Poisson ratio must lie in (0, 0.5)")
        if not (self.rho_s > 0 and self.rho_f > 0):
            raise ValueError("densities must be positive")
        if not 0.0 < self.n_f < 1.0:
            raise ValueError("porosity must lie in (0, 1)")
        if not self.K_h > 0:
            raise ValueError("hydraulic conductivity must be positive")
        if not self.g > 0:
            raise ValueError("gravitational acceleration must be positive")

    @property
    def lam(self) -> float:
        return self.E * self.nu / ((1 + self.nu) * (1 - 2 * self.nu))

    @property
    def G(self) -> float:
        return self.E / (2 * (1 + self.nu))

    @property
    def constrained_modulus(self) -> float:
        return self.lam + 2 * self.G

    @property
    def rho(self) -> float:
        return self.n_f * self.rho_f + (1 - self.n_f) * self.rho_s

    @property
    def darcy_coefficient(self) -> float:
        """Factor ``n_f g / K_h`` multiplying the fluid mass block as damping."""
        return self.n_f * self.g / self.K_h

    def elasticity_matrix(self) -> np.ndarray:
        lam, G = self.lam, self.G
        return np.array([[lam + 2 * G, lam, 0.0], [lam, lam + 2 * G, 0.0], [0.0, 0.0, G]])


# --------------------------------------------------------------------------
# load histories and boundary conditions


@dataclass(frozen=True)
class LoadHistory:
    """Dimensionless multiplier of a boundary datum over time."""

    kind: str = "step"
    rise_time: float = 0.0
    times: tuple = ()
    values: tuple = ()

    def __post_init__(self):
        if self.kind not in ("step", "ramp", "table"):
            raise ValueError(f"unknown load history {self.kind!r}")
        if self.kind == "ramp" and not self.rise_time > 0:
            raise ValueError("ramp load needs a positive rise time")
        if self.kind == "table":
            if len(self.times) < 2 or len(self.times) != len(self.values):
                raise ValueError("tabulated history needs matching times/values (>= 2 rows)")
            if np.any(np.diff(self.times) <= 0):
                raise ValueError("tabulated history times must increase")

    def __call__(self, t: float) -> float:
        if t < 0:
            raise ValueError(f"load history evaluated at negative time {t}")
        if self.kind == "step":
            return 1.0
        if self.kind == "ramp":
            return min(t / self.rise_time, 1.0)
        if not self.times[0] <= t <= self.times[-1] * (1 + 1e-12):
            raise ValueError(f"time {t} outside tabulated history [{self.times[0]}, {self.times[-1]}]")
        return float(np.interp(t, self.times, self.values))


STEP = LoadHistory()

SKELETON_KINDS = ("free", "fixed", "normal_fixed", "traction")
FLUID_KINDS = ("impermeable", "drained")


@dataclass(frozen=True)
class SkeletonBC:
    kind: str = "free"
    traction: tuple = (0.0, 0.0)  # Pa, scaled by ``history``
    history: LoadHistory = STEP
    span: tuple | None = None  # (a, b) along the side, None for the whole side

    def __post_init__(self):
        if self.kind not in SKELETON_KINDS:
            raise ValueError(f"unknown skeleton condition {self.kind!r}")


@dataclass(frozen=True)
class FluidBC:
    kind: str = "impermeable"
    pressure: float = 0.0  # Pa, scaled by ``history``
    history: LoadHistory = STEP
    span: tuple | None = None

    def __post_init__(self):
        if self.kind not in FLUID_KINDS:
            raise ValueError(f"unknown fluid condition {self.kind!r}")


def _as_list(x):
    if x is None:
        return []
    return list(x) if isinstance(x, (list, tuple)) else [x]


@dataclass
class BCSpec:
    """Per-side skeleton and fluid conditions; a side may be split into spans."""

    skeleton: dict = field(default_factory=dict)
    fluid: dict = field(default_factory=dict)

    def __post_init__(self):
        for name, table in (("skeleton", self.skeleton), ("fluid", self.fluid)):
            for side in table:
                if side not in SIDES:
                    raise ValueError(f"{name} condition on unknown side {side!r}")
        self.skeleton = {s: _as_list(v) for s, v in self.skeleton.items()}
        self.fluid = {s: _as_list(v) for s, v in self.fluid.items()}


_SIDE_AXIS = {"bottom": 0, "top": 0, "left": 1, "right": 1}  # coordinate along the side
_SIDE_NORMAL = {"bottom": 1, "top": 1, "left": 0, "right": 0}  # displacement component normal to it


def _assign(mesh: Mesh, table: dict, what: str):
    """Map every boundary edge to exactly one condition of ``table``."""
    out = {}
    mid = mesh.edge_midpoints
    for side in SIDES:
        edges = boundary_edges(mesh, side)
        conds = table.get(side, [])
        if len(edges) and not conds:
            raise ValueError(f"no {what} condition given for side {side!r}")
        coord = mid[edges, _SIDE_AXIS[side]]
        hits = np.zeros((len(conds), len(edges)), dtype=bool)
        for k, c in enumerate(conds):
            if c.span is None:
                hits[k] = True
            else:
                a, b = c.span
                hits[k] = (coord >= a) & (coord <= b)
        n_hit = hits.sum(axis=0)
        if np.any(n_hit != 1):
            bad = edges[n_hit != 1]
            raise ValueError(
                f"{what} conditions on side {side!r} must cover each edge exactly once; "
                f"edges {bad[:8].tolist()} are covered {n_hit[n_hit != 1][:8].tolist()} times"
            )
        for k, c in enumerate(conds):
            if hits[k].any():
                out.setdefault((side, k), (c, edges[hits[k]]))
    return out


# --------------------------------------------------------------------------
# degrees of freedom


def element_nodes(mesh: Mesh, kind: str) -> np.ndarray:
    """Displacement nodes of each triangle, (n_tri, 3) for P1 or (n_tri, 6) for P2."""
    if kind == "P1":
        return np.asarray(mesh.triangles)
    return np.hstack([mesh.triangles, mesh.n_nodes + mesh.tri_to_edge])


def displacement_node_coordinates(mesh: Mesh, kind: str) -> np.ndarray:
    if kind == "P1":
        return np.asarray(mesh.nodes)
    return np.vstack([mesh.nodes, mesh.edge_midpoints])


def edge_displacement_nodes(mesh: Mesh, kind: str, edges) -> np.ndarray:
    """Nodes carried by the given edges: (k, 2) for P1, (k, 3) with midpoint last for P2."""
    edges = np.asarray(edges, dtype=np.int64)
    ends = mesh.edges[edges]
    if kind == "P1":
        return ends
    return np.column_stack([ends, mesh.n_nodes + edges])


@dataclass
class DofMap:
    element: str
    n_disp: int
    n_edges: int
    n_el: int
    free_disp: np.ndarray
    free_edges: np.ndarray
    fixed_disp: np.ndarray
    fixed_edges: np.ndarray

    @property
    def n_free_disp(self) -> int:
        return len(self.free_disp)

    @property
    def n_free_edges(self) -> int:
        return len(self.free_edges)

    @property
    def n_unknowns(self) -> int:
        return self.n_free_disp + self.n_free_edges + self.n_el

    def labels(self) -> list:
        """Human-readable identity of every unknown in the stacked (u, q, p) ordering."""
        comp = "xy"
        out = [f"u[node {d // 2}].{comp[d % 2]}" for d in self.free_disp]
        out += [f"q[edge {e}]" for e in self.free_edges]
        out += [f"p[triangle {m}]" for m in range(self.n_el)]
        return out

    def expand_disp(self, u_free) -> np.ndarray:
        u = np.zeros(self.n_disp)
        u[self.free_disp] = u_free
        return u

    def expand_flux(self, q_free) -> np.ndarray:
        q = np.zeros(self.n_edges)
        q[self.free_edges] = q_free
        return q


def build_dofmap(mesh: Mesh, element: str, bc: BCSpec | None) -> DofMap:
    element = normalize_element(element)
    kind = element[:2]
    n_dnodes = mesh.n_nodes + (mesh.n_edges if kind == "P2" else 0)
    n_disp = 2 * n_dnodes
    fixed_d = np.zeros(n_disp, dtype=bool)
    fixed_e = np.zeros(mesh.n_edges, dtype=bool)
    if bc is not None:
        for (side, _), (cond, edges) in _assign(mesh, bc.skeleton, "skeleton").items():
            nodes = edge_displacement_nodes(mesh, kind, edges).ravel()
            if cond.kind == "fixed":
                fixed_d[2 * nodes] = True
                fixed_d[2 * nodes + 1] = True
            elif cond.kind == "normal_fixed":
                fixed_d[2 * nodes + _SIDE_NORMAL[side]] = True
        for _, (cond, edges) in _assign(mesh, bc.fluid, "fluid").items():
            if cond.kind == "impermeable":
                fixed_e[edges] = True
    return DofMap(
        element=element,
        n_disp=n_disp,
        n_edges=mesh.n_edges,
        n_el=mesh.n_triangles,
        free_disp=np.flatnonzero(~fixed_d),
        free_edges=np.flatnonzero(~fixed_e),
        fixed_disp=np.flatnonzero(fixed_d),
        fixed_edges=np.flatnonzero(fixed_e),
    )


# --------------------------------------------------------------------------
# element kernels (vectorized over triangles)


@dataclass
class _Geometry:
    X: np.ndarray  # (nt, 3, 2)
    area: np.ndarray  # (nt,)
    grad_l: np.ndarray  # (nt, 3, 2)
    lengths: np.ndarray  # (nt, 3) local edge lengths
    signs: np.ndarray  # (nt, 3)


def _geometry(mesh: Mesh, tris: np.ndarray) -> _Geometry:
    X = mesh.nodes[mesh.triangles[tris]]
    grad_l, area = basis.bary_gradients(X)
    return _Geometry(X, area, grad_l, mesh.edge_length[mesh.tri_to_edge[tris]], mesh.sign[tris].astype(float))


def _nodal_at(kind, geo: _Geometry, bary):
    N = basis.nodal_values(kind, bary)  # (nq, nb)
    dN = basis.nodal_bary_derivatives(kind, bary)  # (nq, nb, 3)
    G = np.einsum("qak,mkd->mqad", dN, geo.grad_l)  # (nt, nq, nb, 2)
    return N, G


def _strain_matrix(G):
    nt, nq, nb, _ = G.shape
    Bm = np.zeros((nt, nq, 3, 2 * nb))
    Bm[:, :, 0, 0::2] = G[..., 0]
    Bm[:, :, 1, 1::2] = G[..., 1]
    Bm[:, :, 2, 0::2] = G[..., 1]
    Bm[:, :, 2, 1::2] = G[..., 0]
    return Bm


def _expand_scalar_mass(Ms):
    nt, nb, _ = Ms.shape
    M = np.zeros((nt, 2 * nb, 2 * nb))
    M[:, 0::2, 0::2] = Ms
    M[:, 1::2, 1::2] = Ms
    return M


def lumped_weights(kind: str, method: str, scalar_mass=None) -> np.ndarray:
    """Nodal mass fractions of a triangle (sum to 1), shape (nb,) or (nt, nb)."""
    method = normalize_mass_mode(method)
    if method == "lobatto":
        return basis.nodal_rule(kind).weights.copy()
    if method == "hinton":
        if scalar_mass is None:
            rule = basis.quadrature(2 if kind == "P1" else 4)
            N = basis.nodal_values(kind, rule.points)
            scalar_mass = np.einsum("q,qa,qb->ab", rule.weights, N, N)
        d = np.diagonal(scalar_mass, axis1=-2, axis2=-1)
        return d / d.sum(axis=-1, keepdims=True)
    raise ValueError("consistent mass has no lumped weights")


def lump_mass(element_mass, method: str) -> np.ndarray:
    """Diagonal lumped version of a scalar element mass matrix (3x3 for P1, 6x6 for P2).

    ``hinton`` scales the consistent diagonal to the element total; ``lobatto``
    applies nodal quadrature. Both conserve the element total mass.
    """
    Me = np.asarray(element_mass, dtype=float)
    nb = Me.shape[-1]
    if nb not in (3, 6):
        raise ValueError("element mass must be 3x3 (P1) or 6x6 (P2)")
    kind = "P1" if nb == 3 else "P2"
    method = normalize_mass_mode(method)
    if method == "consistent":
        raise ValueError("unknown lumping method 'consistent'")
    total = Me.sum(axis=(-2, -1))
    w = lumped_weights(kind, method, Me)
    return np.einsum("...a,ab->...ab", total[..., None] * w, np.eye(nb))


def _element_blocks(kind, mat: MaterialParams, mass_mode, geo: _Geometry):
    """Local M, Mf, A, K, Q, B for a batch of triangles."""
    rule = basis.quadrature(2 if kind == "P1" else 4)
    wA = rule.weights[None, :] * geo.area[:, None]  # (nt, nq)
    N, G = _nodal_at(kind, geo, rule.points)
    nb = N.shape[1]

    xq = np.einsum("qk,mkd->mqd", rule.points, geo.X)
    W = basis.rt0_values(geo.X, geo.signs, geo.lengths, geo.area, xq)  # (nt, nq, 3, 2)

    Ms = np.einsum("mq,qa,qb->mab", wA, N, N)
    Mf = np.zeros((len(geo.area), 2 * nb, 3))
    if mass_mode == "consistent":
        M = mat.rho * _expand_scalar_mass(Ms)
        for c in range(2):
            Mf[:, c::2, :] = mat.rho_f * np.einsum("mq,qa,mqj->maj", wA, N, W[..., c])
    else:
        w = lumped_weights(kind, mass_mode, Ms)
        if w.ndim == 1:
            w = np.broadcast_to(w, (len(geo.area), nb))
        nodal_mass = w * geo.area[:, None]  # (nt, nb)
        M = mat.rho * _expand_scalar_mass(np.einsum("ma,ab->mab", nodal_mass, np.eye(nb)))
        # coupling evaluated with the same nodal weights at the element nodes
        node_bary = basis.nodal_rule(kind).points
        xn = np.einsum("qk,mkd->mqd", node_bary, geo.X)
        Wn = basis.rt0_values(geo.X, geo.signs, geo.lengths, geo.area, xn)  # (nt, nb, 3, 2)
        for c in range(2):
            Mf[:, c::2, :] = mat.rho_f * nodal_mass[:, :, None] * Wn[..., c]

    A = (mat.rho_f / mat.n_f) * np.einsum("mq,mqid,mqjd->mij", wA, W, W)
    Bm = _strain_matrix(G)
    C = mat.elasticity_matrix()
    K = np.einsum("mq,mqsa,st,mqtb->mab", wA, Bm, C, Bm)
    # exact symmetry of the element blocks carries over to the global sum
    M, A, K = (0.5 * (X + X.transpose(0, 2, 1)) for X in (M, A, K))
    Q = np.einsum("mq,mqa->ma", wA, Bm[:, :, 0, :] + Bm[:, :, 1, :])
    B = geo.signs * geo.lengths
    return M, Mf, A, K, Q, B


def _workers():
    try:
        return max(1, int(os.environ.get("POROFLOW_THREADS", "1")))
    except ValueError:
        return 1


def _chunked(n, fn, workers, chunk=4096):
    starts = list(range(0, n, chunk))
    parts = [np.arange(s, min(s + chunk, n)) for s in starts]
    if workers > 1 and len(parts) > 1:
        with ThreadPoolExecutor(max_workers=workers) as ex:
            results = list(ex.map(fn, parts))
    else:
        results = [fn(p) for p in parts]
    return [np.concatenate(r, axis=0) for r in zip(*results)]


def _scatter(rows, cols, vals, shape):
    """Sparse sum of element contributions in a canonical (row, col, element) order."""
    r = np.ascontiguousarray(rows).ravel()
    c = np.ascontiguousarray(cols).ravel()
    v = np.ascontiguousarray(vals, dtype=float).ravel()
    order = np.lexsort((c, r))  # stable: ties keep element order
    r, c, v = r[order], c[order], v[order]
    start = np.flatnonzero(np.r_[True, (np.diff(r) != 0) | (np.diff(c) != 0)])
    sums = np.add.reduceat(v, start) if len(v) else v
    return sp.csr_matrix((sums, (r[start], c[start])), shape=shape)


# --------------------------------------------------------------------------
# global system


@dataclass
class SystemMatrices:
    M: sp.csr_matrix
    Mf: sp.csr_matrix
    A: sp.csr_matrix
    K: sp.csr_matrix
    Q: sp.csr_matrix
    B: sp.csr_matrix
    material: MaterialParams
    dofmap: DofMap
    mass_mode: str
    P_parts: list = field(default_factory=list)  # [(history, vector over free disp DOFs)]
    F_parts: list = field(default_factory=list)  # [(history, vector over free edges)]

    def __post_init__(self):
        self.QT = self.Q.T.tocsr()
        self.BT = self.B.T.tocsr()

    @property
    def darcy_coefficient(self) -> float:
        return self.material.darcy_coefficient

    def constraint(self, ud, q) -> np.ndarray:
        """Discrete incompressibility residual ``Q^T udot + B^T q`` per triangle."""
        return self.QT @ ud + self.BT @ q

    def loads(self, t: float) -> tuple[np.ndarray, np.ndarray]:
        P = np.zeros(self.dofmap.n_free_disp)
        F = np.zeros(self.dofmap.n_free_edges)
        for h, v in self.P_parts:
            P += h(t) * v
        for h, v in self.F_parts:
            F += h(t) * v
        return P, F


def assemble(
    mesh: Mesh,
    element: str,
    mat: MaterialParams,
    bc: BCSpec | None = None,
    mass_mode: str = "consistent",
    workers: int | None = None,
) -> tuple[SystemMatrices, DofMap]:
    """Assemble M, Mf, A, K, Q, B and the boundary load parts.

    ``bc=None`` keeps every unknown (no essential conditions, no loads).
    """
    element = normalize_element(element)
    kind = element[:2]
    mass_mode = normalize_mass_mode(mass_mode)
    dofmap = build_dofmap(mesh, element, bc)
    workers = _workers() if workers is None else max(1, int(workers))

    enodes = element_nodes(mesh, kind)
    edofs = np.empty((mesh.n_triangles, 2 * enodes.shape[1]), dtype=np.int64)
    edofs[:, 0::2] = 2 * enodes
    edofs[:, 1::2] = 2 * enodes + 1
    eedges = np.asarray(mesh.tri_to_edge)
    tri_ids = np.arange(mesh.n_triangles)

    def kernel(tris):
        return _element_blocks(kind, mat, mass_mode, _geometry(mesh, tris))

    Mloc, Mfloc, Aloc, Kloc, Qloc, Bloc = _chunked(mesh.n_triangles, kernel, workers)

    nd, ne, nel = dofmap.n_disp, mesh.n_edges, mesh.n_triangles
    rr = lambda a, b: np.broadcast_to(a[:, :, None], a.shape + (b.shape[1],))  # noqa: E731
    cc = lambda a, b: np.broadcast_to(b[:, None, :], (a.shape[0], a.shape[1], b.shape[1]))  # noqa: E731
    M = _scatter(rr(edofs, edofs), cc(edofs, edofs), Mloc, (nd, nd))
    K = _scatter(rr(edofs, edofs), cc(edofs, edofs), Kloc, (nd, nd))
    Mf = _scatter(rr(edofs, eedges), cc(edofs, eedges), Mfloc, (nd, ne))
    A = _scatter(rr(eedges, eedges), cc(eedges, eedges), Aloc, (ne, ne))
    Q = _scatter(edofs, np.broadcast_to(tri_ids[:, None], edofs.shape), Qloc, (nd, nel))
    B = _scatter(eedges, np.broadcast_to(tri_ids[:, None], eedges.shape), Bloc, (ne, nel))

    fd, fe = dofmap.free_disp, dofmap.free_edges
    sysm = SystemMatrices(
        M=M[fd][:, fd].tocsr(),
        Mf=Mf[fd][:, fe].tocsr(),
        A=A[fe][:, fe].tocsr(),
        K=K[fd][:, fd].tocsr(),
        Q=Q[fd].tocsr(),
        B=B[fe].tocsr(),
        material=mat,
        dofmap=dofmap,
        mass_mode=mass_mode,
    )
    if bc is not None:
        sysm.P_parts, sysm.F_parts = _load_parts(mesh, dofmap, bc)
    return sysm, dofmap


def _edge_load_weights(kind: str, lengths):
    """Integrals of the edge shape functions along straight edges (consistent loads)."""
    lengths = np.asarray(lengths, dtype=float)[:, None]
    if kind == "P1":
        return lengths * np.array([0.5, 0.5])
    # Gauss-Legendre on [0, 1], exact for the quadratic shape functions
    s, w = np.polynomial.legendre.leggauss(3)
    s = 0.5 * (s + 1.0)
    w = 0.5 * w
    shape = np.stack([(1 - s) * (1 - 2 * s), s * (2 * s - 1), 4 * s * (1 - s)], axis=1)
    return lengths * (w @ shape)


def _load_parts(mesh: Mesh, dofmap: DofMap, bc: BCSpec):
    kind = dofmap.element[:2]
    pos_d = np.full(dofmap.n_disp, -1)
    pos_d[dofmap.free_disp] = np.arange(dofmap.n_free_disp)
    pos_e = np.full(dofmap.n_edges, -1)
    pos_e[dofmap.free_edges] = np.arange(dofmap.n_free_edges)

    P_parts, F_parts = [], []
    for _, (cond, edges) in _assign(mesh, bc.skeleton, "skeleton").items():
        if cond.kind != "traction" or not np.any(cond.traction):
            continue
        nodes = edge_displacement_nodes(mesh, kind, edges)
        wts = _edge_load_weights(kind, mesh.edge_length[edges])
        full = np.zeros(dofmap.n_disp)
        for c in range(2):
            np.add.at(full, 2 * nodes.ravel() + c, (wts * cond.traction[c]).ravel())
        keep = pos_d >= 0
        vec = np.zeros(dofmap.n_free_disp)
        vec[pos_d[keep]] = full[keep]
        P_parts.append((cond.history, vec))
    for _, (cond, edges) in _assign(mesh, bc.fluid, "fluid").items():
        if cond.kind != "drained" or cond.pressure == 0.0:
            continue
        vec = np.zeros(dofmap.n_free_edges)
        # unit normal flux on its own boundary edge: integral is p * l
        vec[pos_e[edges]] = -cond.pressure * mesh.edge_length[edges]
        F_parts.append((cond.history, vec))
    return P_parts, F_parts


def load_vectors(mesh: Mesh, dofmap: DofMap, bc: BCSpec, t: float) -> tuple[np.ndarray, np.ndarray]:
    """Boundary load vectors (traction on skeleton DOFs, pressure on edge DOFs) at time ``t``."""
    if t < 0:
        raise ValueError("time must be non-negative")
    P_parts, F_parts = _load_parts(mesh, dofmap, bc)
    P = np.zeros(dofmap.n_free_disp)
    F = np.zeros(dofmap.n_free_edges)
    for h, v in P_parts:
        P += h(t) * v
    for h, v in F_parts:
        F += h(t) * v
    return P, F


def vector_laplacian(mesh: Mesh, kind: str, free_disp=None) -> sp.csr_matrix:
    """H1-seminorm matrix of the displacement space, optionally restricted to free DOFs."""
    tris = np.arange(mesh.n_triangles)
    geo = _geometry(mesh, tris)
    rule = basis.quadrature(2)  # gradients are at most linear
    wA = rule.weights[None, :] * geo.area[:, None]
    _, G = _nodal_at(kind, geo, rule.points)
    Ls = np.einsum("mq,mqad,mqbd->mab", wA, G, G)
    L = _expand_scalar_mass(Ls)
    enodes = element_nodes(mesh, kind)
    edofs = np.empty((mesh.n_triangles, 2 * enodes.shape[1]), dtype=np.int64)
    edofs[:, 0::2] = 2 * enodes
    edofs[:, 1::2] = 2 * enodes + 1
    nd = 2 * (mesh.n_nodes + (mesh.n_edges if kind == "P2" else 0))
    rows = np.broadcast_to(edofs[:, :, None], L.shape)
    cols = np.broadcast_to(edofs[:, None, :], L.shape)
    out = _scatter(rows, cols, L, (nd, nd))
    if free_disp is not None:
        out = out[free_disp][:, free_disp].tocsr()
    return out


def element_mass_matrix(kind: str, verts, rho: float = 1.0, degree: int | None = None) -> np.ndarray:
    """Consistent scalar mass matrix of one triangle."""
    if degree is None:
        degree = 2 if kind == "P1" else 4
    rule = basis.quadrature(degree)
    area = basis.triangle_area(np.asarray(verts, dtype=float))
    N = basis.nodal_values(kind, rule.points)
    return rho * area * np.einsum("q,qa,qb->ab", rule.weights, N, N)
