"""Structured triangulations of rectangles with RT0-ready edge topology.

Three macroelement patterns are supported:

* ``criss``       one cell split by its bottom-left to top-right diagonal (2 triangles)
* ``crisscross``  one cell split by both diagonals through a center node (4 triangles)
* ``union_jack``  a 2x2 block of cells whose diagonals all meet at the block
                  center; equivalently cells with checkered diagonal direction
                  (8 triangles)

Edge normals follow a single global rule: the unit normal of an edge is the
outward normal of the lowest-numbered triangle that owns it. Boundary edges
therefore always point out of the domain.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

PATTERNS = ("criss", "crisscross", "union_jack")
SIDES = ("bottom", "right", "top", "left")

_PATTERN_ALIASES = {
    "criss": "criss",
    "crisscross": "crisscross",
    "criss_cross": "crisscross",
    "union_jack": "union_jack",
    "unionjack": "union_jack",
}


def normalize_pattern(pattern: str) -> str:
    key = pattern.strip().lower().replace("-", "_").replace(" ", "_")
    try:
        return _PATTERN_ALIASES[key]
    except KeyError:
        raise ValueError(f"unknown mesh pattern {pattern!r}; expected one of {PATTERNS}") from None


@dataclass(frozen=True)
class MeshSpec:
    """Rectangle ``[0, width] x [0, height]`` tiled by ``nx`` x ``ny`` macroelements."""

    width: float
    height: float
    nx: int
    ny: int
    pattern: str = "crisscross"

    def __post_init__(self):
        if not (self.width > 0 and self.height > 0):
            raise ValueError(f"domain dimensions must be positive, got {self.width} x {self.height}")
        if int(self.nx) != self.nx or int(self.ny) != self.ny or self.nx < 1 or self.ny < 1:
            raise ValueError(f"macroelement counts must be integers >= 1, got nx={self.nx}, ny={self.ny}")
        object.__setattr__(self, "nx", int(self.nx))
        object.__setattr__(self, "ny", int(self.ny))
        object.__setattr__(self, "pattern", normalize_pattern(self.pattern))

    @property
    def cells(self) -> tuple[int, int]:
        """Number of rectangular grid cells along x and y."""
        if self.pattern == "union_jack":
            return 2 * self.nx, 2 * self.ny
        return self.nx, self.ny


def _frozen(a):
    a = np.ascontiguousarray(a)
    a.flags.writeable = False
    return a


@dataclass(frozen=True)
class Mesh:
    nodes: np.ndarray  # (n_nodes, 2)
    triangles: np.ndarray  # (n_tri, 3), counterclockwise
    edges: np.ndarray  # (n_edges, 2)
    tri_to_edge: np.ndarray  # (n_tri, 3), local edge i opposite local vertex i
    edge_to_tri: np.ndarray  # (n_edges, 2), second entry -1 on the boundary
    edge_normal: np.ndarray  # (n_edges, 2), global unit normal
    sign: np.ndarray  # (n_tri, 3), +1 / -1
    edge_length: np.ndarray
    tri_area: np.ndarray
    boundary_edge_tags: dict = field(default_factory=dict)
    boundary_node_tags: dict = field(default_factory=dict)
    spec: MeshSpec | None = None

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    @property
    def n_triangles(self) -> int:
        return len(self.triangles)

    @property
    def n_edges(self) -> int:
        return len(self.edges)

    @property
    def is_boundary_edge(self) -> np.ndarray:
        return self.edge_to_tri[:, 1] < 0

    @property
    def interior_edges(self) -> np.ndarray:
        return np.flatnonzero(self.edge_to_tri[:, 1] >= 0)

    @property
    def edge_midpoints(self) -> np.ndarray:
        return 0.5 * (self.nodes[self.edges[:, 0]] + self.nodes[self.edges[:, 1]])

    @property
    def centroids(self) -> np.ndarray:
        return self.nodes[self.triangles].mean(axis=1)

    @property
    def min_edge_length(self) -> float:
        return float(self.edge_length.min())

    def side_nodes(self, side: str) -> np.ndarray:
        _check_side(side)
        return self.boundary_node_tags[side]


def _check_side(side):
    if side not in SIDES:
        raise ValueError(f"unknown side label {side!r}; expected one of {SIDES}")


def boundary_edges(mesh: Mesh, side: str) -> np.ndarray:
    """Edge indices lying on ``side`` (one of bottom/right/top/left)."""
    _check_side(side)
    return mesh.boundary_edge_tags[side]


def _cell_triangles(pattern, ncx, ncy, n_grid):
    def gid(i, j):
        return j * (ncx + 1) + i

    tris = []
    for j in range(ncy):
        for i in range(ncx):
            bl, br, tr, tl = gid(i, j), gid(i + 1, j), gid(i + 1, j + 1), gid(i, j + 1)
            if pattern == "crisscross":
                c = n_grid + j * ncx + i
                tris += [(bl, br, c), (br, tr, c), (tr, tl, c), (tl, bl, c)]
            elif pattern == "criss" or (i + j) % 2 == 0:
                tris += [(bl, br, tr), (bl, tr, tl)]
            else:
                tris += [(bl, br, tl), (br, tr, tl)]
    return np.array(tris, dtype=np.int64)


def generate(spec: MeshSpec) -> Mesh:
    ncx, ncy = spec.cells
    xs = np.linspace(0.0, spec.width, ncx + 1)
    ys = np.linspace(0.0, spec.height, ncy + 1)
    gx, gy = np.meshgrid(xs, ys)
    nodes = np.column_stack([gx.ravel(), gy.ravel()])
    n_grid = len(nodes)
    if spec.pattern == "crisscross":
        cx = 0.5 * (xs[:-1] + xs[1:])
        cy = 0.5 * (ys[:-1] + ys[1:])
        ccx, ccy = np.meshgrid(cx, cy)
        nodes = np.vstack([nodes, np.column_stack([ccx.ravel(), ccy.ravel()])])

    triangles = _cell_triangles(spec.pattern, ncx, ncy, n_grid)
    return from_arrays(nodes, triangles, spec=spec)


def from_arrays(nodes, triangles, spec: MeshSpec | None = None, tol: float | None = None) -> Mesh:
    """Build the full edge topology for a counterclockwise triangulation.

    Boundary sides are tagged against the bounding box of ``nodes``.
    """
    nodes = np.asarray(nodes, dtype=float)
    triangles = np.asarray(triangles, dtype=np.int64)
    n_tri = len(triangles)

    p = nodes[triangles]
    area = 0.5 * (
        (p[:, 1, 0] - p[:, 0, 0]) * (p[:, 2, 1] - p[:, 0, 1])
        - (p[:, 2, 0] - p[:, 0, 0]) * (p[:, 1, 1] - p[:, 0, 1])
    )
    scale = np.ptp(nodes, axis=0).max()
    if np.any(area <= 1e-14 * scale**2):
        bad = np.flatnonzero(area <= 1e-14 * scale**2)
        raise ValueError(f"triangles {bad[:10].tolist()} are degenerate or clockwise")

    # local edge i joins vertices i+1 and i+2
    local = np.stack([triangles[:, [1, 2]], triangles[:, [2, 0]], triangles[:, [0, 1]]], axis=1)
    keys = np.sort(local.reshape(-1, 2), axis=1)
    uniq, first, inverse = np.unique(keys, axis=0, return_index=True, return_inverse=True)
    inverse = inverse.ravel()
    order = np.argsort(first, kind="stable")
    rank = np.empty_like(order)
    rank[order] = np.arange(len(order))
    edges = uniq[order]
    tri_to_edge = rank[inverse].reshape(n_tri, 3)

    n_edges = len(edges)
    edge_to_tri = np.full((n_edges, 2), -1, dtype=np.int64)
    counts = np.zeros(n_edges, dtype=np.int64)
    for m in range(n_tri):
        for e in tri_to_edge[m]:
            if counts[e] >= 2:
                raise ValueError(f"edge {edges[e].tolist()} shared by more than two triangles")
            edge_to_tri[e, counts[e]] = m
            counts[e] += 1

    # outward normal of each local edge, then the owner's normal defines the global one
    a = nodes[local[:, :, 0]]
    b = nodes[local[:, :, 1]]
    d = b - a
    length_local = np.hypot(d[..., 0], d[..., 1])
    n_out = np.stack([d[..., 1], -d[..., 0]], axis=-1) / length_local[..., None]

    owner = edge_to_tri[:, 0]
    sign = np.where(owner[tri_to_edge] == np.arange(n_tri)[:, None], 1, -1).astype(np.int64)
    edge_normal = np.empty((n_edges, 2))
    edge_length = np.empty(n_edges)
    own_m, own_i = np.nonzero(sign == 1)
    edge_normal[tri_to_edge[own_m, own_i]] = n_out[own_m, own_i]
    edge_length[tri_to_edge[own_m, own_i]] = length_local[own_m, own_i]

    lo = nodes.min(axis=0)
    hi = nodes.max(axis=0)
    if tol is None:
        tol = 1e-9 * float(np.hypot(*(hi - lo)))
    side_lines = {
        "bottom": (1, lo[1]),
        "right": (0, hi[0]),
        "top": (1, hi[1]),
        "left": (0, lo[0]),
    }
    bnd = np.flatnonzero(edge_to_tri[:, 1] < 0)
    edge_tags, node_tags = {}, {}
    for side, (axis, value) in side_lines.items():
        on_node = np.abs(nodes[:, axis] - value) <= tol
        node_tags[side] = _frozen(np.flatnonzero(on_node))
        on_edge = on_node[edges[bnd, 0]] & on_node[edges[bnd, 1]]
        edge_tags[side] = _frozen(bnd[on_edge])

    return Mesh(
        nodes=_frozen(nodes),
        triangles=_frozen(triangles),
        edges=_frozen(edges),
        tri_to_edge=_frozen(tri_to_edge),
        edge_to_tri=_frozen(edge_to_tri),
        edge_normal=_frozen(edge_normal),
        sign=_frozen(sign),
        edge_length=_frozen(edge_length),
        tri_area=_frozen(area),
        boundary_edge_tags=edge_tags,
        boundary_node_tags=node_tags,
        spec=spec,
    )


def write_text(mesh: Mesh, path) -> None:
    """Dump node, triangle and edge tables (with orientation signs) for debugging."""
    with open(path, "w") as fh:
        fh.write(f"# nodes {mesh.n_nodes}\n# id x y\n")
        for i, (x, y) in enumerate(mesh.nodes):
            fh.write(f"{i} {x:.17g} {y:.17g}\n")
        fh.write(f"# triangles {mesh.n_triangles}\n# id n0 n1 n2 e0 e1 e2 s0 s1 s2 area\n")
        for m, (tri, te, s) in enumerate(zip(mesh.triangles, mesh.tri_to_edge, mesh.sign)):
            fh.write(
                f"{m} {tri[0]} {tri[1]} {tri[2]} {te[0]} {te[1]} {te[2]} "
                f"{s[0]:+d} {s[1]:+d} {s[2]:+d} {mesh.tri_area[m]:.17g}\n"
            )
        fh.write(f"# edges {mesh.n_edges}\n# id n0 n1 t0 t1 ex ey length\n")
        for j, (e, t, nrm) in enumerate(zip(mesh.edges, mesh.edge_to_tri, mesh.edge_normal)):
            fh.write(
                f"{j} {e[0]} {e[1]} {t[0]} {t[1]} {nrm[0]:.17g} {nrm[1]:.17g} "
                f"{mesh.edge_length[j]:.17g}\n"
            )
