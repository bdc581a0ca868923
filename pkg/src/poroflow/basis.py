"""Shape functions and quadrature on straight-sided triangles.

Nodal bases are written in barycentric coordinates. The P2 ordering is the
three vertices followed by the three edge midpoints, midpoint ``3 + i`` sitting
on local edge ``i`` (the edge opposite vertex ``i``).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

NODAL_KINDS = ("P1", "P2")


@dataclass(frozen=True)
class QuadratureRule:
    points: np.ndarray  # (n, 3) barycentric coordinates
    weights: np.ndarray  # (n,), sum to 1; multiply by the triangle area at use
    degree: int

    def __len__(self):
        return len(self.weights)


def _symmetric_orbit(a):
    b = 1.0 - 2.0 * a
    return [(b, a, a), (a, b, a), (a, a, b)]


_A4, _W4A = 0.445948490915965, 0.223381589678011
_B4, _W4B = 0.091576213509771, 0.109951743655322

_RULES = {
    1: QuadratureRule(np.array([[1 / 3, 1 / 3, 1 / 3]]), np.array([1.0]), 1),
    2: QuadratureRule(np.array(_symmetric_orbit(1 / 6)), np.full(3, 1 / 3), 2),
    4: QuadratureRule(
        np.array(_symmetric_orbit(_A4) + _symmetric_orbit(_B4)),
        np.array([_W4A] * 3 + [_W4B] * 3),
        4,
    ),
}


def quadrature(degree: int) -> QuadratureRule:
    """Symmetric Gauss rule: 3 points for degree 2, 6 points for degree 4."""
    if degree not in (2, 4):
        raise ValueError(f"no quadrature rule for degree {degree}; supported: 2, 4")
    return _RULES[degree]


def midpoint_rule() -> QuadratureRule:
    return _RULES[1]


def nodal_rule(kind: str) -> QuadratureRule:
    """Lobatto-type rule whose points are the element nodes.

    For P2 the vertex weights vanish; the edge-midpoint rule is exact to degree 2.
    """
    kind = _check_kind(kind)
    if kind == "P1":
        return QuadratureRule(np.eye(3), np.full(3, 1 / 3), 1)
    pts = np.vstack([np.eye(3), [[0, 0.5, 0.5], [0.5, 0, 0.5], [0.5, 0.5, 0]]])
    return QuadratureRule(pts, np.array([0, 0, 0, 1 / 3, 1 / 3, 1 / 3]), 2)


def _check_kind(kind):
    k = kind.upper()
    if k not in NODAL_KINDS:
        raise ValueError(f"unknown nodal element {kind!r}")
    return k


def n_basis(kind: str) -> int:
    return 3 if _check_kind(kind) == "P1" else 6


def nodal_values(kind: str, bary) -> np.ndarray:
    """Shape function values at barycentric points, shape (..., 3 or 6)."""
    L = np.asarray(bary, dtype=float)
    if _check_kind(kind) == "P1":
        return L.copy()
    l0, l1, l2 = L[..., 0], L[..., 1], L[..., 2]
    return np.stack(
        [l0 * (2 * l0 - 1), l1 * (2 * l1 - 1), l2 * (2 * l2 - 1), 4 * l1 * l2, 4 * l2 * l0, 4 * l0 * l1],
        axis=-1,
    )


def nodal_bary_derivatives(kind: str, bary) -> np.ndarray:
    """d N_a / d lambda_k at barycentric points, shape (..., nb, 3)."""
    L = np.asarray(bary, dtype=float)
    if _check_kind(kind) == "P1":
        return np.broadcast_to(np.eye(3), L.shape[:-1] + (3, 3)).copy()
    out = np.zeros(L.shape[:-1] + (6, 3))
    for i in range(3):
        out[..., i, i] = 4 * L[..., i] - 1
    for k, (a, b) in enumerate([(1, 2), (2, 0), (0, 1)]):
        out[..., 3 + k, a] = 4 * L[..., b]
        out[..., 3 + k, b] = 4 * L[..., a]
    return out


def triangle_area(verts) -> np.ndarray:
    v = np.asarray(verts, dtype=float)
    return 0.5 * (
        (v[..., 1, 0] - v[..., 0, 0]) * (v[..., 2, 1] - v[..., 0, 1])
        - (v[..., 2, 0] - v[..., 0, 0]) * (v[..., 1, 1] - v[..., 0, 1])
    )


def bary_gradients(verts) -> tuple[np.ndarray, np.ndarray]:
    """Cartesian gradients of the barycentric coordinates, shape (..., 3, 2), and areas."""
    v = np.asarray(verts, dtype=float)
    area = triangle_area(v)
    scale2 = np.max(np.sum((v - np.roll(v, 1, axis=-2)) ** 2, axis=-1), axis=-1)
    if np.any(np.abs(area) <= 1e-14 * scale2):
        raise ValueError("degenerate triangle")
    nxt = np.roll(v, -1, axis=-2)  # vertex i+1
    prv = np.roll(v, -2, axis=-2)  # vertex i+2
    g = np.stack([nxt[..., 1] - prv[..., 1], prv[..., 0] - nxt[..., 0]], axis=-1)
    return g / (2.0 * area[..., None, None]), area


def cartesian_to_bary(verts, point) -> np.ndarray:
    v = np.asarray(verts, dtype=float)
    T = np.array([[v[0, 0] - v[2, 0], v[1, 0] - v[2, 0]], [v[0, 1] - v[2, 1], v[1, 1] - v[2, 1]]])
    l01 = np.linalg.solve(T, np.asarray(point, dtype=float) - v[2])
    return np.array([l01[0], l01[1], 1.0 - l01.sum()])


def eval_nodal(kind: str, verts, point):
    """Values and Cartesian gradients of the P1/P2 shape functions at ``point``.

    Returns ``(values, gradients)`` with shapes (nb,) and (nb, 2).
    """
    grads_l, _ = bary_gradients(verts)
    L = cartesian_to_bary(verts, point)
    vals = nodal_values(kind, L)
    dN = nodal_bary_derivatives(kind, L)
    return vals, dN @ grads_l


def rt0_values(verts, signs, lengths, areas, points) -> np.ndarray:
    """RT0 basis at Cartesian ``points``.

    ``verts`` (..., 3, 2), ``signs``/``lengths`` (..., 3), ``areas`` (...,),
    ``points`` (..., nq, 2). Returns (..., nq, 3, 2).
    """
    coef = np.asarray(signs) * np.asarray(lengths) / (2.0 * np.asarray(areas)[..., None])
    diff = np.asarray(points)[..., :, None, :] - np.asarray(verts)[..., None, :, :]
    return coef[..., None, :, None] * diff


def eval_rt0(verts, signs, point):
    """The three RT0 functions of a triangle and their (constant) divergences."""
    v = np.asarray(verts, dtype=float)
    s = np.asarray(signs, dtype=float)
    _, area = bary_gradients(v)
    lengths = np.hypot(*(np.roll(v, -2, axis=0) - np.roll(v, -1, axis=0)).T)
    vals = rt0_values(v, s, lengths, area, np.asarray(point, dtype=float)[None, :])[0]
    return vals, s * lengths / area
