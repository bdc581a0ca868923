"""Reference configurations and the post-processing used to judge them.

Three cases are provided:

``column_ex1``   a 0.1 m x 10 m drained column under a surface step load
``block_ex2``    a 2 m x 1 m half block, loaded on the left half of its top
``bracket_ex3``  a 1 m x 1 m clamped bracket of very low permeability
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field, replace

import numpy as np

from . import basis
from .assembly import (
    BCSpec,
    FluidBC,
    MaterialParams,
    SkeletonBC,
    assemble,
    displacement_node_coordinates,
    normalize_element,
    normalize_mass_mode,
)
from .mesh import Mesh, MeshSpec, generate
from .timestepper import NewmarkIntegrator, integrate, terzaghi_settlement

CASES = ("column_ex1", "block_ex2", "bracket_ex3")
QUANTITIES = ("u", "v", "a", "w", "p")

# Table values of the three material sets (SI units)
EX1_MATERIAL = MaterialParams(E=14.516e6, nu=0.3, rho_s=2000.0, rho_f=1000.0, n_f=0.33, K_h=1e-2)
EX2_MATERIAL = MaterialParams(E=14.516e6, nu=0.3, rho_s=2700.0, rho_f=1000.0, n_f=0.42, K_h=1e-1)
EX3_MATERIAL = MaterialParams(E=10e3, nu=0.4, rho_s=2667.0, rho_f=1000.0, n_f=0.4, K_h=1e-7)

WAVEFRONT_THRESHOLD = 1e-5  # fraction of the static settlement marking arrival
WAVEFRONT_TIMES = (0.025, 0.075, 0.15)


@dataclass(frozen=True)
class ProbeSpec:
    """A scalar time history: ``quantity`` at the mesh entity nearest ``point``.

    ``u``/``v``/``a`` are nodal skeleton displacement, velocity and acceleration,
    ``w`` the Darcy velocity evaluated inside the triangle holding the point,
    ``p`` the pressure of that triangle. ``component`` is 0 (x) or 1 (y) for vectors.
    """

    label: str
    quantity: str
    point: tuple
    component: int | None = 1

    def __post_init__(self):
        if self.quantity not in QUANTITIES:
            raise ValueError(f"probe {self.label!r}: unknown quantity {self.quantity!r}")
        if self.quantity != "p" and self.component not in (0, 1):
            raise ValueError(f"probe {self.label!r}: component must be 0 or 1")


@dataclass
class BenchmarkCase:
    name: str
    mesh_spec: MeshSpec
    material: MaterialParams
    bc: BCSpec
    dt: float
    t_end: float
    element: str = "P1RT0"
    mass_mode: str = "hinton"
    probes: tuple = ()
    snapshot_times: tuple = ()
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError("time step must be positive")
        if not self.t_end > 0:
            raise ValueError("duration must be positive")
        self.element = normalize_element(self.element)
        self.mass_mode = normalize_mass_mode(self.mass_mode)

    @property
    def n_steps(self) -> int:
        return int(round(self.t_end / self.dt))

    def with_(self, **changes) -> "BenchmarkCase":
        return replace(self, **changes)


# --------------------------------------------------------------------------
# the three cases


def _sides(**kw):
    return {s: kw.get(s) for s in ("bottom", "right", "top", "left")}


def column_ex1(t_end: float = 8.0, dt: float = 1e-4, load: float = 3e3, **kw) -> BenchmarkCase:
    """Drained column: 100 crisscross cells (400 triangles), top step load."""
    bc = BCSpec(
        skeleton=_sides(
            top=SkeletonBC("traction", (0.0, -load)),
            bottom=SkeletonBC("normal_fixed"),
            left=SkeletonBC("normal_fixed"),
            right=SkeletonBC("normal_fixed"),
        ),
        fluid=_sides(top=FluidBC("drained"), bottom=FluidBC(), left=FluidBC(), right=FluidBC()),
    )
    probes = (
        ProbeSpec("top displacement", "u", (0.0, 10.0), 1),
        ProbeSpec("top velocity", "v", (0.0, 10.0), 1),
        ProbeSpec("velocity z=9", "v", (0.0, 9.0), 1),
        ProbeSpec("velocity z=8", "v", (0.0, 8.0), 1),
        ProbeSpec("pressure z=5", "p", (0.05, 5.0), None),
        ProbeSpec("bottom pressure", "p", (0.05, 0.0), None),
    )
    base = dict(
        name="column_ex1",
        mesh_spec=MeshSpec(0.1, 10.0, 1, 100, "crisscross"),
        material=EX1_MATERIAL,
        bc=bc,
        dt=dt,
        t_end=t_end,
        element="P1RT0",
        mass_mode="hinton",
        probes=probes,
        snapshot_times=WAVEFRONT_TIMES,
        meta={"load": load, "length": 10.0},
    )
    base.update(kw)
    return BenchmarkCase(**base)


def block_ex2(
    K_h: float = 1e-1,
    level: int = 16,
    pattern: str = "crisscross",
    t_end: float = 4.0,
    dt: float = 5e-3,
    load: float = 15e3,
    loaded_width: float = 1.0,
    **kw,
) -> BenchmarkCase:
    """Half block 2 m x 1 m with ``level`` macroelements per metre."""
    width, height = 2.0, 1.0
    bc = BCSpec(
        skeleton=_sides(
            top=[
                SkeletonBC("traction", (0.0, -load), span=(0.0, loaded_width)),
                SkeletonBC("free", span=(loaded_width, width)),
            ],
            bottom=SkeletonBC("normal_fixed"),
            left=SkeletonBC("normal_fixed"),
            right=SkeletonBC("normal_fixed"),
        ),
        fluid=_sides(
            top=[FluidBC("impermeable", span=(0.0, loaded_width)), FluidBC("drained", span=(loaded_width, width))],
            bottom=FluidBC(),
            left=FluidBC(),
            right=FluidBC(),
        ),
    )
    probes = (
        ProbeSpec("corner 1 displacement", "u", (0.0, height), 1),
        ProbeSpec("corner 2 displacement", "u", (width, height), 1),
        ProbeSpec("corner 1 velocity", "v", (0.0, height), 1),
        ProbeSpec("corner 2 velocity", "v", (width, height), 1),
        ProbeSpec("corner 1 darcy velocity", "w", (0.0, height), 1),
        ProbeSpec("corner 2 darcy velocity", "w", (width, height), 1),
        ProbeSpec("corner 1 pressure", "p", (0.0, height), None),
        ProbeSpec("corner 2 pressure", "p", (width, height), None),
    )
    base = dict(
        name="block_ex2",
        mesh_spec=MeshSpec(width, height, 2 * level, level, pattern),
        material=replace(EX2_MATERIAL, K_h=K_h),
        bc=bc,
        dt=dt,
        t_end=t_end,
        element="P1RT0",
        mass_mode="hinton",
        probes=probes,
        snapshot_times=(),
        meta={"load": load, "loaded_width": loaded_width, "level": level},
    )
    base.update(kw)
    return BenchmarkCase(**base)


def bracket_ex3(
    level: int = 8,
    pattern: str = "criss",
    t_end: float = 4.1,
    dt: float = 5e-3,
    load: float = 1e3,
    element: str = "P1RT0",
    **kw,
) -> BenchmarkCase:
    """Clamped square bracket, impermeable everywhere, step load on top."""
    bc = BCSpec(
        skeleton=_sides(
            top=SkeletonBC("traction", (0.0, -load)),
            left=SkeletonBC("fixed"),
            right=SkeletonBC("free"),
            bottom=SkeletonBC("free"),
        ),
        fluid=_sides(top=FluidBC(), bottom=FluidBC(), left=FluidBC(), right=FluidBC()),
    )
    probes = (
        ProbeSpec("tip displacement", "u", (1.0, 1.0), 1),
        ProbeSpec("pressure near root", "p", (0.1, 0.5), None),
    )
    base = dict(
        name="bracket_ex3",
        mesh_spec=MeshSpec(1.0, 1.0, level, level, pattern),
        material=EX3_MATERIAL,
        bc=bc,
        dt=dt,
        t_end=t_end,
        element=element,
        mass_mode="hinton",
        probes=probes,
        snapshot_times=(0.3, 2.5, 4.1),
        meta={"load": load, "level": level},
    )
    base.update(kw)
    return BenchmarkCase(**base)


def get_case(name: str, **kw) -> BenchmarkCase:
    builders = {"column_ex1": column_ex1, "block_ex2": block_ex2, "bracket_ex3": bracket_ex3}
    try:
        return builders[name](**kw)
    except KeyError:
        raise ValueError(f"unknown benchmark case {name!r}; expected one of {CASES}") from None


# --------------------------------------------------------------------------
# probes and snapshots


def containing_triangle(mesh: Mesh, point, tol: float = 1e-12) -> int:
    """Lowest-index triangle containing ``point`` (boundary included)."""
    point = np.asarray(point, dtype=float)
    X = mesh.nodes[mesh.triangles]
    grads, _ = basis.bary_gradients(X)
    # barycentric coordinate k vanishes on edge k; evaluate relative to vertex k+1
    lam = np.stack(
        [np.einsum("md,md->m", grads[:, k], point[None, :] - X[:, (k + 1) % 3]) for k in range(3)],
        axis=1,
    )
    inside = np.all(lam >= -tol, axis=1)
    hits = np.flatnonzero(inside)
    if len(hits) == 0:
        raise ValueError(f"point {point.tolist()} lies outside the mesh")
    return int(hits[0])


def darcy_velocity(mesh: Mesh, q_full, tri: int, point) -> np.ndarray:
    """RT0 interpolation of the edge fluxes inside triangle ``tri`` at ``point``."""
    verts = mesh.nodes[mesh.triangles[tri]]
    vals, _ = basis.eval_rt0(verts, mesh.sign[tri], point)
    return q_full[mesh.tri_to_edge[tri]] @ vals


def centroid_darcy_velocity(mesh: Mesh, q_full) -> np.ndarray:
    """Darcy velocity at every triangle centroid, shape (n_tri, 2)."""
    X = mesh.nodes[mesh.triangles]
    c = X.mean(axis=1)
    W = basis.rt0_values(
        X, mesh.sign.astype(float), mesh.edge_length[mesh.tri_to_edge], mesh.tri_area, c[:, None, :]
    )[:, 0]
    return np.einsum("mj,mjd->md", q_full[mesh.tri_to_edge], W)


class _ProbeReader:
    def __init__(self, mesh: Mesh, dofmap, probes):
        self.readers = []
        kind = dofmap.element[:2]
        coords = displacement_node_coordinates(mesh, kind)
        pos = np.full(dofmap.n_disp, -1)
        pos[dofmap.free_disp] = np.arange(dofmap.n_free_disp)
        for pr in probes:
            pt = np.asarray(pr.point, dtype=float)
            if pr.quantity in ("u", "v", "a"):
                node = int(np.argmin(np.sum((coords - pt) ** 2, axis=1)))
                k = pos[2 * node + pr.component]
                if k < 0:
                    raise ValueError(f"probe {pr.label!r} refers to a constrained displacement component")
                attr = {"u": "u", "v": "ud", "a": "udd"}[pr.quantity]
                self.readers.append(lambda s, a=attr, k=k: getattr(s, a)[k])
            elif pr.quantity == "p":
                tri = containing_triangle(mesh, pt)
                self.readers.append(lambda s, m=tri: s.p[m])
            else:
                # Darcy velocity probes report the element value at the centroid of
                # the containing triangle; at an impermeable corner the pointwise
                # normal component is zero by construction.
                tri = containing_triangle(mesh, pt)
                verts = mesh.nodes[mesh.triangles[tri]]
                vals, _ = basis.eval_rt0(verts, mesh.sign[tri], verts.mean(axis=0))
                edges = mesh.tri_to_edge[tri]
                epos = np.full(dofmap.n_edges, -1)
                epos[dofmap.free_edges] = np.arange(dofmap.n_free_edges)
                loc = epos[edges]
                coef = np.where(loc >= 0, vals[:, pr.component], 0.0)
                loc = np.where(loc >= 0, loc, 0)
                self.readers.append(lambda s, loc=loc, coef=coef: float(s.q[loc] @ coef))

    def __call__(self, state):
        return [r(state) for r in self.readers]


@dataclass
class Snapshot:
    t: float
    u: np.ndarray  # full displacement vector (constrained entries zero)
    p: np.ndarray
    w: np.ndarray  # Darcy velocity at triangle centroids


ENERGY_NAMES = ("E_Ks", "E_Kf", "E_S", "E_D", "E_In", "E_C")


@dataclass
class RunArtifacts:
    case: BenchmarkCase
    element: str
    mass_mode: str
    mesh: Mesh
    dofmap: object
    times: np.ndarray
    probes: dict
    energy: dict
    balance_error: np.ndarray
    constraint: np.ndarray
    velocity_norm: np.ndarray
    snapshots: dict
    final_state: object
    wall_time: float

    def probe(self, label: str) -> np.ndarray:
        return self.probes[label]

    def snapshot(self, t: float) -> Snapshot:
        key = min(self.snapshots, key=lambda s: abs(s - t))
        if abs(key - t) > 0.5 * self.case.dt:
            raise KeyError(f"no snapshot at t={t}")
        return self.snapshots[key]


def run(
    case: BenchmarkCase,
    element: str | None = None,
    mass_mode: str | None = None,
    consistent_ic: bool | str = True,
    t_end: float | None = None,
    record_every: int = 1,
) -> RunArtifacts:
    """Assemble, initialize and integrate ``case``; collect probe and energy histories."""
    element = normalize_element(element or case.element)
    mass_mode = normalize_mass_mode(mass_mode or case.mass_mode)
    n_steps = case.n_steps if t_end is None else int(round(t_end / case.dt))
    t0 = time.perf_counter()
    mesh = generate(case.mesh_spec)
    sysm, dofmap = assemble(mesh, element, case.material, case.bc, mass_mode)
    reader = _ProbeReader(mesh, dofmap, case.probes)
    snap_steps = {int(round(t / case.dt)): t for t in case.snapshot_times}

    times, probe_rows, energy_rows, bal, cons, vnorm = [], [], [], [], [], []
    snapshots = {}

    def observe(rec):
        s = rec.state
        n = int(round(s.t / case.dt))
        if n % record_every == 0 or n == n_steps:
            times.append(s.t)
            probe_rows.append(reader(s))
            L = rec.ledger
            energy_rows.append((L.Ks, L.Kf, L.S, L.D, L.In, L.C))
            bal.append(L.balance_error() if L.In != 0 else abs(L.balance_residual()))
            cons.append(rec.constraint)
            vnorm.append(float(np.linalg.norm(s.ud)))
        if n in snap_steps:
            q_full = dofmap.expand_flux(s.q)
            snapshots[snap_steps[n]] = Snapshot(
                s.t, dofmap.expand_disp(s.u), s.p.copy(), centroid_darcy_velocity(mesh, q_full)
            )

    integrator = NewmarkIntegrator(sysm, case.dt)
    final = integrate(sysm, case.dt, n_steps, consistent_ic=consistent_ic, observer=observe, integrator=integrator)
    probe_arr = np.array(probe_rows, dtype=float).reshape(len(times), len(case.probes))
    energy_arr = np.array(energy_rows, dtype=float)
    return RunArtifacts(
        case=case,
        element=element,
        mass_mode=mass_mode,
        mesh=mesh,
        dofmap=dofmap,
        times=np.array(times),
        probes={pr.label: probe_arr[:, i] for i, pr in enumerate(case.probes)},
        energy={name: energy_arr[:, i] for i, name in enumerate(ENERGY_NAMES)},
        balance_error=np.array(bal),
        constraint=np.array(cons),
        velocity_norm=np.array(vnorm),
        snapshots=snapshots,
        final_state=final.state,
        wall_time=time.perf_counter() - t0,
    )


# --------------------------------------------------------------------------
# post-processing


@dataclass
class WavefrontResult:
    times: np.ndarray
    fronts: np.ndarray  # front position (same axis as the profile coordinate)
    window_speeds: np.ndarray  # (z_top - z_front) / t, as measured from the load onset
    step_speeds: np.ndarray  # between consecutive snapshots


def _front_position(z, amp, thr):
    above = np.flatnonzero(amp >= thr)
    if len(above) == 0:
        return None
    i = above[0]
    if i == 0:
        return float(z[0])
    a0, a1 = amp[i - 1], amp[i]
    if a0 > 0:
        frac = (np.log(thr) - np.log(a0)) / (np.log(a1) - np.log(a0))
    else:
        frac = (thr - a0) / (a1 - a0)
    return float(z[i - 1] + frac * (z[i] - z[i - 1]))


def measure_wavefront(z, profiles: dict, threshold: float, z_top: float | None = None) -> WavefrontResult:
    """Locate the disturbance front in displacement profiles along a column.

    ``profiles`` maps time to displacement samples at heights ``z``; the load
    acts at ``z_top`` (default ``max(z)``) and the front is the deepest point
    whose magnitude reaches ``threshold`` (log-linear interpolation between samples).
    """
    z = np.asarray(z, dtype=float)
    order = np.argsort(z)
    z = z[order]
    z_top = float(z[-1]) if z_top is None else float(z_top)
    ts, fronts = [], []
    for t in sorted(profiles):
        amp = np.abs(np.asarray(profiles[t], dtype=float)[order])
        zf = _front_position(z, amp, threshold)
        if zf is None:
            raise ValueError(f"wave front has not arrived anywhere by t={t}")
        ts.append(t)
        fronts.append(zf)
    ts, fronts = np.array(ts), np.array(fronts)
    window = (z_top - fronts) / ts
    step = np.diff(np.r_[z_top, fronts]) * -1 / np.diff(np.r_[0.0, ts])
    return WavefrontResult(ts, fronts, window, step)


def column_profiles(art: RunArtifacts, x: float = 0.0):
    """Heights and vertical displacement profiles of every snapshot along ``x``."""
    kind = art.element[:2]
    coords = displacement_node_coordinates(art.mesh, kind)
    nodes = np.flatnonzero(np.abs(coords[:, 0] - x) < 1e-9)
    nodes = nodes[np.argsort(coords[nodes, 1])]
    return coords[nodes, 1], {t: s.u[2 * nodes + 1] for t, s in art.snapshots.items()}


def column_wavefront(art: RunArtifacts, threshold: float = WAVEFRONT_THRESHOLD) -> WavefrontResult:
    mat = art.case.material
    ds = terzaghi_settlement(mat, art.case.meta["load"], art.case.meta["length"])
    z, prof = column_profiles(art)
    return measure_wavefront(z, prof, threshold * ds)


def zero_crossings(t, signal) -> np.ndarray:
    """Times where ``signal`` changes sign (linear interpolation)."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    idx = np.flatnonzero(np.signbit(y[:-1]) != np.signbit(y[1:]))
    return t[idx] - y[idx] * (t[idx + 1] - t[idx]) / (y[idx + 1] - y[idx])


def dominant_frequency(t, signal, t_max: float | None = None, detrend: int = 3) -> float:
    """Frequency in Hz from zero crossings of the polynomially detrended signal."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    if t_max is not None:
        keep = t <= t_max + 1e-12
        t, y = t[keep], y[keep]
    if detrend is not None and detrend >= 0:
        y = y - np.polyval(np.polyfit(t, y, detrend), t)
    zc = zero_crossings(t, y)
    if len(zc) < 3:
        raise ValueError("too few zero crossings to estimate a frequency")
    return float((len(zc) - 1) / (2.0 * (zc[-1] - zc[0])))


def spectral_peak(t, signal, t_max: float | None = None, pad: int = 16) -> float:
    """Frequency in Hz of the largest Hann-windowed spectral peak of the mean-removed signal."""
    t = np.asarray(t, dtype=float)
    y = np.asarray(signal, dtype=float)
    if t_max is not None:
        keep = t <= t_max + 1e-12
        t, y = t[keep], y[keep]
    y = (y - y.mean()) * np.hanning(len(y))
    n = pad * len(y)
    amp = np.abs(np.fft.rfft(y, n))
    freq = np.fft.rfftfreq(n, t[1] - t[0])
    return float(freq[1:][np.argmax(amp[1:])])


def phase_correlation(t, a, b, t0: float, t1: float) -> float:
    """Pearson correlation of two histories over ``[t0, t1]``."""
    t = np.asarray(t)
    keep = (t >= t0) & (t <= t1)
    return float(np.corrcoef(np.asarray(a)[keep], np.asarray(b)[keep])[0, 1])


def early_pressure_variation(art: RunArtifacts, label: str, n_steps: int = 50) -> float:
    """Total variation of a pressure probe over its first ``n_steps`` steps (t=0 included)."""
    p = art.probe(label)[: n_steps + 1]
    return float(np.sum(np.abs(np.diff(p))))


def high_frequency_count(t, signal, t0: float, t1: float) -> int:
    """Number of sign changes of the step-to-step increment within ``[t0, t1]``."""
    t = np.asarray(t)
    keep = (t >= t0) & (t <= t1)
    d = np.diff(np.asarray(signal)[keep])
    return int(np.sum(np.signbit(d[:-1]) != np.signbit(d[1:])))
