"""Constant-average Newmark integration of the constrained semi-discrete system.

Per step the velocity-level unknowns ``(udot, q, p)`` at the new time level are
obtained from one symmetric saddle-point solve; the displacement, skeleton
acceleration and fluid flux rate then follow from the Newmark updates.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import lsmr, norm as sparse_norm

from . import linsolve
from .assembly import MaterialParams, SystemMatrices
from .mesh import Mesh


@dataclass
class State:
    t: float
    u: np.ndarray
    ud: np.ndarray
    udd: np.ndarray
    q: np.ndarray
    qd: np.ndarray
    p: np.ndarray

    @classmethod
    def at_rest(cls, sysm: SystemMatrices, t: float = 0.0) -> "State":
        nd, ne, nel = sysm.M.shape[0], sysm.A.shape[0], sysm.Q.shape[1]
        z = np.zeros
        return cls(t, z(nd), z(nd), z(nd), z(ne), z(ne), z(nel))


@dataclass
class EnergyLedger:
    """Energy terms in J (per unit thickness). D, In and C accumulate over steps."""

    Ks: float = 0.0
    Kf: float = 0.0
    S: float = 0.0
    D: float = 0.0
    In: float = 0.0
    C: float = 0.0
    strain_factor: float = 0.5

    def balance_residual(self) -> float:
        return self.Ks + self.Kf + self.S + self.D + self.C - self.In

    def balance_error(self, eps: float = 1e-300) -> float:
        """Relative mismatch between stored/dissipated energy and input work."""
        return abs(self.balance_residual()) / max(abs(self.In), eps)

    def as_dict(self) -> dict:
        return {"E_Ks": self.Ks, "E_Kf": self.Kf, "E_S": self.S, "E_D": self.D, "E_In": self.In, "E_C": self.C}


def stored_energies(sysm: SystemMatrices, state: State, strain_factor: float = 0.5):
    """Skeleton kinetic, fluid kinetic and strain energy of a state."""
    ud, q, u = state.ud, state.q, state.u
    Ks = 0.5 * ud @ (sysm.M @ ud)
    Kf = ud @ (sysm.Mf @ q) + 0.5 * q @ (sysm.A @ q)
    S = strain_factor * u @ (sysm.K @ u)
    return float(Ks), float(Kf), float(S)


def energy_update(ledger: EnergyLedger, sysm: SystemMatrices, s0: State, s1: State, loads0, loads1, dt: float):
    """Advance the ledger over one step from ``s0`` to ``s1``."""
    P0, F0 = loads0
    P1, F1 = loads1
    qs = s0.q + s1.q
    uds = s0.ud + s1.ud
    dD = sysm.darcy_coefficient * dt / 4.0 * qs @ (sysm.A @ qs)
    dIn = dt / 4.0 * (uds @ (P0 + P1) + qs @ (F0 + F1))
    g0 = sysm.constraint(s0.ud, s0.q)
    g1 = sysm.constraint(s1.ud, s1.q)
    dC = -dt / 2.0 * (g0 + g1) @ (0.5 * (s0.p + s1.p))
    Ks, Kf, S = stored_energies(sysm, s1, ledger.strain_factor)
    return replace(ledger, Ks=Ks, Kf=Kf, S=S, D=ledger.D + float(dD), In=ledger.In + float(dIn), C=ledger.C + float(dC))


def _labels(sysm):
    return sysm.dofmap.labels() if sysm.dofmap is not None else None


def consistent_initial_conditions(sysm: SystemMatrices, P0, F0):
    """Accelerations and pressure at rest that also satisfy the time-differentiated constraint."""
    Z = linsolve.saddle_matrix(sysm.M, sysm.Mf, sysm.A, sysm.Q, sysm.B)
    f = linsolve.factor(Z, labels=_labels(sysm))
    nel = sysm.Q.shape[1]
    x = linsolve.solve(f, np.concatenate([P0, F0, np.zeros(nel)]))
    nd, ne = sysm.M.shape[0], sysm.A.shape[0]
    return x[:nd], x[nd : nd + ne], x[nd + ne :]


def naive_initial_conditions(sysm: SystemMatrices, P0, F0):
    """Zero initial pressure; accelerations from the two momentum rows alone."""
    Z = sp.bmat([[sysm.M, sysm.Mf], [sysm.Mf.T, sysm.A]], format="csc")
    f = linsolve.factor(Z)
    x = linsolve.solve(f, np.concatenate([P0, F0]))
    nd = sysm.M.shape[0]
    return x[:nd], x[nd:], np.zeros(sysm.Q.shape[1])


def least_squares_initial_conditions(sysm: SystemMatrices, P0, F0):
    """Minimum-norm solution of the consistent-IC system; usable when it is singular."""
    Z = linsolve.saddle_matrix(sysm.M, sysm.Mf, sysm.A, sysm.Q, sysm.B)
    d = linsolve.equilibrate(Z)
    Zs = sp.diags(d) @ Z @ sp.diags(d)
    nel = sysm.Q.shape[1]
    y = lsmr(Zs, d * np.concatenate([P0, F0, np.zeros(nel)]), atol=1e-14, btol=1e-14, maxiter=20 * Z.shape[0])[0]
    x = d * y
    nd, ne = sysm.M.shape[0], sysm.A.shape[0]
    return x[:nd], x[nd : nd + ne], x[nd + ne :]


IC_MODES = {
    "consistent": consistent_initial_conditions,
    "naive": naive_initial_conditions,
    "least_squares": least_squares_initial_conditions,
}


def initial_state(sysm: SystemMatrices, t0: float = 0.0, consistent: bool | str = True) -> State:
    """``consistent`` is a bool (consistent vs naive) or a key of ``IC_MODES``."""
    P0, F0 = sysm.loads(t0)
    s = State.at_rest(sysm, t0)
    if isinstance(consistent, str):
        if consistent not in IC_MODES:
            raise ValueError(f"unknown initial-condition mode {consistent!r}")
        ic = IC_MODES[consistent]
    else:
        ic = consistent_initial_conditions if consistent else naive_initial_conditions
    s.udd, s.qd, s.p = ic(sysm, P0, F0)
    return s


class NewmarkIntegrator:
    """Factor the step matrix once and advance states with a fixed ``dt``."""

    def __init__(self, sysm: SystemMatrices, dt: float, refine: int = 1):
        if not dt > 0:
            raise ValueError("time step must be positive")
        self.sysm = sysm
        self.dt = float(dt)
        h = 0.5 * dt
        M, Mf, A, K, Q, B = sysm.M, sysm.Mf, sysm.A, sysm.K, sysm.Q, sysm.B
        self.nd, self.ne, self.nel = M.shape[0], A.shape[0], Q.shape[1]
        Mbar = (M + (dt * dt / 4.0) * K).tocsr()
        Abar = ((1.0 + sysm.darcy_coefficient * h) * A).tocsr()
        self.matrix = linsolve.saddle_matrix(Mbar, Mf, Abar, h * Q, h * B)
        self.factorization = linsolve.factor(self.matrix, labels=_labels(sysm), refine=refine)
        # history operator: [udd~, qd~, u~] -> momentum right-hand side
        self._history = sp.bmat([[M, Mf, K], [Mf.T, A, None]], format="csr")
        self._norm_QT = sparse_norm(sysm.QT)
        self._norm_BT = sparse_norm(sysm.BT)

    def step(self, s: State, loads_next) -> State:
        dt, h = self.dt, 0.5 * self.dt
        P1, F1 = loads_next
        u_t = s.u + h * s.ud
        udd_t = -(s.udd + s.ud / h)
        qd_t = -(s.qd + s.q / h)
        hist = self._history @ np.concatenate([udd_t, qd_t, u_t])
        rhs = np.concatenate([h * (P1 - hist[: self.nd]), h * (F1 - hist[self.nd :]), np.zeros(self.nel)])
        x = linsolve.solve(self.factorization, rhs)
        ud = x[: self.nd]
        q = x[self.nd : self.nd + self.ne]
        p = x[self.nd + self.ne :]
        return State(s.t + dt, u_t + h * ud, ud, udd_t + ud / h, q, qd_t + q / h, p)

    def constraint_residual(self, s: State) -> float:
        """Relative size of ``Q^T udot + B^T q``."""
        g = self.sysm.constraint(s.ud, s.q)
        scale = self._norm_QT * np.linalg.norm(s.ud) + self._norm_BT * np.linalg.norm(s.q)
        return float(np.linalg.norm(g) / (scale + 1e-300))


@dataclass
class StepRecord:
    state: State
    ledger: EnergyLedger
    constraint: float


def integrate(
    sysm: SystemMatrices,
    dt: float,
    n_steps: int,
    consistent_ic: bool = True,
    observer=None,
    strain_factor: float = 0.5,
    integrator: NewmarkIntegrator | None = None,
):
    """Run ``n_steps`` from rest; ``observer(record)`` is called at t=0 and after every step.

    Returns the final ``StepRecord``.
    """
    integ = integrator or NewmarkIntegrator(sysm, dt)
    s = initial_state(sysm, 0.0, consistent=consistent_ic)
    ledger = EnergyLedger(strain_factor=strain_factor)
    loads = sysm.loads(0.0)
    rec = StepRecord(s, ledger, integ.constraint_residual(s))
    if observer is not None:
        observer(rec)
    for n in range(n_steps):
        t1 = (n + 1) * dt
        loads1 = sysm.loads(t1)
        s1 = integ.step(s, loads1)
        s1.t = t1
        ledger = energy_update(ledger, sysm, s, s1, loads, loads1, dt)
        rec = StepRecord(s1, ledger, integ.constraint_residual(s1))
        if observer is not None:
            observer(rec)
        s, loads = s1, loads1
    return rec


# --------------------------------------------------------------------------
# unconstrained elastodynamics (no fluid, no pressure)


@dataclass
class ElasticState:
    t: float
    u: np.ndarray
    ud: np.ndarray
    udd: np.ndarray


class ElastodynamicNewmark:
    """Average-acceleration Newmark for ``M u'' + K u = P``."""

    def __init__(self, M, K, dt: float):
        self.M = sp.csr_matrix(M)
        self.K = sp.csr_matrix(K)
        self.dt = float(dt)
        self.factorization = linsolve.factor(self.M + (dt * dt / 4.0) * self.K)

    def initial_state(self, u0, ud0, P0=None) -> ElasticState:
        P0 = np.zeros(len(u0)) if P0 is None else P0
        f = linsolve.factor(self.M)
        udd0 = linsolve.solve(f, P0 - self.K @ u0)
        return ElasticState(0.0, np.asarray(u0, float), np.asarray(ud0, float), udd0)

    def step(self, s: ElasticState, P1=None) -> ElasticState:
        h = 0.5 * self.dt
        P1 = np.zeros(len(s.u)) if P1 is None else P1
        u_t = s.u + h * s.ud
        udd_t = -(s.udd + s.ud / h)
        ud = linsolve.solve(self.factorization, h * (P1 - self.M @ udd_t - self.K @ u_t))
        return ElasticState(s.t + self.dt, u_t + h * ud, ud, udd_t + ud / h)

    def energy(self, s: ElasticState) -> float:
        return float(0.5 * s.ud @ (self.M @ s.ud) + 0.5 * s.u @ (self.K @ s.u))


# --------------------------------------------------------------------------
# closed-form estimates


def wave_speed(mat: MaterialParams) -> float:
    """Slow dilatational wave speed of the incompressible mixture (plane strain)."""
    rho_eff = mat.rho - mat.rho_f * (2.0 - 1.0 / mat.n_f)
    if rho_eff <= 0:
        raise ValueError(f"effective density {rho_eff:.6g} kg/m3 is not positive for these parameters")
    return math.sqrt(mat.constrained_modulus / rho_eff)


def cfl_timestep(mesh: Mesh, mat: MaterialParams) -> float:
    """Largest step resolving wave transit across the shortest edge."""
    return mesh.min_edge_length / wave_speed(mat)


def terzaghi_settlement(mat: MaterialParams, f: float, L: float) -> float:
    """Long-term settlement of a drained column of length ``L`` under surface stress ``f``."""
    return f * L / mat.constrained_modulus


def consolidation_coefficient(mat: MaterialParams) -> float:
    """``c_v = K_h (lambda + 2G) / (rho_f g)``, the pressure diffusivity in m2/s."""
    return mat.K_h * mat.constrained_modulus / (mat.rho_f * mat.g)


__all__ = [
    "State",
    "EnergyLedger",
    "StepRecord",
    "stored_energies",
    "energy_update",
    "consistent_initial_conditions",
    "naive_initial_conditions",
    "least_squares_initial_conditions",
    "IC_MODES",
    "initial_state",
    "NewmarkIntegrator",
    "integrate",
    "ElasticState",
    "ElastodynamicNewmark",
    "wave_speed",
    "cfl_timestep",
    "terzaghi_settlement",
    "consolidation_coefficient",
]
