"""
Drained soil column under a step load
=====================================

A 10 m column, drained at the top, is loaded suddenly. A compression wave runs
down the column first; afterwards the pore pressure diffuses out through the
top and the column settles towards the drained elastic value.

Runtime: about 40 s.
"""

import numpy as np

from poroflow import column_ex1, run
from poroflow.benchmarks import column_wavefront
from poroflow.timestepper import cfl_timestep, terzaghi_settlement, wave_speed
from poroflow.mesh import generate

case = column_ex1()
mat = case.material

# closed forms first: the wave speed sets the time step
c0 = wave_speed(mat)
dt_cfl = cfl_timestep(generate(case.mesh_spec), mat)
print(f"wave speed {c0:.2f} m/s, CFL step {dt_cfl:.3e} s, chosen step {case.dt:.1e} s")

art = run(case)
print(f"{case.n_steps} steps in {art.wall_time:.1f} s")

# the wavefront: arrival depth in three early snapshots
wf = column_wavefront(art)
for t, v in zip(wf.times, wf.window_speeds):
    print(f"  window ending at t={t:.3f} s: front speed {v:.1f} m/s")

# long-term settlement against the drained elastic value
ds = terzaghi_settlement(mat, case.meta["load"], case.meta["length"])
u = -art.probe("top displacement")
for t in (0.1, 0.5, 1.0, 2.0, 4.0, 8.0):
    print(f"  t={t:4.1f} s  settlement {np.interp(t, art.times, u) * 1e3:.4f} mm")
print(f"drained value {ds * 1e3:.4f} mm, final error {abs(u[-1] - ds) / ds:.2%}")

# the energy ledger closes to roundoff
print(f"max relative balance error {np.max(art.balance_error[1:]):.2e}")
print("final energies:", {k: f"{v[-1]:.4g}" for k, v in art.energy.items()})
