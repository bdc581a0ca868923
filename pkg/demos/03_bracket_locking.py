"""
Pressure locking in a clamped bracket
=====================================

A square bracket, clamped on the left and impermeable everywhere, is loaded on
top. Linear displacements with constant pressures lock on this mesh and the
pressure field shows a checkerboard; quadratic displacements do not.

Runtime: about 10 s.
"""

import numpy as np

from poroflow import bracket_ex3, run
from poroflow.stability import checkerboard_metric, neighbor_jump

p1 = run(bracket_ex3(element="P1RT0"))
p2 = run(bracket_ex3(element="P2RT0"))
for t in p1.case.snapshot_times:
    a = checkerboard_metric(p1.mesh, p1.snapshot(t).p)
    b = checkerboard_metric(p2.mesh, p2.snapshot(t).p)
    print(f"t={t:.1f} s  checkerboard index P1 {a:.3g}  P2 {b:.3g}  ratio {a / b:.1f}")

# refinement: a smooth field has neighbor jumps of order h, a checkerboard does not
for el in ("P1RT0", "P2RT0"):
    jumps = []
    for n in (4, 8, 16):
        art = run(bracket_ex3(level=n, element=el))
        jumps.append(neighbor_jump(art.mesh, art.snapshot(0.3).p))
    print(el, "neighbor jumps at N=4, 8, 16:", np.round(jumps, 3))

# elementwise pressures at the first snapshot, top row of the P1 mesh
snap = p1.snapshot(0.3)
c = p1.mesh.nodes[p1.mesh.triangles].mean(axis=1)
top = np.argsort(c[:, 0])[c[np.argsort(c[:, 0]), 1] > 0.9]
print("P1 pressures near the top edge (kPa):", np.round(snap.p[top][:12] / 1e3, 2))
