"""
Which meshes are stable?
========================

Three checks per element and mesh pattern: spurious pressure modes on one
macroelement, on the assembled unit square, and the discrete inf-sup constant
under refinement.

Runtime: about 15 s.
"""

from poroflow.stability import infsup_test

print(f"{'element':8s} {'pattern':12s} local global inf-sup   values N=1..16")
for el in ("P1", "P2"):
    for pat in ("criss", "crisscross", "union_jack"):
        r = infsup_test(el, pat)
        marks = " ".join(f"{m:>5s}" for m in r.row)
        vals = " ".join(f"{v:.3f}" for v in r.values)
        print(f"{el:8s} {pat:12s} {marks}   {vals}")

# the crisscross macroelement carries exactly one spurious pressure mode
print("P1 crisscross local deficiency:", infsup_test("P1", "crisscross", levels=(1,)).local_deficiency)
