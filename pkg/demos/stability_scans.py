"""Smoothing and maximal-regularity constants under time-step refinement.

A narrow bump is released by the homogeneous heat flow; t_m times the
discrete Laplacian, time derivative and jumps stay bounded by a multiple of
the initial norm. Then u0 = 0 is driven by a polynomial source and the left
side of the maximal-regularity estimate is compared with ||f|| times
1 + ln(T/k).

    python demos/stability_scans.py
"""

from dgmaxreg import build_space
from dgmaxreg.lab import run_maxreg_scan, run_smoothing_scan

V = build_space("unit_interval", 64, 1)

print("smoothing constants, u0 = bump, p = 2")
for q in (0, 1):
    rep = run_smoothing_scan(V, q, p_list=(2.0,), u0="bump", levels=4, M0=8)
    for term in ("laplacian", "time_derivative", "jump"):
        vals = rep.column("constant", term=term)
        print(f"  q={q} {term:16s}", "  ".join(f"{v:.4f}" for v in vals))
    print("  checks:", "; ".join(f"{c.name} {'ok' if c.passed else 'FAIL'}" for c in rep.checks))

print("\nmaximal-regularity ratio R, polynomial source, n = 32")
W = build_space("unit_interval", 32, 1)
for q in (0, 1):
    rep = run_maxreg_scan(W, q, sp_grid=[(2, 2), (1, 1), ("inf", "inf")], levels=4, M0=128)
    for s, p in ((2, 2), (1, 1), ("inf", "inf")):
        vals = rep.column("R", s=s, p=p)
        print(f"  q={q} s={s:>3} p={p:>3}  R:", "  ".join(f"{v:.4f}" for v in vals))
