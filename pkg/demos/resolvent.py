"""(1 + |z|) ||(z + Delta_h)^{-1}||_p on rays outside the sector |arg z| <= pi/4.

    python demos/resolvent.py
"""

import math

from dgmaxreg import build_space
from dgmaxreg.lab import run_resolvent_scan

spaces = {f"1D n={n}": build_space("unit_interval", n, 1) for n in (16, 32, 64)}
spaces["2D n=8"] = build_space("unit_square", 8, 1)
rep = run_resolvent_scan(spaces, gamma=math.pi / 4, npts=9)
for label, consts in rep.metadata["constants"].items():
    print(f"{label:8s}", "  ".join(f"C_{p} = {c:.4f}" for p, c in consts.items()))
for c in rep.checks:
    print(f"{'ok  ' if c.passed else 'FAIL'} {c.name}: {c.detail}")
