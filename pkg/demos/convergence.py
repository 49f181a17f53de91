"""Observed orders for u = sin(pi x) exp(-t).

Time and space are refined separately: the k-scan keeps a fine P2 mesh, the
h-scan keeps a fine time mesh, and no coupling between k and h is imposed.

    python demos/convergence.py
"""

from dgmaxreg.lab import run_convergence_study, sin_exp_1d

prob = sin_exp_1d()
for q in (0, 1):
    rep = run_convergence_study(prob, q, 2, mode="refine_k", n_fixed=512, M0=64, levels=4)
    md = rep.metadata
    print(f"k-scan dG({q}):  errors", ", ".join(f"{e:.3e}" for e in rep.column("error")),
          f" slope {md['raw_slope']:.3f}, normalized {md['slope']:.3f}")

for r in (1, 2):
    # the time mesh must be fine enough that P2 spatial errors stay above the dG(1) error
    rep = run_convergence_study(prob, 1, r, mode="refine_h", M_fixed=1024, n0=8, levels=4)
    print(f"h-scan P{r}:     errors", ", ".join(f"{e:.3e}" for e in rep.column("error")),
          f" slope {rep.metadata['slope']:.3f}")
