"""One dG(q) step as an exact rational function of z = k * lambda.

Prints the stability functions for q = 0, 1, 2, their order of contact with
exp(-z) near zero, and the damping of stiff modes.

    python demos/rational_family.py
"""

import numpy as np

from dgmaxreg import derive_family, pade_defect_order, stability_profile
from dgmaxreg.rational import HOMOG, evaluate


def poly(coeffs):
    return " + ".join(f"({c}) z^{i}" for i, c in enumerate(coeffs) if c != 0)


for q in range(3):
    fam = derive_family(q)
    print(f"dG({q})")
    print(f"  denominator    {poly(fam.p_hat)}")
    print(f"  endpoint num.  {poly(fam.numerator(q, HOMOG))}")
    print(f"  defect slope   {pade_defect_order(fam):.3f}   (expected {2 * q + 2})")
    prof = stability_profile(fam, np.concatenate([[0.0], np.logspace(-3, 7, 400)]))
    print(f"  sup |r| = {prof['sup']:.3f},  |r(1e7)| = {prof['tail']:.2e}")
    z = np.array([0.1, 1.0, 10.0, 100.0])
    print("  r(z) vs exp(-z):", ", ".join(f"{a:.4g}/{b:.4g}"
                                          for a, b in zip(evaluate(fam, q, HOMOG, z), np.exp(-z))))
    print()
