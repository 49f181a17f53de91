"""Discontinuous Galerkin time stepping for the heat equation with conforming
finite elements in space, plus tools to measure its discrete maximal
parabolic regularity."""

from .rational import RationalFamily, derive_family, pade_defect_order, spectral_solve, stability_profile
from .spatial import FeSpace, build_space, generalized_eigenpairs, l2_project, lp_norm, ritz_project
from .stepper import DgSolution, dg_solve, dg_step, jump
from .temporal import NormSpec, error_norm, project_pi_k, spacetime_norm
from .time_partition import (DEFAULT_CONDITIONS, MeshConditionError, MeshConditions, TimePartition,
                             make_graded, make_uniform, validate)
from .timebasis import PiecewisePolynomialTimeFunction, local_temporal_matrices

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_CONDITIONS", "DgSolution", "FeSpace", "MeshConditionError", "MeshConditions",
    "NormSpec", "PiecewisePolynomialTimeFunction", "RationalFamily", "TimePartition",
    "build_space", "derive_family", "dg_solve", "dg_step", "error_norm", "generalized_eigenpairs",
    "jump", "l2_project", "local_temporal_matrices", "lp_norm", "make_graded", "make_uniform",
    "pade_defect_order", "project_pi_k", "ritz_project", "spacetime_norm", "spectral_solve",
    "stability_profile", "validate",
]
