"""Temporal meshes 0 = t_0 < ... < t_M = T and the three admissibility conditions.

The conditions checked by :func:`validate` are

(i)   k_min >= c * k**beta,
(ii)  1/kappa <= k_m / k_{m+1} <= kappa for m = 1..M-1,
(iii) k <= T / 4,

where k is the largest step and k_min the smallest one.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

# relative slack for ratio comparisons; graded meshes hit kappa exactly
_SLACK = 1e-12


class MeshConditionError(ValueError):
    """A time partition violates one of the conditions (i)-(iii)."""

    def __init__(self, condition, index, value, message):
        super().__init__(message)
        self.condition = condition
        self.index = index
        self.value = value


@dataclass(frozen=True)
class MeshConditions:
    c: float = 0.25
    beta: float = 2.0
    kappa: float = 3.0

    def as_dict(self):
        return {"c": self.c, "beta": self.beta, "kappa": self.kappa}


DEFAULT_CONDITIONS = MeshConditions()


@dataclass(frozen=True)
class TimePartition:
    """Nodes of a time mesh. Steps are derived, never stored separately."""

    nodes: np.ndarray

    def __post_init__(self):
        nodes = np.array(self.nodes, dtype=float)
        if nodes.ndim != 1 or nodes.size < 2:
            raise ValueError("nodes must be a 1-d array with at least two entries")
        if nodes[0] != 0.0:
            raise ValueError(f"first node must be 0, got {nodes[0]!r}")
        if nodes[-1] <= 0.0:
            raise ValueError("horizon T must be positive")
        if np.any(np.diff(nodes) <= 0.0):
            bad = int(np.argmin(np.diff(nodes))) + 1
            raise ValueError(f"nodes must be strictly increasing (violated at m={bad})")
        nodes.setflags(write=False)
        object.__setattr__(self, "nodes", nodes)

    @property
    def T(self):
        return float(self.nodes[-1])

    @property
    def M(self):
        return self.nodes.size - 1

    @property
    def steps(self):
        return np.diff(self.nodes)

    @property
    def k(self):
        return float(self.steps.max())

    @property
    def k_min(self):
        return float(self.steps.min())

    def interval(self, m):
        """Endpoints (t_{m-1}, t_m) of I_m, 1-based."""
        if not 1 <= m <= self.M:
            raise IndexError(f"interval index {m} outside 1..{self.M}")
        return float(self.nodes[m - 1]), float(self.nodes[m])

    def locate(self, t):
        """Index m of the interval I_m = (t_{m-1}, t_m] containing t."""
        if not 0.0 < t <= self.T:
            raise ValueError(f"t={t!r} outside (0, {self.T}]")
        m = int(np.searchsorted(self.nodes, t, side="left"))
        return min(max(m, 1), self.M)

    def to_json(self):
        return json.dumps([float(t) for t in self.nodes])

    @classmethod
    def from_json(cls, text):
        return cls(np.array(json.loads(text), dtype=float))


@dataclass
class ConditionResult:
    name: str
    passed: bool
    worst_index: int
    achieved: float
    bound: float


@dataclass
class ValidationReport:
    conditions: MeshConditions
    results: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(r.passed for r in self.results.values())

    def __getitem__(self, name):
        return self.results[name]

    def first_failure(self):
        for r in self.results.values():
            if not r.passed:
                return r
        return None


def validate(partition, c=DEFAULT_CONDITIONS.c, beta=DEFAULT_CONDITIONS.beta,
             kappa=DEFAULT_CONDITIONS.kappa):
    """Check conditions (i)-(iii); never raises.

    For (ii) the reported index m is the one where k_m/k_{m+1} deviates most
    from 1 in the log sense, and ``achieved`` is that ratio.
    """
    steps = partition.steps
    k, k_min, T = partition.k, partition.k_min, partition.T
    report = ValidationReport(MeshConditions(c, beta, kappa))

    bound_i = c * k**beta
    report.results["i"] = ConditionResult(
        "i", k_min >= bound_i * (1 - _SLACK), int(np.argmin(steps)) + 1, k_min, bound_i)

    if steps.size > 1:
        ratios = steps[:-1] / steps[1:]
        worst = int(np.argmax(np.abs(np.log(ratios))))
        r = float(ratios[worst])
        ok = (r <= kappa * (1 + _SLACK)) and (r >= (1 - _SLACK) / kappa)
        report.results["ii"] = ConditionResult("ii", ok, worst + 1, r, kappa)
    else:
        report.results["ii"] = ConditionResult("ii", True, 1, 1.0, kappa)

    report.results["iii"] = ConditionResult(
        "iii", k <= 0.25 * T * (1 + _SLACK), int(np.argmax(steps)) + 1, k, 0.25 * T)
    return report


def check(partition, conditions=DEFAULT_CONDITIONS):
    """Raise :class:`MeshConditionError` for the first violated condition."""
    report = validate(partition, conditions.c, conditions.beta, conditions.kappa)
    bad = report.first_failure()
    if bad is not None:
        raise MeshConditionError(
            bad.name, bad.worst_index, bad.achieved,
            f"time mesh violates condition ({bad.name}) at m={bad.worst_index}: "
            f"achieved {bad.achieved:.6g}, bound {bad.bound:.6g}")
    return partition


def make_uniform(T, M):
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T!r}")
    if M < 4:
        raise MeshConditionError(
            "iii", 1, T / max(M, 1),
            f"time mesh violates condition (iii): k = T/{M} > T/4 (need M >= 4)")
    nodes = T * np.arange(M + 1) / M
    nodes[-1] = T
    return TimePartition(nodes)


def make_graded(T, M, alpha, conditions=DEFAULT_CONDITIONS):
    """Nodes t_m = T (m/M)**alpha.

    With ``conditions=None`` the mesh is returned unchecked, which is useful
    for inspecting meshes with :func:`validate`.
    """
    if alpha < 1:
        raise ValueError(f"grading exponent must be >= 1, got {alpha!r}")
    if T <= 0:
        raise ValueError(f"horizon T must be positive, got {T!r}")
    if M < 4:
        raise MeshConditionError("iii", 1, float("nan"), "need M >= 4")
    if alpha == 1:
        partition = make_uniform(T, M)
    else:
        nodes = T * (np.arange(M + 1) / M) ** alpha
        nodes[-1] = T
        partition = TimePartition(nodes)
    if conditions is not None:
        check(partition, conditions)
    return partition
