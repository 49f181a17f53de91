"""Command-line entry point: ``dgmaxreg <experiment> [flags]`` or ``dgmaxreg run config.json``.

Exit status: 0 all assertions pass, 1 an assertion failed, 2 configuration
error (schema, mesh condition, usage), 3 I/O error.
"""

from __future__ import annotations

import argparse
import copy
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import jsonschema
import numpy as np

from .rational import HOMOG, derive_family
from .spatial import CapabilityError, build_space, lp_norm
from .stepper import dg_solve
from .temporal import NormSpec, error_norm
from .time_partition import (DEFAULT_CONDITIONS, MeshConditionError, check, make_graded,
                             make_uniform)
from .timebasis import peval
from .lab import experiments as ex
from .lab.problems import get_problem
from .lab.report import ExperimentReport, emit_report

EXIT_OK, EXIT_FAIL, EXIT_CONFIG, EXIT_IO = 0, 1, 2, 3

EXPERIMENTS = ("solve", "rational", "smoothing", "maxreg", "monotonic", "resolvent",
               "converge", "projbound")


class ConfigError(ValueError):
    pass


# schema ------------------------------------------------------------------------

_EXP = {"anyOf": [{"type": "number", "minimum": 1}, {"enum": ["inf", "Infinity"]}]}
_INT1 = {"type": "integer", "minimum": 1}
_POS = {"type": "number", "exclusiveMinimum": 0}

_COMMON = {
    "experiment": {"enum": list(EXPERIMENTS)},
    "seed": {"type": "integer", "minimum": 0},
    "threads": _INT1,
    "out": {"type": "string"},
}
_SPACE = {"dim": {"enum": [1, 2]}, "n": _INT1, "r": {"enum": [1, 2]}}
_TIME = {"T": _POS, "M": {"type": "integer"}, "grading_alpha": {"type": "number", "minimum": 1}}
_LEVELS = {"levels": {"type": "integer", "minimum": 2}, "M0": {"type": "integer"}, "T": _POS}

_PARAMS = {
    "solve": {**_SPACE, **_TIME, "q": {"type": "integer", "minimum": 0, "maximum": 6},
              "problem": {"type": "string"}, "dump": {"type": "string"}},
    "rational": {"q": {"type": "integer", "minimum": 0, "maximum": 6}},
    "smoothing": {**_SPACE, **_LEVELS, "q": {"type": "integer", "minimum": 0, "maximum": 6},
                  "p": {"type": "array", "items": _EXP, "minItems": 1},
                  "u0": {"enum": ["bump", "random", "eigenmode"]}, "drift": _POS},
    "maxreg": {**_SPACE, **_LEVELS, "q": {"type": "integer", "minimum": 0, "maximum": 6},
               "grid": {"type": "array", "minItems": 1,
                        "items": {"type": "array", "items": _EXP, "minItems": 2, "maxItems": 2}},
               "forcing": {"enum": ["polynomial", "alternating", "eigenmode", "random", "zero"]},
               "drift": _POS},
    "monotonic": {**_SPACE, **_TIME, "p": {"type": "array", "items": _EXP, "minItems": 1},
                  "u0": {"type": "array", "minItems": 1,
                         "items": {"enum": ["bump", "random", "eigenmode", "zero"]}}},
    "resolvent": {"meshes": {"type": "array", "minItems": 1,
                             "items": {"type": "array", "items": _INT1, "minItems": 2,
                                       "maxItems": 2}},
                  "gamma": {"type": "number", "exclusiveMinimum": 0,
                            "exclusiveMaximum": math.pi / 2},
                  "zmin": _POS, "zmax": _POS, "npts": {"type": "integer", "minimum": 2},
                  "p": {"type": "array", "items": {"enum": [1, 2, "inf"]}, "minItems": 1},
                  "power_check": {"type": "boolean"}},
    "converge": {"problem": {"type": "string"}, "q": {"type": "integer", "minimum": 0, "maximum": 6},
                 "r": {"enum": [1, 2]}, "s": _EXP, "p": _EXP,
                 "mode": {"enum": ["refine_k", "refine_h", "refine_both"]},
                 "levels": {"type": "integer", "minimum": 2}, "n_fixed": _INT1,
                 "M_fixed": {"type": "integer"}, "M0": {"type": "integer"}, "n0": _INT1,
                 "T": _POS, "tol": _POS},
    "projbound": {"problem": {"type": "string"}, "q": {"type": "integer", "minimum": 0, "maximum": 6},
                  "r": {"enum": [1, 2]}, "s": _EXP, "p": _EXP,
                  "levels": {"type": "integer", "minimum": 2}, "n": _INT1,
                  "M0": {"type": "integer"}, "T": _POS, "drift": _POS},
}

DEFAULTS = {
    "solve": dict(dim=1, n=32, r=1, q=1, T=1.0, M=16, problem="sin_exp_1d"),
    "rational": dict(q=1),
    "smoothing": dict(dim=1, n=64, r=1, q=0, p=[1, 2, "inf"], u0="bump", levels=4, M0=8, T=1.0),
    "maxreg": dict(dim=1, n=32, r=1, q=0, grid=[[s, p] for s in (1, 2, "inf") for p in (1, 2, "inf")],
                   forcing="polynomial", levels=4, M0=128, T=1.0),
    "monotonic": dict(dim=1, n=64, r=1, T=1.0, M=16, p=[1, 2, "inf"],
                      u0=["eigenmode", "random", "bump"]),
    "resolvent": dict(meshes=[[1, 32], [1, 64], [2, 8]], gamma=math.pi / 4, zmin=1e-2, zmax=1e4,
                      npts=13, p=[1, 2, "inf"], power_check=True),
    "converge": dict(problem="sin_exp_1d", q=0, r=1, s=2, p=2, mode="refine_h", levels=4,
                     n_fixed=256, M_fixed=128, M0=256, n0=8, T=1.0, tol=0.15),
    "projbound": dict(problem="sin_exp_1d", q=1, r=2, s=2, p=2, levels=4, n=512, M0=64, T=1.0),
}


def schema_for(experiment):
    props = {**_COMMON, **_PARAMS[experiment]}
    return {"type": "object", "properties": props, "required": ["experiment"],
            "additionalProperties": False}


_TOP = {"type": "object", "required": ["experiment"],
        "properties": {"experiment": {"enum": list(EXPERIMENTS)}}}


@dataclass
class RunConfig:
    experiment: str
    params: dict = field(default_factory=dict)
    seed: int = 0
    threads: int = 1
    out: str | None = None

    @classmethod
    def from_dict(cls, data, source=None):
        validate_config(data, source)
        params = {k: v for k, v in data.items() if k not in _COMMON}
        return cls(data["experiment"], params, data.get("seed", 0), data.get("threads", 1),
                   data.get("out"))

    def to_dict(self):
        out = {"experiment": self.experiment, **copy.deepcopy(self.params), "seed": self.seed,
               "threads": self.threads}
        if self.out is not None:
            out["out"] = self.out
        return out

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(_load_json(text), text)

    def resolved(self):
        """Parameters with defaults filled in."""
        return {**DEFAULTS[self.experiment], **self.params}


def _line_of(source, path):
    if source is None or not path:
        return None
    key = next((p for p in reversed(list(path)) if isinstance(p, str)), None)
    if key is None:
        return None
    for i, line in enumerate(source.splitlines(), 1):
        if f'"{key}"' in line:
            return i
    return None


def validate_config(data, source=None):
    try:
        jsonschema.validate(data, _TOP)
        validator = jsonschema.Draft202012Validator(schema_for(data["experiment"]))
        errors = sorted(validator.iter_errors(data), key=lambda e: [str(p) for p in e.path])
    except jsonschema.ValidationError as err:
        errors = [err]
    if errors:
        err = errors[0]
        line = _line_of(source, err.path)
        if err.validator == "additionalProperties" and source is not None:
            extra = [k for k in data if k not in schema_for(data["experiment"])["properties"]]
            line = _line_of(source, [extra[0]]) if extra else line
        where = f"line {line}: " if line else ""
        loc = "/".join(str(p) for p in err.path) or "<root>"
        raise ConfigError(f"{where}{loc}: {err.message}")


def _load_json(text):
    try:
        return json.loads(text)
    except json.JSONDecodeError as err:
        raise ConfigError(f"line {err.lineno}: invalid JSON ({err.msg})") from None


# dispatch ----------------------------------------------------------------------

def _exp(x):
    return math.inf if x in ("inf", "Infinity") else float(x)


def _space(cfg):
    return build_space("unit_interval" if cfg["dim"] == 1 else "unit_square", cfg["n"], cfg["r"])


def _partition(cfg):
    alpha = cfg.get("grading_alpha")
    if alpha is None or alpha == 1:
        part = make_uniform(cfg["T"], cfg["M"])
    else:
        part = make_graded(cfg["T"], cfg["M"], alpha)
    check(part, DEFAULT_CONDITIONS)
    return part


def _check_levels(cfg, key="M0"):
    # partitions are built and validated before any driver runs
    ex.level_partitions(cfg["T"], cfg[key], cfg["levels"])


def _run_solve(cfg, seed, threads):
    space = _space(cfg)
    part = _partition(cfg)
    problem = get_problem(cfg["problem"])
    if problem.dim != space.dim:
        raise ConfigError(f"problem {problem.id} is {problem.dim}D but dim={space.dim}")
    sol = dg_solve(space, part, cfg["q"], u0=problem.u0, f=problem.f)
    rep = ExperimentReport("solve", ["m", "t", "l2_norm", "l2_error"],
                           metadata={"dim": space.dim, "n": cfg["n"], "r": cfg["r"], "q": cfg["q"],
                                     "M": part.M, "T": part.T, "problem": problem.id})
    rule = space.norm_rule()
    pts = rule.points.reshape(-1, space.dim)
    nc, nq = rule.points.shape[:2]
    for m in range(1, part.M + 1):
        t = part.nodes[m]
        u = sol.u_minus(m)
        diff = np.abs(space.evaluate(u, rule) - problem.u(t, pts).reshape(nc, nq))
        err = float(np.sqrt(np.sum(rule.weights * diff**2)))
        rep.add_row(m=m, t=t, l2_norm=lp_norm(space, u, 2), l2_error=err)
    total = error_norm(problem.u, sol, NormSpec(2, 2))
    rep.metadata["l2l2_error"] = total
    rep.check("finite", np.all(np.isfinite(sol.coeffs)), f"L2(L2) error {total:.6g}")
    if cfg.get("dump"):
        coords = space.interior_coords
        with open(cfg["dump"], "w") as fh:
            fh.write("m,t,dof," + ",".join("xyz"[: space.dim]) + ",value\n")
            for m in range(part.M + 1):
                u = sol.u_minus(m)
                for i, (c, v) in enumerate(zip(coords, u)):
                    fh.write(f"{m},{float(part.nodes[m])!r},{i}," + ",".join(repr(float(x)) for x in c)
                             + f",{float(v)!r}\n")
    return rep


def _run_rational(cfg, seed, threads):
    fam = derive_family(cfg["q"])
    print(fam.to_json())
    rep = ExperimentReport("rational", ["l", "j", "numerator", "denominator"],
                           metadata={"q": fam.q, "family": fam.to_dict()})
    den = " ".join(str(c) for c in fam.p_hat)
    for l in range(fam.q + 1):
        rep.add_row(l=l, j="homog", numerator=" ".join(str(c) for c in fam.numerator(l, HOMOG)),
                    denominator=den)
        for j in range(fam.q + 1):
            rep.add_row(l=l, j=j, numerator=" ".join(str(c) for c in fam.numerator(l, j)),
                        denominator=den)
    rep.check("normalized", fam.p_hat[0] == 1, "p_hat(0) = 1")
    rep.check("consistency", all(peval(fam.numerator(l, HOMOG), 0) == 1 for l in range(fam.q + 1)),
              "r_{l,0}(0) = 1")
    roots = fam.denominator_roots()
    rep.check("left_half_plane", bool(np.all(roots.real < 0)), f"max Re root {roots.real.max():.4g}")
    return rep


def _run_smoothing(cfg, seed, threads):
    _check_levels(cfg)
    return ex.run_smoothing_scan(_space(cfg), cfg["q"], [_exp(p) for p in cfg["p"]], cfg["u0"],
                                 cfg["levels"], cfg["M0"], cfg["T"], seed, threads,
                                 drift=cfg.get("drift", ex.DRIFT))


def _run_maxreg(cfg, seed, threads):
    _check_levels(cfg)
    grid = [(_exp(s), _exp(p)) for s, p in cfg["grid"]]
    return ex.run_maxreg_scan(_space(cfg), cfg["q"], grid, cfg["forcing"], cfg["levels"], cfg["M0"],
                              cfg["T"], seed=seed, threads=threads, drift=cfg.get("drift", ex.DRIFT))


def _run_monotonic(cfg, seed, threads):
    part = _partition(cfg)
    return ex.run_monotonicity_check(_space(cfg), part, [_exp(p) for p in cfg["p"]], cfg["u0"],
                                     seed=seed)


def _run_resolvent(cfg, seed, threads):
    spaces = {}
    for dim, n in cfg["meshes"]:
        if dim not in (1, 2):
            raise ConfigError(f"mesh dimension must be 1 or 2, got {dim}")
        spaces[f"{dim}d_n{n}"] = build_space("unit_interval" if dim == 1 else "unit_square", n, 1)
    return ex.run_resolvent_scan(spaces, cfg["gamma"], (cfg["zmin"], cfg["zmax"]), cfg["npts"],
                                 [_exp(p) for p in cfg["p"]], power_check=cfg["power_check"],
                                 seed=seed, threads=threads)


def _run_converge(cfg, seed, threads):
    if cfg["mode"] == "refine_h":
        _partition({"T": cfg["T"], "M": cfg["M_fixed"]})
    else:
        _check_levels(cfg)
    spec = NormSpec(_exp(cfg["s"]), _exp(cfg["p"]))
    return ex.run_convergence_study(get_problem(cfg["problem"]), cfg["q"], cfg["r"], spec,
                                    cfg["mode"], cfg["T"], cfg["levels"], cfg["n_fixed"],
                                    cfg["M_fixed"], cfg["M0"], cfg["n0"], cfg["tol"], threads)


def _run_projbound(cfg, seed, threads):
    _check_levels(cfg)
    spec = NormSpec(_exp(cfg["s"]), _exp(cfg["p"]))
    return ex.run_projection_bound_check(get_problem(cfg["problem"]), cfg["q"], cfg["r"], spec,
                                         cfg["levels"], cfg["T"], cfg["n"], cfg["M0"], threads,
                                         drift=cfg.get("drift", ex.DRIFT))


RUNNERS = {"solve": _run_solve, "rational": _run_rational, "smoothing": _run_smoothing,
           "maxreg": _run_maxreg, "monotonic": _run_monotonic, "resolvent": _run_resolvent,
           "converge": _run_converge, "projbound": _run_projbound}


def execute(config: RunConfig, out=None, stream=None, err=None):
    """Run a validated configuration; returns the exit status."""
    stream = stream or sys.stdout
    err = err or sys.stderr
    cfg = config.resolved()
    try:
        report = RUNNERS[config.experiment](cfg, config.seed, config.threads)
    except (MeshConditionError, ConfigError, ex.UsageError, CapabilityError, ValueError) as e:
        print(f"configuration error: {e}", file=err)
        return EXIT_CONFIG
    except OSError as e:
        print(f"I/O error: {e}", file=err)
        return EXIT_IO
    report.metadata.setdefault("config", config.to_dict())
    base = out or config.out or config.experiment
    try:
        paths = emit_report(report, base)
    except OSError as e:
        print(f"I/O error: {e}", file=err)
        return EXIT_IO
    for c in report.checks:
        print(f"{'PASS' if c.passed else 'FAIL'} {c.name}: {c.detail}", file=stream)
    print(f"wrote {paths[0]} and {paths[1]}", file=stream)
    if not report.passed:
        print(report.trend_table(), file=err)
        return EXIT_FAIL
    return EXIT_OK


def run_config(path, out=None, seed=None, threads=None):
    try:
        text = Path(path).read_text()
    except OSError as e:
        print(f"I/O error: {e}", file=sys.stderr)
        return EXIT_IO
    try:
        config = RunConfig.from_json(text)
    except ConfigError as e:
        print(f"configuration error: {path}: {e}", file=sys.stderr)
        return EXIT_CONFIG
    if seed is not None:
        config.seed = seed
    if threads is not None:
        config.threads = threads
    return execute(config, out)


# argparse ----------------------------------------------------------------------

def _exp_arg(text):
    return "inf" if text.strip().lower() in ("inf", "infinity") else float(text)


def _add_space(p, n=None):
    p.add_argument("--dim", type=int, choices=(1, 2))
    p.add_argument("--n", type=int, default=n)
    p.add_argument("--r", "--degree", dest="r", type=int, choices=(1, 2))


def _global_flags():
    g = argparse.ArgumentParser(add_help=False)
    g.add_argument("--out", default=argparse.SUPPRESS,
                   help="output base path (writes <out>.csv and <out>.json)")
    g.add_argument("--seed", type=int, default=argparse.SUPPRESS)
    g.add_argument("--threads", type=int, default=argparse.SUPPRESS)
    g.add_argument("--config", default=argparse.SUPPRESS,
                   help="JSON run configuration (overrides the subcommand)")
    return g


def build_parser():
    glob = _global_flags()
    ap = argparse.ArgumentParser(prog="dgmaxreg", description=__doc__.splitlines()[0],
                                 parents=[glob])
    sub = ap.add_subparsers(dest="command", parser_class=_subparser_class(glob))

    p = sub.add_parser("run", help="run a JSON configuration")
    p.add_argument("path")

    p = sub.add_parser("solve", help="solve a manufactured problem")
    _add_space(p)
    p.add_argument("--q", type=int)
    p.add_argument("--T", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--grading-alpha", dest="grading_alpha", type=float)
    p.add_argument("--problem")
    p.add_argument("--dump", help="write nodal values at every t_m to this CSV file")

    p = sub.add_parser("rational", help="print the exact dG(q) rational family")
    p.add_argument("--q", type=int)

    p = sub.add_parser("smoothing", help="homogeneous smoothing constants")
    _add_space(p)
    p.add_argument("--q", type=int)
    p.add_argument("--p", type=_exp_arg, nargs="+")
    p.add_argument("--u0", choices=("bump", "random", "eigenmode"))
    p.add_argument("--levels", type=int)
    p.add_argument("--M0", type=int)
    p.add_argument("--T", type=float)

    p = sub.add_parser("maxreg", help="maximal-regularity ratios")
    _add_space(p)
    p.add_argument("--q", type=int)
    p.add_argument("--grid", nargs="+", metavar="S,P",
                   help="(s,p) pairs such as 2,2 inf,1")
    p.add_argument("--forcing", choices=("polynomial", "alternating", "eigenmode", "random", "zero"))
    p.add_argument("--levels", type=int)
    p.add_argument("--M0", type=int)
    p.add_argument("--T", type=float)

    p = sub.add_parser("monotonic", help="L^p monotonicity of backward Euler")
    _add_space(p)
    p.add_argument("--T", type=float)
    p.add_argument("--M", type=int)
    p.add_argument("--grading-alpha", dest="grading_alpha", type=float)
    p.add_argument("--p", type=_exp_arg, nargs="+")
    p.add_argument("--u0", nargs="+", choices=("bump", "random", "eigenmode", "zero"))

    p = sub.add_parser("resolvent", help="discrete resolvent constants")
    p.add_argument("--meshes", nargs="+", metavar="DIM:N", help="e.g. 1:32 1:64 2:8")
    p.add_argument("--gamma", type=float)
    p.add_argument("--zmin", type=float)
    p.add_argument("--zmax", type=float)
    p.add_argument("--npts", type=int)
    p.add_argument("--p", type=_exp_arg, nargs="+")
    p.add_argument("--no-power", dest="power_check", action="store_false", default=None)

    for name, helptext in (("converge", "observed convergence orders"),
                           ("projbound", "error vs projection-error ratios")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--problem")
        p.add_argument("--q", type=int)
        p.add_argument("--r", type=int, choices=(1, 2))
        p.add_argument("--s", type=_exp_arg)
        p.add_argument("--p", type=_exp_arg)
        p.add_argument("--levels", type=int)
        p.add_argument("--M0", type=int)
        p.add_argument("--T", type=float)
        if name == "converge":
            p.add_argument("--mode", choices=("refine_k", "refine_h", "refine_both"))
            p.add_argument("--n-fixed", dest="n_fixed", type=int)
            p.add_argument("--M-fixed", dest="M_fixed", type=int)
            p.add_argument("--n0", type=int)
            p.add_argument("--tol", type=float)
        else:
            p.add_argument("--n", type=int)
    return ap


def _subparser_class(glob):
    class _Sub(argparse.ArgumentParser):
        def __init__(self, *a, **kw):
            kw.setdefault("parents", [glob])
            super().__init__(*a, **kw)
    return _Sub


def _flags_to_dict(args):
    skip = {"command", "out", "seed", "threads", "config", "path"}
    data = {"experiment": args.command}
    for key, val in vars(args).items():
        if key in skip or val is None:
            continue
        if key == "grid":
            pairs = []
            for item in val:
                s, _, p = item.partition(",")
                pairs.append([_exp_arg(s), _exp_arg(p)])
            val = pairs
        elif key == "meshes":
            val = [[int(x) for x in item.split(":")] for item in val]
        elif key == "p" and isinstance(val, list) and args.command == "resolvent":
            val = [v if v == "inf" else int(v) for v in val]
        data[key] = val
    return data


def main(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    for name in ("out", "seed", "threads", "config"):
        if not hasattr(args, name):
            setattr(args, name, None)
    if args.config:
        return run_config(args.config, args.out, args.seed, args.threads)
    if args.command is None:
        ap.print_help()
        return EXIT_CONFIG
    if args.command == "run":
        return run_config(args.path, args.out, args.seed, args.threads)
    data = _flags_to_dict(args)
    if args.seed is not None:
        data["seed"] = args.seed
    if args.threads is not None:
        data["threads"] = args.threads
    try:
        config = RunConfig.from_dict(data)
    except ConfigError as e:
        print(f"configuration error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    return execute(config, args.out)


if __name__ == "__main__":
    sys.exit(main())
