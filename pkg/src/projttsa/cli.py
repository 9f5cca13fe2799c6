"""Experiment harness.

    python -m projttsa {check,synthetic,gtd,bounds} [--config cfg.json]
        [--seed S] [--out DIR] [--trials N] [--steps T]

A config file is a flat JSON object whose keys are the fields of
:class:`RunConfig`; command-line flags override it. Keys left at ``None``
take the defaults of the chosen experiment (see ``EXPERIMENT_DEFAULTS``).

Artifacts written to ``out``:

* ``summary.json``: assumption report, constants, approximation errors,
  fitted slopes and majorant constants, bound margins
* ``trace.csv`` (synthetic) or ``trace_<family>.csv`` (gtd): columns
  t, stat_x, stat_y, total_x, total_y, bound_x, bound_y
* ``bounds.csv`` / ``bounds_<family>.csv`` for the ``bounds`` command
* the problem instance (``system.json`` and subspace files) for replay

Errors exit nonzero and print a JSON error object on stderr.
"""
import argparse
import json
import math
import os
import sys
from dataclasses import asdict, dataclass, fields, replace
from typing import NamedTuple, Optional, Sequence

import numpy as np

from . import constants, gtd, projection, simulate, synthetic
from .errors import AssumptionViolated, ConfigError, InsufficientData, TTSAError
from .fitting import fit_loglog_slope, fit_majorant_constant
from .system import SolutionPair, check_assumptions, load_system, save_system, \
    unconstrained_solution

EXPERIMENTS = ("check", "synthetic", "gtd", "bounds")
PROBLEMS = ("synthetic", "gtd", "file")
INITS = ("zero", "constrained")

EXPERIMENT_DEFAULTS = {
    "synthetic": dict(alpha=0.2, beta=0.01, T=5000, trials=25, draws="ambient"),
    "gtd": dict(alpha=0.02, beta=0.001, T=200_000, trials=64, draws="projected"),
}


@dataclass(frozen=True)
class RunConfig:
    experiment: str = "synthetic"
    # problem for check/bounds; synthetic and gtd imply their own
    problem: Optional[str] = None
    seed: int = 0
    # synthetic instance
    n: int = 20
    m: int = 16
    r: int = 6
    coupling_scale: float = 0.08
    decay_rate: float = 0.35
    spectrum_fast: Optional[Sequence[float]] = None
    spectrum_slow: Optional[Sequence[float]] = None
    # gtd instance; feature_seed None means seed + 1
    gamma: float = gtd.GAMMA
    feature_seed: Optional[int] = None
    # replayed instance (problem = "file"); missing subspace files mean full space
    system_file: Optional[str] = None
    subspace_x_file: Optional[str] = None
    subspace_y_file: Optional[str] = None
    # iteration
    alpha: Optional[float] = None
    beta: Optional[float] = None
    noise: str = "gaussian_iid"
    sigma: float = 0.08
    T: Optional[int] = None
    trials: Optional[int] = None
    init: str = "zero"
    draws: Optional[str] = None
    checkpoints: int = 50
    # reporting
    margin_T: Sequence[int] = (100, 1000, 5000)
    fit_window: Sequence[float] = (0.1, 1.0)
    strict: bool = True
    out: str = "out"

    @classmethod
    def from_dict(cls, d):
        if not isinstance(d, dict):
            raise ConfigError("config must be a JSON object")
        known = {f.name for f in fields(cls)}
        for k in d:
            if k not in known:
                raise ConfigError(f"unknown config key {k!r}", k)
        return cls(**d)

    def to_dict(self):
        d = asdict(self)
        for k in ("margin_T", "fit_window", "spectrum_fast", "spectrum_slow"):
            if d[k] is not None:
                d[k] = list(d[k])
        return d

    @property
    def problem_kind(self):
        if self.experiment in ("synthetic", "gtd"):
            return self.experiment
        return self.problem or "synthetic"

    def resolved(self):
        """Copy with experiment defaults filled in, after validation."""
        self.validate()
        base = EXPERIMENT_DEFAULTS["gtd" if self.problem_kind == "gtd" else "synthetic"]
        cfg = replace(self, problem=self.problem_kind,
                      **{k: v for k, v in base.items() if getattr(self, k) is None})
        if cfg.feature_seed is None:
            cfg = replace(cfg, feature_seed=cfg.seed + 1)
        cfg.validate()
        return cfg

    def validate(self):
        def need(ok, key, msg):
            if not ok:
                raise ConfigError(f"{key}: {msg}", key)

        def is_int(v):
            return isinstance(v, (int, np.integer)) and not isinstance(v, bool)

        def is_seq(v):
            return isinstance(v, (list, tuple))

        def is_num(v):
            return isinstance(v, (int, float, np.number)) and not isinstance(v, bool) \
                and math.isfinite(v)

        need(self.experiment in EXPERIMENTS, "experiment", f"must be one of {EXPERIMENTS}")
        need(self.problem is None or self.problem in PROBLEMS, "problem",
             f"must be one of {PROBLEMS}")
        need(is_int(self.seed) and self.seed >= 0, "seed", "must be a nonnegative integer")
        for k in ("n", "m", "r"):
            need(is_int(getattr(self, k)) and getattr(self, k) >= 1, k, "must be a positive integer")
        need(self.r <= min(self.n, self.m), "r", "must not exceed min(n, m)")
        need(is_num(self.coupling_scale) and self.coupling_scale >= 0, "coupling_scale",
             "must be a nonnegative number")
        need(is_num(self.decay_rate), "decay_rate", "must be a finite number")
        for k, dim in (("spectrum_fast", self.n), ("spectrum_slow", self.m)):
            v = getattr(self, k)
            need(v is None or (is_seq(v) and len(v) == dim and all(is_num(s) and s < 0 for s in v)), k,
                 f"must list {dim} strictly negative numbers")
        need(is_num(self.gamma) and 0 < self.gamma < 1, "gamma", "must lie in (0, 1)")
        need(self.feature_seed is None or (is_int(self.feature_seed) and self.feature_seed >= 0),
             "feature_seed", "must be a nonnegative integer")
        if self.problem_kind == "file":
            need(isinstance(self.system_file, str), "system_file", "required for problem 'file'")
        for k in ("alpha", "beta"):
            v = getattr(self, k)
            need(v is None or (is_num(v) and v > 0), k, "must be a positive number")
        if self.alpha is not None and self.beta is not None:
            need(self.beta <= self.alpha, "beta", "must not exceed alpha")
        need(self.noise in simulate.NOISE_KINDS, "noise", f"must be one of {simulate.NOISE_KINDS}")
        need(is_num(self.sigma) and self.sigma >= 0, "sigma", "must be a nonnegative number")
        need(self.T is None or (is_int(self.T) and self.T >= 1), "T", "must be a positive integer")
        need(self.trials is None or (is_int(self.trials) and self.trials >= 1), "trials",
             "must be a positive integer")
        need(self.init in INITS, "init", f"must be one of {INITS}")
        need(self.draws is None or self.draws in simulate.DRAW_MODES, "draws",
             f"must be one of {simulate.DRAW_MODES}")
        need(is_int(self.checkpoints) and self.checkpoints >= 2, "checkpoints",
             "must be an integer >= 2")
        need(is_seq(self.margin_T) and all(is_int(t) and t >= 1 for t in self.margin_T), "margin_T",
             "must list positive integers")
        w = self.fit_window
        need(is_seq(w) and len(w) == 2 and all(is_num(v) for v in w) and 0 <= w[0] < w[1] <= 1, "fit_window",
             "must be a pair 0 <= lo < hi <= 1")
        need(isinstance(self.strict, bool), "strict", "must be true or false")
        need(isinstance(self.out, str) and self.out != "", "out", "must be a directory path")


class Problem(NamedTuple):
    label: str
    system: object
    solution: SolutionPair
    sub_x: projection.Subspace
    sub_y: projection.Subspace


def build_problems(cfg):
    """Problem instances named by ``cfg`` (one, or the three GTD families),
    plus the files describing them."""
    kind = cfg.problem_kind
    if kind == "synthetic":
        scfg = synthetic.SyntheticConfig(
            n=cfg.n, m=cfg.m, r=cfg.r, coupling_scale=cfg.coupling_scale,
            spectrum_fast=cfg.spectrum_fast, spectrum_slow=cfg.spectrum_slow,
            decay_rate=cfg.decay_rate, seed=cfg.seed,
        )
        inst = synthetic.generate(scfg, check=False)
        problems = [Problem("synthetic", *inst)]
        files = {"system.json": inst.system, "subspace_x.json": inst.sub_x,
                 "subspace_y.json": inst.sub_y}
    elif kind == "gtd":
        mdp, vs = gtd.build_mdp(cfg.seed, cfg.gamma)
        G = gtd.gtd_system(mdp)
        sol = unconstrained_solution(G)
        problems, files = [], {"system.json": G}
        for fam in gtd.feature_families(vs, cfg.feature_seed):
            sub = projection.Subspace.from_spanning(fam.Phi)
            problems.append(Problem(fam.label, G, sol, sub, sub))
            files[f"features_{fam.label}.json"] = sub
    else:
        G = load_system(cfg.system_file)
        sub_x = (projection.load_subspace(cfg.subspace_x_file) if cfg.subspace_x_file
                 else projection.Subspace.full(G.n))
        sub_y = (projection.load_subspace(cfg.subspace_y_file) if cfg.subspace_y_file
                 else projection.Subspace.full(G.m))
        problems = [Problem("file", G, unconstrained_solution(G), sub_x, sub_y)]
        files = {}
    return problems, files


def _finite(v):
    return float(v) if math.isfinite(v) else None


def _clean(obj):
    """JSON-safe copy: numpy scalars to Python, non-finite floats to null."""
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        return _finite(obj)
    return obj


def _fmt(v):
    return repr(int(v)) if isinstance(v, (int, np.integer)) else format(float(v), ".17g")


def write_csv(path, header, rows):
    with open(path, "w", newline="") as f:
        f.write(",".join(header) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")


def write_json(path, obj):
    with open(path, "w") as f:
        f.write(json.dumps(_clean(obj), indent=2, allow_nan=False) + "\n")


def _static_analysis(cfg, p):
    """Everything about a problem that needs no simulation."""
    steps = simulate.StepSizes(cfg.alpha, cfg.beta)
    noise = simulate.NoiseModel(cfg.noise, cfg.sigma)
    report = check_assumptions(p.system, p.sub_x, p.sub_y, cfg.alpha, cfg.beta)
    csol = projection.constrained_solution(p.system, p.sub_x, p.sub_y)
    rc = constants.resolvent_constants(p.system, p.sub_x, p.sub_y)
    tc = constants.theorem_constants(rc, p.system, noise.C_eps(p.system.n), noise.C_psi(p.system.m))
    ex, ey = projection.approximation_errors(p.solution, p.sub_x, p.sub_y)
    fx, fy = constants.bound_floor(tc, ex, ey)
    section = {
        "dims": {"n": p.system.n, "m": p.system.m, "d": p.sub_x.rank, "r": p.sub_y.rank},
        "assumptions": report.to_dict(),
        "constants": {**rc.scalars(), **tc.to_dict()},
        "approximation": {
            "eps_x_sq": ex,
            "eps_y_sq": ey,
            # distance of the constrained solution to the true one: the plateau
            "floor_x": float(np.sum((csol.x_p - p.solution.x_star) ** 2)),
            "floor_y": float(np.sum((csol.y_p - p.solution.y_star) ** 2)),
            "bound_floor_x": fx,
            "bound_floor_y": fy,
            "check": constants.approximation_bound_check(
                p.system, p.sub_x, p.sub_y, rc, p.solution, csol),
        },
        "constrained_residuals": {"fast": csol.residual_fast, "slow": csol.residual_slow},
    }
    return section, report, csol, tc, steps, noise


def _fits(cfg, trace, floor_x, floor_y):
    out = {"window": list(cfg.fit_window)}
    for name, values in (("stat_x_slope", trace.stat_x), ("stat_y_slope", trace.stat_y)):
        try:
            out[name] = fit_loglog_slope(trace.t, values, tuple(cfg.fit_window))
        except InsufficientData:
            pass
    for name, values, floor in (("majorant_L_x", trace.total_x, floor_x),
                                ("majorant_L_y", trace.total_y, floor_y)):
        try:
            out[name] = fit_majorant_constant(trace.t, values, floor)
        except InsufficientData:
            pass
    return out


def _margins(cfg, trace, tc, section):
    """Empirical mean error against the bound at each requested T.

    By the bias-variance split, total <= 2 stat + 2 approx, so whenever the
    bound fails at least one component exceeds its own share: approximation
    (||x_p - x*||^2 > B_xx eps_x^2 + B_xy eps_y^2) or statistical
    (stat_x(T) > L_x / T)."""
    ap = section["approximation"]
    out = []
    for T in cfg.margin_T:
        if T > trace.t[-1]:
            continue
        rec = trace.at(T)
        (_, bx, by), = constants.bound_curve(tc, ap["eps_x_sq"], ap["eps_y_sq"], [T])
        entry = {"T": int(T)}
        exceeded = []
        for c, bound in (("x", bx), ("y", by)):
            lhs = rec["total_" + c]
            entry[f"lhs_{c}"] = lhs
            entry[f"rhs_{c}"] = bound
            entry[f"margin_{c}"] = bound / lhs if lhs > 0 else math.inf
            # size of a 1/T^2 remainder that would close any gap
            entry[f"implied_D_{c}"] = T * T * (lhs - bound)
            approx_ok = ap["check"][f"holds_{c}"]
            stat_ok = rec["stat_" + c] <= getattr(tc, "L_" + c) / T
            if lhs > bound:
                if not approx_ok:
                    exceeded.append(f"{c}:approximation")
                if not stat_ok:
                    exceeded.append(f"{c}:statistical")
        entry["holds"] = entry["lhs_x"] <= bx and entry["lhs_y"] <= by
        entry["exceeded"] = exceeded
        out.append(entry)
    return out


def _initial_point(cfg, csol):
    if cfg.init == "constrained":
        return csol.x_p, csol.y_p
    return None, None


def _grid(cfg, T):
    extra = [t for t in cfg.margin_T if t <= T]
    return simulate.checkpoint_grid(T, cfg.checkpoints, extra)


def _simulate_problem(cfg, p):
    section, report, csol, tc, steps, noise = _static_analysis(cfg, p)
    if cfg.strict and not report.all_ok:
        raise AssumptionViolated(
            f"{p.label}: assumption check fails: {', '.join(report.failures())}", report)
    x0, y0 = _initial_point(cfg, csol)
    trace = simulate.run_experiment(
        p.system, p.sub_x, p.sub_y, steps, noise, cfg.T, cfg.trials,
        master_seed=cfg.seed, checkpoint_grid=_grid(cfg, cfg.T), x0=x0, y0=y0, draws=cfg.draws,
    )
    ap = section["approximation"]
    bounds = constants.bound_curve(tc, ap["eps_x_sq"], ap["eps_y_sq"], trace.t)
    rows = [
        (int(t), trace.stat_x[i], trace.stat_y[i], trace.total_x[i], trace.total_y[i], bx, by)
        for i, (t, bx, by) in enumerate(bounds)
    ]
    tele = [simulate.telescoping_residuals(p.system, p.sub_x, p.sub_y, steps, s, csol)
            for s in trace.final_states]
    section["final"] = {"T": int(trace.t[-1]), **trace.at(int(trace.t[-1]))}
    section["fits"] = _fits(cfg, trace, ap["floor_x"], ap["floor_y"])
    section["bound_margins"] = _margins(cfg, trace, tc, section)
    section["telescoping"] = {"max_fast": max(r[0] for r in tele),
                              "max_slow": max(r[1] for r in tele)}
    return section, rows


TRACE_HEADER = ("t", "stat_x", "stat_y", "total_x", "total_y", "bound_x", "bound_y")


def _families_summary(sections):
    """Approximation-error ordering of the feature families."""
    labels = list(sections)
    approx = [sections[k]["approximation"]["floor_y"] for k in labels]
    eps = [sections[k]["approximation"]["eps_y_sq"] for k in labels]
    out = {
        "labels": labels,
        "approx_ordered": bool(all(a < b for a, b in zip(approx, approx[1:]))),
        "eps_y_sq_ordered": bool(all(a < b for a, b in zip(eps, eps[1:]))),
    }
    slopes = [sections[k].get("fits", {}).get("stat_y_slope") for k in labels]
    if all(s is not None for s in slopes):
        out["stat_y_slope_spread"] = max(slopes) - min(slopes)
    return out


def run(cfg):
    """Execute ``cfg`` and write its artifacts; returns the summary dict."""
    cfg = cfg.resolved()
    problems, files = build_problems(cfg)
    os.makedirs(cfg.out, exist_ok=True)
    for name, obj in files.items():
        path = os.path.join(cfg.out, name)
        if isinstance(obj, projection.Subspace):
            projection.save_subspace(obj, path)
        else:
            save_system(obj, path)

    config_record = cfg.to_dict()
    del config_record["out"]
    summary = {"experiment": cfg.experiment, "problem": cfg.problem, "config": config_record}
    sections = {}
    multi = len(problems) > 1
    for p in problems:
        suffix = f"_{p.label}" if multi else ""
        if cfg.experiment in ("check", "bounds"):
            section, _, _, tc, _, _ = _static_analysis(cfg, p)
            if cfg.experiment == "bounds":
                T = cfg.T
                ap = section["approximation"]
                rows = constants.bound_curve(tc, ap["eps_x_sq"], ap["eps_y_sq"], _grid(cfg, T))
                write_csv(os.path.join(cfg.out, f"bounds{suffix}.csv"),
                          ("t", "bound_x", "bound_y"), rows)
        else:
            section, rows = _simulate_problem(cfg, p)
            write_csv(os.path.join(cfg.out, f"trace{suffix}.csv"), TRACE_HEADER, rows)
        sections[p.label] = section

    if multi:
        summary["families"] = sections
        summary["ordering"] = _families_summary(sections)
    else:
        summary.update(sections[problems[0].label])
    write_json(os.path.join(cfg.out, "summary.json"), summary)
    return _clean(summary)


def load_config(path):
    try:
        with open(path) as f:
            d = json.load(f)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}", "config") from None
    return RunConfig.from_dict(d)


def build_parser():
    ap = argparse.ArgumentParser(prog="projttsa", description=__doc__.split("\n\n")[0])
    ap.add_argument("experiment", choices=EXPERIMENTS)
    ap.add_argument("--config", help="flat JSON config file")
    ap.add_argument("--seed", type=int)
    ap.add_argument("--out")
    ap.add_argument("--trials", type=int)
    ap.add_argument("--steps", type=int, help="horizon T")
    return ap


def config_from_args(args):
    cfg = load_config(args.config) if args.config else RunConfig()
    overrides = {"experiment": args.experiment}
    for flag, key in (("seed", "seed"), ("out", "out"), ("trials", "trials"), ("steps", "T")):
        v = getattr(args, flag)
        if v is not None:
            overrides[key] = v
    return replace(cfg, **overrides)


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        summary = run(config_from_args(args))
    except TTSAError as exc:
        print(json.dumps(_clean(exc.to_dict())), file=sys.stderr)
        return 2 if isinstance(exc, ConfigError) else 1
    except (OSError, ValueError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}), file=sys.stderr)
        return 1
    if summary.get("assumptions", {}).get("all_ok") is False:
        print("warning: assumption check failed", file=sys.stderr)
    return 0
