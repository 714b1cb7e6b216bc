"""Command-line harness: ``solve``, ``sweep`` and ``verify``.

Exit codes: 0 success, 1 run failure, 2 invalid configuration.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Optional

import numpy as np

from . import drivers, general_iteration, metrics
from .core import INVALID_CONFIG, OK, UNCERTIFIABLE, MinimaxProblem, SolveResult
from .maximin_ag2 import MODES, maximin_ag2
from .problems import ProblemSpec, default_start, make
from .verify import SUITES

CSV_HEADER = ("solver,problem,dim_x,dim_y,kappa_x,kappa_y,eps,mode,seed,grad_x_calls,"
              "grad_y_calls,outer_iters,certificate,cert_error,wall_time_ms,status,clamped")
WORKERS_ENV = "MINIMAXKIT_WORKERS"

SOLVERS = ("maximin_ag2", "minimax_appa", "scc_solve", "cc_solve", "minimax_ppa", "nc_solve",
           "nc_moreau_solve", "scsc_near_optimal", "scc_near_optimal", "nsc_accelerated",
           "nc_accelerated")
RANDOMIZED = {"minimax_ppa", "nc_solve", "nc_moreau_solve", "nsc_accelerated", "nc_accelerated"}
AUTO_T = {"minimax_appa", "scc_solve", "cc_solve"}
# runs to its own stopping rule, so T is ignored
NO_T = {"maximin_ag2"}


class ConfigError(ValueError):
    """The configuration document is malformed or violates a precondition."""


def _reject_unknown(section: dict, allowed: set, where: str) -> None:
    if not isinstance(section, dict):
        raise ConfigError(f"{where} must be an object")
    extra = set(section) - allowed
    if extra:
        raise ConfigError(f"unknown keys in {where}: {sorted(extra)}")


@dataclass
class SolverConfig:
    name: str
    eps: float
    T: Any = "auto"
    seed: Optional[int] = None
    mode: str = "faithful"
    T_constant: float = 6.0
    eta: Any = "eps_bar"
    outer_cap: Optional[int] = None
    agd_cap: Optional[int] = None

    KEYS = {"name", "eps", "T", "seed", "mode", "T_constant", "eta", "caps"}

    @classmethod
    def parse(cls, data: dict, require_eps: bool = True) -> "SolverConfig":
        _reject_unknown(data, cls.KEYS, "solver")
        name = data.get("name")
        if name not in SOLVERS:
            raise ConfigError(f"solver.name must be one of {SOLVERS}")
        caps = data.get("caps", {})
        _reject_unknown(caps, {"outer_cap", "agd_cap"}, "solver.caps")
        eps = data.get("eps", 1.0 if not require_eps else None)
        if eps is None:
            raise ConfigError("solver.eps is required")
        cfg = cls(name=name, eps=float(eps), T=data.get("T", "auto"), seed=data.get("seed"),
                  mode=data.get("mode", "faithful"), T_constant=float(data.get("T_constant", 6.0)),
                  eta=data.get("eta", "eps_bar"), outer_cap=caps.get("outer_cap"),
                  agd_cap=caps.get("agd_cap"))
        cfg.check(require_eps)
        return cfg

    def check(self, require_eps: bool = True) -> None:
        if require_eps and not (self.eps > 0 and math.isfinite(self.eps)):
            raise ConfigError("solver.eps must be a positive finite number")
        if self.mode not in MODES:
            raise ConfigError(f"solver.mode must be one of {MODES}")
        if self.name in RANDOMIZED and self.seed is None:
            raise ConfigError(f"{self.name} needs solver.seed")
        if self.seed is not None and (not isinstance(self.seed, int) or self.seed < 0):
            raise ConfigError("solver.seed must be a nonnegative integer")
        if self.T == "auto":
            if self.name not in AUTO_T | NO_T:
                raise ConfigError(f"{self.name} needs an explicit integer T")
        elif not isinstance(self.T, int) or self.T < 0:
            raise ConfigError("solver.T must be a nonnegative integer or \"auto\"")


@dataclass
class RunConfig:
    problem: ProblemSpec
    solver: SolverConfig
    x0: Optional[list] = None
    y0: Optional[list] = None
    output: Optional[str] = None


def parse_run_config(doc: dict) -> RunConfig:
    _reject_unknown(doc, {"problem", "solver", "start", "output"}, "config")
    if "problem" not in doc or "solver" not in doc:
        raise ConfigError("config needs problem and solver sections")
    try:
        spec = ProblemSpec.from_dict(doc["problem"])
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    solver = SolverConfig.parse(doc["solver"])
    start = doc.get("start", {})
    _reject_unknown(start, {"x0", "y0"}, "start")
    out = doc.get("output")
    if out is not None and not isinstance(out, str):
        raise ConfigError("output must be a file path")
    return RunConfig(spec, solver, start.get("x0"), start.get("y0"), out)


# ---------------------------------------------------------------------------
# running one configured solve


@dataclass
class RunRecord:
    fields: dict[str, Any] = field(default_factory=dict)

    def to_json(self) -> str:
        return json.dumps(self.fields, sort_keys=True, default=_json_default)


def _json_default(v):
    if isinstance(v, np.ndarray):
        return v.tolist()
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    raise TypeError(f"cannot serialise {type(v).__name__}")


def _auto_T(p: MinimaxProblem, name: str, x0, y0, eps: float, c: float) -> int:
    """Outer iterations for the proximal drivers from a certified initial gap."""
    base = p
    if name == "scc_solve":
        base = drivers.reduce(p, drivers.ReductionSpec("scc", eps, x0, y0))
    elif name == "cc_solve":
        base = drivers.reduce(p, drivers.ReductionSpec("cc", eps, x0, y0))
    gap0 = metrics.duality_gap(base, x0, y0)
    # Phi(x0) - Phi* + mu/4 ||x0 - x*||^2 <= 1.5 (Phi(x0) - Phi*) <= 1.5 gap
    return drivers.suggest_T_appa(base.profile.kappa_x, 1.5 * (gap0.value + gap0.error), eps, c)


def _dispatch(p: MinimaxProblem, cfg: SolverConfig, x0, y0, T, seed) -> SolveResult:
    kw = dict(mode=cfg.mode, outer_cap=cfg.outer_cap, agd_cap=cfg.agd_cap)
    n = cfg.name
    if n == "maximin_ag2":
        return maximin_ag2(p, x0, y0, eps=cfg.eps, **kw)
    if n == "minimax_appa":
        return drivers.minimax_appa(p, x0, y0, eps=cfg.eps, T=T, **kw)
    if n == "scc_solve":
        return drivers.scc_solve(p, x0, y0, eps=cfg.eps, T=T, **kw)
    if n == "cc_solve":
        return drivers.cc_solve(p, x0, y0, eps=cfg.eps, T=T, **kw)
    if n == "minimax_ppa":
        return drivers.minimax_ppa(p, x0, y0, eps=cfg.eps, T=T, seed=seed, **kw)
    if n == "nc_solve":
        return drivers.nc_solve(p, x0, y0, eps=cfg.eps, T=T, seed=seed, **kw)
    if n == "nc_moreau_solve":
        return drivers.nc_moreau_solve(p, x0, y0, eps=cfg.eps, T=T, seed=seed, **kw)
    gi = dict(outer_cap=cfg.outer_cap)
    if n == "scsc_near_optimal":
        return general_iteration.scsc_near_optimal(p, x0, cfg.eps, T, y0=y0, **gi)
    if n == "scc_near_optimal":
        return general_iteration.scc_near_optimal(p, x0, y0, cfg.eps, T, eta=cfg.eta, **gi)
    if n == "nsc_accelerated":
        return general_iteration.nsc_accelerated(p, x0, cfg.eps, T, seed, y0=y0, **gi)
    return general_iteration.nc_accelerated(p, x0, y0, cfg.eps, T, seed, **gi)


def certify(p: MinimaxProblem, name: str, res: SolveResult) -> metrics.Certificate:
    """The optimality measure each solver promises, evaluated on the original problem."""
    ell = p.profile.ell
    if name in ("minimax_ppa", "nc_solve"):
        rx, ry = metrics.stationarity_f(p, res.x, res.y)
        return metrics.Certificate("stationarity_f", max(rx, ry), 0.0, 0.0, "closed_form",
                                   {"r_x": rx, "r_y": ry})
    if name == "nsc_accelerated":
        return metrics.phi_grad_norm(p, res.x)
    if name in ("nc_moreau_solve", "nc_accelerated"):
        return metrics.moreau_grad_norm(p, res.x, ell)
    return metrics.duality_gap(p, res.x, res.y)


def run_one(spec: ProblemSpec, cfg: SolverConfig, x0=None, y0=None, seed: Optional[int] = None,
            timing: bool = True) -> dict[str, Any]:
    """Build, solve and certify; returns the flattened record."""
    p = make(spec)
    dx, dy = default_start(p)
    x0 = dx if x0 is None else np.asarray(x0, dtype=np.float64)
    y0 = dy if y0 is None else np.asarray(y0, dtype=np.float64)
    seed = cfg.seed if seed is None else seed
    t0 = time.perf_counter()
    if cfg.name in NO_T:
        T: Any = "NA"
    elif cfg.T == "auto":
        T = _auto_T(p, cfg.name, x0, y0, cfg.eps, cfg.T_constant)
    else:
        T = int(cfg.T)
    res = _dispatch(p, cfg, x0, y0, T, seed)
    wall = (time.perf_counter() - t0) * 1000.0
    rep = res.report
    status = rep.status
    cert_value: Any = "NA"
    cert_error: Any = "NA"
    cert_kind = "NA"
    if status == OK:
        try:
            cert = certify(p, cfg.name, res)
            cert_value, cert_error, cert_kind = float(cert.value), float(cert.error), cert.kind
        except metrics.UncertifiableError:
            status = UNCERTIFIABLE
    prof = p.profile
    return {
        "solver": cfg.name,
        "problem": spec.family,
        "dim_x": spec.dim_x,
        "dim_y": spec.dim_y,
        "kappa_x": prof.kappa_x,
        "kappa_y": prof.kappa_y,
        "eps": cfg.eps,
        "mode": cfg.mode,
        "seed": seed if seed is not None else "NA",
        "T": T,
        "grad_x_calls": rep.counter.grad_x_calls,
        "grad_y_calls": rep.counter.grad_y_calls,
        "value_calls": rep.counter.value_calls,
        "outer_iters": rep.outer_iters,
        "certificate_kind": cert_kind,
        "certificate": cert_value,
        "cert_error": cert_error,
        "wall_time_ms": wall if timing else "NA",
        "status": status,
        "clamped": "yes" if rep.clamped else "no",
        "tolerances": {r.name: {"theoretical": r.theoretical, "used": r.used,
                                "clamped": "yes" if r.clamped else "no"}
                       for r in rep.tolerances},
        "problem_spec": spec.to_dict(),
        "x": res.x,
        "y": res.y,
    }


def _load(path: str) -> dict:
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    if not isinstance(doc, dict):
        raise ConfigError("config must be a JSON object")
    return doc


def cmd_solve(config_path: str) -> int:
    try:
        cfg = parse_run_config(_load(config_path))
        make(cfg.problem)
    except (ConfigError, ValueError) as exc:
        print(json.dumps({"status": INVALID_CONFIG, "error": str(exc)}))
        return 2
    try:
        record = RunRecord(run_one(cfg.problem, cfg.solver, cfg.x0, cfg.y0))
    except ValueError as exc:
        print(json.dumps({"status": INVALID_CONFIG, "error": str(exc)}))
        return 2
    text = record.to_json()
    if cfg.output:
        with open(cfg.output, "w") as fh:
            fh.write(text + "\n")
    else:
        print(text)
    return 0 if record.fields["status"] == OK else 1


# ---------------------------------------------------------------------------
# sweeps


@dataclass
class SweepConfig:
    solver: SolverConfig
    family: str
    dim: int
    problem_seed: int
    params: dict
    kappa_x: list
    kappa_y: list
    eps: list
    seeds: list
    csv_path: Optional[str]
    timing: bool
    workers: int


def parse_sweep_config(doc: dict) -> SweepConfig:
    _reject_unknown(doc, {"solver", "problem", "grid", "output", "workers"}, "config")
    for key in ("solver", "problem", "grid"):
        if key not in doc:
            raise ConfigError(f"sweep config needs a {key} section")
    solver = SolverConfig.parse(doc["solver"], require_eps=False)
    prob = doc["problem"]
    _reject_unknown(prob, {"family", "dim", "seed", "params"}, "problem")
    grid = doc["grid"]
    _reject_unknown(grid, {"kappa_x", "kappa_y", "eps", "seeds"}, "grid")
    kx, ky = grid.get("kappa_x", [10.0]), grid.get("kappa_y", [10.0])
    eps = grid.get("eps", [solver.eps] if "eps" in doc["solver"] else None)
    if eps is None:
        raise ConfigError("give grid.eps or solver.eps")
    seeds = grid.get("seeds", [0 if solver.seed is None else solver.seed])
    for name, vals in (("kappa_x", kx), ("kappa_y", ky), ("eps", eps), ("seeds", seeds)):
        if not isinstance(vals, list) or not vals:
            raise ConfigError(f"grid.{name} must be a nonempty list")
    if any(not (float(v) >= 1.0) for v in kx + ky):
        raise ConfigError("condition numbers must be at least 1")
    if any(not (float(e) > 0 and math.isfinite(float(e))) for e in eps):
        raise ConfigError("every eps must be positive")
    if any(not isinstance(s, int) or s < 0 for s in seeds):
        raise ConfigError("seeds must be nonnegative integers")
    out = doc.get("output", {})
    _reject_unknown(out, {"csv", "timing"}, "output")
    workers = doc.get("workers", 1)
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            workers = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer") from exc
    if not isinstance(workers, int) or workers < 1:
        raise ConfigError("workers must be a positive integer")
    return SweepConfig(solver, prob.get("family", "quadratic_scsc"), int(prob.get("dim", 2)),
                       int(prob.get("seed", 0)), dict(prob.get("params", {"diagonal": True})),
                       [float(v) for v in kx], [float(v) for v in ky], [float(e) for e in eps],
                       list(seeds), out.get("csv"), bool(out.get("timing", False)), workers)


def sweep_cells(cfg: SweepConfig) -> list[tuple[ProblemSpec, SolverConfig, int]]:
    """Cartesian grid; each cell's solver seed is the listed seed XOR the cell index."""
    if cfg.family != "quadratic_scsc":
        raise ConfigError("sweeps are defined over quadratic_scsc condition numbers")
    cells = []
    index = 0
    for kx in cfg.kappa_x:
        for ky in cfg.kappa_y:
            for eps in cfg.eps:
                for seed in cfg.seeds:
                    params = dict(cfg.params, kappa_x=kx, kappa_y=ky)
                    spec = ProblemSpec("quadratic_scsc", cfg.dim, cfg.dim, params, cfg.problem_seed)
                    solver = SolverConfig(**{**cfg.solver.__dict__, "eps": eps, "seed": seed})
                    cells.append((spec, solver, seed ^ index))
                    index += 1
    return cells


def _run_cell(args) -> dict[str, Any]:
    spec, solver, cell_seed, timing = args
    rec = run_one(spec, solver, seed=cell_seed, timing=timing)
    rec["seed"] = solver.seed
    return rec


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(records: list[dict[str, Any]]) -> str:
    cols = CSV_HEADER.split(",")
    rows = sorted(records, key=lambda r: (r["solver"], r["kappa_x"], r["kappa_y"], r["eps"], r["seed"]))
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(cols)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in cols])
    return buf.getvalue()


def run_sweep(cfg: SweepConfig) -> list[dict[str, Any]]:
    jobs = [(spec, solver, cs, cfg.timing) for spec, solver, cs in sweep_cells(cfg)]
    if cfg.workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=min(cfg.workers, len(jobs))) as pool:
            return list(pool.map(_run_cell, jobs))
    return [_run_cell(j) for j in jobs]


def cmd_sweep(config_path: str) -> int:
    try:
        cfg = parse_sweep_config(_load(config_path))
        cells = sweep_cells(cfg)
        for spec, _, _ in cells:
            make(spec)
    except (ConfigError, ValueError) as exc:
        print(json.dumps({"status": INVALID_CONFIG, "error": str(exc)}), file=sys.stderr)
        return 2
    records = run_sweep(cfg)
    text = render_csv(records)
    if cfg.csv_path:
        with open(cfg.csv_path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0 if all(r["status"] == OK for r in records) else 1


def loglog_slope(xs, ys) -> float:
    """Least-squares slope of log10(ys) against log10(xs)."""
    return float(np.polyfit(np.log10(np.asarray(xs, float)), np.log10(np.asarray(ys, float)), 1)[0])


def read_sweep_csv(text: str) -> list[dict[str, str]]:
    return list(csv.DictReader(io.StringIO(text)))


# ---------------------------------------------------------------------------
# verify


def cmd_verify(suite: str) -> int:
    if suite not in SUITES:
        print(f"unknown suite {suite!r}; choose from {', '.join(SUITES)}", file=sys.stderr)
        return 2
    results = SUITES[suite]()
    for r in results:
        print(r.line())
    return 0 if all(r.passed for r in results) else 1


def main(argv: Optional[list[str]] = None) -> int:
    parser = argparse.ArgumentParser(prog="minimaxkit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    sub.add_parser("solve", help="run one configured solve").add_argument("config")
    sub.add_parser("sweep", help="run a condition-number grid").add_argument("config")
    sub.add_parser("verify", help="run an invariant suite").add_argument("suite")
    args = parser.parse_args(argv)
    if args.command == "solve":
        return cmd_solve(args.config)
    if args.command == "sweep":
        return cmd_sweep(args.config)
    return cmd_verify(args.suite)


if __name__ == "__main__":
    sys.exit(main())
