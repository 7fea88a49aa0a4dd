"""Synthetic instances and the (scenario count x K x s_inc x seed) experiment grid."""
from __future__ import annotations

import csv
import io
import json
import math
import statistics
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ambiguity as amb
from .dro import DroInstance, LinearConstraints, markowitz_constraints, reduce_and_solve, solve
from .errors import InvalidSpec, ScenredError
from .scenarios import (
    PERTURBATION_MODE,
    RNG_ALGORITHM,
    PerturbationSpec,
    generate_covariance_scenarios,
    generate_perturbed,
    make_rng,
)

SCHEMA_VERSION = 1
METHODS = ("opt", "kmeans", "hyperrect")

DATA_COLUMNS = [
    "schema_version", "row_type", "method", "n_scenarios", "K", "s_inc", "seed",
    "n_samples", "delta", "AF", "SRF", "alpha", "beta", "guarantee",
    "original_value", "reduced_value", "evaluated_value", "certificate_ok", "status", "config",
]
TIMING_COLUMNS = ["clustering_time", "original_time", "reduced_time", "TF"]
COLUMNS = DATA_COLUMNS + TIMING_COLUMNS


def _sub_rng(*parts):
    return make_rng([int(p) for p in parts])


def base_problem(n_vars=8, n_rows=4, instance_seed=0):
    """Positive base costs and a covering feasible set ``A x >= b``, ``0 <= x <= 1``."""
    rng = _sub_rng(instance_seed, 1)
    base = rng.uniform(1.0, 10.0, size=n_vars)
    A = rng.uniform(0.1, 1.0, size=(n_rows, n_vars))
    b = 0.5 * A.sum(axis=1)
    X = LinearConstraints(n_vars, A, [">="] * n_rows, b, np.zeros(n_vars), np.ones(n_vars))
    return base, X


def sampled_ambiguity(n_atoms, n_samples, delta, rng):
    """Confidence box around the empirical distribution of ``n_samples`` draws from a Dirichlet(1) truth."""
    if n_samples == 0:
        return amb.Simplex(n_atoms)
    truth = rng.dirichlet(np.ones(n_atoms))
    draws = rng.choice(n_atoms, size=n_samples, p=truth)
    return amb.from_samples(amb.empirical_distribution(draws, n_atoms), n_samples, delta)


def synthetic_linear_instance(n_scenarios, s_inc, seed, n_vars=8, n_rows=4, n_samples=100, delta=0.1,
                              instance_seed=0):
    base, X = base_problem(n_vars, n_rows, instance_seed)
    scen_seed = [seed, n_scenarios, int(round(s_inc * 1e6)), 2]
    S = generate_perturbed(PerturbationSpec(base, s_inc, n_scenarios, scen_seed))
    P = sampled_ambiguity(n_scenarios, n_samples, delta, _sub_rng(seed, n_scenarios, int(round(s_inc * 1e6)), 3))
    return DroInstance(S, X, P, name=f"linear-N{n_scenarios}-s{s_inc}-seed{seed}")


def synthetic_portfolio_instance(n_assets, n_scenarios, seed, target=0.06, risk_free=0.02, n_samples=100,
                                 delta=0.1, spread=0.5):
    S = generate_covariance_scenarios(n_assets, n_scenarios, seed=[seed, 4], spread=spread)
    mu = np.linspace(0.04, 0.12, n_assets)
    X = markowitz_constraints(n_assets, mu, target, risk_free)
    P = sampled_ambiguity(n_scenarios, n_samples, delta, _sub_rng(seed, n_scenarios, 5))
    extra = {"markowitz": {"mu": mu.tolist(), "target": target, "risk_free": risk_free}}
    return DroInstance(S, X, P, name=f"portfolio-{n_assets}x{n_scenarios}-seed{seed}", extra=extra)


@dataclass
class GridConfig:
    scenario_counts: list = field(default_factory=lambda: [20])
    ks: list = field(default_factory=lambda: [5])
    s_incs: list = field(default_factory=lambda: [0.5])
    seeds: list = field(default_factory=lambda: [0])
    methods: list = field(default_factory=lambda: ["opt", "kmeans"])
    n_vars: int = 8
    n_rows: int = 4
    n_samples: int = 100
    delta: float = 0.1
    instance_seed: int = 0
    solver: str = "auto"

    def validate(self):
        def ints(name, lo):
            vals = getattr(self, name)
            if not vals or not all(isinstance(v, int) and v >= lo for v in vals):
                raise InvalidSpec(f"{name} must be a non-empty list of integers >= {lo}")
        ints("scenario_counts", 1)
        ints("ks", 1)
        ints("seeds", 0)
        if not self.s_incs or not all(0.0 <= s < 1.0 for s in self.s_incs):
            raise InvalidSpec("s_inc values must lie in [0, 1)")
        bad = [m for m in self.methods if m not in METHODS]
        if bad or not self.methods:
            raise InvalidSpec(f"unknown methods {bad}; choose from {', '.join(METHODS)}")
        if self.n_vars < 1 or self.n_rows < 0 or self.n_samples < 0:
            raise InvalidSpec("n_vars must be positive, n_rows and n_samples nonnegative")
        if not 0.0 < self.delta < 1.0:
            raise InvalidSpec(f"delta must lie in (0, 1), got {self.delta}")
        if self.solver not in ("auto", "box-dual", "cutting-plane"):
            raise InvalidSpec(f"unknown solver {self.solver!r}")
        return self

    def echo(self):
        obj = dict(asdict(self), rng=RNG_ALGORITHM, perturbation=PERTURBATION_MODE, interval_clipping=True)
        return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def _points(cfg):
    for N in cfg.scenario_counts:
        for s_inc in cfg.s_incs:
            for seed in cfg.seeds:
                yield N, s_inc, seed


def _run_point(cfg, N, s_inc, seed):
    """All (K, method) rows for one generated instance; the original problem is solved once."""
    rows = []
    echo = cfg.echo()
    common = dict(schema_version=SCHEMA_VERSION, row_type="data", n_scenarios=N, s_inc=s_inc, seed=seed,
                  n_samples=cfg.n_samples, delta=cfg.delta, config=echo)
    try:
        inst = synthetic_linear_instance(N, s_inc, seed, cfg.n_vars, cfg.n_rows, cfg.n_samples, cfg.delta,
                                         cfg.instance_seed)
        original = solve(inst, cfg.solver)
    except ScenredError as exc:
        return [dict(common, method=m, K=K, status=f"error: {type(exc).__name__}: {exc}")
                for K in cfg.ks for m in cfg.methods]
    for K in cfg.ks:
        for method in cfg.methods:
            if K > N:
                rows.append(dict(common, method=method, K=K, status="skipped: K exceeds scenario count"))
                continue
            try:
                rep, _, _ = reduce_and_solve(inst, method, K, seed=seed, solver=cfg.solver, original=original)
            except ScenredError as exc:
                rows.append(dict(common, method=method, K=K, status=f"error: {type(exc).__name__}: {exc}"))
                continue
            rows.append(dict(
                common, method=method, K=rep.K, AF=rep.AF, SRF=rep.SRF, alpha=rep.alpha, beta=rep.beta,
                guarantee=rep.guarantee, original_value=rep.original_value, reduced_value=rep.reduced_value,
                evaluated_value=rep.evaluated_value, certificate_ok=rep.certificate_ok, status="ok",
                clustering_time=rep.clustering_time, original_time=rep.original_time,
                reduced_time=rep.reduced_time, TF=rep.TF,
            ))
    return rows


def run_grid(cfg: GridConfig, parallel=1):
    """Data rows in grid order followed by one mean row per (method, K, s_inc)."""
    cfg.validate()
    points = list(_points(cfg))
    if parallel > 1:
        with ProcessPoolExecutor(max_workers=parallel) as pool:
            chunks = list(pool.map(_run_point, [cfg] * len(points), *zip(*points)))
    else:
        chunks = [_run_point(cfg, *pt) for pt in points]
    rows = [r for chunk in chunks for r in chunk]
    return rows + mean_rows(rows, cfg)


def mean_rows(rows, cfg):
    groups = {}
    for r in rows:
        if r.get("status") == "ok":
            groups.setdefault((r["method"], r["K"], r["s_inc"]), []).append(r)
    out = []
    for (method, K, s_inc), members in groups.items():
        row = dict(schema_version=SCHEMA_VERSION, row_type="mean", method=method, K=K, s_inc=s_inc,
                   n_samples=cfg.n_samples, delta=cfg.delta, status=f"mean of {len(members)}",
                   config=cfg.echo())
        row["n_scenarios"] = statistics.fmean(r["n_scenarios"] for r in members)
        for col in ("AF", "SRF", "alpha", "beta", "guarantee", "original_value", "reduced_value",
                    "evaluated_value", *TIMING_COLUMNS):
            row[col] = statistics.fmean(r[col] for r in members)
        row["certificate_ok"] = all(r["certificate_ok"] for r in members)
        out.append(row)
    return out


def _cell(v):
    if v is None:
        return ""
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, float):
        return repr(v) if math.isfinite(v) else ("inf" if v > 0 else ("-inf" if v < 0 else "nan"))
    return str(v)


def rows_to_csv(rows):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    writer.writerow(COLUMNS)
    for r in rows:
        writer.writerow([_cell(r.get(c)) for c in COLUMNS])
    return buf.getvalue()
