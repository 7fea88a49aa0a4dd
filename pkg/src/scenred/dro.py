"""Original and reduced distributionally robust problems, their solvers and the reduction metrics.

An instance minimizes ``sup_{p in P} sum_k p_k f(x, s_k)`` over a polyhedral
feasible set ``X``. Two objective kinds exist:

* linear: ``f(x, s) = s @ x`` with positive cost vectors ``s`` and ``x >= 0``;
* quadratic: ``f(x, Q) = w @ Q @ w`` where ``w`` are the risky-asset weights of
  a Markowitz portfolio and ``Q`` a covariance scenario.
"""
from __future__ import annotations

import hashlib
import json
import math
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from . import ambiguity as amb
from . import clustering, matrix_clustering
from .errors import (
    AmbiguityMismatch,
    InfeasibleX,
    InvalidSpec,
    IterationLimit,
    ParseError,
    SolverFailure,
    ValidationError,
)
from .lp import EQ, GE, LinearProgram, solve_milp
from .scenarios import MatrixScenarioSet, ScenarioSet
from . import scenarios as scen

FEAS_TOL = 1e-7
CP_TOL = 1e-6
CP_MAX_ITER = 500
CERT_TOL = 1e-6


@dataclass
class LinearConstraints:
    """``A x (relations) b`` with bounds and optional binary flags; empty ``A`` allowed."""

    n: int
    A: np.ndarray = None
    relations: list = None
    b: np.ndarray = None
    lower: np.ndarray = None
    upper: np.ndarray = None
    binary: np.ndarray = None

    def __post_init__(self):
        n = int(self.n)
        # a throwaway LinearProgram does all the shape checking
        p = LinearProgram(np.zeros(n), self.A if self.A is not None else np.zeros((0, n)),
                          self.relations or [], self.b if self.b is not None else np.zeros(0),
                          self.lower, self.upper, binary=self.binary)
        self.A, self.relations, self.b = p.A, p.relations, p.b
        self.lower, self.upper, self.binary = p.lower, p.upper, p.binary

    def program(self, c):
        return LinearProgram(c, self.A, list(self.relations), self.b, self.lower, self.upper, binary=self.binary)

    def max_violation(self, x):
        viol = self.program(np.zeros(self.n)).max_violation(x)
        xb = np.asarray(x, dtype=float)[self.binary]
        if xb.size:
            viol = max(viol, float(np.max(np.abs(xb - np.round(xb)))))
        return viol

    def scale(self):
        return self.program(np.zeros(self.n)).scale()

    def to_json_obj(self):
        return {
            "n": self.n,
            "A": self.A.tolist(),
            "relations": list(self.relations),
            "b": self.b.tolist(),
            "lower": [_num(v) for v in self.lower],
            "upper": [_num(v) for v in self.upper],
            "binary": [bool(v) for v in self.binary],
        }

    @classmethod
    def from_json_obj(cls, obj):
        n = int(obj["n"])
        lower = [float(v) for v in obj["lower"]] if "lower" in obj else None
        upper = [float(v) for v in obj["upper"]] if "upper" in obj else None
        A = obj.get("A") or np.zeros((0, n))
        return cls(n, A, obj.get("relations", []), obj.get("b", []), lower, upper, obj.get("binary"))


def _num(v):
    v = float(v)
    return v if math.isfinite(v) else ("inf" if v > 0 else "-inf")


def markowitz_constraints(n_assets, mu=None, target=None, risk_free=None):
    """Weights on ``n_assets`` risky assets (plus a trailing risk-free one when ``risk_free`` is given).

    ``w >= 0``, ``sum(w) == 1`` and, with a target, ``mu @ w >= target``.
    """
    n = n_assets + (risk_free is not None)
    rows, rel, rhs = [np.ones(n)], [EQ], [1.0]
    if target is not None:
        if mu is None:
            raise InvalidSpec("a return target needs expected returns mu")
        mu = np.asarray(mu, dtype=float).ravel()
        if mu.size != n_assets:
            raise InvalidSpec(f"mu has {mu.size} entries for {n_assets} assets")
        if risk_free is not None:
            if target < risk_free:
                raise InvalidSpec(f"return target {target} is below the risk-free return {risk_free}")
            mu = np.append(mu, risk_free)
        rows.append(mu)
        rel.append(GE)
        rhs.append(float(target))
    return LinearConstraints(n, np.array(rows), rel, np.array(rhs), np.zeros(n), np.ones(n))


@dataclass(eq=False)
class DroInstance:
    """A linear or quadratic DRO problem; ``scenarios`` are its atoms."""

    scenarios: object            # ScenarioSet or MatrixScenarioSet
    X: LinearConstraints
    ambiguity: amb.AmbiguitySet
    name: str = ""
    extra: dict = field(default_factory=dict)   # e.g. markowitz parameters, echoed in JSON

    def __post_init__(self):
        if isinstance(self.scenarios, MatrixScenarioSet):
            self.kind = "quadratic"
            if self.scenarios.dimension > self.X.n:
                raise ValidationError(f"{self.scenarios.dimension}x{self.scenarios.dimension} scenarios "
                                      f"need at least that many variables, X has {self.X.n}")
        elif isinstance(self.scenarios, ScenarioSet):
            self.kind = "linear"
            if self.scenarios.dimension != self.X.n:
                raise ValidationError(f"cost vectors have dimension {self.scenarios.dimension}, X has {self.X.n} variables")
            if np.any(self.X.lower < 0):
                raise ValidationError("linear instances need x >= 0 so that the objective is monotone in the costs")
        else:
            raise ValidationError("scenarios must be a ScenarioSet or MatrixScenarioSet")
        if self.ambiguity.n != len(self.scenarios):
            raise ValidationError(f"ambiguity set has {self.ambiguity.n} atoms for {len(self.scenarios)} scenarios")

    @property
    def n_vars(self):
        return self.X.n

    @property
    def n_scenarios(self):
        return len(self.scenarios)

    def values(self, x):
        """``f(x, s_k)`` for every scenario."""
        x = np.asarray(x, dtype=float)
        if self.kind == "linear":
            return self.scenarios.values @ x
        w = x[:self.scenarios.dimension]
        return np.einsum("i,kij,j->k", w, self.scenarios.matrices, w)

    def with_atoms(self, scenarios, ambiguity):
        return DroInstance(scenarios, self.X, ambiguity, self.name, dict(self.extra))

    def to_json_obj(self):
        return {
            "kind": self.kind,
            "name": self.name,
            "scenarios": scen.to_json_obj(self.scenarios),
            "constraints": self.X.to_json_obj(),
            "ambiguity": self.ambiguity.to_json_obj(),
            "extra": self.extra,
        }

    def to_json(self):
        return json.dumps(self.to_json_obj(), indent=1, sort_keys=True) + "\n"

    def digest(self):
        return hashlib.sha256(self.to_json().encode()).hexdigest()[:16]

    @classmethod
    def from_json_obj(cls, obj, base_dir=None):
        try:
            if "scenario_file" in obj:
                path = obj["scenario_file"]
                if base_dir is not None:
                    path = Path(base_dir) / path
                scenarios = scen.load(path)
            else:
                scenarios = scen.from_json_obj(obj["scenarios"])
            if "markowitz" in obj:
                mk = obj["markowitz"]
                X = markowitz_constraints(scenarios.dimension, mk.get("mu"), mk.get("target"), mk.get("risk_free"))
                extra = {"markowitz": mk}
            else:
                X = LinearConstraints.from_json_obj(obj["constraints"])
                extra = obj.get("extra", {})
            return cls(scenarios, X, amb.from_json_obj(obj["ambiguity"]), obj.get("name", ""), extra)
        except KeyError as exc:
            raise ParseError(f"instance is missing the {exc} field") from None


def load_instance(path):
    text = Path(path).read_text(encoding="utf-8")
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return DroInstance.from_json_obj(obj, base_dir=Path(path).parent)


@dataclass
class DroSolution:
    x: np.ndarray
    value: float
    time: float
    method: str
    iterations: int = 0
    nodes: int = 0
    lower_bound: Optional[float] = None

    def to_json_obj(self):
        return {"x": [float(v) for v in self.x], "value": self.value, "method": self.method,
                "iterations": self.iterations, "nodes": self.nodes, "time": self.time,
                "lower_bound": self.lower_bound}


# ---------------------------------------------------------------------------
# solvers
# ---------------------------------------------------------------------------

def _box_bounds(aset):
    if isinstance(aset, amb.Box):
        return aset.l, aset.u
    if isinstance(aset, amb.Simplex):
        return np.zeros(aset.n), np.ones(aset.n)
    raise AmbiguityMismatch(f"the dual reformulation needs a box or simplex ambiguity set, got {aset.kind}")


def solve_box_dual(instance: DroInstance) -> DroSolution:
    """Single LP (MILP with binaries): ``min z - l @ lam + u @ mu`` s.t. ``z - lam_k + mu_k >= s_k @ x``."""
    if instance.kind != "linear":
        raise AmbiguityMismatch("the dual reformulation applies to linear objectives only")
    l, u = _box_bounds(instance.ambiguity)
    start = time.perf_counter()
    X, S = instance.X, instance.scenarios.values
    n, N = X.n, S.shape[0]
    nv = n + 1 + 2 * N                  # x, z, lam, mu
    c = np.concatenate([np.zeros(n), [1.0], -l, u])
    rows = np.zeros((N + X.A.shape[0], nv))
    rows[:N, :n] = -S
    rows[:N, n] = 1.0
    rows[:N, n + 1:n + 1 + N] = -np.eye(N)
    rows[:N, n + 1 + N:] = np.eye(N)
    rows[N:, :n] = X.A
    relations = [GE] * N + list(X.relations)
    rhs = np.concatenate([np.zeros(N), X.b])
    lower = np.concatenate([X.lower, [-np.inf], np.zeros(2 * N)])
    upper = np.concatenate([X.upper, [np.inf], np.full(2 * N, np.inf)])
    binary = np.concatenate([X.binary, np.zeros(1 + 2 * N, dtype=bool)])
    sol = solve_milp(LinearProgram(c, rows, relations, rhs, lower, upper, binary=binary))
    elapsed = time.perf_counter() - start
    if not sol.optimal:
        raise SolverFailure(f"dual reformulation is {sol.status.value}", status=sol.status)
    return DroSolution(sol.x[:n], float(sol.objective), elapsed, "box-dual", sol.iterations, sol.nodes)


def _cut(instance, x, p):
    """Coefficients ``g`` and constant ``h`` of the cut ``t >= g @ x + h`` at ``x`` for weights ``p``."""
    if instance.kind == "linear":
        return p @ instance.scenarios.values, 0.0
    m = instance.scenarios.dimension
    Qp = np.einsum("k,kij->ij", p, instance.scenarios.matrices)
    w = x[:m]
    g = np.zeros(instance.n_vars)
    g[:m] = 2.0 * Qp @ w
    return g, -float(w @ Qp @ w)


def solve_cutting_plane(instance: DroInstance, tol=CP_TOL, max_iter=CP_MAX_ITER) -> DroSolution:
    """Kelley outer approximation of ``F(x) = sup_p E_p f(x, s)`` with the ambiguity oracle.

    The master problem ``min t`` over ``X`` plus the cuts collected so far is
    an LP (a MILP when ``X`` has binaries). Stops once the best oracle value
    and the master value are within ``tol * max(1, |value|)``.
    """
    start = time.perf_counter()
    X = instance.X
    n = X.n
    cut_rows, cut_rhs = [], []
    best_x, upper, lower = None, math.inf, -math.inf
    iterations = nodes = 0
    for it in range(1, max_iter + 1):
        iterations = it
        A = np.zeros((X.A.shape[0] + len(cut_rows), n + 1))
        A[:X.A.shape[0], :n] = X.A
        if cut_rows:
            A[X.A.shape[0]:] = np.array(cut_rows)
        master = LinearProgram(
            np.concatenate([np.zeros(n), [1.0]]), A,
            list(X.relations) + [GE] * len(cut_rows), np.concatenate([X.b, cut_rhs]),
            np.append(X.lower, 0.0), np.append(X.upper, np.inf), binary=np.append(X.binary, False),
        )
        sol = solve_milp(master)
        nodes += sol.nodes
        if not sol.optimal:
            raise SolverFailure(f"cutting-plane master is {sol.status.value}", status=sol.status)
        lower = max(lower, float(sol.objective))
        x = sol.x[:n]
        value, p = amb.worst_case_expectation(instance.ambiguity, instance.values(x))
        if value < upper:
            upper, best_x = value, x
        if upper - lower <= tol * max(1.0, abs(upper)):
            return DroSolution(best_x, upper, time.perf_counter() - start, "cutting-plane", iterations, nodes, lower)
        g, h = _cut(instance, x, p)
        cut_rows.append(np.append(-g, 1.0))
        cut_rhs.append(h)
    partial = DroSolution(best_x, upper, time.perf_counter() - start, "cutting-plane", iterations, nodes, lower)
    raise IterationLimit(f"cutting plane stopped after {max_iter} iterations with gap {upper - lower:.3g}",
                         gap=upper - lower, solution=partial)


def solve(instance: DroInstance, method="auto") -> DroSolution:
    """``auto`` picks the dual LP for linear box/simplex instances and cutting planes otherwise."""
    if method == "auto":
        dual_ok = instance.kind == "linear" and isinstance(instance.ambiguity, (amb.Box, amb.Simplex))
        method = "box-dual" if dual_ok else "cutting-plane"
    if method == "box-dual":
        return solve_box_dual(instance)
    if method == "cutting-plane":
        return solve_cutting_plane(instance)
    raise InvalidSpec(f"unknown solver {method!r}")


def evaluate_solution(instance: DroInstance, x, tol=FEAS_TOL):
    """Worst-case expected objective of a fixed ``x`` under the instance's ambiguity set."""
    x = np.asarray(x, dtype=float).ravel()
    if x.size != instance.n_vars:
        raise InfeasibleX(f"x has {x.size} entries, expected {instance.n_vars}")
    viol = instance.X.max_violation(x)
    if viol > tol * instance.X.scale():
        raise InfeasibleX(f"x violates the feasible set by {viol:.3g}")
    return amb.worst_case_expectation(instance.ambiguity, instance.values(x))[0]


# ---------------------------------------------------------------------------
# reduction
# ---------------------------------------------------------------------------

@dataclass
class MetricsReport:
    method: str
    n_scenarios: int
    K: int
    AF: float
    TF: float
    SRF: float
    alpha: float
    beta: float
    guarantee: float
    original_value: float
    reduced_value: float
    evaluated_value: float
    certificate_ok: bool
    clustering_time: float
    original_time: float
    reduced_time: float
    seed: Optional[int] = None
    config: dict = field(default_factory=dict)

    @property
    def certificate_bound(self):
        return self.guarantee * self.original_value + certificate_tolerance(self.guarantee, self.original_value)

    def to_json_obj(self):
        return asdict(self)


def certificate_tolerance(guarantee, original_value):
    return CERT_TOL * max(1.0, abs(guarantee * original_value))


def partition_instance(instance: DroInstance, method, K, seed=0):
    """Cluster the atoms. Returns ``(assignment, representatives, alpha, beta, K_effective)``."""
    if instance.kind == "linear":
        S = instance.scenarios
        if method == "opt":
            part = clustering.optimal_partition(S, K)
        elif method == "kmeans":
            part = clustering.kmeans_partition(S, K, seed=seed)
        elif method == "hyperrect":
            part = clustering.hyperrect_partition(S, clustering.choose_splits(S, K)).partition
        else:
            raise InvalidSpec(f"unknown clustering method {method!r}")
        return part.assignment, ScenarioSet(part.representatives), part.alpha, part.beta, part.K
    if method == "opt":
        part = matrix_clustering.optimal_matrix_partition(instance.scenarios, K)
    elif method == "kmeans":
        part = matrix_clustering.frobenius_kmeans(instance.scenarios, K, seed=seed)
    else:
        raise InvalidSpec(f"method {method!r} is not available for matrix scenarios")
    return part.assignment, MatrixScenarioSet(part.representatives), part.alpha, part.beta, part.K


def reduce_and_solve(instance: DroInstance, method, K, seed=0, solver="auto", original=None, config=None):
    """Cluster, project the ambiguity set, solve both problems with the same routine and compare.

    ``original`` may carry a cached solution of the unreduced problem.
    Returns ``(MetricsReport, original_solution, reduced_solution)``.
    """
    t0 = time.perf_counter()
    assignment, reps, alpha, beta, K_eff = partition_instance(instance, method, K, seed)
    A = amb.AggregationMatrix.from_assignment(assignment, K_eff)
    reduced = instance.with_atoms(reps, amb.project(instance.ambiguity, A))
    clustering_time = time.perf_counter() - t0

    if original is None:
        original = solve(instance, solver)
    red = solve(reduced, solver)
    evaluated = evaluate_solution(instance, red.x)
    guarantee = alpha * beta
    ok = evaluated <= guarantee * original.value + certificate_tolerance(guarantee, original.value)
    if original.value != 0:
        af = red.value / original.value
    else:
        af = 1.0 if red.value == 0 else math.inf
    tf = red.time / original.time if original.time > 0 else math.inf
    report = MetricsReport(
        method=method, n_scenarios=instance.n_scenarios, K=K_eff, AF=af, TF=tf,
        SRF=instance.n_scenarios / K_eff, alpha=alpha, beta=beta, guarantee=guarantee,
        original_value=original.value, reduced_value=red.value, evaluated_value=evaluated,
        certificate_ok=bool(ok), clustering_time=clustering_time, original_time=original.time,
        reduced_time=red.time, seed=seed, config=dict(config or {}),
    )
    return report, original, red
