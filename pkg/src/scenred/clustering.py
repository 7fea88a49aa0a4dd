"""Scenario partitioning with certified (alpha, beta) approximation guarantees.

For a cluster ``C`` with representative ``r`` the scaling factors are

    alpha = max_k max_{s in C} s_k / r_k        beta = max_k r_k / min_{s in C} s_k

and over a partition both are maxima over clusters. The product ``alpha * beta``
bounds how much worse the reduced-problem solution can be than the true optimum.
"""
from __future__ import annotations

import bisect
import json
import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import EmptyCluster, InvalidK, InvalidSplitCounts, SearchBudgetExceeded, ValidationError
from .scenarios import ScenarioSet, make_rng

NODE_CAP = 10**7


@dataclass
class Partition:
    K: int
    assignment: np.ndarray
    representatives: np.ndarray
    alpha: float
    beta: float
    method: str = ""
    seed: Optional[int] = None
    nodes: int = field(default=0, compare=False)

    @property
    def guarantee(self):
        return self.alpha * self.beta

    def members(self, j):
        return np.flatnonzero(self.assignment == j)

    def clusters(self):
        return [self.members(j) for j in range(self.K)]

    def to_json_obj(self):
        return {
            "K": int(self.K),
            "assignment": [int(a) for a in self.assignment],
            "representatives": np.asarray(self.representatives).tolist(),
            "alpha": float(self.alpha),
            "beta": float(self.beta),
            "method": self.method,
            "seed": self.seed,
        }

    def to_json(self):
        return json.dumps(self.to_json_obj(), indent=1) + "\n"

    @classmethod
    def from_json_obj(cls, obj):
        return cls(
            K=int(obj["K"]),
            assignment=np.asarray(obj["assignment"], dtype=int),
            representatives=np.asarray(obj["representatives"], dtype=float),
            alpha=float(obj["alpha"]),
            beta=float(obj["beta"]),
            method=obj.get("method", ""),
            seed=obj.get("seed"),
        )


def _values(scenarios):
    if isinstance(scenarios, ScenarioSet):
        return scenarios.values
    return ScenarioSet(scenarios).values


def _check_k(K, n):
    if not isinstance(K, (int, np.integer)) or not 1 <= K <= n:
        raise InvalidK(f"K must be an integer in [1, {n}], got {K!r}")
    return int(K)


def guarantee_of(scenarios, assignment, representatives):
    """Certified ``(alpha, beta)`` of a partition with the given representatives."""
    values = _values(scenarios)
    reps = np.atleast_2d(np.asarray(representatives, dtype=float))
    assignment = np.asarray(assignment, dtype=int)
    if assignment.shape != (values.shape[0],):
        raise ValidationError("assignment must give one cluster index per scenario")
    if reps.shape[1] != values.shape[1]:
        raise ValidationError("representatives must have the scenario dimension")
    if not np.all(reps > 0):
        raise ValidationError("representatives must be strictly positive")
    if np.any((assignment < 0) | (assignment >= reps.shape[0])):
        raise ValidationError("assignment refers to a cluster without representative")
    alpha = beta = -math.inf
    for j in range(reps.shape[0]):
        members = values[assignment == j]
        if members.shape[0] == 0:
            raise EmptyCluster(f"cluster {j} has no scenarios")
        alpha = max(alpha, float(np.max(members.max(axis=0) / reps[j])))
        beta = max(beta, float(np.max(reps[j] / members.min(axis=0))))
    return alpha, beta


def optimal_representative(cluster):
    """Componentwise minimum of the cluster: the representative minimizing alpha * beta."""
    cluster = np.atleast_2d(np.asarray(cluster, dtype=float))
    return cluster.min(axis=0)


def cluster_ratio(cluster):
    """Best single-representative guarantee ``max_k max_s s_k / min_s s_k`` of one cluster."""
    cluster = np.atleast_2d(np.asarray(cluster, dtype=float))
    return float(np.max(cluster.max(axis=0) / cluster.min(axis=0)))


def diagonal_representative(cluster):
    """Project the cluster mean onto the segment from the lower to the upper corner."""
    cluster = np.atleast_2d(np.asarray(cluster, dtype=float))
    low = cluster.min(axis=0)
    high = cluster.max(axis=0)
    d = high - low
    dd = float(d @ d)
    if dd == 0.0:
        return low
    t = float((cluster.mean(axis=0) - low) @ d) / dd
    t = min(1.0, max(0.0, t))
    return low + t * d


def _partition_from_assignment(values, assignment, K, method, seed=None, nodes=0, representative=optimal_representative):
    reps = np.array([representative(values[assignment == j]) for j in range(K)])
    alpha, beta = guarantee_of(values, assignment, reps)
    return Partition(K, assignment, reps, alpha, beta, method, seed, nodes)


# ---------------------------------------------------------------------------
# exact search
# ---------------------------------------------------------------------------

def _cluster_value(lo, hi):
    return float(np.max(hi / lo))


class _BudgetHit(Exception):
    pass


def pairwise_ratio_matrix(lo, hi):
    """``D[a, b]``: guarantee of the two-item cluster ``{a, b}``; ``D[a, a]`` of the singleton.

    A cluster's value ``max_k max(hi) / min(lo)`` is attained by one pair of
    members, so it equals the largest ``D`` entry among its members.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    P = np.max(hi[:, None, :] / lo[None, :, :], axis=2)
    return np.maximum(P, P.T)


class _Coloring:
    """Exact DSATUR backtracking: can the conflict graph be colored with at most K colors?"""

    def __init__(self, conflict, K, budget):
        n = conflict.shape[0]
        self.n = n
        self.K = K
        self.budget = budget
        self.nodes = 0
        self.nbr = [sum(1 << int(b) for b in np.flatnonzero(conflict[a])) for a in range(n)]
        self.degree = [int(conflict[a].sum()) for a in range(n)]
        self.colors = [-1] * n
        self.class_mask = [0] * K

    def run(self):
        return self._extend(0, 0)

    def _extend(self, colored, used):
        self.nodes += 1
        if self.nodes > self.budget:
            raise _BudgetHit()
        if colored == self.n:
            return True
        best_v, best_key, best_free = -1, None, None
        for v in range(self.n):
            if self.colors[v] >= 0:
                continue
            nb = self.nbr[v]
            free = [c for c in range(used) if not self.class_mask[c] & nb]
            sat = used - len(free)
            key = (sat, self.degree[v], -v)
            if best_key is None or key > best_key:
                best_v, best_key, best_free = v, key, free
                if not free and used == self.K:
                    return False
        v = best_v
        options = list(best_free)
        if used < self.K:
            options.append(used)
        for c in options:
            self.colors[v] = c
            self.class_mask[c] |= 1 << v
            if self._extend(colored + 1, max(used, c + 1)):
                return True
            self.class_mask[c] &= ~(1 << v)
            self.colors[v] = -1
        return False


def _nearest_seed_assignment(D, K):
    """Farthest-first seeds, then every item joins its closest seed."""
    n = D.shape[0]
    seeds = [int(np.argmax(np.diag(D)))]
    dist = D[seeds[0]].copy()
    while len(seeds) < K:
        nxt = int(np.argmax(np.where(np.isin(np.arange(n), seeds), -np.inf, dist)))
        seeds.append(nxt)
        dist = np.minimum(dist, D[nxt])
    assign = np.argmin(D[:, seeds], axis=1)
    assign[seeds] = np.arange(K)
    return assign


def _assignment_value(D, assign):
    return max(float(np.max(D[np.ix_(assign == j, assign == j)])) for j in np.unique(assign))


def min_max_ratio_partition(lo, hi, K, node_cap=NODE_CAP):
    """Exact minimizer of ``max_j max_k max_{i in j} hi_ik / min_{i in j} lo_ik`` over K-partitions.

    Candidate optimal values are the pairwise entries of
    :func:`pairwise_ratio_matrix`; a threshold is achievable iff the graph
    joining pairs above it is K-colorable. Binary search over the sorted
    candidates with an exact coloring check at each step.

    Returns ``(assignment, value, nodes)``. Raises SearchBudgetExceeded (with
    ``assignment`` and ``lower_bound`` attributes) once ``node_cap`` coloring
    nodes are spent.
    """
    lo = np.asarray(lo, dtype=float)
    hi = np.asarray(hi, dtype=float)
    n = lo.shape[0]
    D = pairwise_ratio_matrix(lo, hi)
    if K == 1:
        return np.zeros(n, dtype=int), float(np.max(D)), 0

    best = _nearest_seed_assignment(D, K)
    floor = float(np.max(np.diag(D)))
    cands = np.unique(D[np.triu_indices(n)])
    cands = cands[(cands >= floor) & (cands <= _assignment_value(D, best))]

    nodes = 0
    low, high = 0, len(cands) - 1
    while low < high:
        mid = (low + high) // 2
        col = _Coloring(D > cands[mid], K, node_cap - nodes)
        try:
            ok = col.run()
        except _BudgetHit:
            exc = SearchBudgetExceeded(f"partition search exceeded {node_cap} nodes")
            exc.assignment = _fill_to_k(best, K)
            exc.lower_bound = float(cands[low])
            exc.nodes = nodes + col.nodes
            raise exc from None
        nodes += col.nodes
        if ok:
            high = mid
            best = np.asarray(col.colors)
        else:
            low = mid + 1
    return _fill_to_k(best, K), float(cands[high]), nodes


def _fill_to_k(assignment, K):
    """Split clusters until exactly K are nonempty; ratios never increase on subsets."""
    assignment = _canonical(assignment)
    used = int(assignment.max()) + 1
    while used < K:
        counts = np.bincount(assignment, minlength=used)
        j = int(np.argmax(counts))
        victim = int(np.flatnonzero(assignment == j)[-1])
        assignment[victim] = used
        used += 1
    return _canonical(assignment)


def _canonical(assignment):
    """Renumber clusters by first occurrence in scenario order."""
    mapping = {}
    out = np.empty(len(assignment), dtype=int)
    for i, a in enumerate(np.asarray(assignment).tolist()):
        if a not in mapping:
            mapping[a] = len(mapping)
        out[i] = mapping[a]
    return out


def optimal_partition(scenarios, K, node_cap=NODE_CAP):
    """Partition into K clusters minimizing the certified guarantee ``alpha * beta``.

    Representatives are cluster componentwise minima, so ``beta == 1`` and
    ``alpha`` is the largest within-cluster max/min ratio.
    """
    values = _values(scenarios)
    K = _check_k(K, values.shape[0])
    try:
        assignment, _, nodes = min_max_ratio_partition(values, values, K, node_cap)
    except SearchBudgetExceeded as exc:
        incumbent = _partition_from_assignment(values, exc.assignment, K, "opt", nodes=exc.nodes)
        # any partition has guarantee at least the largest single-scenario ratio (1 here)
        raise SearchBudgetExceeded(str(exc), incumbent=incumbent, lower_bound=exc.lower_bound) from None
    return _partition_from_assignment(values, assignment, K, "opt", nodes=nodes)


# ---------------------------------------------------------------------------
# k-means baseline
# ---------------------------------------------------------------------------

def lloyd(points, K, seed=0, max_iter=300):
    """Deterministic Lloyd iterations on the rows of ``points`` (any flattened geometry).

    Initial centers are ``K`` distinct rows chosen by the seeded generator.
    An empty cluster takes the point farthest from its current center among
    clusters with more than one member. Returns ``(assignment, centers, iterations)``.
    """
    X = np.asarray(points, dtype=float)
    n = X.shape[0]
    rng = make_rng(seed)
    centers = X[np.sort(rng.choice(n, size=K, replace=False))].copy()
    assignment = None
    it = 0
    for it in range(1, max_iter + 1):
        dist = ((X[:, None, :] - centers[None, :, :]) ** 2).sum(axis=2)
        new = np.argmin(dist, axis=1)
        for j in range(K):
            if np.any(new == j):
                continue
            counts = np.bincount(new, minlength=K)
            own = dist[np.arange(n), new]
            donors = counts[new] > 1
            k = int(np.argmax(np.where(donors, own, -1.0)))
            new[k] = j
        if assignment is not None and np.array_equal(new, assignment):
            break
        assignment = new
        centers = np.array([X[assignment == j].mean(axis=0) for j in range(K)])
    return assignment, centers, it


def kmeans_partition(scenarios, K, seed=0, max_iter=300, normalize=False):
    """Euclidean k-means clustering with diagonal-projected representatives.

    With ``normalize=True`` each component is divided by its mean before
    clustering; the guarantee is always computed on the original scale.
    """
    values = _values(scenarios)
    K = _check_k(K, values.shape[0])
    points = values / values.mean(axis=0) if normalize else values
    assignment, _, _ = lloyd(points, K, seed, max_iter)
    return _partition_from_assignment(values, assignment, K, "kmeans", seed, representative=diagonal_representative)


# ---------------------------------------------------------------------------
# hyperrectangle construction
# ---------------------------------------------------------------------------

@dataclass
class HyperrectResult:
    splits: tuple
    lower: np.ndarray
    upper: np.ndarray
    breakpoints: list          # interior breakpoints per axis
    bound: float               # max_i (upper_i / lower_i) ** (1 / r_i)
    cell_guarantee: float      # max cell upper/lower corner ratio over all cells
    partition: Optional[Partition] = None


def geometric_breakpoints(a, b, r):
    """Interior points ``a * (b/a) ** (u/r)`` for ``u = 1..r-1``."""
    return np.array([a * (b / a) ** (u / r) for u in range(1, r)])


def hyperrect_partition(scenarios=None, splits=None, box=None):
    """Split the bounding box geometrically along each axis.

    ``splits`` gives the number of subintervals ``r_i`` per axis (``K = prod r_i``).
    Pass either a scenario set (its bounding box is used and the scenarios are
    assigned to cells, empty cells dropped) or ``box=(lower, upper)``.
    """
    if (scenarios is None) == (box is None):
        raise ValueError("pass exactly one of a scenario set or a box")
    if scenarios is not None:
        values = _values(scenarios)
        lower, upper = values.min(axis=0), values.max(axis=0)
    else:
        lower = np.atleast_1d(np.asarray(box[0], dtype=float))
        upper = np.atleast_1d(np.asarray(box[1], dtype=float))
        if lower.shape != upper.shape:
            raise ValidationError("box corners must have the same dimension")
        if not (np.all(lower > 0) and np.all(np.isfinite(upper)) and np.all(upper >= lower)):
            raise ValidationError("box must satisfy 0 < lower <= upper componentwise")
    m = lower.size
    if splits is None:
        raise InvalidSplitCounts("split counts are required")
    splits = tuple(np.atleast_1d(splits).tolist())
    if len(splits) != m or not all(isinstance(r, (int, np.integer)) and r >= 1 for r in splits):
        raise InvalidSplitCounts(f"need {m} positive integer split counts, got {splits!r}")
    splits = tuple(int(r) for r in splits)

    breakpoints = [geometric_breakpoints(lower[i], upper[i], splits[i]) for i in range(m)]
    bound = max(float((upper[i] / lower[i]) ** (1.0 / splits[i])) for i in range(m))
    cell_guarantee = 1.0
    for i in range(m):
        edges = np.concatenate([[lower[i]], breakpoints[i], [upper[i]]])
        cell_guarantee = max(cell_guarantee, float(np.max(edges[1:] / edges[:-1])))

    partition = None
    if scenarios is not None:
        edges_lo = [np.concatenate([[lower[i]], breakpoints[i]]) for i in range(m)]
        cells = np.zeros(values.shape[0], dtype=int)
        corner_index = np.zeros((values.shape[0], m), dtype=int)
        for i in range(m):
            bp = breakpoints[i].tolist()
            idx = np.array([bisect.bisect_right(bp, v) for v in values[:, i]])
            corner_index[:, i] = idx
            cells = cells * splits[i] + idx
        occupied = sorted(set(cells.tolist()))
        relabel = {c: j for j, c in enumerate(occupied)}
        assignment = np.array([relabel[c] for c in cells.tolist()])
        reps = np.empty((len(occupied), m))
        for j, c in enumerate(occupied):
            first = int(np.flatnonzero(cells == c)[0])
            reps[j] = [edges_lo[i][corner_index[first, i]] for i in range(m)]
        alpha, beta = guarantee_of(values, assignment, reps)
        partition = Partition(len(occupied), assignment, reps, alpha, beta, "hyperrect")
    return HyperrectResult(splits, lower, upper, breakpoints, bound, cell_guarantee, partition)


def _prime_factors(K):
    out, p = [], 2
    while p * p <= K:
        while K % p == 0:
            out.append(p)
            K //= p
        p += 1
    if K > 1:
        out.append(K)
    return sorted(out, reverse=True)


def choose_splits(scenarios, K):
    """Distribute the prime factors of K over the axes, largest log-spread first."""
    values = _values(scenarios)
    K = _check_k(K, values.shape[0])
    spread = np.log(values.max(axis=0) / values.min(axis=0))
    splits = np.ones(values.shape[1], dtype=int)
    for p in _prime_factors(K):
        i = int(np.argmax(spread / splits))
        splits[i] *= p
    return tuple(int(r) for r in splits)


# ---------------------------------------------------------------------------
# big-M constants and MIP emission
# ---------------------------------------------------------------------------

@dataclass
class BigMConstants:
    """Per-scenario, per-component big-M values for the two assignment-conditional rows.

    ``scaled_upper[i, k] = s_ik`` deactivates ``t * s_ik <= r_jk``;
    ``representative_upper[i, k] = max_i s_ik - s_ik`` deactivates ``r_jk <= s_ik``.
    """

    scaled_upper: np.ndarray
    representative_upper: np.ndarray

    def mip_text(self, values, K):
        return clustering_mip_text(values, K, self)


def big_m_constants(scenarios):
    values = _values(scenarios)
    return BigMConstants(values.copy(), values.max(axis=0) - values)


def clustering_mip_text(scenarios, K, constants=None):
    """The clustering MIP (beta normalized to 1, ``t = 1/alpha``) in CPLEX LP format."""
    values = _values(scenarios)
    n, m = values.shape
    K = _check_k(K, n)
    bm = constants or big_m_constants(values)
    lines = ["\\ scenario clustering: maximize t = 1/alpha with representatives r_j <= members",
             "Maximize", " obj: t", "Subject To"]
    for i in range(n):
        for j in range(K):
            for k in range(m):
                M = bm.scaled_upper[i, k]
                lines.append(f" up_{i}_{j}_{k}: {_fmt(values[i, k])} t - r_{j}_{k} + {_fmt(M)} z_{i}_{j} <= {_fmt(M)}")
    for i in range(n):
        for j in range(K):
            for k in range(m):
                M = bm.representative_upper[i, k]
                lines.append(f" lo_{i}_{j}_{k}: r_{j}_{k} + {_fmt(M)} z_{i}_{j} <= {_fmt(values[i, k] + M)}")
    for i in range(n):
        lines.append(f" assign_{i}: " + " + ".join(f"z_{i}_{j}" for j in range(K)) + " = 1")
    for j in range(K):
        lines.append(f" nonempty_{j}: " + " + ".join(f"z_{i}_{j}" for i in range(n)) + " >= 1")
    lines.append("Bounds")
    lines.append(" 0 <= t <= 1")
    lines.append("Binaries")
    lines.append(" " + " ".join(f"z_{i}_{j}" for i in range(n) for j in range(K)))
    lines.append("End")
    return "\n".join(lines) + "\n"


def _fmt(x):
    return repr(float(x))
