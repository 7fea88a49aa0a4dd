"""Dense bounded-variable simplex and a small best-bound branch-and-bound for binaries.

The simplex works on ``A x + slack = b`` with every variable (structural,
slack, artificial) carrying its own lower/upper bound, so variable bounds
never become rows. Infinite bounds are ``-inf``/``inf`` and are never replaced
by a big number.

Pricing is Dantzig's rule; after ``3 * (rows + cols)`` consecutive degenerate
pivots it switches to Bland's rule until the objective moves again.
"""
from __future__ import annotations

import enum
import heapq
import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CycleDetected, DimensionMismatch, TooManyBinaries

MAX_BINARIES = 25

LE, EQ, GE = "<=", "=", ">="
_SENSE_ALIASES = {"<=": LE, "<": LE, "le": LE, "=": EQ, "==": EQ, "eq": EQ, ">=": GE, ">": GE, "ge": GE}


class Status(str, enum.Enum):
    OPTIMAL = "Optimal"
    INFEASIBLE = "Infeasible"
    UNBOUNDED = "Unbounded"


@dataclass
class LinearProgram:
    """``min`` or ``max`` of ``c @ x`` subject to row relations and variable bounds."""

    c: np.ndarray
    A: np.ndarray
    relations: list
    b: np.ndarray
    lower: np.ndarray = None
    upper: np.ndarray = None
    maximize: bool = False
    binary: np.ndarray = None

    def __post_init__(self):
        self.c = np.asarray(self.c, dtype=float).ravel()
        n = self.c.size
        self.A = np.asarray(self.A, dtype=float).reshape(-1, n) if np.size(self.A) else np.zeros((0, n))
        self.b = np.asarray(self.b, dtype=float).ravel()
        self.relations = [_SENSE_ALIASES[str(r).lower()] for r in self.relations]
        m = self.A.shape[0]
        if self.b.size != m or len(self.relations) != m:
            raise DimensionMismatch(
                f"{m} constraint rows but {self.b.size} right-hand sides and {len(self.relations)} relations"
            )
        self.lower = np.zeros(n) if self.lower is None else np.asarray(self.lower, dtype=float).ravel()
        self.upper = np.full(n, np.inf) if self.upper is None else np.asarray(self.upper, dtype=float).ravel()
        if self.lower.size != n or self.upper.size != n:
            raise DimensionMismatch("bound vectors must match the number of variables")
        if np.any(np.isnan(self.lower)) or np.any(np.isnan(self.upper)):
            raise ValueError("bounds must not be NaN")
        if np.any(self.lower > self.upper):
            j = int(np.argmax(self.lower > self.upper))
            raise ValueError(f"variable {j} has lower bound {self.lower[j]} above upper bound {self.upper[j]}")
        if self.binary is None:
            self.binary = np.zeros(n, dtype=bool)
        else:
            self.binary = np.asarray(self.binary, dtype=bool).ravel()
            if self.binary.size != n:
                raise DimensionMismatch("binary flags must match the number of variables")
        if np.any(self.binary & ((self.lower < 0) | (self.upper > 1))):
            raise ValueError("binary variables need bounds within [0, 1]")

    @property
    def n_vars(self):
        return self.c.size

    @property
    def n_rows(self):
        return self.A.shape[0]

    def scale(self):
        parts = [1.0]
        for arr in (self.A, self.b, self.c):
            if arr.size:
                parts.append(float(np.max(np.abs(arr))))
        return max(parts)

    def with_bounds(self, lower, upper):
        return LinearProgram(self.c, self.A, list(self.relations), self.b, lower, upper, self.maximize, self.binary)

    def max_violation(self, x):
        """Largest constraint or bound violation of ``x``."""
        x = np.asarray(x, dtype=float)
        viol = 0.0
        if self.n_rows:
            act = self.A @ x
            for rel, a, rhs in zip(self.relations, act, self.b):
                if rel == LE:
                    viol = max(viol, a - rhs)
                elif rel == GE:
                    viol = max(viol, rhs - a)
                else:
                    viol = max(viol, abs(a - rhs))
        viol = max(viol, float(np.max(self.lower - x, initial=0.0)), float(np.max(x - self.upper, initial=0.0)))
        return viol


@dataclass
class LpSolution:
    status: Status
    objective: float = math.nan
    x: np.ndarray = None
    iterations: int = 0
    nodes: int = 0

    @property
    def optimal(self):
        return self.status is Status.OPTIMAL


@dataclass
class _Tableau:
    T: np.ndarray           # B^-1 M
    x: np.ndarray           # values of every column
    lo: np.ndarray
    hi: np.ndarray
    basis: list
    M: np.ndarray
    b: np.ndarray
    is_basic: np.ndarray = field(init=False)

    def __post_init__(self):
        self.is_basic = np.zeros(self.M.shape[1], dtype=bool)
        self.is_basic[self.basis] = True

    def refactor(self):
        B = self.M[:, self.basis]
        nonbasic = ~self.is_basic
        rhs = self.b - self.M[:, nonbasic] @ self.x[nonbasic]
        self.T = np.linalg.solve(B, self.M)
        self.x[self.basis] = np.linalg.solve(B, rhs)


class _Simplex:
    def __init__(self, tab, feas_tol, opt_tol, piv_tol, max_iter):
        self.tab = tab
        self.feas_tol = feas_tol
        self.opt_tol = opt_tol
        self.piv_tol = piv_tol
        self.max_iter = max_iter
        self.iterations = 0

    def run(self, cost):
        """Minimize ``cost @ x`` from the current basic feasible point."""
        tab = self.tab
        rows = tab.T.shape[0]
        ncols = tab.T.shape[1]
        degenerate_limit = 3 * (rows + ncols)
        streak = 0
        bland = False
        since_refactor = 0
        d = cost - cost[tab.basis] @ tab.T

        while True:
            if self.iterations >= self.max_iter:
                raise CycleDetected(f"simplex exceeded {self.max_iter} iterations")
            nonbasic = ~tab.is_basic
            movable = tab.hi - tab.lo > 0
            up = nonbasic & movable & (d < -self.opt_tol) & (tab.x < tab.hi - self.feas_tol)
            down = nonbasic & movable & (d > self.opt_tol) & (tab.x > tab.lo + self.feas_tol)
            eligible = up | down
            if not eligible.any():
                return Status.OPTIMAL
            if bland:
                j = int(np.flatnonzero(eligible)[0])
            else:
                j = int(np.argmax(np.where(eligible, np.abs(d), -1.0)))
            direction = 1.0 if up[j] else -1.0

            col = tab.T[:, j]
            alpha = direction * col
            theta = math.inf
            leave = -1
            leave_to_lower = True
            xb = tab.x[tab.basis]
            lob = tab.lo[tab.basis]
            hib = tab.hi[tab.basis]
            for i in range(rows):
                a = alpha[i]
                if a > self.piv_tol and lob[i] > -math.inf:
                    limit = max(0.0, (xb[i] - lob[i]) / a)
                    to_lower = True
                elif a < -self.piv_tol and hib[i] < math.inf:
                    limit = max(0.0, (hib[i] - xb[i]) / -a)
                    to_lower = False
                else:
                    continue
                better = limit < theta - 1e-12 * max(1.0, theta if theta < math.inf else 1.0)
                tie = not better and leave >= 0 and abs(limit - theta) <= 1e-12 * max(1.0, theta)
                if tie:
                    if bland:
                        better = tab.basis[i] < tab.basis[leave]
                    else:
                        better = abs(a) > abs(alpha[leave])
                if better:
                    theta, leave, leave_to_lower = limit, i, to_lower

            flip = tab.hi[j] - tab.lo[j]
            if flip <= theta:
                if flip == math.inf:
                    return Status.UNBOUNDED
                # bound flip, basis unchanged
                tab.x[j] = tab.hi[j] if direction > 0 else tab.lo[j]
                tab.x[tab.basis] -= direction * flip * col
                self.iterations += 1
                streak = 0
                bland = False
                continue

            step = direction * theta
            tab.x[j] += step
            tab.x[tab.basis] -= step * col
            leaving = tab.basis[leave]
            tab.x[leaving] = tab.lo[leaving] if leave_to_lower else tab.hi[leaving]

            piv = tab.T[leave, j]
            tab.T[leave, :] /= piv
            other = col.copy()
            other[leave] = 0.0
            tab.T -= np.outer(other, tab.T[leave, :])
            d = d - d[j] * tab.T[leave, :]
            tab.basis[leave] = j
            tab.is_basic[leaving] = False
            tab.is_basic[j] = True
            self.iterations += 1

            if theta <= self.feas_tol:
                streak += 1
                if streak >= degenerate_limit:
                    bland = True
            else:
                streak = 0
                bland = False

            since_refactor += 1
            if since_refactor >= 50:
                tab.refactor()
                d = cost - cost[tab.basis] @ tab.T
                since_refactor = 0


def _initial_nonbasic_value(lo, hi):
    if lo > -math.inf:
        return lo
    if hi < math.inf:
        return hi
    return 0.0


def solve_lp(p: LinearProgram, max_iter=None) -> LpSolution:
    """Solve a linear program (binary flags are ignored: this is the relaxation)."""
    m, n = p.n_rows, p.n_vars
    scale = p.scale()
    feas_tol = 1e-9 * scale
    opt_tol = 1e-9 * max(1.0, float(np.max(np.abs(p.c), initial=0.0)))
    piv_tol = 1e-9

    slack_lo = np.array([0.0 if r in (LE, EQ) else -math.inf for r in p.relations])
    slack_hi = np.array([math.inf if r == LE else 0.0 for r in p.relations])

    x_struct = np.array([_initial_nonbasic_value(lo, hi) for lo, hi in zip(p.lower, p.upper)])
    residual = p.b - p.A @ x_struct if m else np.zeros(0)

    # every row gets a slack; rows whose slack cannot absorb the residual get an artificial
    slack_val = np.clip(residual, slack_lo, slack_hi)
    needs_art = np.abs(residual - slack_val) > 0.0
    art_rows = np.flatnonzero(needs_art)
    n_art = art_rows.size
    sign = np.sign(residual[art_rows] - slack_val[art_rows])

    N = n + m + n_art
    M = np.zeros((m, N))
    M[:, :n] = p.A
    M[:, n:n + m] = np.eye(m)
    for k, i in enumerate(art_rows):
        M[i, n + m + k] = sign[k]
    lo = np.concatenate([p.lower, slack_lo, np.zeros(n_art)])
    hi = np.concatenate([p.upper, slack_hi, np.full(n_art, math.inf)])
    x = np.concatenate([x_struct, slack_val, np.abs(residual[art_rows] - slack_val[art_rows])])

    basis = []
    for i in range(m):
        if needs_art[i]:
            basis.append(n + m + int(np.searchsorted(art_rows, i)))
        else:
            basis.append(n + i)
    # basis matrix is diagonal with +-1 entries
    T = M * np.array([M[i, basis[i]] for i in range(m)])[:, None] if m else M.copy()
    tab = _Tableau(T=T, x=x, lo=lo, hi=hi, basis=basis, M=M, b=p.b.copy())
    if max_iter is None:
        max_iter = 50 * (m + N) + 1000
    simplex = _Simplex(tab, feas_tol, opt_tol, piv_tol, max_iter)

    if n_art:
        phase1 = np.zeros(N)
        phase1[n + m:] = 1.0
        simplex.run(phase1)
        tab.refactor()
        infeas = float(np.sum(tab.x[n + m:]))
        if infeas > feas_tol * max(1, m):
            return LpSolution(Status.INFEASIBLE, iterations=simplex.iterations)
        tab.hi[n + m:] = 0.0
        tab.x[n + m:] = np.where(tab.is_basic[n + m:], tab.x[n + m:], 0.0)
        _drive_out_artificials(tab, n + m, piv_tol)

    cost = np.zeros(N)
    cost[:n] = -p.c if p.maximize else p.c
    status = simplex.run(cost)
    if status is Status.UNBOUNDED:
        return LpSolution(Status.UNBOUNDED, iterations=simplex.iterations)
    if m:
        tab.refactor()
    xs = tab.x[:n].copy()
    # snap values that drifted within tolerance of a bound
    xs = np.where(np.abs(xs - p.lower) <= feas_tol, p.lower, xs)
    xs = np.where(np.abs(xs - p.upper) <= feas_tol, p.upper, xs)
    return LpSolution(Status.OPTIMAL, float(p.c @ xs), xs, simplex.iterations)


def _drive_out_artificials(tab, first_art, piv_tol):
    for r in range(len(tab.basis)):
        if tab.basis[r] < first_art:
            continue
        row = tab.T[r, :first_art]
        candidates = np.flatnonzero((np.abs(row) > piv_tol) & ~tab.is_basic[:first_art])
        if candidates.size == 0:
            continue  # redundant row; the artificial stays basic at zero
        j = int(candidates[np.argmax(np.abs(row[candidates]))])
        leaving = tab.basis[r]
        piv = tab.T[r, j]
        col = tab.T[:, j].copy()
        tab.T[r, :] /= piv
        col[r] = 0.0
        tab.T -= np.outer(col, tab.T[r, :])
        tab.basis[r] = j
        tab.is_basic[leaving] = False
        tab.is_basic[j] = True
    tab.refactor()


def solve_milp(p: LinearProgram, frac_tol=1e-6) -> LpSolution:
    """Best-bound branch-and-bound over the binary variables of ``p``.

    Branches on the most fractional binary (ties: lowest index). With no
    binary flags this is exactly :func:`solve_lp`.
    """
    binaries = np.flatnonzero(p.binary)
    if binaries.size > MAX_BINARIES:
        raise TooManyBinaries(f"{binaries.size} binary variables exceed the cap of {MAX_BINARIES}")
    if binaries.size == 0:
        return solve_lp(p)

    sign = -1.0 if p.maximize else 1.0   # work with minimization internally
    counter = itertools.count()
    root = solve_lp(p)
    iterations = root.iterations
    if root.status is not Status.OPTIMAL:
        return LpSolution(root.status, iterations=iterations, nodes=1)

    heap = [(sign * root.objective, next(counter), p.lower.copy(), p.upper.copy(), root)]
    incumbent = None
    best = math.inf
    nodes = 1
    gap_tol = 1e-9 * max(1.0, abs(root.objective))

    while heap:
        bound, _, lower, upper, sol = heapq.heappop(heap)
        if bound >= best - gap_tol:
            break
        xb = sol.x[binaries]
        frac = np.abs(xb - np.round(xb))
        if np.all(frac <= frac_tol):
            fixed_lo, fixed_hi = lower.copy(), upper.copy()
            fixed_lo[binaries] = fixed_hi[binaries] = np.round(xb)
            clean = solve_lp(p.with_bounds(fixed_lo, fixed_hi))
            iterations += clean.iterations
            if clean.status is Status.OPTIMAL and sign * clean.objective < best:
                best = sign * clean.objective
                incumbent = clean
            continue
        # most fractional: closest to 0.5, lowest index on ties
        k = int(np.argmin(np.abs(xb - np.floor(xb) - 0.5)))
        j = binaries[k]
        for value in (0.0, 1.0):
            lo_c, hi_c = lower.copy(), upper.copy()
            lo_c[j] = hi_c[j] = value
            if lo_c[j] < p.lower[j] or hi_c[j] > p.upper[j]:
                continue
            child = solve_lp(p.with_bounds(lo_c, hi_c))
            nodes += 1
            iterations += child.iterations
            if child.status is Status.OPTIMAL and sign * child.objective < best - gap_tol:
                heapq.heappush(heap, (sign * child.objective, next(counter), lo_c, hi_c, child))

    if incumbent is None:
        return LpSolution(Status.INFEASIBLE, iterations=iterations, nodes=nodes)
    return LpSolution(Status.OPTIMAL, incumbent.objective, incumbent.x, iterations, nodes)
