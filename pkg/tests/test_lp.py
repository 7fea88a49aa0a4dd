import itertools

import numpy as np
import pytest

from scenred.errors import TooManyBinaries
from scenred.lp import LinearProgram, Status, solve_lp, solve_milp

from oracles import scipy_lp


def test_simple_max():
    sol = solve_lp(LinearProgram([1, 1], [[1, 1]], ["<="], [1], maximize=True))
    assert sol.status is Status.OPTIMAL
    assert sol.objective == pytest.approx(1.0)


def test_probability_slice():
    sol = solve_lp(LinearProgram([1, 2], [[1, 1]], ["="], [1], [0.2, 0.2], [0.8, 0.8], maximize=True))
    assert sol.objective == pytest.approx(1.8, abs=1e-12)
    assert np.allclose(sol.x, [0.2, 0.8])


def test_infeasible():
    sol = solve_lp(LinearProgram([0], [[1]], ["<="], [-1]))
    assert sol.status is Status.INFEASIBLE


def test_unbounded():
    sol = solve_lp(LinearProgram([-1, 0], [[1, -1]], ["<="], [1]))
    assert sol.status is Status.UNBOUNDED


def test_free_variables_and_equalities():
    # min |x - 3| via x - 3 = p - q with p, q >= 0 and x free
    p = LinearProgram([0, 1, 1], [[1, -1, 1]], ["="], [3], [-np.inf, 0, 0], [np.inf, np.inf, np.inf])
    sol = solve_lp(p)
    assert sol.objective == pytest.approx(0.0, abs=1e-12)
    assert sol.x[0] == pytest.approx(3.0)


def test_knapsack():
    sol = solve_milp(LinearProgram([3, 2], [[2, 2]], ["<="], [3], [0, 0], [1, 1], maximize=True, binary=[1, 1]))
    assert sol.objective == pytest.approx(3.0)
    assert sol.x.tolist() == [1.0, 0.0]


def test_milp_without_binaries_is_lp():
    p = LinearProgram([1, 2], [[1, 1]], ["="], [1], [0.2, 0.2], [0.8, 0.8], maximize=True)
    a, b = solve_lp(p), solve_milp(p)
    assert a.objective == b.objective and np.array_equal(a.x, b.x)


def test_integrality_infeasible():
    sol = solve_milp(LinearProgram([1, 1], [[1, 1]], ["="], [0.5], [0, 0], [1, 1], binary=[1, 1]))
    assert sol.status is Status.INFEASIBLE


def test_binary_cap():
    n = 26
    with pytest.raises(TooManyBinaries):
        solve_milp(LinearProgram(np.ones(n), np.ones((1, n)), [">="], [1], np.zeros(n), np.ones(n), binary=np.ones(n)))


def test_bad_bounds_rejected():
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<="], [1], [2], [1])
    with pytest.raises(ValueError):
        LinearProgram([1], [[1]], ["<="], [1], [0], [2], binary=[1])


def _random_lp(rng, n, m):
    A = rng.uniform(-1, 1, (m, n))
    rel = list(rng.choice(["<=", ">=", "="], size=m, p=[0.45, 0.45, 0.1]))
    x0 = rng.uniform(0, 2, n)
    act = A @ x0
    b = np.where(np.array(rel) == "<=", act + rng.uniform(0, 1, m), np.where(np.array(rel) == ">=", act - rng.uniform(0, 1, m), act))
    lower = np.where(rng.uniform(size=n) < 0.2, -np.inf, 0.0)
    upper = np.where(rng.uniform(size=n) < 0.5, 3.0, np.inf)
    c = rng.uniform(-1, 1, n)
    return LinearProgram(c, A, rel, b, lower, upper, maximize=bool(rng.integers(2)))


def test_random_lps_match_scipy():
    rng = np.random.default_rng(11)
    for _ in range(200):
        n, m = int(rng.integers(1, 7)), int(rng.integers(0, 7))
        p = _random_lp(rng, n, m)
        sol = solve_lp(p)
        A_ub = [p.A[i] if r == "<=" else -p.A[i] for i, r in enumerate(p.relations) if r != "="]
        b_ub = [p.b[i] if r == "<=" else -p.b[i] for i, r in enumerate(p.relations) if r != "="]
        A_eq = [p.A[i] for i, r in enumerate(p.relations) if r == "="]
        b_eq = [p.b[i] for i, r in enumerate(p.relations) if r == "="]
        bounds = [(None if lo == -np.inf else lo, None if hi == np.inf else hi) for lo, hi in zip(p.lower, p.upper)]
        status, val, _ = scipy_lp(p.c, A_ub or None, b_ub or None, A_eq or None, b_eq or None, bounds, p.maximize)
        expected = {0: Status.OPTIMAL, 2: Status.INFEASIBLE, 3: Status.UNBOUNDED}[status]
        assert sol.status is expected
        if sol.optimal:
            assert sol.objective == pytest.approx(val, abs=1e-7 * max(1, abs(val)))
            assert p.max_violation(sol.x) <= 1e-7 * p.scale()
            assert sol.objective == pytest.approx(float(p.c @ sol.x), abs=1e-9 * p.scale())


def test_strong_duality():
    rng = np.random.default_rng(5)
    for _ in range(100):
        n, m = int(rng.integers(1, 7)), int(rng.integers(1, 7))
        A = rng.uniform(-1, 1, (m, n))
        b = A @ rng.uniform(0, 1, n) - rng.uniform(0, 1, m)          # primal feasible
        c = A.T @ rng.uniform(0, 1, m) + rng.uniform(0, 1, n)        # dual feasible
        primal = solve_lp(LinearProgram(c, A, [">="] * m, b))
        dual = solve_lp(LinearProgram(b, A.T, ["<="] * n, c, maximize=True))
        assert primal.optimal and dual.optimal
        assert primal.objective == pytest.approx(dual.objective, abs=1e-7)


def test_milp_matches_enumeration():
    rng = np.random.default_rng(8)
    for _ in range(40):
        nb = int(rng.integers(1, 11))
        nc = int(rng.integers(0, 3))
        n, m = nb + nc, int(rng.integers(1, 4))
        A = rng.uniform(0, 1, (m, n))
        b = A.sum(axis=1) * rng.uniform(0.2, 0.6)
        c = rng.uniform(-1, 1, n)
        upper = np.ones(n) * np.r_[np.ones(nb), np.full(nc, 2.0)]
        binary = np.r_[np.ones(nb, bool), np.zeros(nc, bool)]
        p = LinearProgram(c, A, ["<="] * m, b, np.zeros(n), upper, binary=binary)
        best = np.inf
        for bits in itertools.product((0.0, 1.0), repeat=nb):
            lo = np.r_[bits, np.zeros(nc)]
            hi = np.r_[bits, np.full(nc, 2.0)]
            s = solve_lp(p.with_bounds(lo, hi))
            if s.optimal:
                best = min(best, s.objective)
        sol = solve_milp(p)
        if best == np.inf:
            assert sol.status is Status.INFEASIBLE
        else:
            assert sol.objective == pytest.approx(best, abs=1e-8)
            assert np.all(np.abs(sol.x[:nb] - np.round(sol.x[:nb])) == 0)


def test_row_permutation_invariance():
    rng = np.random.default_rng(9)
    for _ in range(50):
        p = _random_lp(rng, 5, 5)
        perm = rng.permutation(5)
        q = LinearProgram(p.c, p.A[perm], [p.relations[i] for i in perm], p.b[perm], p.lower, p.upper, p.maximize)
        a, b = solve_lp(p), solve_lp(q)
        assert a.status is b.status
        if a.optimal:
            assert a.objective == pytest.approx(b.objective, rel=1e-9, abs=1e-9)


def test_degenerate_problem_terminates():
    # many redundant constraints through the same vertex
    n = 4
    A = np.vstack([np.eye(n), np.ones((6, n)), -np.eye(n)])
    b = np.r_[np.ones(n), np.full(6, n), np.zeros(n)]
    sol = solve_lp(LinearProgram(-np.ones(n), A, ["<="] * len(b), b, np.full(n, -np.inf), np.full(n, np.inf)))
    assert sol.objective == pytest.approx(-n)
