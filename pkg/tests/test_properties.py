"""Hypothesis property suites for the invariants of each module."""
import csv
import io

import numpy as np
import pytest
from hypothesis import HealthCheck, assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from scenred import ambiguity as amb
from scenred import clustering as cl
from scenred import dro, linalg
from scenred.errors import BoundsViolated
from scenred import matrix_clustering as mc
from scenred.harness import GridConfig, TIMING_COLUMNS, rows_to_csv, run_grid
from scenred.scenarios import MatrixScenarioSet, PerturbationSpec, ScenarioSet, generate_perturbed, validate

from instances import linear_box_instance, random_box
from oracles import random_spd, rejection_sample_box, scipy_lp

SETTINGS = settings(max_examples=60, deadline=None, suppress_health_check=[HealthCheck.too_slow])
seeds = st.integers(0, 2**32 - 1)
positive = st.floats(0.1, 100.0, allow_nan=False, allow_infinity=False)


@st.composite
def scenario_arrays(draw, max_n=8, max_m=4):
    n = draw(st.integers(1, max_n))
    m = draw(st.integers(1, max_m))
    return draw(arrays(np.float64, (n, m), elements=positive))


# ---------------------------------------------------------------- linalg

@SETTINGS
@given(seeds, st.integers(1, 8))
def test_eigen_reconstruction_trace_det(seed, n):
    rng = np.random.default_rng(seed)
    B = rng.normal(size=(n, n))
    A = B + B.T
    lam, V = linalg.sym_eigen(A)
    assert np.linalg.norm(V @ np.diag(lam) @ V.T - A) <= 1e-9 * max(1.0, np.linalg.norm(A))
    assert lam.sum() == pytest.approx(np.trace(A), abs=1e-9 * max(1.0, abs(np.trace(A))))
    S = random_spd(rng, n)
    assert np.prod(linalg.eigvals(S)) == pytest.approx(np.exp(linalg.logdet_spd(S)), rel=1e-8)
    b = rng.normal(size=n)
    assert S @ linalg.solve_spd(S, b) == pytest.approx(b, abs=1e-8 * max(1.0, np.abs(b).max()))


# ---------------------------------------------------------------- scenarios

@SETTINGS
@given(arrays(np.float64, st.integers(1, 6), elements=positive), st.floats(0.0, 0.99), st.integers(1, 30), seeds)
def test_perturbed_scenarios_validate(base, s_inc, count, seed):
    assert validate(generate_perturbed(PerturbationSpec(base, s_inc, count, seed))) is None


# ---------------------------------------------------------------- clustering

def _members_certified(values, part):
    for j in range(part.K):
        rep = part.representatives[j]
        for s in values[part.assignment == j]:
            assert np.all(s <= part.alpha * rep * (1 + 1e-12))
            assert np.all(rep <= part.beta * s * (1 + 1e-12))


@SETTINGS
@given(scenario_arrays(), st.integers(1, 3), seeds)
def test_guarantee_validity_and_dominance(values, K, seed):
    assume(K <= values.shape[0])
    opt = cl.optimal_partition(values, K)
    km = cl.kmeans_partition(values, K, seed=seed % 1000)
    hr = cl.hyperrect_partition(values, cl.choose_splits(values, K)).partition
    for part in (opt, km, hr):
        _members_certified(values, part)
    assert opt.guarantee <= km.guarantee + 1e-12
    assert opt.guarantee <= hr.guarantee + 1e-12


@SETTINGS
@given(scenario_arrays(max_n=10))
def test_guarantee_monotone_in_k(values):
    g = [cl.optimal_partition(values, K).guarantee for K in range(1, values.shape[0] + 1)]
    assert all(b <= a for a, b in zip(g, g[1:]))
    assert g[-1] == 1.0


@SETTINGS
@given(scenario_arrays())
def test_diagonal_representative_is_optimal(values):
    labels = np.zeros(values.shape[0], dtype=int)
    a1, b1 = cl.guarantee_of(values, labels, [cl.diagonal_representative(values)])
    a2, b2 = cl.guarantee_of(values, labels, [cl.optimal_representative(values)])
    assert a1 * b1 == pytest.approx(a2 * b2, abs=1e-12 * a2 * b2)


@SETTINGS
@given(scenario_arrays(), st.integers(1, 3), st.floats(1e-3, 1e3), st.data())
def test_axis_scaling_invariance(values, K, c, data):
    assume(K <= values.shape[0])
    axis = data.draw(st.integers(0, values.shape[1] - 1))
    scaled = ScenarioSet(values).scale_axis(axis, c)
    a, b = cl.optimal_partition(values, K), cl.optimal_partition(scaled, K)
    assert b.guarantee == pytest.approx(a.guarantee, rel=1e-9)
    assert cl._canonical(b.assignment).tolist() == cl._canonical(a.assignment).tolist()


def _corner_product(a, b, rep):
    corners = np.array([[1.0, 1.0], [a, 1.0], [1.0, b], [a, b]])
    alpha, beta = cl.guarantee_of(corners, np.zeros(4, dtype=int), [rep])
    return alpha * beta


@SETTINGS
@given(st.floats(1.0, 20.0), st.floats(1.0, 20.0), st.floats(0.05, 40.0), st.floats(0.05, 20.0))
def test_two_dimensional_optimal_region(a, b, x, slope):
    best = max(a, b)
    lo, hi = min(1.0, b / a), max(1.0, b / a)
    value = _corner_product(a, b, np.array([x, slope * x]))
    if lo <= slope <= hi:
        assert value == pytest.approx(best, rel=1e-12)
    elif slope < lo * (1 - 1e-9) or slope > hi * (1 + 1e-9):
        assert value > best


@SETTINGS
@given(st.floats(1.0, 20.0), st.floats(1.0, 20.0), st.floats(0.0, 1.0), st.floats(0.0, 1.0),
       st.floats(0.1, 30.0), st.floats(0.1, 30.0))
def test_optimal_representatives_are_convex(a, b, t1, t2, x1, x2):
    lo, hi = min(1.0, b / a), max(1.0, b / a)
    r1 = np.array([x1, (lo + t1 * (hi - lo)) * x1])
    r2 = np.array([x2, (lo + t2 * (hi - lo)) * x2])
    best = max(a, b)
    for r in (r1, r2, 0.5 * (r1 + r2)):
        assert _corner_product(a, b, r) == pytest.approx(best, rel=1e-12)


@SETTINGS
@given(scenario_arrays(max_n=30), st.data())
def test_hyperrect_bound(values, data):
    splits = tuple(data.draw(st.integers(1, 4)) for _ in range(values.shape[1]))
    res = cl.hyperrect_partition(values, splits)
    assert res.partition.guarantee <= res.bound + 1e-12
    _members_certified(values, res.partition)


# ---------------------------------------------------------------- matrix clustering

@SETTINGS
@given(seeds, st.integers(1, 6), st.integers(2, 7))
def test_matrix_partitions_certified_and_conjugation_invariant(seed, n, count):
    rng = np.random.default_rng(seed)
    S = MatrixScenarioSet([random_spd(rng, n, cond=rng.uniform(1, 20)) * rng.uniform(0.5, 2) for _ in range(count)])
    K = int(rng.integers(1, count + 1))
    U, _ = np.linalg.qr(rng.normal(size=(n, n)))
    for part in (mc.frobenius_kmeans(S, K, seed=seed % 100), mc.optimal_matrix_partition(S, K)):
        assert part.certify(S)
    g = mc.optimal_matrix_partition(S, K).guarantee
    assert mc.optimal_matrix_partition(S.conjugate(U), K).guarantee == pytest.approx(g, rel=1e-9)


# ---------------------------------------------------------------- ambiguity

def _random_assignment(rng, N):
    K = int(rng.integers(1, N + 1))
    labels = np.concatenate([np.arange(K), rng.integers(0, K, N - K)])
    rng.shuffle(labels)
    return labels, K


@SETTINGS
@given(seeds, st.integers(2, 8))
def test_box_projection_sound_and_tight(seed, N):
    rng = np.random.default_rng(seed)
    box = random_box(rng, N, width=0.3)
    labels, K = _random_assignment(rng, N)
    A = amb.AggregationMatrix.from_assignment(labels, K)
    red = amb.project(box, A)
    for p in rejection_sample_box(rng, box.l, box.u, 200):
        assert red.contains(A.matrix @ p, tol=1e-9)
    # the reduced box intersected with the simplex has the same coordinate ranges as the image
    for j in range(K):
        for sign in (1.0, -1.0):
            c_red = np.zeros(K)
            c_red[j] = sign
            _, v_red, _ = scipy_lp(c_red, A_eq=np.ones((1, K)), b_eq=[1.0], bounds=list(zip(red.l, red.u)))
            _, v_org, _ = scipy_lp(sign * A.matrix[j], A_eq=np.ones((1, N)), b_eq=[1.0],
                                   bounds=list(zip(box.l, box.u)))
            assert v_red == pytest.approx(v_org, abs=1e-9)


@SETTINGS
@given(seeds, st.integers(2, 8))
def test_reduction_bracket(seed, N):
    rng = np.random.default_rng(seed)
    labels, K = _random_assignment(rng, N)
    A = amb.AggregationMatrix.from_assignment(labels, K)
    f = rng.normal(size=N)
    lifted = np.array([f[labels == j].max() for j in range(K)])
    for P in (random_box(rng, N, 0.3), amb.Simplex(N),
              amb.Ellipsoid(np.full(N, 1.0 / N), np.eye(N), rng.uniform(0.001, 0.3 / N))):
        try:
            reduced, _ = amb.worst_case_expectation(amb.project(P, A), lifted)
            original, _ = amb.worst_case_expectation(P, f)
        except BoundsViolated:
            continue
        assert reduced >= original - 1e-9


# ---------------------------------------------------------------- dro

@settings(max_examples=40, deadline=None)
@given(seeds, st.sampled_from([1, 2, 5]), st.sampled_from(["opt", "kmeans", "hyperrect"]))
def test_certificate_holds(seed, K, method):
    rng = np.random.default_rng(seed)
    inst = linear_box_instance(rng, N=int(rng.integers(K, 16)), n=int(rng.integers(1, 5)))
    rep, orig, _ = dro.reduce_and_solve(inst, method, K, seed=seed % 100)
    assert rep.certificate_ok
    assert rep.evaluated_value >= orig.value - 1e-7 * max(1.0, abs(orig.value))


# ---------------------------------------------------------------- harness

def test_grid_csv_reproducible():
    cfg = GridConfig(scenario_counts=[8, 12], ks=[2, 3], s_incs=[0.5], seeds=[0, 1],
                     methods=["opt", "kmeans", "hyperrect"], n_vars=3, n_rows=2)

    def strip(text):
        rows = list(csv.DictReader(io.StringIO(text)))
        for r in rows:
            for c in TIMING_COLUMNS:
                r[c] = ""
        return rows

    assert strip(rows_to_csv(run_grid(cfg))) == strip(rows_to_csv(run_grid(cfg)))
