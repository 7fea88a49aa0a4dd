import numpy as np
import pytest

from scenred import matrix_clustering as mc
from scenred.errors import DimensionMismatch, InvalidK, SingularRepresentative, TooManyScenarios
from scenred.scenarios import MatrixScenarioSet

from oracles import brute_force_matrix_guarantee, random_spd, set_partitions

I2 = np.eye(2)


def test_psd_leq_examples():
    assert mc.psd_leq(I2, 2 * I2)
    assert not mc.psd_leq(2 * I2, I2)
    A, B = np.diag([1.0, 3.0]), np.diag([2.0, 2.0])
    assert not mc.psd_leq(A, B) and not mc.psd_leq(B, A)
    with pytest.raises(DimensionMismatch):
        mc.psd_leq(I2, np.eye(3))


def test_eig_guarantee_examples():
    a, b = mc.eig_guarantee([I2, 2 * I2], 1.5 * I2)
    assert a == pytest.approx(4 / 3, abs=1e-15) and b == 1.5
    assert a * b == pytest.approx(2.0, abs=1e-15)
    assert mc.eig_guarantee([I2], I2) == (1.0, 1.0)
    D = np.diag([1.0, 4.0])
    assert mc.eig_guarantee([D], D) == (4.0, 4.0)
    with pytest.raises(SingularRepresentative):
        mc.eig_guarantee([I2], np.diag([1.0, 0.0]))


def test_bound_is_not_tight():
    # D <= 1 * D exactly, while the eigenvalue route certifies only alpha = 4
    D = np.diag([1.0, 4.0])
    alpha, _ = mc.eig_guarantee([D], D)
    assert alpha == 4.0
    assert mc.psd_leq(D, 1.0 * D)


def test_kmeans_examples():
    S = MatrixScenarioSet([I2, 2 * I2, 10 * I2, 11 * I2])
    for seed in range(6):
        P = mc.frobenius_kmeans(S, 2, seed=seed)
        assert {tuple(P.members(0)), tuple(P.members(1))} == {(0, 1), (2, 3)}
        assert P.certify(S)


def test_kmeans_singletons_and_single_cluster():
    rng = np.random.default_rng(1)
    mats = [random_spd(rng, 3) for _ in range(4)]
    S = MatrixScenarioSet(mats)
    P = mc.frobenius_kmeans(S, 4, seed=0)
    kappa = S.lambda_max / S.lambda_min
    for j in range(4):
        i = P.members(j)[0]
        assert P.alphas[j] * P.betas[j] == pytest.approx(kappa[i] ** 2, rel=1e-12)
    P = mc.frobenius_kmeans(S, 1)
    assert np.allclose(P.representatives[0], np.mean(S.matrices, axis=0))


def test_optimal_examples():
    P = mc.optimal_matrix_partition([I2, 1.1 * I2, 5 * I2], 2)
    assert P.assignment.tolist() == [0, 0, 1]
    assert P.guarantee == pytest.approx(1.1, abs=1e-15)
    P = mc.optimal_matrix_partition([I2, 2 * I2], 1)
    assert np.array_equal(P.representatives[0], I2)
    assert P.guarantee == 2.0 and P.betas[0] == 1.0
    rng = np.random.default_rng(2)
    S = MatrixScenarioSet([random_spd(rng, 3) for _ in range(4)])
    P = mc.optimal_matrix_partition(S, 4)
    assert P.guarantee == pytest.approx(np.max(S.lambda_max / S.lambda_min), rel=1e-14)


def test_optimal_errors():
    with pytest.raises(TooManyScenarios):
        mc.optimal_matrix_partition([I2 * (1 + i) for i in range(13)], 2)
    with pytest.raises(InvalidK):
        mc.optimal_matrix_partition([I2], 2)


def test_optimal_matches_enumeration():
    rng = np.random.default_rng(3)
    for _ in range(40):
        n = int(rng.integers(2, 9))
        K = int(rng.integers(1, min(n, 4) + 1))
        S = MatrixScenarioSet([random_spd(rng, 2, cond=rng.uniform(1, 5)) * rng.uniform(0.5, 3) for _ in range(n)])
        P = mc.optimal_matrix_partition(S, K)
        assert P.guarantee == brute_force_matrix_guarantee(S.lambda_min, S.lambda_max, K)
        assert P.certify(S)


def test_big_m_examples():
    bm = mc.misdp_big_m([I2])
    assert bm.M1.tolist() == [1.0] and bm.M2.tolist() == [0.0]
    bm = mc.misdp_big_m([np.diag([1.0, 4.0]), np.diag([2.0, 3.0])])
    assert bm.M1.tolist() == [4.0, 3.0] and bm.M2.tolist() == [3.0, 2.0]
    Q = np.array([[2.0, 1.0], [1.0, 2.0]])
    bm = mc.misdp_big_m([Q, Q, Q])
    assert bm.M2 == pytest.approx([2.0] * 3, abs=1e-14)


def test_misdp_text():
    text = mc.misdp_text([np.diag([1.0, 4.0]), np.diag([2.0, 3.0])], 2)
    lines = text.splitlines()
    assert lines[0] == "MISDP matrix-clustering" and lines[-1] == "END"
    assert " psd_upper_0_1: t Q_0 - R_1 + 4.0 z_0_1 I <= 4.0 I" in lines
    assert " psd_lower_1_0: R_0 + 2.0 z_1_0 I <= Q_1 + 2.0 I" in lines
    assert sum(l.startswith(" psd_") for l in lines) == 8


def test_json_includes_certificates():
    S = MatrixScenarioSet([I2, 3 * I2])
    P = mc.optimal_matrix_partition(S, 1)
    obj = P.to_json_obj(S)
    assert obj["certificates"][0]["member_lambda_max"] == 3.0
    assert obj["guarantee"] == 3.0


def test_partition_count_sanity():
    assert sum(1 for _ in set_partitions(4, 2)) == 7
