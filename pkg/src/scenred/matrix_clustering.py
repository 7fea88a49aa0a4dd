"""Clustering of SPD matrix scenarios with PSD-order guarantees.

A representative ``R`` of a cluster certifies ``Q_i <= alpha R`` and
``R <= beta Q_i`` in the Loewner order. Checking those directly needs an
eigenvalue of a difference; the sufficient condition
``lambda_max(A) <= lambda_min(B)  =>  A <= B`` gives closed-form constants

    alpha_j = max_i lambda_max(Q_i) / lambda_min(R)
    beta_j  = lambda_max(R) / min_i lambda_min(Q_i)

which is what every partition here reports.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from . import linalg
from .clustering import NODE_CAP, lloyd, min_max_ratio_partition, _check_k
from .errors import (
    DimensionMismatch,
    SingularRepresentative,
    TooManyScenarios,
)
from .scenarios import MatrixScenarioSet

EXHAUSTIVE_LIMIT = 12
CERT_TOL = 1e-9


def psd_leq(A, B, tol=CERT_TOL):
    """``A <= B`` in the PSD order, up to ``tol * max(1, ||B - A||_F)``."""
    A = linalg.as_square(A)
    B = linalg.as_square(B)
    if A.shape != B.shape:
        raise DimensionMismatch(f"cannot compare {A.shape} with {B.shape}")
    D = B - A
    lam_min = linalg.eigvals(D)[0]
    return bool(lam_min >= -tol * linalg.scale_of(D))


def eig_guarantee(cluster, representative):
    """Closed-form ``(alpha_j, beta_j)`` for a cluster of SPD matrices and one representative."""
    mats = [np.asarray(Q, dtype=float) for Q in cluster]
    lo_r, hi_r = linalg.extreme_eigenvalues(representative)
    if not lo_r > 0:
        raise SingularRepresentative(f"representative has smallest eigenvalue {lo_r!r}")
    ext = [linalg.extreme_eigenvalues(Q) for Q in mats]
    alpha = max(hi for _, hi in ext) / lo_r
    beta = hi_r / min(lo for lo, _ in ext)
    return alpha, beta


@dataclass
class MatrixPartition:
    K: int
    assignment: np.ndarray
    representatives: np.ndarray      # K x n x n
    alphas: np.ndarray
    betas: np.ndarray
    method: str = ""
    seed: Optional[int] = None
    nodes: int = field(default=0, compare=False)

    @property
    def guarantee(self):
        """Best guarantee after rescaling each representative: ``max_j alpha_j beta_j``."""
        return float(np.max(self.alphas * self.betas))

    @property
    def alpha(self):
        return float(np.max(self.alphas))

    @property
    def beta(self):
        return float(np.max(self.betas))

    def members(self, j):
        return np.flatnonzero(self.assignment == j)

    def certify(self, scenarios: MatrixScenarioSet, tol=CERT_TOL):
        """Check ``Q_i <= alpha_j R_j`` and ``R_j <= beta_j Q_i`` for every member directly."""
        for j in range(self.K):
            R = self.representatives[j]
            for i in self.members(j):
                Q = scenarios[i]
                if not psd_leq(Q, self.alphas[j] * R, tol):
                    return False
                if not psd_leq(R, self.betas[j] * Q, tol):
                    return False
        return True

    def to_json_obj(self, scenarios: Optional[MatrixScenarioSet] = None):
        obj = {
            "K": int(self.K),
            "assignment": [int(a) for a in self.assignment],
            "representatives": self.representatives.tolist(),
            "alpha": [float(a) for a in self.alphas],
            "beta": [float(b) for b in self.betas],
            "guarantee": self.guarantee,
            "method": self.method,
            "seed": self.seed,
        }
        if scenarios is not None:
            certs = []
            for j in range(self.K):
                idx = self.members(j)
                lo_r, hi_r = linalg.extreme_eigenvalues(self.representatives[j])
                certs.append({
                    "member_lambda_max": float(np.max(scenarios.lambda_max[idx])),
                    "member_lambda_min": float(np.min(scenarios.lambda_min[idx])),
                    "representative_lambda_min": lo_r,
                    "representative_lambda_max": hi_r,
                })
            obj["certificates"] = certs
        return obj

    def to_json(self, scenarios=None):
        return json.dumps(self.to_json_obj(scenarios), indent=1) + "\n"


def _as_set(scenarios):
    return scenarios if isinstance(scenarios, MatrixScenarioSet) else MatrixScenarioSet(scenarios)


def _build(scenarios, assignment, reps, method, seed=None, nodes=0):
    K = len(reps)
    alphas = np.empty(K)
    betas = np.empty(K)
    for j in range(K):
        alphas[j], betas[j] = eig_guarantee(scenarios.matrices[assignment == j], reps[j])
    return MatrixPartition(K, np.asarray(assignment), np.asarray(reps), alphas, betas, method, seed, nodes)


def frobenius_kmeans(scenarios, K, seed=0, max_iter=300):
    """Lloyd iterations in the Frobenius geometry; representatives are entrywise means."""
    scenarios = _as_set(scenarios)
    N, n = len(scenarios), scenarios.dimension
    K = _check_k(K, N)
    assignment, centers, _ = lloyd(scenarios.matrices.reshape(N, n * n), K, seed, max_iter)
    reps = centers.reshape(K, n, n)
    reps = 0.5 * (reps + reps.transpose(0, 2, 1))
    return _build(scenarios, assignment, reps, "kmeans", seed)


def optimal_matrix_partition(scenarios, K, node_cap=NODE_CAP):
    """Exact minimizer of ``max_j alpha_j beta_j`` with scaled-identity representatives.

    Cluster ``j`` gets ``c_j I`` with ``c_j = min lambda_min(Q_i)``, so
    ``R_j <= Q_i`` holds exactly and the cluster guarantee is
    ``max lambda_max / min lambda_min`` over its members.
    """
    scenarios = _as_set(scenarios)
    N, n = len(scenarios), scenarios.dimension
    if N > EXHAUSTIVE_LIMIT:
        raise TooManyScenarios(f"exact matrix partitioning supports at most {EXHAUSTIVE_LIMIT} scenarios, got {N}")
    K = _check_k(K, N)
    lo = scenarios.lambda_min[:, None]
    hi = scenarios.lambda_max[:, None]
    assignment, _, nodes = min_max_ratio_partition(lo, hi, K, node_cap)
    reps = np.array([np.min(lo[assignment == j]) * np.eye(n) for j in range(K)])
    return _build(scenarios, assignment, reps, "opt", nodes=nodes)


@dataclass
class MisdpBigM:
    """``M1[i] = lambda_max(Q_i)`` and ``M2[i] = max_l lambda_max(Q_l) - lambda_min(Q_i)``."""

    M1: np.ndarray
    M2: np.ndarray


def misdp_big_m(scenarios):
    scenarios = _as_set(scenarios)
    top = float(np.max(scenarios.lambda_max))
    return MisdpBigM(scenarios.lambda_max.copy(), top - scenarios.lambda_min)


def misdp_text(scenarios, K):
    """Plain-text description of the matrix clustering MISDP (grammar in docs/misdp_format.md).

    Big-M terms multiply the identity: ``M (1 - z_ij) I`` relaxes an
    inequality between ``n x n`` matrices.
    """
    scenarios = _as_set(scenarios)
    N, n = len(scenarios), scenarios.dimension
    K = _check_k(K, N)
    bm = misdp_big_m(scenarios)
    out = ["MISDP matrix-clustering",
           f"DIM {n}", f"SCENARIOS {N}", f"CLUSTERS {K}",
           "VARIABLES", " t continuous [0,1]"]
    out += [f" R_{j} symmetric {n}x{n}" for j in range(K)]
    out += [f" z_{i}_{j} binary" for i in range(N) for j in range(K)]
    out.append("MAXIMIZE t")
    out.append("SUBJECT TO")
    for i in range(N):
        for j in range(K):
            out.append(f" psd_upper_{i}_{j}: t Q_{i} - R_{j} + {float(bm.M1[i])!r} z_{i}_{j} I <= {float(bm.M1[i])!r} I")
            out.append(f" psd_lower_{i}_{j}: R_{j} + {float(bm.M2[i])!r} z_{i}_{j} I <= Q_{i} + {float(bm.M2[i])!r} I")
    for i in range(N):
        out.append(f" assign_{i}: " + " + ".join(f"z_{i}_{j}" for j in range(K)) + " = 1")
    for j in range(K):
        out.append(f" nonempty_{j}: " + " + ".join(f"z_{i}_{j}" for i in range(N)) + " >= 1")
    out.append("DATA")
    for i in range(N):
        rows = "; ".join(" ".join(repr(float(v)) for v in row) for row in scenarios[i])
        out.append(f" Q_{i} = [{rows}]")
    out.append("END")
    return "\n".join(out) + "\n"
