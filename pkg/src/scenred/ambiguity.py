"""Ambiguity sets over scenario probabilities and their worst-case expectation oracles.

Three variants are supported, all living on the probability hyperplane
``sum(p) == 1``:

* ``Simplex(n)``: every distribution over the ``n`` atoms,
* ``Box(l, u)``: confidence intervals ``l <= p <= u``,
* ``Ellipsoid(p0, sigma, r)``: ``(p - p0)^T sigma^{-1} (p - p0) <= r^2``.

Reducing the scenario set maps a distribution ``p`` to ``A @ p`` where ``A``
is the cluster aggregation matrix; :func:`project` gives the image set.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from statistics import NormalDist

import numpy as np

from . import linalg
from .errors import (
    BoundsViolated,
    DimensionMismatch,
    InfeasibleBox,
    InvalidDelta,
    NotPositiveDefinite,
    NonSymmetric,
    ParseError,
    RankDeficient,
    ValidationError,
)
from .lp import EQ, LinearProgram, solve_lp

SUM_TOL = 1e-9
BOUNDS_TOL = 1e-9


class AmbiguitySet:
    kind = ""

    @property
    def n(self) -> int:
        raise NotImplementedError

    def contains(self, p, tol=1e-9) -> bool:
        raise NotImplementedError

    def to_json_obj(self) -> dict:
        raise NotImplementedError


def _on_simplex_plane(p, tol):
    return abs(float(np.sum(p)) - 1.0) <= tol


@dataclass(frozen=True)
class Simplex(AmbiguitySet):
    atoms: int
    kind = "simplex"

    def __post_init__(self):
        if int(self.atoms) < 1:
            raise ValidationError("a simplex needs at least one atom")

    @property
    def n(self):
        return int(self.atoms)

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        return p.shape == (self.n,) and bool(np.all(p >= -tol)) and _on_simplex_plane(p, tol)

    def to_json_obj(self):
        return {"kind": "simplex", "n": self.n}


@dataclass(frozen=True, eq=False)
class Box(AmbiguitySet):
    l: np.ndarray
    u: np.ndarray
    clipped: bool = field(default=False, compare=False)
    kind = "box"

    def __post_init__(self):
        l = np.array(self.l, dtype=float).ravel()
        u = np.array(self.u, dtype=float).ravel()
        if l.shape != u.shape or l.size == 0:
            raise DimensionMismatch(f"box bounds have shapes {l.shape} and {u.shape}")
        if not (np.all(l >= 0) and np.all(u <= 1) and np.all(l <= u)):
            raise ValidationError("box bounds must satisfy 0 <= l <= u <= 1")
        if l.sum() > 1 + SUM_TOL or u.sum() < 1 - SUM_TOL:
            raise InfeasibleBox(f"box misses the probability simplex: sum(l)={l.sum()!r}, sum(u)={u.sum()!r}")
        l.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "l", l)
        object.__setattr__(self, "u", u)

    @property
    def n(self):
        return self.l.size

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        return (p.shape == (self.n,) and bool(np.all(p >= self.l - tol)) and bool(np.all(p <= self.u + tol))
                and _on_simplex_plane(p, tol))

    def to_json_obj(self):
        return {"kind": "box", "l": self.l.tolist(), "u": self.u.tolist(), "clipped": self.clipped}

    def __eq__(self, other):
        return isinstance(other, Box) and np.array_equal(self.l, other.l) and np.array_equal(self.u, other.u)


@dataclass(frozen=True, eq=False)
class Ellipsoid(AmbiguitySet):
    p0: np.ndarray
    sigma: np.ndarray
    r: float
    kind = "ellipsoid"

    def __post_init__(self):
        p0 = np.array(self.p0, dtype=float).ravel()
        sigma = np.array(self.sigma, dtype=float)
        if sigma.shape != (p0.size, p0.size):
            raise DimensionMismatch(f"sigma has shape {sigma.shape}, expected {(p0.size, p0.size)}")
        if not _on_simplex_plane(p0, SUM_TOL):
            raise ValidationError(f"ellipsoid center must sum to 1, got {p0.sum()!r}")
        if not (math.isfinite(self.r) and self.r > 0):
            raise ValidationError(f"radius must be positive, got {self.r!r}")
        try:
            chol = linalg.cholesky(sigma)
        except (NotPositiveDefinite, NonSymmetric) as exc:
            raise ValidationError(f"sigma must be symmetric positive definite: {exc}") from exc
        for arr in (p0, sigma):
            arr.setflags(write=False)
        object.__setattr__(self, "p0", p0)
        object.__setattr__(self, "sigma", sigma)
        object.__setattr__(self, "r", float(self.r))
        object.__setattr__(self, "_chol", chol)

    @property
    def n(self):
        return self.p0.size

    def mahalanobis_sq(self, p):
        d = np.asarray(p, dtype=float) - self.p0
        return float(d @ linalg.cholesky_solve(self._chol, d))

    def contains(self, p, tol=1e-9):
        p = np.asarray(p, dtype=float)
        if p.shape != (self.n,) or not _on_simplex_plane(p, tol):
            return False
        return self.mahalanobis_sq(p) <= self.r ** 2 * (1 + tol) + tol

    def to_json_obj(self):
        return {"kind": "ellipsoid", "p0": self.p0.tolist(), "sigma": self.sigma.tolist(), "r": self.r}

    def __eq__(self, other):
        return (isinstance(other, Ellipsoid) and np.array_equal(self.p0, other.p0)
                and np.array_equal(self.sigma, other.sigma) and self.r == other.r)


def from_json_obj(obj) -> AmbiguitySet:
    try:
        kind = obj["kind"]
        if kind == "simplex":
            return Simplex(int(obj["n"]))
        if kind == "box":
            return Box(obj["l"], obj["u"], bool(obj.get("clipped", False)))
        if kind == "ellipsoid":
            return Ellipsoid(obj["p0"], obj["sigma"], float(obj["r"]))
    except (KeyError, TypeError) as exc:
        raise ParseError(f"malformed ambiguity set: missing or invalid {exc}") from None
    raise ParseError(f"unknown ambiguity kind {kind!r}")


# ---------------------------------------------------------------------------
# aggregation
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class AggregationMatrix:
    """K x N 0/1 matrix with ``A[j, i] = 1`` iff atom ``i`` belongs to cluster ``j``."""

    matrix: np.ndarray

    def __post_init__(self):
        A = np.array(self.matrix, dtype=float)
        if A.ndim != 2:
            raise DimensionMismatch("aggregation matrix must be two-dimensional")
        if not np.all((A == 0) | (A == 1)) or not np.all(A.sum(axis=0) == 1):
            raise ValidationError("every column of an aggregation matrix must hold exactly one 1")
        empty = np.flatnonzero(A.sum(axis=1) == 0)
        if empty.size:
            raise RankDeficient(f"cluster {int(empty[0])} has no atoms; aggregation matrix is rank deficient")
        A.setflags(write=False)
        object.__setattr__(self, "matrix", A)

    @classmethod
    def from_assignment(cls, assignment, K=None):
        assignment = np.asarray(assignment, dtype=int)
        K = int(assignment.max()) + 1 if K is None else int(K)
        if np.any(assignment < 0) or np.any(assignment >= K):
            raise ValidationError(f"assignment entries must lie in [0, {K})")
        A = np.zeros((K, assignment.size))
        A[assignment, np.arange(assignment.size)] = 1.0
        return cls(A)

    @property
    def shape(self):
        return self.matrix.shape

    def assignment(self):
        return np.argmax(self.matrix, axis=0)


def _as_aggregation(A):
    return A if isinstance(A, AggregationMatrix) else AggregationMatrix(A)


def project(aset: AmbiguitySet, A) -> AmbiguitySet:
    """Image of ``aset`` under ``p -> A p``."""
    A = _as_aggregation(A)
    K, N = A.shape
    if N != aset.n:
        raise DimensionMismatch(f"aggregation matrix has {N} columns but the set has {aset.n} atoms")
    M = A.matrix
    if isinstance(aset, Simplex):
        return Simplex(K)
    if isinstance(aset, Box):
        return Box(np.clip(M @ aset.l, 0, 1), np.clip(M @ aset.u, 0, 1), aset.clipped)
    if isinstance(aset, Ellipsoid):
        sigma = M @ aset.sigma @ M.T
        try:
            return Ellipsoid(M @ aset.p0, sigma, aset.r)
        except ValidationError as exc:
            raise RankDeficient(f"projected covariance is not positive definite: {exc}") from exc
    raise TypeError(f"unsupported ambiguity set {type(aset).__name__}")


# ---------------------------------------------------------------------------
# confidence boxes from samples
# ---------------------------------------------------------------------------

def normal_upper_quantile(q):
    """``z`` with ``P(Z > z) = q`` for a standard normal ``Z``."""
    return NormalDist().inv_cdf(1.0 - q)


def half_width(n_samples, delta):
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta!r}")
    return normal_upper_quantile(delta / 2) / (2.0 * math.sqrt(n_samples))


def from_samples(p_hat, n_samples, delta) -> AmbiguitySet:
    """Confidence box ``p_hat +- z_{delta/2} / (2 sqrt(N))`` clipped to ``[0, 1]``.

    With no samples at all the whole simplex is returned.
    """
    if not (0.0 < delta < 1.0):
        raise InvalidDelta(f"delta must lie in (0, 1), got {delta!r}")
    p_hat = np.asarray(p_hat, dtype=float).ravel()
    if p_hat.size == 0 or np.any(p_hat < 0) or not _on_simplex_plane(p_hat, SUM_TOL):
        raise ValidationError("empirical distribution must be a nonnegative vector summing to 1")
    if int(n_samples) < 0:
        raise ValidationError(f"sample count must be nonnegative, got {n_samples!r}")
    if int(n_samples) == 0:
        return Simplex(p_hat.size)
    h = half_width(int(n_samples), delta)
    lo, hi = p_hat - h, p_hat + h
    clipped = bool(np.any(lo < 0) or np.any(hi > 1))
    return Box(np.clip(lo, 0, 1), np.clip(hi, 0, 1), clipped)


def empirical_distribution(draws, n_atoms):
    """Relative frequencies of integer atom indices."""
    draws = np.asarray(draws, dtype=int)
    if draws.size == 0:
        return np.full(n_atoms, 1.0 / n_atoms)
    return np.bincount(draws, minlength=n_atoms) / draws.size


# ---------------------------------------------------------------------------
# worst-case expectation
# ---------------------------------------------------------------------------

def _box_worst_case(aset: Box, f):
    n = aset.n
    prog = LinearProgram(f, np.ones((1, n)), [EQ], [1.0], aset.l, aset.u, maximize=True)
    sol = solve_lp(prog)
    if not sol.optimal:
        raise InfeasibleBox(f"box has no probability vector (LP status {sol.status.value})")
    return float(sol.objective), sol.x


def projected_covariance(sigma):
    """``sigma - sigma 1 1^T sigma / (1^T sigma 1)``: the shape restricted to ``sum(d) == 0``."""
    s1 = sigma @ np.ones(sigma.shape[0])
    return sigma - np.outer(s1, s1) / float(np.sum(s1))


def _ellipsoid_worst_case(aset: Ellipsoid, f):
    S = projected_covariance(aset.sigma)
    Sf = S @ f
    q = float(f @ Sf)
    if q <= 1e-14 * linalg.scale_of(aset.sigma) * max(1.0, float(f @ f)):
        return float(f @ aset.p0), aset.p0.copy()
    p = aset.p0 + aset.r * Sf / math.sqrt(q)
    excess = max(float(np.max(-p)), float(np.max(p - 1)))
    if excess > BOUNDS_TOL:
        raise BoundsViolated(f"ellipsoid maximizer leaves [0, 1] by {excess:.3g}; the set is not inside the simplex")
    return float(f @ aset.p0) + aset.r * math.sqrt(q), p


def worst_case_expectation(aset: AmbiguitySet, f):
    """``max_{p in aset} f @ p`` and a maximizing ``p``."""
    f = np.asarray(f, dtype=float).ravel()
    if f.size != aset.n:
        raise DimensionMismatch(f"{f.size} values for a set over {aset.n} atoms")
    if isinstance(aset, Simplex):
        k = int(np.argmax(f))
        p = np.zeros(aset.n)
        p[k] = 1.0
        return float(f[k]), p
    if isinstance(aset, Box):
        return _box_worst_case(aset, f)
    if isinstance(aset, Ellipsoid):
        return _ellipsoid_worst_case(aset, f)
    raise TypeError(f"unsupported ambiguity set {type(aset).__name__}")
