"""Scenario sets (positive cost vectors or SPD matrices), synthetic generators and file I/O."""
from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from . import linalg
from .errors import InvalidSpec, NonSymmetric, ParseError, ValidationError

RNG_ALGORITHM = "numpy.random.PCG64"
PERTURBATION_MODE = "componentwise-independent uniform"


def make_rng(seed):
    return np.random.Generator(np.random.PCG64(seed))


@dataclass(frozen=True)
class Violation:
    scenario: int
    component: int
    value: float

    def __str__(self):
        return f"scenario {self.scenario}, component {self.component}: {self.value!r} is not strictly positive"


def validate(scenarios) -> Optional[Violation]:
    """Return the first non-positive (or non-finite) entry, or ``None`` if all entries are > 0."""
    values = scenarios.values if isinstance(scenarios, ScenarioSet) else np.asarray(scenarios, dtype=float)
    values = np.atleast_2d(values)
    bad = ~(values > 0) | ~np.isfinite(values)
    if not bad.any():
        return None
    i, k = np.argwhere(bad)[0]
    return Violation(int(i), int(k), float(values[i, k]))


@dataclass(frozen=True, eq=False)
class ScenarioSet:
    """A finite set of strictly positive scenario vectors, one per row of ``values``."""

    values: np.ndarray
    labels: Optional[tuple] = None

    def __post_init__(self):
        values = np.array(self.values, dtype=float)
        if values.ndim == 1:
            values = values[:, None]
        if values.ndim != 2 or values.shape[0] == 0 or values.shape[1] == 0:
            raise ValidationError(f"a scenario set needs at least one scenario of positive dimension, got shape {values.shape}")
        violation = validate(values)
        if violation is not None:
            raise ValidationError(str(violation))
        values.setflags(write=False)
        object.__setattr__(self, "values", values)
        if self.labels is not None:
            labels = tuple(str(lbl) for lbl in self.labels)
            if len(labels) != values.shape[0]:
                raise ValidationError(f"{len(labels)} labels for {values.shape[0]} scenarios")
            object.__setattr__(self, "labels", labels)

    @property
    def dimension(self):
        return self.values.shape[1]

    def __len__(self):
        return self.values.shape[0]

    def __getitem__(self, i):
        return self.values[i]

    def lower(self):
        return self.values.min(axis=0)

    def upper(self):
        return self.values.max(axis=0)

    def scale_axis(self, axis, c):
        values = self.values.copy()
        values[:, axis] *= c
        return ScenarioSet(values, self.labels)

    def __eq__(self, other):
        return (
            isinstance(other, ScenarioSet)
            and self.values.shape == other.values.shape
            and bool(np.all(self.values == other.values))
            and self.labels == other.labels
        )


@dataclass(frozen=True, eq=False)
class MatrixScenarioSet:
    """A finite set of symmetric positive definite ``n x n`` scenario matrices."""

    matrices: np.ndarray
    _extremes: np.ndarray = field(default=None, repr=False)

    def __post_init__(self):
        mats = np.array(self.matrices, dtype=float)
        if mats.ndim == 2:
            mats = mats[None]
        if mats.ndim != 3 or mats.shape[0] == 0 or mats.shape[1] != mats.shape[2]:
            raise ValidationError(f"expected a stack of square matrices, got shape {mats.shape}")
        extremes = np.empty((mats.shape[0], 2))
        for i, Q in enumerate(mats):
            try:
                lam = linalg.eigvals(Q)
            except NonSymmetric as exc:
                raise ValidationError(f"scenario {i}: {exc}") from exc
            if not lam[0] > 1e-12 * max(lam[-1], 0.0) or lam[0] <= 0:
                raise ValidationError(f"scenario {i} is not positive definite (smallest eigenvalue {lam[0]!r})")
            extremes[i] = lam[0], lam[-1]
            mats[i] = 0.5 * (Q + Q.T)
        mats.setflags(write=False)
        extremes.setflags(write=False)
        object.__setattr__(self, "matrices", mats)
        object.__setattr__(self, "_extremes", extremes)

    @property
    def dimension(self):
        return self.matrices.shape[1]

    def __len__(self):
        return self.matrices.shape[0]

    def __getitem__(self, i):
        return self.matrices[i]

    @property
    def lambda_min(self):
        return self._extremes[:, 0]

    @property
    def lambda_max(self):
        return self._extremes[:, 1]

    def conjugate(self, U):
        U = np.asarray(U, dtype=float)
        return MatrixScenarioSet(np.einsum("ji,njk,kl->nil", U, self.matrices, U))

    def __eq__(self, other):
        return (
            isinstance(other, MatrixScenarioSet)
            and self.matrices.shape == other.matrices.shape
            and bool(np.all(self.matrices == other.matrices))
        )


@dataclass(frozen=True)
class PerturbationSpec:
    base: Sequence[float]
    s_inc: float
    count: int
    seed: int = 0

    def check(self):
        base = np.asarray(self.base, dtype=float).ravel()
        if base.size == 0 or validate(base[None]) is not None:
            raise InvalidSpec("base vector must be non-empty and strictly positive")
        if not (0.0 <= self.s_inc < 1.0):
            raise InvalidSpec(f"s_inc must lie in [0, 1), got {self.s_inc}")
        if int(self.count) < 1:
            raise InvalidSpec(f"scenario count must be at least 1, got {self.count}")
        return base


def generate_perturbed(spec: PerturbationSpec) -> ScenarioSet:
    """Draw ``count`` scenarios with each component uniform on ``[(1-s_inc) base_k, (1+s_inc) base_k]``."""
    base = spec.check()
    rng = make_rng(spec.seed)
    factors = rng.uniform(1.0 - spec.s_inc, 1.0 + spec.s_inc, size=(int(spec.count), base.size))
    return ScenarioSet(base * factors)


def generate_covariance_scenarios(n_assets, count, seed=0, periods=None, spread=0.5):
    """Synthetic yearly covariance matrices of ``n_assets`` correlated assets.

    A common one-factor covariance is drawn first; each scenario is the sample
    covariance of ``periods`` returns drawn with a scenario-specific volatility
    level in ``[1 - spread, 1 + spread]`` times the base.
    """
    rng = make_rng(seed)
    periods = periods or max(4 * n_assets, 50)
    loadings = rng.uniform(0.5, 1.5, size=n_assets)
    idio = rng.uniform(0.5, 1.5, size=n_assets)
    base = 0.02 * (np.outer(loadings, loadings) + np.diag(idio))
    chol = np.linalg.cholesky(base)
    mats = []
    for _ in range(int(count)):
        level = rng.uniform(1.0 - spread, 1.0 + spread)
        returns = rng.standard_normal((periods, n_assets)) @ chol.T * math.sqrt(level)
        mats.append(np.cov(returns, rowvar=False).reshape(n_assets, n_assets))
    return MatrixScenarioSet(np.array(mats))


# ---------------------------------------------------------------------------
# file I/O
# ---------------------------------------------------------------------------

def _fmt(x):
    return repr(float(x))


def dumps_csv(scenarios: ScenarioSet) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\r\n")
    header = [f"s_{k}" for k in range(scenarios.dimension)]
    if scenarios.labels is not None:
        header = ["label"] + header
    writer.writerow(header)
    for i, row in enumerate(scenarios.values):
        cells = [_fmt(v) for v in row]
        if scenarios.labels is not None:
            cells = [scenarios.labels[i]] + cells
        writer.writerow(cells)
    return buf.getvalue()


def loads_csv(text: str) -> ScenarioSet:
    rows = list(csv.reader(io.StringIO(text)))
    rows = [(lineno, r) for lineno, r in enumerate(rows, start=1) if r and any(c.strip() for c in r)]
    if not rows:
        raise ParseError("empty CSV file", line=1)
    _, header = rows[0]
    header = [h.strip() for h in header]
    has_labels = header[0] == "label"
    value_cols = header[1:] if has_labels else header
    expected = [f"s_{k}" for k in range(len(value_cols))]
    if value_cols != expected or not value_cols:
        raise ParseError(f"header must be {','.join(['label'] if has_labels else []) + ','.join(expected) or 's_0,...'}", line=1)
    values, labels = [], []
    for lineno, row in rows[1:]:
        if len(row) != len(header):
            raise ParseError(f"expected {len(header)} fields, found {len(row)}", line=lineno, column=min(len(row), len(header)) + 1)
        cells = row[1:] if has_labels else row
        if has_labels:
            labels.append(row[0])
        parsed = []
        for col, cell in enumerate(cells, start=2 if has_labels else 1):
            try:
                parsed.append(float(cell))
            except ValueError:
                raise ParseError(f"cannot parse {cell!r} as a number", line=lineno, column=col) from None
        values.append(parsed)
    if not values:
        raise ParseError("no scenario rows", line=2)
    violation = validate(values)
    if violation is not None:
        raise ValidationError(str(violation))
    return ScenarioSet(np.array(values), tuple(labels) if has_labels else None)


def to_json_obj(scenarios):
    if isinstance(scenarios, MatrixScenarioSet):
        return {"kind": "matrices", "dimension": scenarios.dimension, "scenarios": scenarios.matrices.tolist()}
    obj = {"kind": "vectors", "dimension": scenarios.dimension, "scenarios": scenarios.values.tolist()}
    if scenarios.labels is not None:
        obj["labels"] = list(scenarios.labels)
    return obj


def from_json_obj(obj):
    if isinstance(obj, list):
        data, kind, labels = obj, None, None
    elif isinstance(obj, dict) and "scenarios" in obj:
        data, kind, labels = obj["scenarios"], obj.get("kind"), obj.get("labels")
    else:
        raise ParseError("JSON scenario file must be a list or an object with a 'scenarios' key")
    try:
        arr = np.array(data, dtype=float)
    except (ValueError, TypeError) as exc:
        raise ParseError(f"ragged or non-numeric scenario data: {exc}") from None
    if kind is None:
        kind = "matrices" if arr.ndim == 3 else "vectors"
    if kind == "matrices":
        if arr.ndim != 3:
            raise ParseError("matrix scenarios must be a list of n x n arrays")
        return MatrixScenarioSet(arr)
    if kind == "vectors":
        if arr.ndim != 2:
            raise ParseError("vector scenarios must be a list of equal-length rows")
        return ScenarioSet(arr, labels)
    raise ParseError(f"unknown scenario kind {kind!r}")


def loads_json(text):
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(exc.msg, line=exc.lineno, column=exc.colno) from None
    return from_json_obj(obj)


def dumps_json(scenarios) -> str:
    return json.dumps(to_json_obj(scenarios), indent=1) + "\n"


def _format_of(path, fmt):
    fmt = fmt or Path(path).suffix.lstrip(".").lower()
    if fmt not in ("csv", "json"):
        raise ParseError(f"cannot infer format from {str(path)!r}; use a .csv or .json file")
    return fmt


def load(path, fmt=None):
    fmt = _format_of(path, fmt)
    text = Path(path).read_text(encoding="utf-8")
    return loads_csv(text) if fmt == "csv" else loads_json(text)


def save(scenarios, path, fmt=None):
    fmt = _format_of(path, fmt)
    if fmt == "csv":
        if isinstance(scenarios, MatrixScenarioSet):
            raise ValueError("matrix scenarios can only be stored as JSON")
        # newline="" keeps the RFC-4180 CRLF terminators intact
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(dumps_csv(scenarios))
    else:
        Path(path).write_text(dumps_json(scenarios), encoding="utf-8")
