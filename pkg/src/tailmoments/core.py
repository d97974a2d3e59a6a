"""Shared domain types, validation, and simplex geometry used by every other module.

All component indices are 1-based in user-facing interfaces (constructors,
CLI, files) and converted to 0-based numpy indices exactly once, at the
boundary of each operation.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Sequence

import numpy as np

#: absolute tolerance for weight normalization and matrix symmetry checks
WEIGHT_TOL = 1e-12
SYM_TOL = 1e-12
#: tolerance for the estimate * inverse_estimate == 1 report invariant
REPORT_TOL = 1e-9


# ---------------------------------------------------------------------------
# errors
# ---------------------------------------------------------------------------

class EstimationError(Exception):
    """Base class for all errors raised by this package."""


class NegativeWeight(EstimationError):
    """A raw weight on the support is negative."""


class ZeroSum(EstimationError):
    """Raw weights sum to zero, so they cannot be normalized."""


class SupportViolation(EstimationError):
    """A weight is non-zero outside the declared support."""


class NonPositiveAlpha(EstimationError):
    """The tail index must be strictly positive."""


class NonPositiveScale(EstimationError):
    """Every marginal scale must be strictly positive."""


class KOutOfRange(EstimationError):
    """The order-statistic level k must satisfy 1 <= k <= n (and k < n where required)."""


class NoExceedances(EstimationError):
    """No observation exceeds the threshold, so a ratio denominator is zero."""


class EpsOutOfRange(EstimationError):
    """The difference-quotient step must lie in (0, 1)."""


class NonSymmetric(EstimationError):
    """A quadratic-form matrix is not symmetric."""


class NotStandardized(EstimationError):
    """The spectral measure does not have tail-equivalent (standardized) margins."""


class DegenerateDirection(EstimationError):
    """The measure puts no mass in the requested direction (E[l_I] = 0)."""


class ParamOutOfRange(EstimationError):
    """A model parameter lies outside its admissible range."""


# ---------------------------------------------------------------------------
# small array helpers
# ---------------------------------------------------------------------------

def _as_float_array(values, name: str, ndim: int) -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != ndim:
        raise ValueError(f"{name} must be {ndim}-dimensional, got shape {arr.shape}")
    return arr


def _freeze(arr: np.ndarray) -> np.ndarray:
    out = np.array(arr, dtype=float, copy=True)
    out.flags.writeable = False
    return out


# ---------------------------------------------------------------------------
# index sets and data matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class IndexSet:
    """A non-empty set of 1-based component indices, kept sorted and unique."""

    members: tuple[int, ...]

    def __init__(self, members: Sequence[int]):
        mem = tuple(int(m) for m in members)
        if len(mem) == 0:
            raise ValueError("index set must be non-empty")
        if any(m < 1 for m in mem):
            raise ValueError("component indices are 1-based and must be >= 1")
        if len(set(mem)) != len(mem):
            raise ValueError("component indices must be unique")
        if tuple(sorted(mem)) != mem:
            raise ValueError("component indices must be strictly increasing")
        object.__setattr__(self, "members", mem)

    @property
    def size(self) -> int:
        return len(self.members)

    def zero_based(self) -> np.ndarray:
        """Numpy indexer (0-based) for the members."""
        return np.asarray(self.members, dtype=int) - 1

    def check_within(self, d: int) -> None:
        if self.members[-1] > d:
            raise ValueError(f"index {self.members[-1]} out of range for dimension {d}")

    def __iter__(self):
        return iter(self.members)

    def __contains__(self, item) -> bool:
        return item in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True)
class DataMatrix:
    """Raw n x d non-negative observation matrix; rows are i.i.d. samples."""

    values: np.ndarray

    def __init__(self, values):
        arr = _as_float_array(values, "values", 2)
        if arr.shape[0] < 1 or arr.shape[1] < 1:
            raise ValueError("data matrix must have at least one row and one column")
        if not np.all(np.isfinite(arr)):
            raise ValueError("data matrix entries must be finite")
        if np.any(arr < 0):
            raise ValueError("data matrix entries must be non-negative")
        object.__setattr__(self, "values", _freeze(arr))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


@dataclass(frozen=True)
class StandardizedMatrix:
    """Margin-standardized observations with the transformation metadata recorded."""

    values: np.ndarray
    alpha: float
    scales: np.ndarray

    def __init__(self, values, alpha: float, scales):
        arr = _as_float_array(values, "values", 2)
        if not np.all(np.isfinite(arr)) or np.any(arr < 0):
            raise ValueError("standardized entries must be finite and non-negative")
        alpha = float(alpha)
        if alpha <= 0:
            raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
        sc = _as_float_array(scales, "scales", 1)
        if sc.shape[0] != arr.shape[1]:
            raise ValueError("one scale per column is required")
        if np.any(sc <= 0):
            raise NonPositiveScale("all scales must be positive")
        object.__setattr__(self, "values", _freeze(arr))
        object.__setattr__(self, "alpha", alpha)
        object.__setattr__(self, "scales", _freeze(sc))

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def d(self) -> int:
        return self.values.shape[1]


# ---------------------------------------------------------------------------
# weight vectors on the simplex
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WeightVector:
    """Convex-combination weights on the unit simplex, supported inside an index set.

    ``weights`` always has full length d; entries outside ``support`` are
    exactly zero and the entries sum to one within ``WEIGHT_TOL``.
    """

    weights: np.ndarray
    support: IndexSet

    def __init__(self, weights, support: IndexSet):
        w = _as_float_array(weights, "weights", 1)
        support.check_within(w.shape[0])
        outside = np.ones(w.shape[0], dtype=bool)
        outside[support.zero_based()] = False
        if np.any(w[outside] != 0.0):
            raise SupportViolation("weights must be exactly zero outside the support")
        if np.any(w < 0):
            raise NegativeWeight("weights must be non-negative")
        if abs(float(w.sum()) - 1.0) > WEIGHT_TOL:
            raise ValueError(f"weights must sum to 1 within {WEIGHT_TOL}")
        object.__setattr__(self, "weights", _freeze(w))
        object.__setattr__(self, "support", support)

    @property
    def d(self) -> int:
        return self.weights.shape[0]

    def on_support(self) -> np.ndarray:
        """The weights restricted to the support, in support order."""
        return self.weights[self.support.zero_based()]


def make_weight_vector(raw, support: IndexSet) -> WeightVector:
    """Normalize raw non-negative weights into a :class:`WeightVector`.

    Parameters
    ----------
    raw : sequence of float
        Full-length (d) weights, non-negative on the support and exactly zero
        elsewhere.
    support : IndexSet
        1-based indices the weights may live on.

    Returns
    -------
    WeightVector
        ``raw`` rescaled to sum to one, with the support recorded.

    Raises
    ------
    SupportViolation
        If any entry outside the support is non-zero.
    NegativeWeight
        If any entry on the support is negative.
    ZeroSum
        If the entries sum to zero (nothing to normalize).
    """
    w = _as_float_array(raw, "raw", 1)
    support.check_within(w.shape[0])
    outside = np.ones(w.shape[0], dtype=bool)
    outside[support.zero_based()] = False
    if np.any(w[outside] != 0.0):
        raise SupportViolation("raw weight outside the support is non-zero")
    if np.any(w < 0):
        raise NegativeWeight("raw weights must be non-negative")
    total = float(w.sum())
    if total <= 0.0:
        raise ZeroSum("raw weights sum to zero")
    return WeightVector(w / total, support)


def uniform_weights(support: IndexSet, d: int) -> WeightVector:
    """The barycenter of the simplex face spanned by ``support``."""
    w = np.zeros(d)
    w[support.zero_based()] = 1.0 / support.size
    return WeightVector(w, support)


def basis_weights(support: IndexSet, d: int, j: int) -> WeightVector:
    """The standard basis vector 1_{j} as a weight vector (j must lie in support)."""
    if j not in support:
        raise ValueError(f"index {j} is not in the support {support.members}")
    w = np.zeros(d)
    w[j - 1] = 1.0
    return WeightVector(w, support)


# ---------------------------------------------------------------------------
# perturbations of the threshold geometry
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Perturbation:
    """A componentwise scale factor s (supported on an index set) and a power beta.

    ``delta`` records the admissible band: every scale on the index set and
    beta itself lie in [(1+delta)^-1, 1+delta].
    """

    s: np.ndarray
    beta: float
    delta: float
    index_set: IndexSet

    def __init__(self, s, beta: float, index_set: IndexSet, delta: float | None = None):
        arr = _as_float_array(s, "s", 1)
        index_set.check_within(arr.shape[0])
        idx = index_set.zero_based()
        outside = np.ones(arr.shape[0], dtype=bool)
        outside[idx] = False
        if np.any(arr[outside] != 0.0):
            raise ValueError("perturbation scales must be zero outside the index set")
        if np.any(arr[idx] <= 0.0) or not np.all(np.isfinite(arr)):
            raise ValueError("perturbation scales must be positive and finite on the index set")
        beta = float(beta)
        if beta <= 0:
            raise ValueError("beta must be positive")
        on = arr[idx]
        minimal = max(
            float(np.max(on)) - 1.0,
            1.0 / float(np.min(on)) - 1.0,
            beta - 1.0,
            1.0 / beta - 1.0,
            0.0,
        )
        if delta is None:
            delta = minimal
        else:
            delta = float(delta)
            if delta < minimal - 1e-15:
                raise ValueError("declared delta does not cover the scales/beta")
        object.__setattr__(self, "s", _freeze(arr))
        object.__setattr__(self, "beta", beta)
        object.__setattr__(self, "delta", delta)
        object.__setattr__(self, "index_set", index_set)

    @classmethod
    def indicator(cls, index_set: IndexSet, d: int, beta: float = 1.0) -> "Perturbation":
        """The unperturbed scaling 1_I (ones on the index set, zero elsewhere)."""
        s = np.zeros(d)
        s[index_set.zero_based()] = 1.0
        return cls(s, beta, index_set)

    @classmethod
    def scaled(cls, index_set: IndexSet, d: int, scales, beta: float = 1.0) -> "Perturbation":
        """An arbitrary positive scaling on the index set."""
        s = np.zeros(d)
        s[index_set.zero_based()] = np.asarray(scales, dtype=float)
        return cls(s, beta, index_set)


# ---------------------------------------------------------------------------
# quadratic forms and estimate reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadraticForm:
    """A symmetric |I| x |I| matrix representing v -> v^T A v restricted to an index set."""

    index_set: IndexSet
    matrix: np.ndarray
    meta: Mapping[str, object] = field(default_factory=dict)

    def __init__(self, index_set: IndexSet, matrix, meta: Mapping[str, object] | None = None):
        mat = _as_float_array(matrix, "matrix", 2)
        m = index_set.size
        if mat.shape != (m, m):
            raise ValueError(f"matrix must be {m}x{m} for this index set, got {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise ValueError("matrix entries must be finite")
        if np.max(np.abs(mat - mat.T), initial=0.0) > SYM_TOL:
            raise NonSymmetric("quadratic-form matrix is not symmetric")
        # exact symmetry for downstream eigensolves
        mat = 0.5 * (mat + mat.T)
        object.__setattr__(self, "index_set", index_set)
        object.__setattr__(self, "matrix", _freeze(mat))
        object.__setattr__(self, "meta", dict(meta) if meta else {})

    def evaluate(self, v) -> float:
        """v^T A v for a WeightVector, a full-length vector, or an |I|-vector."""
        if isinstance(v, WeightVector):
            x = v.on_support()
        else:
            x = np.asarray(v, dtype=float)
            if x.shape[0] != self.index_set.size:
                x = x[self.index_set.zero_based()]
        return float(x @ self.matrix @ x)


@dataclass(frozen=True)
class EstimateReport:
    """A single estimate with its reciprocal, a plug-in standard error, and context."""

    estimate: float
    exceedance_count: int
    method: str
    parameters: Mapping[str, object] = field(default_factory=dict)
    inverse_estimate: float | None = None
    std_error: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "estimate", float(self.estimate))
        object.__setattr__(self, "exceedance_count", int(self.exceedance_count))
        if self.exceedance_count < 0:
            raise ValueError("exceedance_count must be non-negative")
        if self.std_error is not None:
            object.__setattr__(self, "std_error", float(self.std_error))
            if self.std_error < 0:
                raise ValueError("std_error must be non-negative")
        if self.inverse_estimate is not None:
            object.__setattr__(self, "inverse_estimate", float(self.inverse_estimate))
            if self.estimate > 0 and abs(self.estimate * self.inverse_estimate - 1.0) > REPORT_TOL:
                raise ValueError("inverse_estimate must be the reciprocal of estimate")
        object.__setattr__(self, "parameters", dict(self.parameters))

    def to_dict(self) -> dict:
        return {
            "estimate": self.estimate,
            "inverse_estimate": self.inverse_estimate,
            "std_error": self.std_error,
            "exceedance_count": self.exceedance_count,
            "method": self.method,
            "parameters": _plain(self.parameters),
        }


def _plain(obj):
    """Recursively convert numpy scalars/arrays to built-in types for JSON output."""
    if isinstance(obj, dict):
        return {k: _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()]
    if isinstance(obj, (np.floating, np.integer)):
        return obj.item()
    if isinstance(obj, IndexSet):
        return list(obj.members)
    return obj


def check_moment_power(p) -> int:
    """Validate a moment power: must be a non-negative integer; returns it as int."""
    if p != int(p):
        raise ValueError(f"the moment power p must be a non-negative integer, got {p}")
    p = int(p)
    if p < 0:
        raise ValueError(f"the moment power p must be non-negative, got {p}")
    return p


def matrix_values(data) -> np.ndarray:
    """Extract the (n, d) float array from a DataMatrix, StandardizedMatrix, or array-like."""
    if isinstance(data, (DataMatrix, StandardizedMatrix)):
        return data.values
    return _as_float_array(data, "data", 2)


# ---------------------------------------------------------------------------
# the partial max functional
# ---------------------------------------------------------------------------

def partial_max(x, index_set: IndexSet):
    """Maximum of the coordinates of ``x`` over the index set.

    Accepts a single d-vector (returns a float) or an (n, d) matrix
    (returns the per-row maxima as an n-vector).
    """
    arr = np.asarray(x, dtype=float)
    idx = index_set.zero_based()
    if arr.ndim == 1:
        index_set.check_within(arr.shape[0])
        return float(np.max(arr[idx]))
    if arr.ndim == 2:
        index_set.check_within(arr.shape[1])
        return np.max(arr[:, idx], axis=1)
    raise ValueError("x must be a vector or a matrix")
