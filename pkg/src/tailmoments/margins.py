"""Marginal standardization and tail-index estimation.

Two routes to comparable margins are provided: an exact power/scale transform
when the tail index and scales are known, and a rank-based route built on
per-column upper order statistics together with a Hill-type estimator of the
reciprocal tail index.
"""

from __future__ import annotations

import numpy as np

from .core import (
    DataMatrix,
    EstimateReport,
    EstimationError,
    IndexSet,
    KOutOfRange,
    NoExceedances,
    NonPositiveAlpha,
    NonPositiveScale,
    StandardizedMatrix,
    matrix_values,
    partial_max,
)


def standardize_known(data, alpha: float, scales) -> StandardizedMatrix:
    """Transform each entry x to x**alpha / scale_column.

    The power is applied first, then the division, so the resulting columns
    are tail-equivalent with unit scale when ``scales`` are the true
    column scales of ``data**alpha``.

    Parameters
    ----------
    data : DataMatrix or (n, d) array-like
        Non-negative observations.
    alpha : float
        Common tail index of the margins; must be positive.
    scales : (d,) array-like
        Positive per-column scale constants.
    """
    x = matrix_values(data)
    alpha = float(alpha)
    if alpha <= 0:
        raise NonPositiveAlpha(f"alpha must be positive, got {alpha}")
    sc = np.asarray(scales, dtype=float)
    if sc.ndim != 1 or sc.shape[0] != x.shape[1]:
        raise ValueError("scales must be a vector with one entry per column")
    if np.any(sc <= 0):
        raise NonPositiveScale("all scales must be positive")
    return StandardizedMatrix(np.power(x, alpha) / sc, alpha, sc)


def upper_order_statistics(x, k: int):
    """The k-th largest value (position k of the descending sort, ties kept by multiplicity).

    For a vector, returns a float.  For an (n, d) matrix, returns the
    per-column k-th largest values as a d-vector.

    Raises
    ------
    KOutOfRange
        If k < 1 or k > n.
    """
    arr = np.asarray(x, dtype=float)
    k = int(k)
    if arr.ndim == 1:
        n = arr.shape[0]
        if k < 1 or k > n:
            raise KOutOfRange(f"k={k} must satisfy 1 <= k <= {n}")
        return float(np.sort(arr)[n - k])
    if arr.ndim == 2:
        n = arr.shape[0]
        if k < 1 or k > n:
            raise KOutOfRange(f"k={k} must satisfy 1 <= k <= {n}")
        return np.sort(arr, axis=0)[n - k, :]
    raise ValueError("x must be a vector or a matrix")


def scaled_by_order_statistics(data, k: int, index_set: IndexSet) -> np.ndarray:
    """Each column of ``data`` (restricted to the index set) divided by its own k-th largest value.

    Returns the full-width matrix with the columns outside the index set set
    to zero, so downstream partial maxima over the index set are unaffected.
    """
    x = matrix_values(data)
    index_set.check_within(x.shape[1])
    idx = index_set.zero_based()
    anchors = upper_order_statistics(x[:, idx], k)
    if np.any(anchors <= 0):
        raise EstimationError(
            "a k-th upper order statistic is zero; the ratio data are undefined"
        )
    out = np.zeros_like(x)
    out[:, idx] = x[:, idx] / anchors
    return out


def hill_inverse_alpha(data, k: int, index_set: IndexSet) -> EstimateReport:
    """Hill-type estimate of 1/alpha from exceedances of the partial max of rank-scaled data.

    Each column in the index set is divided by its own k-th largest value;
    an observation is an exceedance when the maximum of these ratios over
    the index set is above one.  The estimate is the mean log-excess among
    exceedances:

        (1/n) * sum log(max ratio) * 1{max ratio > 1}  /  (fraction of exceedances)

    The reported ``inverse_estimate`` is the tail index alpha itself, and the
    standard error is 1 / (alpha_hat * sqrt(count)).

    Raises
    ------
    NoExceedances
        If no maximum ratio is strictly above one (e.g. a constant column).
    """
    x = matrix_values(data)
    n = x.shape[0]
    ratios = scaled_by_order_statistics(x, k, index_set)
    ell = partial_max(ratios, index_set)  # (n,)
    exceeds = ell > 1.0
    count = int(np.count_nonzero(exceeds))
    if count == 0:
        raise NoExceedances("no partial maximum exceeds its order-statistic threshold")
    mean_log = float(np.sum(np.log(ell[exceeds]))) / n
    fraction = count / n
    inv_alpha = mean_log / fraction
    alpha_hat = 1.0 / inv_alpha
    return EstimateReport(
        estimate=inv_alpha,
        inverse_estimate=alpha_hat,
        std_error=1.0 / (alpha_hat * np.sqrt(count)),
        exceedance_count=count,
        method="hill",
        parameters={"k": int(k), "index_set": index_set, "n": n},
    )
