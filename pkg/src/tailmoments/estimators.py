"""Tail moment functionals and ratio estimators of extremal dependence.

The central object is the empirical tail moment

    M(v, s, beta, p) = (1/n) * sum_l  (v' a_l)^p * 1{ ||s o X_l|| > u },

where ``o`` is the componentwise product, ``|| . ||`` the maximum over the
index set, and ``a_l`` the angular part of ``(s o X_l)^(1/beta)``.  Dividing
by the exceedance fraction (the ``p = 0`` case) gives ratio estimators whose
limits are moments of the renormalized spectral vector; with unit weights and
no perturbation the ratio estimates the reciprocal extremal coefficient.

Both margin conventions are covered: thresholding standardized data at a
level ``u`` (known margins), and thresholding each column by its own k-th
largest value (rank-based, self-normalizing).
"""

from __future__ import annotations

import numpy as np

from .core import (
    EstimateReport,
    IndexSet,
    NoExceedances,
    Perturbation,
    WeightVector,
    check_moment_power as _check_power,
    matrix_values,
    partial_max,
)
from .margins import hill_inverse_alpha, scaled_by_order_statistics


def _check_threshold(u) -> float:
    u = float(u)
    if not np.isfinite(u) or u < 0:
        raise ValueError(f"threshold u must be finite and non-negative, got {u}")
    return u


def _angular_parts(x: np.ndarray, perturbation: Perturbation, u: float):
    """Exceedance mask and angular parts of the perturbed, exceeding rows.

    Returns ``(mask, angular)`` where ``mask`` flags rows whose perturbed
    partial max is above ``u`` (rows that are identically zero on the index
    set never qualify), and ``angular`` holds, for those rows only, the
    rescaled power ``(s o x)^(1/beta)`` divided by its own partial max.
    """
    index_set = perturbation.index_set
    scaled = x * perturbation.s  # zero outside the index set
    norms = partial_max(scaled, index_set)
    mask = (norms > u) & (norms > 0.0)
    powered = np.power(scaled[mask], 1.0 / perturbation.beta)
    peaks = partial_max(powered, index_set)
    angular = powered / peaks[:, None]
    return mask, angular


def moment_mean(data, u: float, v: WeightVector, p: int = 1,
                perturbation: Perturbation | None = None) -> float:
    """The empirical tail moment M(v, s, beta, p) at threshold u (mean over all n rows).

    Parameters
    ----------
    data : StandardizedMatrix, DataMatrix or (n, d) array-like
        Non-negative observations with comparable margins.
    u : float
        Threshold applied to the partial max of the perturbed row.
    v : WeightVector
        Simplex weights; their support fixes the index set when no
        perturbation is given.
    p : int
        Non-negative integer moment power; ``p = 0`` counts exceedances.
    perturbation : Perturbation, optional
        Componentwise scales (applied before thresholding and powering) and
        the power ``beta``; defaults to the identity on the support of ``v``.

    Notes
    -----
    Rows whose perturbed partial max is zero contribute nothing, and an empty
    exceedance set gives 0 rather than an error.
    """
    x = matrix_values(data)
    p = _check_power(p)
    u = _check_threshold(u)
    if perturbation is None:
        perturbation = Perturbation.indicator(v.support, x.shape[1])
    perturbation.index_set.check_within(x.shape[1])
    mask, angular = _angular_parts(x, perturbation, u)
    if not np.any(mask):
        return 0.0
    if p == 0:
        return float(np.count_nonzero(mask)) / x.shape[0]
    contributions = (angular @ v.weights) ** p
    return float(np.sum(contributions)) / x.shape[0]


def exceedance_fraction(data, u: float, index_set: IndexSet,
                        perturbation: Perturbation | None = None) -> float:
    """Fraction of rows whose perturbed partial max over the index set exceeds u."""
    x = matrix_values(data)
    u = _check_threshold(u)
    if perturbation is None:
        perturbation = Perturbation.indicator(index_set, x.shape[1])
    perturbation.index_set.check_within(x.shape[1])
    scaled = x * perturbation.s
    norms = partial_max(scaled, perturbation.index_set)
    return float(np.count_nonzero((norms > u) & (norms > 0.0))) / x.shape[0]


def _ratio_report(x: np.ndarray, u: float, v: WeightVector, p: int,
                  perturbation: Perturbation, method: str,
                  parameters: dict) -> EstimateReport:
    """Shared exceedance-conditional moment with the spectral plug-in standard error."""
    mask, angular = _angular_parts(x, perturbation, u)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise NoExceedances(f"no partial maximum exceeds the threshold u={u}")
    projected = angular @ v.weights
    powered = projected ** p if p != 1 else projected
    estimate = float(np.mean(powered)) if p > 0 else 1.0
    # 1/tau plug-in from the first moment at the same weights; variance of the
    # p-th power over the exceedances
    inv_tau = float(np.mean(projected))
    variance = float(np.mean(powered ** 2)) - estimate ** 2
    std_error = float(np.sqrt(max(inv_tau * variance, 0.0) / count))
    return EstimateReport(
        estimate=estimate,
        inverse_estimate=(1.0 / estimate) if estimate > 0 else None,
        std_error=std_error,
        exceedance_count=count,
        method=method,
        parameters=parameters,
    )


def moment_ratio_known(data, u: float, v: WeightVector, p: int = 1,
                       perturbation: Perturbation | None = None) -> EstimateReport:
    """Moment of the angular parts conditional on an exceedance, for standardized data.

    The estimate is ``moment_mean / exceedance_fraction``; with ``p = 1`` and
    simplex weights it converges to the reciprocal extremal coefficient of
    the support of ``v``, for any such ``v``.  The standard error is the
    plug-in ``sqrt(inv_tau_hat * var_hat / count)`` where both factors are
    empirical moments over the exceedances.

    Raises
    ------
    NoExceedances
        If no row exceeds the threshold.
    """
    x = matrix_values(data)
    p = _check_power(p)
    u = _check_threshold(u)
    if perturbation is None:
        perturbation = Perturbation.indicator(v.support, x.shape[1])
    perturbation.index_set.check_within(x.shape[1])
    parameters = {"u": u, "p": p, "weights": v.weights,
                  "index_set": perturbation.index_set, "beta": perturbation.beta}
    return _ratio_report(x, u, v, p, perturbation, "moment_known", parameters)


def benchmark_ratio_known(data, u: float, v: WeightVector) -> EstimateReport:
    """Ratio of two exceedance counts: weighted-sum exceedances over partial-max exceedances.

    ``#{ v'X_l > u } / #{ max_I X_l > u }`` estimates the reciprocal extremal
    coefficient of the support of ``v`` without using angular parts at all.
    The estimate always lies in [0, 1] because ``v'x <= max_I x`` for simplex
    weights, and its standard error is the binomial plug-in
    ``sqrt(est * (1 - est) / count)``.
    """
    x = matrix_values(data)
    u = _check_threshold(u)
    index_set = v.support
    index_set.check_within(x.shape[1])
    denominator = int(np.count_nonzero(partial_max(x, index_set) > u))
    if denominator == 0:
        raise NoExceedances(f"no partial maximum exceeds the threshold u={u}")
    numerator = int(np.count_nonzero(x @ v.weights > u))
    estimate = numerator / denominator
    return EstimateReport(
        estimate=estimate,
        inverse_estimate=(1.0 / estimate) if estimate > 0 else None,
        std_error=float(np.sqrt(estimate * (1.0 - estimate) / denominator)),
        exceedance_count=denominator,
        method="benchmark",
        parameters={"u": u, "weights": v.weights, "index_set": index_set},
    )


# ---------------------------------------------------------------------------
# rank-based (self-normalized) versions
# ---------------------------------------------------------------------------

def _resolve_inv_alpha(data, k: int, index_set: IndexSet,
                       inv_alpha_hat: float | None) -> float:
    if inv_alpha_hat is None:
        return hill_inverse_alpha(data, k, index_set).estimate
    inv_alpha_hat = float(inv_alpha_hat)
    if inv_alpha_hat <= 0:
        raise ValueError(f"inv_alpha_hat must be positive, got {inv_alpha_hat}")
    return inv_alpha_hat


def rank_angular_parts(data, k: int, index_set: IndexSet,
                       inv_alpha_hat: float | None = None):
    """Exceedance mask and powered angular parts of the rank-scaled data.

    Each column in the index set is divided by its own k-th largest value;
    a row is an exceedance when its partial max ratio is strictly above one.
    Exceeding rows are normalized by that partial max and raised entrywise
    to the estimated tail index (the reciprocal of ``inv_alpha_hat``, which
    is estimated by the Hill routine on the same rows when absent).

    Returns
    -------
    mask : (n,) bool array
    angular : (count, d) array, zero outside the index set
    inv_alpha : float
        The reciprocal tail index actually used.
    """
    x = matrix_values(data)
    inv_alpha = _resolve_inv_alpha(x, k, index_set, inv_alpha_hat)
    ratios = scaled_by_order_statistics(x, k, index_set)
    ell = partial_max(ratios, index_set)
    mask = ell > 1.0
    angular = np.power(ratios[mask] / ell[mask, None], 1.0 / inv_alpha)
    return mask, angular, inv_alpha


def moment_ratio_ranks(data, k: int, v: WeightVector, p: int = 1,
                       inv_alpha_hat: float | None = None) -> EstimateReport:
    """Rank-based analogue of :func:`moment_ratio_known`.

    Thresholding at the k-th largest value of each column replaces both the
    margin standardization and the choice of ``u``; the angular parts are
    raised to the estimated tail index so the estimate is invariant under
    increasing marginal transformations up to the index estimate.  No
    closed-form standard error is reported here; the optimally weighted
    version carries one.
    """
    x = matrix_values(data)
    p = _check_power(p)
    index_set = v.support
    index_set.check_within(x.shape[1])
    mask, angular, inv_alpha = rank_angular_parts(x, k, index_set, inv_alpha_hat)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise NoExceedances("no partial maximum exceeds its order-statistic threshold")
    estimate = float(np.mean((angular @ v.weights) ** p)) if p > 0 else 1.0
    return EstimateReport(
        estimate=estimate,
        inverse_estimate=(1.0 / estimate) if estimate > 0 else None,
        std_error=None,
        exceedance_count=count,
        method="moment_ranks",
        parameters={"k": int(k), "p": p, "weights": v.weights,
                    "index_set": index_set, "inv_alpha_hat": inv_alpha},
    )


def stable_tail_estimate(data, k: int, index_set: IndexSet,
                         eps: float | None = None) -> EstimateReport:
    """Nonparametric extremal coefficient: (n/k) times the rank exceedance fraction.

    The estimate is the empirical stable tail dependence function at the
    indicator of the index set, so it targets the extremal coefficient
    itself (between 1 and the set size) rather than its reciprocal.

    Parameters
    ----------
    eps : float, optional
        When given, a difference-quotient step used to estimate the gradient
        of the stable tail dependence function, from which the plug-in
        standard error ``sqrt(sigma2 / (tau^4 * k))`` is assembled; when
        absent the standard error is omitted.
    """
    x = matrix_values(data)
    n = x.shape[0]
    ratios = scaled_by_order_statistics(x, k, index_set)
    ell = partial_max(ratios, index_set)
    count = int(np.count_nonzero(ell > 1.0))
    estimate = (n / k) * (count / n)
    std_error = None
    if eps is not None and estimate > 0:
        from .weights import stable_tail_variance  # deferred: weights imports this module

        sigma2 = stable_tail_variance(x, k, index_set, eps)
        std_error = float(np.sqrt(max(sigma2, 0.0) / (estimate ** 4 * k)))
    return EstimateReport(
        estimate=estimate,
        inverse_estimate=(1.0 / estimate) if estimate > 0 else None,
        std_error=std_error,
        exceedance_count=count,
        method="stdf",
        parameters={"k": int(k), "index_set": index_set, "n": n,
                    **({"eps": float(eps)} if eps is not None else {})},
    )
