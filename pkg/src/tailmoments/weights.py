"""Optimal weight selection and plug-in variance forms for the ratio estimators.

With known margins the asymptotic variance of the weighted ratio is (up to
centering) the quadratic form of the spectral second-moment matrix, so the
best weights solve a small quadratic program over the unit simplex.  In the
rank-based setting the variance picks up correction terms driven by
derivatives of perturbed tail moments with respect to componentwise scales
and to the power; those derivatives are estimated by central difference
quotients and assembled into an explicit symmetric matrix, after which the
same simplex program applies.
"""

from __future__ import annotations

import itertools

import numpy as np

from .core import (
    EpsOutOfRange,
    EstimateReport,
    IndexSet,
    NoExceedances,
    QuadraticForm,
    WeightVector,
    matrix_values,
    partial_max,
)
from .estimators import (
    _resolve_inv_alpha,
    moment_ratio_known,
    moment_ratio_ranks,
)
from .margins import scaled_by_order_statistics


# ---------------------------------------------------------------------------
# quadratic minimization over the simplex
# ---------------------------------------------------------------------------

def _project_to_simplex(y: np.ndarray) -> np.ndarray:
    """Euclidean projection onto {w >= 0, sum w = 1} (sort-based)."""
    u = np.sort(y)[::-1]
    cumulative = np.cumsum(u)
    candidates = u + (1.0 - cumulative) / np.arange(1, y.size + 1)
    rho = np.nonzero(candidates > 0)[0][-1]
    shift = (1.0 - cumulative[rho]) / (rho + 1)
    return np.maximum(y + shift, 0.0)


def _projected_gradient(a: np.ndarray, iterations: int = 10_000) -> np.ndarray:
    norm = np.linalg.norm(a, 2)
    if norm == 0.0:
        return np.full(a.shape[0], 1.0 / a.shape[0])
    step = 1.0 / (2.0 * norm)
    w = np.full(a.shape[0], 1.0 / a.shape[0])
    for _ in range(iterations):
        w = _project_to_simplex(w - step * 2.0 * (a @ w))
    return w


def _kkt_candidates(a: np.ndarray) -> list[np.ndarray]:
    """Stationary points of v'Av on every face of the simplex, plus all vertices.

    Vertices are kept unconditionally; larger faces contribute their
    least-norm stationary point when it has non-negative coordinates and
    non-negative multipliers on the inactive coordinates.
    """
    m = a.shape[0]
    scale = 1.0 + float(np.max(np.abs(a)))
    # exact candidates first: the barycenter, and for two components the
    # interior stationary point in closed form.  Both are computed without a
    # linear solve, so symmetric ties resolve to bit-exact weights.
    candidates = [np.full(m, 1.0 / m)]
    if m == 2:
        denom = a[0, 0] + a[1, 1] - 2.0 * a[0, 1]
        if denom > 0.0:
            w1 = (a[1, 1] - a[0, 1]) / denom
            if 0.0 <= w1 <= 1.0:
                candidates.append(np.array([w1, 1.0 - w1]))
    candidates += [np.eye(m)[i] for i in range(m)]
    for bits in range(1, 2 ** m):
        face = np.flatnonzero([(bits >> t) & 1 for t in range(m)])
        f = face.size
        if f < 2:
            continue
        system = np.zeros((f + 1, f + 1))
        system[:f, :f] = 2.0 * a[np.ix_(face, face)]
        system[:f, f] = -1.0
        system[f, :f] = 1.0
        rhs = np.zeros(f + 1)
        rhs[f] = 1.0
        solution, *_ = np.linalg.lstsq(system, rhs, rcond=None)
        if np.max(np.abs(system @ solution - rhs)) > 1e-9 * scale:
            continue  # no stationary point on this face
        w_face, lam = solution[:f], solution[f]
        if np.min(w_face) < -1e-12:
            continue
        w = np.zeros(m)
        w[face] = np.clip(w_face, 0.0, None)
        w /= w.sum()
        outside = np.setdiff1d(np.arange(m), face, assume_unique=True)
        if outside.size:
            multipliers = 2.0 * (a @ w)[outside] - lam
            if np.min(multipliers) < -1e-10 * scale:
                continue
        candidates.append(w)
    return candidates


def minimize_quadratic_on_simplex(form: QuadraticForm, d: int | None = None
                                  ) -> tuple[WeightVector, float]:
    """Minimize v'Av over simplex weights supported on the form's index set.

    Up to 20 active components the faces of the simplex are enumerated
    exactly; beyond that a projected-gradient descent is used.  Ties between
    candidate values are broken by the smaller Euclidean norm, then by
    enumeration order (vertices in index order come first, so an all-vertex
    tie returns the lowest-index vertex).

    Returns
    -------
    (WeightVector, float)
        The minimizing weights, embedded into dimension ``d`` (by default
        the largest member of the index set), and the attained value.
    """
    a = form.matrix
    m = a.shape[0]
    index_set = form.index_set
    if d is None:
        d = index_set.members[-1]
    index_set.check_within(d)
    if m <= 20:
        candidates = _kkt_candidates(a)
    else:
        candidates = ([np.full(m, 1.0 / m)] + [np.eye(m)[i] for i in range(m)]
                      + [_projected_gradient(a)])

    best_w, best_value, best_norm = None, np.inf, np.inf
    value_tol = 1e-12 * (1.0 + float(np.max(np.abs(a))))
    for w in candidates:
        value = float(w @ a @ w)
        norm = float(np.linalg.norm(w))
        if value < best_value - value_tol:
            best_w, best_value, best_norm = w, value, norm
        elif value <= best_value + value_tol and norm < best_norm - 1e-12:
            best_w, best_value, best_norm = w, value, norm

    full = np.zeros(d)
    full[index_set.zero_based()] = best_w
    return WeightVector(full, index_set), best_value


# ---------------------------------------------------------------------------
# known-margin second moments and optimal weights
# ---------------------------------------------------------------------------

def second_moment_matrix_known(data, u: float, index_set: IndexSet) -> QuadraticForm:
    """Mean outer product of the angular parts over exceedances of the partial max.

    The (i, j) entry estimates the renormalized spectral moment
    ``E[Theta_i * Theta_j]``; the quadratic form at simplex weights v is then
    exactly the conditional second moment of ``v' Theta``.
    """
    x = matrix_values(data)
    index_set.check_within(x.shape[1])
    idx = index_set.zero_based()
    norms = partial_max(x, index_set)
    mask = (norms > float(u)) & (norms > 0.0)
    count = int(np.count_nonzero(mask))
    if count == 0:
        raise NoExceedances(f"no partial maximum exceeds the threshold u={u}")
    theta = x[np.ix_(mask, idx)] / norms[mask, None]
    matrix = (theta.T @ theta) / count
    return QuadraticForm(index_set, matrix, meta={"u": float(u), "count": count})


def optimal_weights_known(data, u: float, index_set: IndexSet
                          ) -> tuple[WeightVector, float]:
    """Weights minimizing the empirical second moment of v'Theta over exceedances."""
    x = matrix_values(data)
    form = second_moment_matrix_known(x, u, index_set)
    return minimize_quadratic_on_simplex(form, d=x.shape[1])


def tau_moment_known(data, u: float, index_set: IndexSet) -> EstimateReport:
    """Optimally weighted moment-ratio estimate of the reciprocal extremal coefficient.

    The weights are re-estimated from the same exceedances (the minimizer of
    the empirical second-moment form), then plugged into the first-moment
    ratio.  The reported standard error is the plug-in from the weighted
    ratio at those weights.
    """
    x = matrix_values(data)
    v_star, objective = optimal_weights_known(x, u, index_set)
    base = moment_ratio_known(x, u, v_star, p=1)
    return EstimateReport(
        estimate=base.estimate,
        inverse_estimate=base.inverse_estimate,
        std_error=base.std_error,
        exceedance_count=base.exceedance_count,
        method="mk",
        parameters={"u": float(u), "weights": v_star.weights,
                    "index_set": index_set, "objective": objective},
    )


# ---------------------------------------------------------------------------
# rank-based pipeline with perturbations
# ---------------------------------------------------------------------------

def _check_eps(eps, k: int, n: int) -> float:
    if eps is None:
        eps = k / n
    eps = float(eps)
    if not 0.0 < eps < 1.0:
        raise EpsOutOfRange(f"difference-quotient step must lie in (0, 1), got {eps}")
    return eps


class _RankPipeline:
    """Rank-scaled columns on an index set, cached for repeated perturbed ratios.

    Every evaluation returns the vector of basis ratios ``R(1_j)`` (the mean
    over exceedances of the j-th powered angular coordinate), from which the
    ratio at any weight vector follows by linearity.
    """

    def __init__(self, x: np.ndarray, k: int, index_set: IndexSet,
                 inv_alpha_hat: float | None = None):
        self.k = int(k)
        self.n = x.shape[0]
        self.index_set = index_set
        self.ratios = scaled_by_order_statistics(x, k, index_set)[:, index_set.zero_based()]
        self.inv_alpha = _resolve_inv_alpha(x, k, index_set, inv_alpha_hat)

    def basis_means(self, scales: np.ndarray | None = None,
                    exponent: float | None = None) -> tuple[np.ndarray, int]:
        """Basis ratios under an optional scale perturbation or power override.

        ``scales`` multiplies the rank-scaled columns before both the
        indicator and the angular normalization; ``exponent`` replaces the
        default tail-index power on the angular parts (the indicator is
        never affected by the power).
        """
        y = self.ratios if scales is None else self.ratios * scales
        ell = y.max(axis=1)
        mask = ell > 1.0
        count = int(np.count_nonzero(mask))
        if count == 0:
            raise NoExceedances("no partial maximum exceeds its order-statistic threshold")
        power = (1.0 / self.inv_alpha) if exponent is None else exponent
        angular = np.power(y[mask] / ell[mask, None], power)
        return angular.mean(axis=0), count

    def angular_parts(self) -> np.ndarray:
        """Unperturbed powered angular parts of the exceedances, (count, m)."""
        ell = self.ratios.max(axis=1)
        mask = ell > 1.0
        if not np.any(mask):
            raise NoExceedances("no partial maximum exceeds its order-statistic threshold")
        return np.power(self.ratios[mask] / ell[mask, None], 1.0 / self.inv_alpha)


def scale_quotient(data, k: int, v: WeightVector, i: int,
                   eps: float | None = None,
                   inv_alpha_hat: float | None = None) -> float:
    """Central difference quotient of the rank moment ratio in the i-th scale.

    Both evaluations perturb the rank-scaled data by ``1 +/- eps`` in
    component ``i`` before the indicator, the normalization, and the
    weighting, so the quotient estimates the derivative of the perturbed
    tail moment ratio with respect to that componentwise scale.  The step
    defaults to ``k / n``.
    """
    x = matrix_values(data)
    index_set = v.support
    if i not in index_set:
        raise ValueError(f"component {i} is not in the index set {index_set.members}")
    eps = _check_eps(eps, k, x.shape[0])
    pipeline = _RankPipeline(x, k, index_set, inv_alpha_hat)
    bump = np.zeros(index_set.size)
    bump[index_set.members.index(i)] = eps
    plus, _ = pipeline.basis_means(scales=1.0 + bump)
    minus, _ = pipeline.basis_means(scales=1.0 - bump)
    v_on = v.on_support()
    return float((plus - minus) @ v_on) / (2.0 * eps)


def power_quotient(data, k: int, v: WeightVector,
                   eps: float | None = None,
                   inv_alpha_hat: float | None = None) -> float:
    """Central difference quotient of the rank moment ratio in the power direction.

    The two evaluations divide the angular exponent by ``1 + eps`` and
    ``1 - eps`` while leaving the exceedance set untouched, estimating the
    derivative with respect to the power parameter at one.
    """
    x = matrix_values(data)
    index_set = v.support
    eps = _check_eps(eps, k, x.shape[0])
    pipeline = _RankPipeline(x, k, index_set, inv_alpha_hat)
    alpha_hat = 1.0 / pipeline.inv_alpha
    upper, _ = pipeline.basis_means(exponent=alpha_hat / (1.0 + eps))
    lower, _ = pipeline.basis_means(exponent=alpha_hat / (1.0 - eps))
    v_on = v.on_support()
    return float((upper - lower) @ v_on) / (2.0 * eps)


def _polarized_second_moment(angular: np.ndarray) -> np.ndarray:
    """Second-moment matrix from p = 2 ratios: direct diagonal, polarized off-diagonal."""
    m = angular.shape[1]

    def second(w):
        projected = angular @ w
        return float(np.mean(projected * projected))

    matrix = np.zeros((m, m))
    diagonal = [second(np.eye(m)[i]) for i in range(m)]
    for i in range(m):
        matrix[i, i] = diagonal[i]
    for i, j in itertools.combinations(range(m), 2):
        mixed = second(0.5 * (np.eye(m)[i] + np.eye(m)[j]))
        matrix[i, j] = matrix[j, i] = 2.0 * mixed - 0.5 * (diagonal[i] + diagonal[j])
    return matrix


def second_moment_matrix_ranks(data, k: int, index_set: IndexSet,
                               inv_alpha_hat: float | None = None) -> QuadraticForm:
    """Rank-based spectral second-moment matrix via polarization of p = 2 ratios."""
    x = matrix_values(data)
    index_set.check_within(x.shape[1])
    pipeline = _RankPipeline(x, k, index_set, inv_alpha_hat)
    angular = pipeline.angular_parts()
    matrix = _polarized_second_moment(angular)
    return QuadraticForm(index_set, matrix,
                         meta={"k": int(k), "inv_alpha_hat": pipeline.inv_alpha,
                               "count": angular.shape[0]})


def _pair_reciprocal_tau(x: np.ndarray, k: int, i: int, j: int,
                         inv_alpha_hat: float | None) -> float:
    """Extremal coefficient of the pair {i, j} from its own rank pipeline."""
    pair = IndexSet((i, j)) if i < j else IndexSet((j, i))
    pipeline = _RankPipeline(x, k, pair, inv_alpha_hat)
    means, _ = pipeline.basis_means()
    return 1.0 / float(np.mean(means))


def rank_variance_form(data, k: int, index_set: IndexSet,
                       eps: float | None = None,
                       inv_alpha_hat: float | None = None) -> QuadraticForm:
    """Plug-in asymptotic-variance form of the rank-based weighted moment ratio.

    All ingredients come from the same rank pipeline at level ``k``: the
    extremal coefficient from the uniform-weight ratio, pairwise extremal
    coefficients from two-component pipelines (each with its own tail-index
    estimate unless one is supplied), spectral second moments by
    polarization, and the scale/power derivative matrices by central
    difference quotients with step ``eps`` (default ``k / n``).  The
    returned quadratic form evaluates, at simplex weights v, the estimated
    variance of the limiting Gaussian of the ratio — the objective whose
    simplex minimizer gives the optimally weighted rank estimator.
    """
    x = matrix_values(data)
    index_set.check_within(x.shape[1])
    members = index_set.members
    m = index_set.size
    eps = _check_eps(eps, k, x.shape[0])
    pipeline = _RankPipeline(x, k, index_set, inv_alpha_hat)

    base_means, count = pipeline.basis_means()
    tau = 1.0 / float(np.mean(base_means))

    # pairwise extremal coefficients (tau of a singleton is identically one)
    pair_taus = np.ones((m, m))
    for a, b in itertools.combinations(range(m), 2):
        if m == 2:
            pair_taus[a, b] = pair_taus[b, a] = tau
        else:
            value = _pair_reciprocal_tau(x, k, members[a], members[b], inv_alpha_hat)
            pair_taus[a, b] = pair_taus[b, a] = value

    second_moments = _polarized_second_moment(pipeline.angular_parts())

    # scale derivatives: row i holds the quotients of all basis ratios in
    # the direction of the i-th component's scale
    c_matrix = np.zeros((m, m))
    for pos in range(m):
        bump = np.zeros(m)
        bump[pos] = eps
        plus, _ = pipeline.basis_means(scales=1.0 + bump)
        minus, _ = pipeline.basis_means(scales=1.0 - bump)
        c_matrix[pos] = (plus - minus) / (2.0 * eps)

    alpha_hat = 1.0 / pipeline.inv_alpha
    upper, _ = pipeline.basis_means(exponent=alpha_hat / (1.0 + eps))
    lower, _ = pipeline.basis_means(exponent=alpha_hat / (1.0 - eps))
    b = (upper - lower) / (2.0 * eps)

    matrix = _assemble_variance_matrix(tau, pair_taus, second_moments, c_matrix, b)
    meta = {
        "tau": tau,
        "pair_taus": pair_taus,
        "eps": eps,
        "inv_alpha_hat": pipeline.inv_alpha,
        "k": int(k),
        "exceedance_count": count,
        "condition_number": _condition_number(matrix),
    }
    return QuadraticForm(index_set, matrix, meta=meta)


def _condition_number(matrix: np.ndarray) -> float:
    if not np.any(matrix):
        return float("inf")
    return float(np.linalg.cond(matrix))


def _assemble_variance_matrix(tau: float, pair_taus: np.ndarray,
                              second_moments: np.ndarray, c_matrix: np.ndarray,
                              b: np.ndarray) -> np.ndarray:
    """Exact quadratic-form assembly of the rank ratio's limiting variance.

    Writing E for the second-moment matrix, C for the scale-derivative
    matrix (C[i, j] the i-th scale derivative at basis weights j), b for the
    power derivatives at basis weights, and using that the centered moment
    matrix is ``E - J / tau^2`` on the simplex, the five variance
    contributions collapse to

        A = (1/tau) Ebar - (C' Ebar + Ebar C) + C' D C
            - (b m' + m b') + (1/tau) b b',

    with ``Ebar = E - J / tau^2``, ``D[i, j] = 2 - tau_{ij}`` (tau times the
    pairwise minimum moments), and ``m = C' b``.
    """
    m = b.shape[0]
    ones = np.ones((m, m))
    centered = second_moments - ones / tau ** 2
    d_matrix = 2.0 - pair_taus
    mixed = c_matrix.T @ b
    matrix = (
        centered / tau
        - (c_matrix.T @ centered + centered @ c_matrix)
        + c_matrix.T @ d_matrix @ c_matrix
        - (np.outer(b, mixed) + np.outer(mixed, b))
        + np.outer(b, b) / tau
    )
    return 0.5 * (matrix + matrix.T)


def tau_moment_ranks(data, k: int, index_set: IndexSet,
                     eps: float | None = None,
                     inv_alpha_hat: float | None = None) -> EstimateReport:
    """Optimally weighted rank-based estimate of the reciprocal extremal coefficient.

    The plug-in variance form is minimized over the simplex, the first-moment
    rank ratio is evaluated at the minimizing weights (with the same
    tail-index estimate), and the attained objective yields the standard
    error ``sqrt(objective / k)``.
    """
    x = matrix_values(data)
    form = rank_variance_form(x, k, index_set, eps=eps, inv_alpha_hat=inv_alpha_hat)
    v_tilde, objective = minimize_quadratic_on_simplex(form, d=x.shape[1])
    base = moment_ratio_ranks(x, k, v_tilde, p=1,
                              inv_alpha_hat=form.meta["inv_alpha_hat"])
    return EstimateReport(
        estimate=base.estimate,
        inverse_estimate=base.inverse_estimate,
        std_error=float(np.sqrt(max(objective, 0.0) / k)),
        exceedance_count=base.exceedance_count,
        method="mu",
        parameters={"k": int(k), "eps": form.meta["eps"],
                    "inv_alpha_hat": form.meta["inv_alpha_hat"],
                    "weights": v_tilde.weights, "index_set": index_set,
                    "objective": objective},
    )


def stable_tail_variance(data, k: int, index_set: IndexSet, eps: float) -> float:
    """Plug-in variance of the empirical extremal coefficient at the indicator.

    Combines difference-quotient estimates of the gradient of the perturbed
    exceedance functional with pairwise minimum moments obtained from
    two-component exceedance counts at the same level k.
    """
    x = matrix_values(data)
    index_set.check_within(x.shape[1])
    n = x.shape[0]
    m = index_set.size
    eps = _check_eps(eps, k, n)
    idx = index_set.zero_based()
    ratios = scaled_by_order_statistics(x, k, index_set)[:, idx]
    count = int(np.count_nonzero(ratios.max(axis=1) > 1.0))
    if count == 0:
        raise NoExceedances("no partial maximum exceeds its order-statistic threshold")
    tau_hat = count / k

    # gradient of the mean partial max of the renormalized spectral vector,
    # recovered from the diagonal scale quotients
    pipeline = _RankPipeline(x, k, index_set, None)
    partial_e = np.zeros(m)
    for pos in range(m):
        bump = np.zeros(m)
        bump[pos] = eps
        plus, _ = pipeline.basis_means(scales=1.0 + bump)
        minus, _ = pipeline.basis_means(scales=1.0 - bump)
        c_diag = float((plus[pos] - minus[pos]) / (2.0 * eps))
        partial_e[pos] = 1.0 - tau_hat * c_diag

    # pairwise minimum moments from pair exceedance counts at the same k
    minimum = np.zeros((m, m))
    for a in range(m):
        minimum[a, a] = 1.0 / tau_hat
    for a, b in itertools.combinations(range(m), 2):
        pair_count = int(np.count_nonzero(np.maximum(ratios[:, a], ratios[:, b]) > 1.0))
        pair_tau = pair_count / k
        minimum[a, b] = minimum[b, a] = 2.0 / tau_hat - pair_tau / tau_hat

    return float(tau_hat ** 3 * (partial_e @ minimum @ partial_e) - tau_hat)
