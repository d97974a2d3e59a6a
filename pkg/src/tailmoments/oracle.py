"""Population quantities of discrete spectral measures.

A finite spectral measure (atoms on the positive orthant, sup-norm one,
with probabilities) determines every limit targeted by the estimators:
extremal coefficients, renormalized moments, perturbed tail moments and
their derivatives, optimal weights, and the asymptotic variances of the
four estimation strategies.  Everything here is computed by exact atom
enumeration so the results can serve as ground truth in tests and as the
theoretical column of simulation reports.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import (
    DegenerateDirection,
    EstimationError,
    IndexSet,
    NotStandardized,
    Perturbation,
    QuadraticForm,
    WeightVector,
    check_moment_power,
    partial_max,
)
from .weights import (
    _assemble_variance_matrix,
    _condition_number,
    minimize_quadratic_on_simplex,
)

#: tolerance for the standardized-margins precondition (equal atom means)
STANDARDIZED_TOL = 1e-9
#: atoms within this distance of the partial max count as attaining it
ARGMAX_TOL = 1e-8


@dataclass(frozen=True)
class DiscreteSpectralMeasure:
    """Finitely supported spectral measure: atoms (rows) with probabilities.

    ``normalized_on`` records the index set over which every atom's partial
    max equals one — ``None`` means the full coordinate set (the plain
    sup-norm normalization of a base spectral measure).  Atoms and
    probabilities are exactly renormalized by the constructor after a
    tolerance check, so downstream identities hold to machine precision.
    """

    atoms: np.ndarray
    probs: np.ndarray
    normalized_on: IndexSet | None = None

    def __init__(self, atoms, probs, normalized_on: IndexSet | None = None):
        atoms = np.asarray(atoms, dtype=float)
        if atoms.ndim != 2:
            raise ValueError("atoms must be a 2-dimensional array (one atom per row)")
        probs = np.asarray(probs, dtype=float)
        if probs.ndim != 1 or probs.shape[0] != atoms.shape[0]:
            raise ValueError("probs must assign one probability to each atom")
        if not np.all(np.isfinite(atoms)) or np.any(atoms < 0):
            raise ValueError("atoms must be finite and non-negative")
        if np.any(probs <= 0):
            raise ValueError("atom probabilities must be strictly positive")
        if abs(float(probs.sum()) - 1.0) > 1e-12:
            raise ValueError("atom probabilities must sum to 1 within 1e-12")
        norm_set = normalized_on if normalized_on is not None else IndexSet(
            range(1, atoms.shape[1] + 1))
        norm_set.check_within(atoms.shape[1])
        peaks = partial_max(atoms, norm_set)
        if np.any(np.abs(peaks - 1.0) > STANDARDIZED_TOL):
            raise ValueError(
                "every atom must have partial max 1 (within 1e-9) over the "
                "normalization set")
        atoms = atoms / peaks[:, None]
        probs = probs / probs.sum()
        atoms.flags.writeable = False
        probs.flags.writeable = False
        object.__setattr__(self, "atoms", atoms)
        object.__setattr__(self, "probs", probs)
        object.__setattr__(self, "normalized_on", normalized_on)

    @property
    def d(self) -> int:
        return self.atoms.shape[1]

    @property
    def size(self) -> int:
        return self.atoms.shape[0]

    def is_base(self) -> bool:
        """True when normalized over the full coordinate set (sup-norm one)."""
        return (self.normalized_on is None
                or self.normalized_on.members == tuple(range(1, self.d + 1)))

    def merged(self, tol: float = 1e-12) -> "DiscreteSpectralMeasure":
        """Combine atoms that coincide within ``tol``, summing their probabilities."""
        order = np.lexsort(self.atoms.T[::-1])
        atoms = self.atoms[order]
        probs = self.probs[order]
        kept_atoms = [atoms[0]]
        kept_probs = [probs[0]]
        for row, weight in zip(atoms[1:], probs[1:]):
            if np.max(np.abs(row - kept_atoms[-1])) <= tol:
                kept_probs[-1] += weight
            else:
                kept_atoms.append(row)
                kept_probs.append(weight)
        return DiscreteSpectralMeasure(np.array(kept_atoms), np.array(kept_probs),
                                       self.normalized_on)

    def to_dict(self) -> dict:
        payload = {"atoms": self.atoms.tolist(), "probs": self.probs.tolist()}
        if self.normalized_on is not None:
            payload["normalized_on"] = list(self.normalized_on.members)
        return payload

    @classmethod
    def from_dict(cls, payload: dict) -> "DiscreteSpectralMeasure":
        normalized_on = payload.get("normalized_on")
        return cls(payload["atoms"], payload["probs"],
                   IndexSet(normalized_on) if normalized_on else None)


def _weights_on(index_set: IndexSet, v, d: int) -> np.ndarray:
    """Coerce a WeightVector / full-length vector / |I|-vector to I coordinates."""
    if isinstance(v, WeightVector):
        return v.on_support() if v.support.members == index_set.members \
            else v.weights[index_set.zero_based()]
    arr = np.asarray(v, dtype=float)
    if arr.shape[0] == index_set.size:
        return arr
    if arr.shape[0] == d:
        return arr[index_set.zero_based()]
    raise ValueError(
        f"weights must have length {index_set.size} or {d}, got {arr.shape[0]}")


def mean_intensity(measure: DiscreteSpectralMeasure) -> np.ndarray:
    """E[Theta_i] for every coordinate, under the measure as given."""
    return measure.atoms.T @ measure.probs


def _base_tau(measure: DiscreteSpectralMeasure) -> float:
    """Reciprocal mean coordinate of a standardized base measure."""
    if not measure.is_base():
        raise NotStandardized(
            "a base (sup-norm normalized) spectral measure is required")
    means = mean_intensity(measure)
    if float(means.max() - means.min()) > STANDARDIZED_TOL:
        raise NotStandardized(
            "margins are not tail-equivalent: coordinate means of the spectral "
            f"vector differ by {means.max() - means.min():.3g}")
    return 1.0 / float(means.mean())


def extremal_coefficient(measure: DiscreteSpectralMeasure,
                         index_set: IndexSet) -> float:
    """The extremal coefficient of the index set, between 1 and its size.

    Requires a standardized base measure; equals the reciprocal mean
    coordinate times the mean partial max over the index set.
    """
    index_set.check_within(measure.d)
    tau = _base_tau(measure)
    mass = float(measure.probs @ partial_max(measure.atoms, index_set))
    if mass <= 0.0:
        raise DegenerateDirection(
            f"the measure puts no mass on the index set {index_set.members}")
    return tau * mass


def renormalized_measure(measure: DiscreteSpectralMeasure,
                         index_set: IndexSet) -> DiscreteSpectralMeasure:
    """Change of measure to partial-max-one atoms over the index set.

    Atoms are divided by their partial max over the set and reweighted
    proportionally to it; atoms with zero partial max disappear.  The result
    is the spectral measure "seen from" extremes of the index set.
    """
    index_set.check_within(measure.d)
    if (measure.normalized_on is not None
            and measure.normalized_on.members == index_set.members):
        return measure
    peaks = partial_max(measure.atoms, index_set)
    keep = peaks > 0.0
    if not np.any(keep):
        raise DegenerateDirection(
            f"the measure puts no mass on the index set {index_set.members}")
    atoms = measure.atoms[keep] / peaks[keep, None]
    probs = measure.probs[keep] * peaks[keep]
    return DiscreteSpectralMeasure(atoms, probs / probs.sum(), index_set)


def spectral_moment(measure: DiscreteSpectralMeasure, index_set: IndexSet,
                    v, p: int = 1) -> float:
    """E[(v' Theta)^p] under the measure renormalized on the index set."""
    p = check_moment_power(p)
    mu = renormalized_measure(measure, index_set)
    weights = _weights_on(index_set, v, mu.d)
    projected = mu.atoms[:, index_set.zero_based()] @ weights
    return float(mu.probs @ projected ** p)


def spectral_second_moment(measure: DiscreteSpectralMeasure,
                           index_set: IndexSet) -> np.ndarray:
    """The matrix E[Theta_i Theta_j] over the index set, renormalized on it."""
    mu = renormalized_measure(measure, index_set)
    theta = mu.atoms[:, index_set.zero_based()]
    return theta.T @ (mu.probs[:, None] * theta)


def pair_product_moment(measure: DiscreteSpectralMeasure, index_set: IndexSet,
                        i: int, j: int) -> float:
    """E[Theta_i Theta_j] on the index set, cross-checked against the pair identity.

    When the index set is exactly {i, j} and the input is a standardized base
    measure, the product moment must equal ``2 / tau_ij - 1`` (one of the two
    renormalized coordinates is always one), and a violation is reported as
    an internal error.
    """
    if i not in index_set or j not in index_set:
        raise ValueError(f"components {i}, {j} must lie in {index_set.members}")
    mu = renormalized_measure(measure, index_set)
    value = float(mu.probs @ (mu.atoms[:, i - 1] * mu.atoms[:, j - 1]))
    if i != j and set(index_set.members) == {i, j}:
        try:
            tau_pair = extremal_coefficient(measure, index_set)
        except NotStandardized:
            tau_pair = None
        if tau_pair is not None and abs(value - (2.0 / tau_pair - 1.0)) > 1e-9:
            raise EstimationError(
                "internal inconsistency: pair product moment does not match "
                "the extremal-coefficient identity")
    return value


def perturbed_moment(measure: DiscreteSpectralMeasure, index_set: IndexSet,
                     v, s, beta: float = 1.0, p: int = 1) -> float:
    """The population limit of the perturbed moment ratio.

    For componentwise scales ``s`` (a vector or a Perturbation) and power
    ``beta``, this is the partial-max-weighted mean of
    ``(v' angular(s o Theta)^(1/beta))^p`` divided by the mean partial max of
    ``s o Theta`` — the quantity whose scale and power derivatives enter the
    rank-based variance corrections.
    """
    p = check_moment_power(p)
    beta = float(beta)
    if beta <= 0:
        raise ValueError(f"beta must be positive, got {beta}")
    mu = renormalized_measure(measure, index_set)
    idx = index_set.zero_based()
    scales = s.s if isinstance(s, Perturbation) else np.asarray(s, dtype=float)
    if scales.shape[0] == index_set.size:
        full = np.zeros(mu.d)
        full[idx] = scales
        scales = full
    if np.any(scales[idx] < 0):
        raise ValueError("perturbation scales must be non-negative")
    weights = _weights_on(index_set, v, mu.d)
    scaled = mu.atoms[:, idx] * scales[idx]
    peaks = scaled.max(axis=1)
    denominator = float(mu.probs @ peaks)
    if denominator <= 0.0:
        raise DegenerateDirection(
            "the scaled measure puts no mass on the index set")
    keep = peaks > 0.0
    angular = np.power(scaled[keep] / peaks[keep, None], 1.0 / beta)
    numerator = float((mu.probs[keep] * peaks[keep]) @ (angular @ weights) ** p)
    return numerator / denominator


# ---------------------------------------------------------------------------
# derivatives of the perturbed moment at the unperturbed point
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MomentDerivatives:
    """Scale and power derivatives of the perturbed moment at s = 1, beta = 1, p = 1.

    ``c`` holds the two-sided (even tie-splitting) scale derivatives for each
    member of the index set and ``c_beta`` the power derivative.  When some
    atom attains its partial max in several components the scale derivatives
    differ by direction: ``differentiable`` is then False and the one-sided
    values are attached (the reported ``c`` is their average).
    """

    index_set: IndexSet
    c: np.ndarray
    c_beta: float
    partial_e: np.ndarray
    differentiable: bool
    left_c: np.ndarray
    right_c: np.ndarray
    left_partial_e: np.ndarray
    right_partial_e: np.ndarray


def _argmax_gradients(mu: DiscreteSpectralMeasure, index_set: IndexSet):
    """Even / left / right gradients of E[max_I (s o Theta)] at s = 1.

    The derivative in ``s_i`` weighs atoms by whether coordinate i attains
    the partial max: increasing ``s_i`` moves the max whenever i is among
    the argmax set (right derivative), decreasing it only matters when i is
    the unique argmax (left derivative); ties are split evenly in between.
    """
    theta = mu.atoms[:, index_set.zero_based()]
    top = theta >= 1.0 - ARGMAX_TOL  # partial max is exactly 1 per construction
    sizes = top.sum(axis=1)
    even = ((top / sizes[:, None]).T @ mu.probs)
    right = top.T.astype(float) @ mu.probs
    left = (top & (sizes == 1)[:, None]).T.astype(float) @ mu.probs
    return even, left, right


def negative_entropy_vector(measure: DiscreteSpectralMeasure,
                            index_set: IndexSet) -> np.ndarray:
    """E[-Theta_i log Theta_i] for i in the index set, renormalized on it."""
    mu = renormalized_measure(measure, index_set)
    theta = mu.atoms[:, index_set.zero_based()]
    integrand = np.where(theta > 0.0, -theta * np.log(np.where(theta > 0, theta, 1.0)),
                         0.0)
    return integrand.T @ mu.probs


def moment_derivatives(measure: DiscreteSpectralMeasure, index_set: IndexSet,
                       v) -> MomentDerivatives:
    """Closed-form derivatives of the perturbed moment for given weights.

    Uses the identity ``c_i(v) = (v_i - (sum v) * dE_i) / tau_I`` where
    ``dE_i`` is the argmax-probability gradient of the mean partial max, and
    ``c_beta(v) = sum_i v_i E[-Theta_i log Theta_i]``.  Requires a
    standardized base measure (the extremal coefficient enters the formula).
    """
    tau = extremal_coefficient(measure, index_set)
    mu = renormalized_measure(measure, index_set)
    weights = _weights_on(index_set, v, measure.d)
    total = float(weights.sum())
    even, left, right = _argmax_gradients(mu, index_set)
    c_even = (weights - total * even) / tau
    c_left = (weights - total * left) / tau
    c_right = (weights - total * right) / tau
    differentiable = bool(np.max(np.abs(right - left)) <= ARGMAX_TOL)
    b = negative_entropy_vector(measure, index_set)
    return MomentDerivatives(
        index_set=index_set,
        c=c_even,
        c_beta=float(weights @ b),
        partial_e=even,
        differentiable=differentiable,
        left_c=c_left,
        right_c=c_right,
        left_partial_e=left,
        right_partial_e=right,
    )


# ---------------------------------------------------------------------------
# optimal weights and asymptotic variances
# ---------------------------------------------------------------------------

def optimal_weights(measure: DiscreteSpectralMeasure, index_set: IndexSet
                    ) -> tuple[WeightVector, float]:
    """Simplex weights minimizing E[(v' Theta)^2] on the index set, with the value."""
    matrix = spectral_second_moment(measure, index_set)
    form = QuadraticForm(index_set, matrix, meta={"kind": "second_moment"})
    return minimize_quadratic_on_simplex(form, d=measure.d)


def _pair_coefficients(measure: DiscreteSpectralMeasure,
                       index_set: IndexSet) -> np.ndarray:
    members = index_set.members
    m = index_set.size
    taus = np.ones((m, m))
    for a in range(m):
        for b in range(a + 1, m):
            value = extremal_coefficient(measure, IndexSet((members[a], members[b])))
            taus[a, b] = taus[b, a] = value
    return taus


def rank_variance_matrix(measure: DiscreteSpectralMeasure,
                         index_set: IndexSet) -> QuadraticForm:
    """Population analogue of the rank-based plug-in variance form.

    Assembled from the same ingredients as the empirical version — extremal
    coefficient, pairwise coefficients, spectral second moments, scale and
    power derivative matrices — all evaluated exactly on the atoms, with
    ties in the argmax split evenly (matching the even convention of the
    derivative estimates).
    """
    tau = extremal_coefficient(measure, index_set)
    mu = renormalized_measure(measure, index_set)
    m = index_set.size
    second = spectral_second_moment(measure, index_set)
    pair_taus = _pair_coefficients(measure, index_set)
    even, left, right = _argmax_gradients(mu, index_set)
    # C[i, j] = c_i at basis weights j = (delta_ij - dE_i) / tau
    c_matrix = (np.eye(m) - np.outer(even, np.ones(m))) / tau
    b = negative_entropy_vector(measure, index_set)
    matrix = _assemble_variance_matrix(tau, pair_taus, second, c_matrix, b)
    meta = {
        "tau": tau,
        "pair_taus": pair_taus,
        "differentiable": bool(np.max(np.abs(right - left)) <= ARGMAX_TOL),
        "condition_number": _condition_number(matrix),
    }
    return QuadraticForm(index_set, matrix, meta=meta)


def rank_asymptotic_variance(measure: DiscreteSpectralMeasure,
                             index_set: IndexSet, v) -> float:
    """The limiting variance of the rank-based weighted ratio at the given weights."""
    form = rank_variance_matrix(measure, index_set)
    weights = _weights_on(index_set, v, measure.d)
    return float(weights @ form.matrix @ weights)


@dataclass(frozen=True)
class AsymptoticVariances:
    """The four asymptotic variances with the two optimal weight vectors."""

    avar_bk: float
    avar_mk: float
    avar_bu: float
    avar_mu: float
    v_star: WeightVector
    v_tilde: WeightVector
    tau: float

    def as_dict(self) -> dict:
        return {
            "avar_bk": self.avar_bk,
            "avar_mk": self.avar_mk,
            "avar_bu": self.avar_bu,
            "avar_mu": self.avar_mu,
            "v_star": self.v_star.weights.tolist(),
            "v_tilde": self.v_tilde.weights.tolist(),
            "tau": self.tau,
        }


def asymptotic_variances(measure: DiscreteSpectralMeasure,
                         index_set: IndexSet) -> AsymptoticVariances:
    """Asymptotic variances of the four estimation strategies on an index set.

    - benchmark with known margins: ``(tau - 1) / tau^3``;
    - optimally weighted moment ratio with known margins:
      ``Var(v*' Theta^I) / tau`` at the minimizing weights (centered so a
      degenerate optimum yields exactly zero);
    - empirical extremal coefficient from ranks: the gradient-weighted
      minimum-moment form divided by ``tau^4``;
    - optimally weighted rank ratio: the minimum of the rank variance form.
    """
    tau = extremal_coefficient(measure, index_set)
    mu = renormalized_measure(measure, index_set)
    m = index_set.size

    avar_bk = (tau - 1.0) / tau ** 3

    v_star, _ = optimal_weights(measure, index_set)
    avar_mk = max(ratio_covariance(measure, index_set, v_star, v_star), 0.0)

    even, _, _ = _argmax_gradients(mu, index_set)
    pair_taus = _pair_coefficients(measure, index_set)
    minimum = (2.0 - pair_taus) / tau
    np.fill_diagonal(minimum, 1.0 / tau)
    sigma2 = tau ** 3 * float(even @ minimum @ even) - tau
    avar_bu = max(sigma2, 0.0) / tau ** 4

    form = rank_variance_matrix(measure, index_set)
    v_tilde, best_rank = minimize_quadratic_on_simplex(form, d=measure.d)
    avar_mu = max(best_rank, 0.0)

    return AsymptoticVariances(
        avar_bk=float(avar_bk),
        avar_mk=float(avar_mk),
        avar_bu=float(avar_bu),
        avar_mu=float(avar_mu),
        v_star=v_star,
        v_tilde=v_tilde,
        tau=float(tau),
    )


def ratio_covariance(measure: DiscreteSpectralMeasure, index_set: IndexSet,
                     v, w, p: int = 1, q: int = 1) -> float:
    """Scaled covariance of two weighted spectral moments on the index set.

    ``Cov((v' Theta)^p, (w' Theta)^q) / tau_I`` — with ``v = w`` and
    ``p = q = 1`` this is the known-margin asymptotic variance of the
    weighted moment ratio at those weights.
    """
    p = check_moment_power(p)
    q = check_moment_power(q)
    tau = extremal_coefficient(measure, index_set)
    mu = renormalized_measure(measure, index_set)
    idx = index_set.zero_based()
    v_on = _weights_on(index_set, v, measure.d)
    w_on = _weights_on(index_set, w, measure.d)
    x = (mu.atoms[:, idx] @ v_on) ** p
    y = (mu.atoms[:, idx] @ w_on) ** q
    mean_x = float(mu.probs @ x)
    mean_y = float(mu.probs @ y)
    return (float(mu.probs @ (x * y)) - mean_x * mean_y) / tau
