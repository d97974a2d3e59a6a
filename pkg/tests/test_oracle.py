import math

import numpy as np
import pytest

import tailmoments as tm
from tailmoments.oracle import (
    asymptotic_variances,
    extremal_coefficient,
    mean_intensity,
    moment_derivatives,
    negative_entropy_vector,
    optimal_weights,
    pair_product_moment,
    perturbed_moment,
    rank_asymptotic_variance,
    rank_variance_matrix,
    ratio_covariance,
    renormalized_measure,
    spectral_moment,
    spectral_second_moment,
)

import _exact_reference as exact

I12 = tm.IndexSet([1, 2])

SCENARIOS = [(0.1, 0.2), (0.4, 0.6), (0.8, 0.9)]
RANDOM_PQS = [(0.05, 0.35), (0.25, 0.25), (0.3, 0.95), (0.55, 0.6), (0.7, 0.15), (1.0, 1.0), (0.0, 0.0)]


def scenario(p, q):
    return tm.model_spectral_measure(tm.make_scenario(p, q))


def rationalized(measure):
    return exact.rationalize(measure.atoms, measure.probs)


# ------------------------------------------------------------------ measures

def test_measure_validates_probabilities_and_normalization():
    with pytest.raises(ValueError):
        tm.DiscreteSpectralMeasure(np.array([[1.0, 0.5]]), np.array([0.5]))
    with pytest.raises(ValueError):
        tm.DiscreteSpectralMeasure(np.array([[0.5, 0.9]]), np.array([1.0]))


def test_renormalized_measure_example():
    m = tm.DiscreteSpectralMeasure(np.array([[1.0, 0.5], [0.25, 1.0]]), np.array([0.5, 0.5]))
    out = renormalized_measure(m, tm.IndexSet([1]))
    assert out.atoms.tolist() == [[1.0, 0.5], [1.0, 4.0]]
    assert out.probs.tolist() == [0.8, 0.2]


def test_renormalized_measure_drops_null_directions():
    m = tm.DiscreteSpectralMeasure(
        np.array([[1.0, 0.0], [0.0, 1.0], [1.0, 1.0]]), np.array([0.25, 0.5, 0.25])
    )
    out = renormalized_measure(m, tm.IndexSet([1]))
    assert len(out.probs) == 2  # the pure second-coordinate atom cannot appear
    assert np.all(out.atoms[:, 0] == 1.0)


def test_mean_intensity_of_scenario_measures_is_flat():
    for p, q in SCENARIOS:
        r = mean_intensity(scenario(p, q))
        assert r[0] == pytest.approx(r[1], abs=1e-15)


def test_extremal_coefficient_scenario_value():
    tau = extremal_coefficient(scenario(0.1, 0.2), I12)
    assert tau == pytest.approx(40.0 / 23.0, rel=1e-15)
    assert f"{tau:.7f}" == "1.7391304"


@pytest.mark.parametrize("p,q", SCENARIOS + RANDOM_PQS)
def test_extremal_coefficient_matches_exact_enumeration(p, q):
    atoms, probs = rationalized(scenario(p, q))
    want = exact.extremal_coefficient(atoms, probs, (1, 2))
    got = extremal_coefficient(scenario(p, q), I12)
    assert got == pytest.approx(float(want), rel=1e-14)


def test_extremal_coefficient_bounds():
    for p, q in SCENARIOS + RANDOM_PQS:
        tau = extremal_coefficient(scenario(p, q), I12)
        assert 1.0 - 1e-15 <= tau <= 2.0 + 1e-15


# ------------------------------------------------------------------- moments

@pytest.mark.parametrize("p,q", SCENARIOS)
def test_first_moment_is_flat_across_directions(p, q):
    """E[v' Theta^I] = 1 / tau_I for every simplex direction."""
    m = scenario(p, q)
    tau = extremal_coefficient(m, I12)
    rng = np.random.default_rng(17)
    for _ in range(10):
        v = rng.dirichlet([1.0, 1.0])
        assert spectral_moment(m, I12, v, 1) == pytest.approx(1.0 / tau, rel=1e-14)


def test_second_moment_example():
    m = scenario(0.1, 0.2)
    assert spectral_moment(m, I12, [0.5, 0.5], 2) == pytest.approx(0.33125, rel=1e-15)


@pytest.mark.parametrize("p,q", SCENARIOS + RANDOM_PQS)
def test_moments_match_exact_enumeration(p, q):
    m = scenario(p, q)
    atoms, probs = rationalized(m)
    for v in ([0.5, 0.5], [1.0, 0.0], [0.3, 0.7]):
        for power in (1, 2, 3):
            want = exact.moment(atoms, probs, (1, 2), v, power)
            assert spectral_moment(m, I12, v, power) == pytest.approx(float(want), rel=1e-13)


@pytest.mark.parametrize("p,q", SCENARIOS + RANDOM_PQS)
def test_second_moment_matrix_matches_exact_enumeration(p, q):
    m = scenario(p, q)
    atoms, probs = rationalized(m)
    want = np.array(exact.second_moment_matrix(atoms, probs, (1, 2)), dtype=float)
    np.testing.assert_allclose(spectral_second_moment(m, I12), want, rtol=1e-13)


def test_pair_product_moment_identity():
    """E[Theta_i^I Theta_j^I] = (2 - tau_ij) ... via the polarization identity
    2 E[Theta_i Theta_j] = E[(Theta_i + Theta_j)^2] - E[Theta_i^2] - E[Theta_j^2]."""
    for p, q in SCENARIOS:
        m = scenario(p, q)
        direct = spectral_second_moment(m, I12)[0, 1]
        assert pair_product_moment(m, I12, 1, 2) == pytest.approx(direct, rel=1e-13)


def test_negative_entropy_vector_scenario_value():
    b = negative_entropy_vector(scenario(0.1, 0.2), I12)
    assert b[0] == pytest.approx(math.log(250.0) / 40.0, rel=1e-13)
    assert b[0] == b[1]


# ------------------------------------------------------------ perturbations

def test_perturbed_moment_independent_coordinates():
    ind = tm.DiscreteSpectralMeasure(np.eye(2), np.array([0.5, 0.5]))
    got = perturbed_moment(ind, I12, [1.0, 0.0], [2.0, 3.0])
    assert got == pytest.approx(2.0 / 5.0, rel=1e-15)


@pytest.mark.parametrize("p,q", SCENARIOS)
def test_perturbed_moment_matches_exact_enumeration(p, q):
    m = scenario(p, q)
    atoms, probs = rationalized(m)
    rng = np.random.default_rng(23)
    for _ in range(5):
        v = rng.dirichlet([1.0, 1.0])
        s = rng.uniform(0.5, 2.0, size=2)
        for beta in (1.0, 0.8, 1.25):
            want = exact.perturbed_moment(atoms, probs, (1, 2), v, s, beta)
            got = perturbed_moment(m, I12, v, s, beta)
            assert got == pytest.approx(float(want), rel=1e-12)


def test_perturbed_moment_at_identity_reduces_to_plain_moment():
    m = scenario(0.4, 0.6)
    for power in (1, 2):
        assert perturbed_moment(m, I12, [0.3, 0.7], [1.0, 1.0], 1.0, power) == pytest.approx(
            spectral_moment(m, I12, [0.3, 0.7], power), rel=1e-15
        )


# -------------------------------------------------------------- derivatives

def test_moment_derivatives_independent_coordinates():
    ind = tm.DiscreteSpectralMeasure(np.eye(2), np.array([0.5, 0.5]))
    d = moment_derivatives(ind, I12, [1.0, 0.0])
    assert d.differentiable
    assert d.c.tolist() == [0.25, -0.25]
    assert d.partial_e.tolist() == [0.5, 0.5]


def test_moment_derivatives_scenario_center():
    d = moment_derivatives(scenario(0.1, 0.2), I12, [0.5, 0.5])
    assert d.c.tolist() == [0.0, 0.0]
    assert d.c_beta == pytest.approx(math.log(250.0) / 40.0, rel=1e-13)


def test_moment_derivatives_full_dependence_is_one_sided():
    full = tm.DiscreteSpectralMeasure(np.array([[1.0, 1.0]]), np.array([1.0]))
    d = moment_derivatives(full, I12, [1.0, 0.0])
    assert not d.differentiable
    assert d.left_c.tolist() == [1.0, 0.0]
    assert d.right_c.tolist() == [0.0, -1.0]
    assert d.c.tolist() == [0.5, -0.5]  # even split between the one-sided limits
    assert d.left_partial_e.tolist() == [0.0, 0.0]
    assert d.right_partial_e.tolist() == [1.0, 1.0]
    assert d.partial_e.tolist() == [0.5, 0.5]


def test_scale_derivatives_sum_to_zero():
    """Scaling all coordinates together leaves the ratio invariant (Euler)."""
    rng = np.random.default_rng(29)
    for p, q in SCENARIOS:
        m = scenario(p, q)
        for _ in range(5):
            v = rng.dirichlet([1.0, 1.0])
            d = moment_derivatives(m, I12, v)
            assert float(d.c.sum()) == pytest.approx(0.0, abs=1e-13)


def test_derivatives_match_central_differences():
    rng = np.random.default_rng(31)
    for p, q in SCENARIOS:
        m = scenario(p, q)
        v = rng.dirichlet([1.0, 1.0])
        d = moment_derivatives(m, I12, v)
        for i in range(2):
            h = 1e-6
            s_up = np.ones(2)
            s_up[i] += h
            s_dn = np.ones(2)
            s_dn[i] -= h
            quot = (perturbed_moment(m, I12, v, s_up) - perturbed_moment(m, I12, v, s_dn)) / (2 * h)
            assert quot == pytest.approx(d.c[i], abs=1e-6)
        quot_b = (perturbed_moment(m, I12, v, [1.0, 1.0], 1.0 + 1e-6)
                  - perturbed_moment(m, I12, v, [1.0, 1.0], 1.0 - 1e-6)) / (2e-6)
        assert quot_b == pytest.approx(d.c_beta, abs=1e-6)


# ------------------------------------------------------- optimal weights, QP

def test_optimal_weights_scenario_examples():
    w, val = optimal_weights(scenario(0.1, 0.2), I12)
    assert w.weights.tolist() == [0.5, 0.5]
    assert val == 0.33125
    full = tm.DiscreteSpectralMeasure(np.array([[1.0, 1.0]]), np.array([1.0]))
    wf, vf = optimal_weights(full, I12)
    assert wf.weights.tolist() == [0.5, 0.5]
    assert vf == 1.0
    ind = tm.DiscreteSpectralMeasure(np.eye(2), np.array([0.5, 0.5]))
    wi, vi = optimal_weights(ind, I12)
    assert wi.weights.tolist() == [0.5, 0.5]
    assert vi == 0.25


# ---------------------------------------------------- asymptotic variances

FROZEN_AVARS = {
    (0.1, 0.2): (0.140515625, 0.000359375, 0.018328125, 0.011315471958625724),
    (0.4, 0.6): (0.140625, 0.001875, 0.046875, 0.02310678299674587),
    (0.8, 0.9): (0.064171875, 0.000578125, 0.029484375, 0.004897549847253746),
}


@pytest.mark.parametrize("p,q", SCENARIOS)
def test_asymptotic_variances_frozen_values(p, q):
    av = asymptotic_variances(scenario(p, q), I12)
    bk, mk, bu, mu = FROZEN_AVARS[(p, q)]
    assert av.avar_bk == pytest.approx(bk, rel=1e-12)
    assert av.avar_mk == pytest.approx(mk, rel=1e-9)
    assert av.avar_bu == pytest.approx(bu, rel=1e-12)
    assert av.avar_mu == pytest.approx(mu, rel=1e-12)
    assert av.v_star.weights.tolist() == [0.5, 0.5]
    assert av.v_tilde.weights.tolist() == [0.5, 0.5]


@pytest.mark.parametrize("p,q", SCENARIOS + RANDOM_PQS)
def test_asymptotic_variances_match_exact_enumeration(p, q):
    m = scenario(p, q)
    atoms, probs = rationalized(m)
    av = asymptotic_variances(m, I12)
    assert av.avar_bk == pytest.approx(float(exact.variance_benchmark_known(atoms, probs, (1, 2))), abs=1e-13)
    assert av.avar_mk == pytest.approx(float(exact.variance_moment_known(atoms, probs, (1, 2))), abs=1e-13)
    assert av.avar_bu == pytest.approx(float(exact.variance_benchmark_ranks(atoms, probs, (1, 2))), abs=1e-13)
    assert exact.is_exchangeable(atoms, probs)
    assert av.avar_mu == pytest.approx(
        exact.variance_moment_ranks_exchangeable(atoms, probs, (1, 2)), abs=1e-12
    )


@pytest.mark.parametrize("p,q", SCENARIOS + RANDOM_PQS)
def test_variance_ordering(p, q):
    av = asymptotic_variances(scenario(p, q), I12)
    assert av.avar_mk <= av.avar_mu + 1e-12
    assert av.avar_mu <= av.avar_bu + 1e-12
    assert av.avar_bu <= av.avar_bk + 1e-12


def test_degenerate_scenarios():
    full = asymptotic_variances(scenario(1.0, 1.0), I12)
    assert (full.avar_bk, full.avar_mk, full.avar_bu, full.avar_mu) == (0.0, 0.0, 0.0, 0.0)
    ind = asymptotic_variances(scenario(0.0, 0.0), I12)
    assert ind.avar_bk == 0.125
    assert ind.avar_mk == 0.0
    assert ind.avar_mu == 0.0
    assert ind.avar_bu == pytest.approx(0.0, abs=1e-15)


def test_asymptotic_variances_reject_unstandardized_measures():
    lopsided = tm.DiscreteSpectralMeasure(np.array([[1.0, 0.0]]), np.array([1.0]))
    with pytest.raises(tm.NotStandardized):
        asymptotic_variances(lopsided, I12)


# ------------------------------------------------------ rank variance matrix

def test_rank_variance_matrix_scenario_center():
    m = scenario(0.1, 0.2)
    q = rank_variance_matrix(m, I12)
    v = np.array([0.5, 0.5])
    assert float(v @ q.matrix @ v) == pytest.approx(0.011315471958625724, rel=1e-14)
    assert rank_asymptotic_variance(m, I12, v) == pytest.approx(0.011315471958625724, rel=1e-14)
    np.testing.assert_allclose(q.matrix, q.matrix.T, atol=0.0)


@pytest.mark.parametrize("p,q", SCENARIOS)
def test_rank_variance_matrix_minimum_is_avar_mu(p, q):
    m = scenario(p, q)
    form = rank_variance_matrix(m, I12)
    w, val = tm.minimize_quadratic_on_simplex(form)
    av = asymptotic_variances(m, I12)
    assert val == pytest.approx(av.avar_mu, rel=1e-12)
    assert w.weights.tolist() == av.v_tilde.weights.tolist()


def test_rank_variance_is_nonnegative_on_the_simplex():
    rng = np.random.default_rng(37)
    for p, q in SCENARIOS + RANDOM_PQS[:4]:
        m = scenario(p, q)
        for _ in range(10):
            v = rng.dirichlet([1.0, 1.0])
            assert rank_asymptotic_variance(m, I12, v) >= -1e-13


# --------------------------------------------------------- ratio covariance

def test_ratio_covariance_examples():
    m = scenario(0.1, 0.2)
    assert ratio_covariance(m, I12, [1.0, 0.0], [1.0, 0.0]) == pytest.approx(0.104578125, rel=1e-13)
    v_star = [0.5, 0.5]
    assert ratio_covariance(m, I12, v_star, v_star) == pytest.approx(0.000359375, rel=1e-12)


@pytest.mark.parametrize("p,q", SCENARIOS)
def test_ratio_covariance_matches_moment_form(p, q):
    """Cov of two first-order ratios: (E[(v'T)(w'T)] - R(v) R(w)) / tau."""
    m = scenario(p, q)
    atoms, probs = rationalized(m)
    tau = exact.extremal_coefficient(atoms, probs, (1, 2))
    rng = np.random.default_rng(41)
    for _ in range(5):
        v = rng.dirichlet([1.0, 1.0])
        w = rng.dirichlet([1.0, 1.0])
        ca, cp = exact.conditioned(atoms, probs, (1, 2))
        cross = sum(
            pr * sum(exact._rat(a) * t for a, t in zip(v, at)) * sum(exact._rat(b) * t for b, t in zip(w, at))
            for at, pr in zip(ca, cp)
        )
        want = (cross - exact.moment(atoms, probs, (1, 2), v) * exact.moment(atoms, probs, (1, 2), w)) / tau
        assert ratio_covariance(m, I12, v, w) == pytest.approx(float(want), rel=1e-12)
