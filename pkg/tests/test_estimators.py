import numpy as np
import pytest

import tailmoments as tm

I12 = tm.IndexSet([1, 2])

# four observations, two of which exceed u = 5 in the max norm
X4 = np.array([[10.0, 10.0], [12.0, 6.0], [0.5, 0.2], [0.1, 0.3]])
HALF = tm.make_weight_vector([1, 1], I12)


def test_moment_mean_example():
    assert tm.moment_mean(X4, 5.0, HALF) == 0.4375


def test_moment_mean_p_zero_counts_exceedances():
    assert tm.moment_mean(X4, 5.0, HALF, p=0) == tm.exceedance_fraction(X4, 5.0, I12)


def test_moment_mean_empty_exceedance_set_is_zero():
    assert tm.moment_mean(X4, 100.0, HALF) == 0.0


def test_exceedance_fraction_thresholds():
    assert tm.exceedance_fraction(X4, 5.0, I12) == 0.5
    assert tm.exceedance_fraction(X4, 11.0, I12) == 0.25
    assert tm.exceedance_fraction(X4, 100.0, I12) == 0.0


def test_moment_ratio_known_example():
    rep = tm.moment_ratio_known(X4, 5.0, HALF)
    assert rep.estimate == 0.875
    assert rep.exceedance_count == 2
    assert rep.inverse_estimate == pytest.approx(1.0 / 0.875)
    assert rep.std_error is not None and rep.std_error > 0


def test_moment_ratio_known_raises_without_exceedances():
    with pytest.raises(tm.NoExceedances):
        tm.moment_ratio_known(X4, 100.0, HALF)


def test_moment_ratio_is_affine_in_the_weights():
    """For p = 1 the ratio is linear, so convex combinations pass through."""
    rng = np.random.default_rng(3)
    x = rng.pareto(1.0, size=(300, 2)) + 1.0
    u = float(np.quantile(tm.partial_max(x, I12), 0.9))
    for _ in range(25):
        a = rng.dirichlet([1.0, 1.0])
        b = rng.dirichlet([1.0, 1.0])
        lam = rng.uniform()
        va = tm.make_weight_vector(a, I12)
        vb = tm.make_weight_vector(b, I12)
        vc = tm.make_weight_vector(lam * a + (1 - lam) * b, I12)
        mixed = lam * tm.moment_ratio_known(x, u, va).estimate \
            + (1 - lam) * tm.moment_ratio_known(x, u, vb).estimate
        assert tm.moment_ratio_known(x, u, vc).estimate == pytest.approx(mixed, abs=1e-12)


def test_moment_ratio_lies_in_unit_interval():
    rng = np.random.default_rng(4)
    x = rng.pareto(1.0, size=(500, 3)) + 1.0
    s = tm.IndexSet([1, 2, 3])
    u = float(np.quantile(tm.partial_max(x, s), 0.8))
    for _ in range(20):
        v = tm.make_weight_vector(rng.dirichlet([1.0, 1.0, 1.0]), s)
        for p in (1, 2, 3):
            r = tm.moment_ratio_known(x, u, v, p=p).estimate
            assert 0.0 <= r <= 1.0


def test_benchmark_ratio_examples():
    left = tm.benchmark_ratio_known(X4, 5.0, tm.make_weight_vector([1, 0], I12))
    assert left.estimate == 1.0
    assert left.method == "benchmark"
    assert tm.benchmark_ratio_known(X4, 11.0, HALF).estimate == 0.0
    with pytest.raises(tm.NoExceedances):
        tm.benchmark_ratio_known(X4, 100.0, HALF)


def test_moment_ratio_ranks_example():
    x = np.array([[4.0, 1.0], [3.0, 2.0], [2.0, 3.0], [1.0, 4.0]])
    rep = tm.moment_ratio_ranks(x, 2, HALF, inv_alpha_hat=1.0)
    assert rep.estimate == 0.625
    assert rep.exceedance_count == 2


def test_moment_ratio_ranks_exceedance_set_only_sees_column_order():
    rng = np.random.default_rng(5)
    x = rng.pareto(1.0, size=(200, 2)) + 1.0
    monotone = np.column_stack([np.exp(x[:, 0]), x[:, 1] ** 3])
    a = tm.moment_ratio_ranks(x, 20, HALF)
    b = tm.moment_ratio_ranks(monotone, 20, HALF)
    assert a.exceedance_count == b.exceedance_count


def test_moment_ratio_ranks_is_invariant_under_scaled_powers():
    """Column rescaling plus a common power cancels against the Hill estimate."""
    rng = np.random.default_rng(5)
    x = rng.pareto(1.0, size=(200, 2)) + 1.0
    powered = np.column_stack([7.0 * x[:, 0] ** 2.5, 0.3 * x[:, 1] ** 2.5])
    a = tm.moment_ratio_ranks(x, 20, HALF)
    b = tm.moment_ratio_ranks(powered, 20, HALF)
    assert b.estimate == pytest.approx(a.estimate, rel=1e-13)
    assert b.exceedance_count == a.exceedance_count


def test_rank_angular_parts_shape_and_normalization():
    rng = np.random.default_rng(6)
    x = rng.pareto(1.0, size=(150, 3)) + 1.0
    s = tm.IndexSet([1, 3])
    mask, angular, inv_alpha = tm.rank_angular_parts(x, 15, s)
    assert angular.shape == (int(mask.sum()), 3)
    assert np.all(angular[:, 1] == 0.0)  # column outside the index set
    assert np.allclose(tm.partial_max(angular, s), 1.0)
    assert inv_alpha > 0


def test_stable_tail_estimate_examples():
    x = np.array([[4.0, 1.0], [3.0, 2.0], [2.0, 3.0], [1.0, 4.0]])
    assert tm.stable_tail_estimate(x, 2, I12).estimate == 1.0
    full = np.column_stack([np.array([4.0, 3.0, 2.0, 1.0])] * 2)
    assert tm.stable_tail_estimate(full, 2, I12).estimate == 0.5
    single = np.array([[4.0], [3.0], [2.0], [1.0]])
    assert tm.stable_tail_estimate(single, 2, tm.IndexSet([1])).estimate == 0.5


def test_stable_tail_estimate_converges_to_the_extremal_coefficient():
    model = tm.make_scenario(0.1, 0.2)
    x = tm.simulate(model, 40000, seed=21)
    rep = tm.stable_tail_estimate(x, 400, I12)
    assert rep.estimate == pytest.approx(40.0 / 23.0, rel=0.1)


def test_perturbed_moment_ratio_matches_rank_route():
    """Scaling columns onto their order statistics reproduces the rank estimate."""
    rng = np.random.default_rng(11)
    x = rng.pareto(2.0, size=(300, 2)) + 1.0
    k = 30
    ia = tm.hill_inverse_alpha(x, k, I12).estimate
    cols = tm.upper_order_statistics(x, k)
    pert = tm.Perturbation.scaled(I12, 2, scales=1.0 / cols, beta=ia)
    known = tm.moment_ratio_known(x, 1.0, HALF, perturbation=pert)
    ranked = tm.moment_ratio_ranks(x, k, HALF)
    assert known.estimate == pytest.approx(ranked.estimate, rel=1e-13)
    assert known.exceedance_count == ranked.exceedance_count
