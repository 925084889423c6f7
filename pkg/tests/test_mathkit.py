import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from tensorica import mathkit as mk
from tensorica.datagen import SourceDistribution
from tensorica.errors import (
    EstimateFailedError,
    HypothesisViolatedError,
    InfeasibleDimensionError,
    InvalidInstanceError,
    InvalidSamplerError,
)

PSI2_NORMAL = math.sqrt(8 / 3)


def normal(rng, n):
    return rng.standard_normal(n)


class TestGronwall:
    def test_exact_recursion(self):
        # alpha = 0 forces u(t) = u(0) (1 - beta)^t
        beta = np.full(5, 0.5)
        u = 2.0 * 0.5 ** np.arange(6)
        res = mk.gronwall_check(mk.GronwallInstance(u, beta, 0.0))
        assert res.holds and res.max_slack == pytest.approx(0.0, abs=1e-12)

    def test_zero_beta(self):
        u = np.array([1.0, 1.3, 0.7, 1.3])
        res = mk.gronwall_check(mk.GronwallInstance(u, np.zeros(3), 0.3))
        assert res.holds
        assert res.max_slack == pytest.approx(0.3 - 0.6)

    def test_empty_horizon(self):
        assert mk.gronwall_check(mk.GronwallInstance(np.array([4.0]), np.zeros(0), 0.5)).holds

    def test_premise_violation(self):
        with pytest.raises(HypothesisViolatedError):
            mk.gronwall_check(mk.GronwallInstance(np.array([1.0, 2.0]), np.zeros(1), 0.5))

    @pytest.mark.parametrize("beta", [[1.0], [-0.1], [np.nan]])
    def test_invalid_beta(self, beta):
        with pytest.raises(InvalidInstanceError):
            mk.GronwallInstance(np.array([1.0, 1.0]), np.array(beta), 0.1)

    def test_invalid_shapes(self):
        with pytest.raises(InvalidInstanceError):
            mk.GronwallInstance(np.ones(3), np.zeros(3), 0.1)
        with pytest.raises(InvalidInstanceError):
            mk.GronwallInstance(np.ones(3), np.zeros(2), -1.0)

    @given(st.integers(0, 2**32 - 1))
    @settings(max_examples=200)
    def test_random_instances(self, seed):
        inst = mk.random_gronwall_instance(np.random.default_rng(seed))
        assert np.all(inst.hypothesis_residuals() <= inst.alpha * (1 + 1e-9) + 1e-12)
        assert mk.gronwall_check(inst).holds

    def test_audit(self):
        failures, worst = mk.gronwall_audit(2000, seed=1)
        assert failures == 0
        assert worst <= 1e-9


class TestOrlicz:
    def test_normal(self):
        est = mk.estimate_psi_alpha_norm(normal, 2.0, 1_000_000, seed=0)
        assert est.K_hat == pytest.approx(PSI2_NORMAL, rel=0.02)
        assert est.bracket[0] <= est.K_hat and est.bracket[1] / est.bracket[0] - 1 <= 1e-3
        # K_hat sits on the feasible side of the crossing
        assert est.mc_value <= 2.0

    def test_zero_sampler_hits_lower_bound(self):
        est = mk.estimate_psi_alpha_norm(lambda rng, n: np.zeros(n), 2.0, 10_000, seed=0)
        assert est.K_hat == mk.K_MIN

    def test_linear_scaling(self):
        base = mk.estimate_psi_alpha_norm(normal, 2.0, 100_000, seed=5).K_hat
        scaled = mk.estimate_psi_alpha_norm(lambda r, n: 3.0 * r.standard_normal(n), 2.0, 100_000, seed=5)
        assert scaled.K_hat == pytest.approx(3.0 * base, rel=2e-3)

    def test_non_finite(self):
        with pytest.raises(InvalidSamplerError):
            mk.estimate_psi_alpha_norm(lambda rng, n: np.full(n, np.inf), 2.0, 10_000)

    def test_no_bracket(self):
        with pytest.raises(EstimateFailedError):
            mk.psi_alpha_norm_of_samples(np.full(100, 1e9), 2.0)

    def test_small_n_rejected(self):
        with pytest.raises(ValueError):
            mk.estimate_psi_alpha_norm(normal, 2.0, 100)

    def test_alpha_one_laplace(self):
        # Laplace(1): E exp(|X|/K) = 1 / (1 - 1/K) = 2 at K = 2
        est = mk.estimate_psi_alpha_norm(lambda r, n: r.laplace(size=n), 1.0, 1_000_000, seed=3)
        assert est.K_hat == pytest.approx(2.0, rel=0.03)

    def test_confidence_width_shrinks(self):
        # bounded source so the batch estimates have finite variance
        uniform = lambda r, n: r.uniform(-math.sqrt(3), math.sqrt(3), n)  # noqa: E731
        w1 = mk.psi_alpha_confidence_width(uniform, 2.0, 200_000, seed=1, batches=200)
        w2 = mk.psi_alpha_confidence_width(uniform, 2.0, 400_000, seed=2, batches=200)
        assert w2 / w1 == pytest.approx(1 / math.sqrt(2), rel=0.2)


class TestSubGaussianB:
    def test_normal(self):
        B = mk.estimate_psi_alpha_norm(normal, 2.0, 1_000_000, seed=0).K_hat * mk.PSI2_TO_B
        assert B == pytest.approx(8 / 3, abs=0.05)

    def test_scales_with_source(self):
        a = mk.estimate_psi_alpha_norm(normal, 2.0, 200_000, seed=4).K_hat * mk.PSI2_TO_B
        b = mk.estimate_psi_alpha_norm(lambda r, n: 2 * r.standard_normal(n), 2.0, 200_000,
                                       seed=4).K_hat * mk.PSI2_TO_B
        assert b == pytest.approx(2 * a, rel=2e-3)

    def test_gaussian_bernoulli_stable(self):
        gb = SourceDistribution.gaussian_bernoulli()
        values = [mk.sub_gaussian_B(gb, 1_000_000, seed=s) for s in range(3)]
        assert max(values) / min(values) - 1 <= 0.05

    def test_resolve_B_cached(self):
        mg = SourceDistribution.mixture_gaussian()
        assert mg.resolve_B() == mg.resolve_B() > 0


class TestSpacing:
    def test_threshold_formula(self):
        eps, d = 0.1, 50
        assert mk.spacing_threshold(d, eps) == pytest.approx(eps / (8 * math.log(10) * math.log(50)))

    def test_min_dimension(self):
        assert mk.spacing_min_dimension(0.1) == pytest.approx(20.032, abs=1e-3)

    @pytest.mark.parametrize("d, eps", [(2, 0.1), (19, 0.1), (50, 0.4), (50, 0.0)])
    def test_infeasible(self, d, eps):
        with pytest.raises(InfeasibleDimensionError):
            mk.spacing_experiment(d, eps, 100, seed=0)

    def test_min_w_matches_bruteforce(self):
        rng = np.random.default_rng(7)
        fast = mk.min_W_uniform(9, 50, seed=rng)
        rng = np.random.default_rng(7)
        sq = rng.standard_normal((50, 9)) ** 2
        order = np.sort(sq, axis=1)[:, ::-1]
        slow = ((order[:, :1] - order[:, 1:]) / order[:, 1:]).min(axis=1)
        np.testing.assert_allclose(fast, slow, rtol=1e-12)

    def test_bound_holds(self):
        res = mk.spacing_experiment(50, 0.1, 20_000, seed=0)
        assert res.empirical_prob >= 0.7
        assert res.n_trials == 20_000

    @pytest.mark.parametrize("d", [21, 200, 2000])
    def test_bound_across_dimensions(self, d):
        res = mk.spacing_experiment(d, 0.1, 20_000, seed=1)
        assert res.empirical_prob - 3 * res.stderr >= 1 - 3 * 0.1
