import math

import numpy as np
import pytest
import statsmodels.api as sm

from oa_policy_lab.nbr import RankDeficientError, fit_nbr


def poisson_oracle(X, y, exposure=None):
    """Independent Poisson MLE via statsmodels IRLS (intercept first)."""
    X1 = np.column_stack([np.ones(len(y)), X]) if X.size else np.ones((len(y), 1))
    offset = np.log(exposure) if exposure is not None else None
    model = sm.GLM(y, X1, family=sm.families.Poisson(), offset=offset)
    return model.fit(maxiter=300, tol=1e-12).params


def random_poisson_problem(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(25, 70))
    k = int(rng.integers(1, 4))
    X = rng.uniform(-1, 1, size=(n, k))
    beta = rng.uniform(-0.6, 0.6, size=k)
    intercept = rng.uniform(0.5, 2.0)
    exposure = rng.integers(20, 200, size=n).astype(float)
    mu = np.exp(intercept + X @ beta) * exposure
    y = rng.poisson(np.minimum(mu, exposure * 0.9))
    y = np.minimum(y, exposure.astype(int))
    return X, y, exposure


def simulate_nb2(seed, n=500, beta0=math.log(5), beta1=0.7, alpha=0.5):
    rng = np.random.default_rng(seed)
    x = (np.arange(n) % 2).astype(float)
    mu = np.exp(beta0 + beta1 * x)
    lam = rng.gamma(shape=1.0 / alpha, scale=alpha * mu)
    y = rng.poisson(lam)
    return x[:, None], y


class TestPoissonLimit:
    def test_alpha_zero_matches_independent_oracle(self):
        for seed in range(5):
            X, y, exposure = random_poisson_problem(seed)
            if y.sum() == 0:
                continue
            fit = fit_nbr(X, y, exposure, alpha=0.0)
            expected = poisson_oracle(X, y, exposure)
            got = np.array(list(fit.coefficients.values()))
            assert np.max(np.abs(got - expected)) < 1e-6

    def test_alpha_zero_is_plain_poisson_likelihood(self):
        X, y, exposure = random_poisson_problem(3)
        fit = fit_nbr(X, y, exposure, alpha=0.0)
        assert fit.alpha == 0.0
        assert fit.converged


class TestInterceptOnly:
    def test_fitted_mean_equals_sample_mean(self):
        fit = fit_nbr(np.empty((3, 0)), [2, 4, 6], [100.0, 100.0, 100.0])
        fitted_mean = 100.0 * math.exp(fit.coefficients["intercept"])
        assert fitted_mean == pytest.approx(4.0, abs=1e-9)
        assert fit.coefficients["intercept"] == pytest.approx(math.log(4 / 100), abs=1e-9)

    def test_without_exposure(self):
        fit = fit_nbr(np.empty((5, 0)), [1, 2, 3, 4, 5])
        assert math.exp(fit.coefficients["intercept"]) == pytest.approx(3.0, abs=1e-9)


class TestSimulationRecovery:
    def test_known_coefficients_recovered(self):
        X, y = simulate_nb2(seed=12)
        fit = fit_nbr(X, y)
        beta1 = fit.coefficients["x0"]
        se1 = fit.std_errors["x0"]
        assert abs(beta1 - 0.7) <= 3 * se1
        assert fit.exp_beta["x0"] == pytest.approx(math.exp(beta1))
        assert 0.2 < fit.alpha < 1.2
        assert fit.converged

    def test_exp_beta_positive_iff_beta_positive(self):
        X, y = simulate_nb2(seed=4)
        fit = fit_nbr(X, y)
        for name, beta in fit.coefficients.items():
            assert (fit.exp_beta[name] > 1.0) == (beta > 0.0)
            assert fit.exp_beta[name] > 0.0


class TestDegeneracy:
    def test_constant_zero_column_flagged(self):
        rng = np.random.default_rng(0)
        X = np.column_stack([np.zeros(40), rng.uniform(0, 1, 40)])
        y = rng.poisson(3.0, size=40)
        fit = fit_nbr(X, y)
        assert fit.degenerate == {"x0": "near_zero"}
        assert "x0" not in fit.coefficients
        assert "x1" in fit.coefficients

    def test_separated_binary_column_flagged(self):
        x = np.array([0.0] * 20 + [1.0] * 20)
        y = np.concatenate([np.random.default_rng(1).poisson(4.0, 20), np.zeros(20, int)])
        fit = fit_nbr(x[:, None], y)
        assert fit.degenerate == {"x0": "near_zero"}

    def test_duplicated_column_is_rank_deficient(self):
        rng = np.random.default_rng(2)
        base = rng.uniform(0, 1, 30)
        X = np.column_stack([base, base])
        y = rng.poisson(2.0, 30)
        with pytest.raises(RankDeficientError) as err:
            fit_nbr(X, y)
        assert set(err.value.columns) & {"x0", "x1"}

    def test_all_zero_response_rejected(self):
        with pytest.raises(ValueError, match="all zeros"):
            fit_nbr(np.empty((4, 0)), [0, 0, 0, 0])


class TestValidation:
    def test_counts_above_exposure_rejected(self):
        with pytest.raises(ValueError, match="exceed"):
            fit_nbr(np.empty((3, 0)), [5, 5, 5], [4.0, 10.0, 10.0])

    def test_non_positive_exposure_rejected(self):
        with pytest.raises(ValueError, match="positive"):
            fit_nbr(np.empty((3, 0)), [1, 1, 1], [0.0, 1.0, 1.0])

    def test_non_integer_counts_rejected(self):
        with pytest.raises(ValueError, match="integer"):
            fit_nbr(np.empty((3, 0)), [1.5, 2.0, 3.0])

    def test_negative_counts_rejected(self):
        with pytest.raises(ValueError, match="non-negative"):
            fit_nbr(np.empty((3, 0)), [-1, 2, 3])

    def test_misaligned_exposure_rejected(self):
        with pytest.raises(ValueError, match="align"):
            fit_nbr(np.empty((3, 0)), [1, 2, 3], [1.0, 2.0])


class TestIterationTrace:
    def test_trace_is_monotone_nondecreasing(self):
        for seed in (1, 7, 23):
            X, y = simulate_nb2(seed=seed)
            fit = fit_nbr(X, y)
            assert all(b >= a for a, b in zip(fit.ll_trace, fit.ll_trace[1:]))

    def test_converged_fit_reports_iterations(self):
        X, y = simulate_nb2(seed=9)
        fit = fit_nbr(X, y)
        assert fit.converged
        assert 1 <= fit.iterations <= 100
        assert fit.n_obs == len(y)

    def test_fixed_alpha_matches_free_alpha_likelihood_at_optimum(self):
        X, y = simulate_nb2(seed=21)
        free = fit_nbr(X, y)
        pinned = fit_nbr(X, y, alpha=free.alpha)
        assert pinned.log_likelihood == pytest.approx(free.log_likelihood, abs=1e-6)
        for name in free.coefficients:
            assert pinned.coefficients[name] == pytest.approx(
                free.coefficients[name], abs=1e-6
            )
