import math

import numpy as np
import pytest

from nbmle import (
    AllZeroResponseError,
    CollinearColumnsError,
    Dataset,
    FitOptions,
    FitResult,
    InfoKind,
    InformationNotInvertible,
    InfoMatrix,
    Params,
    fit,
    init_params,
    score_beta,
    standard_errors,
)
from conftest import simulate_dataset

RECOVERY = dict(seed=42, n=5000, beta=(0.5, -0.3), theta=0.8)


@pytest.fixture(scope="module")
def recovery_fit():
    ds = simulate_dataset(**RECOVERY)
    return ds, fit(ds)


def poisson_mle(ds, tol=1e-10):
    """Reference Poisson Newton fit used for the nested-model check."""
    beta = np.zeros(ds.p)
    for _ in range(100):
        lam = np.exp(ds.X @ beta)
        g = ds.X.T @ (ds.y - lam)
        if np.abs(g).max() < tol:
            break
        H = -(ds.X.T * lam) @ ds.X
        beta = beta - np.linalg.solve(H, g)
    return beta


class TestInitParams:
    def test_constant_counts(self):
        ds = Dataset(y=np.full(20, 3), X=np.ones((20, 1)))
        p0 = init_params(ds)
        assert p0.beta[0] == pytest.approx(math.log(3.5), rel=1e-12)
        assert p0.theta == 0.01  # zero sample variance clamps at the floor

    def test_method_of_moments_window(self):
        ds = simulate_dataset(31, 10_000, [math.log(2.0)], 1.0)
        p0 = init_params(ds)
        assert 0.5 <= p0.theta <= 2.0

    def test_collinear_design_named(self):
        x = np.linspace(0.0, 1.0, 12)
        X = np.column_stack([np.ones(12), x, 2.0 * x])
        ds = Dataset(y=np.arange(12), X=X, names=("intercept", "dose", "dose_x2"))
        with pytest.raises(CollinearColumnsError) as err:
            init_params(ds)
        assert "dose_x2" in str(err.value)


class TestFitRecovery:
    def test_converges_quickly(self, recovery_fit):
        _, res = recovery_fit
        assert res.converged
        assert res.iterations < 50

    def test_estimates_within_three_se(self, recovery_fit):
        _, res = recovery_fit
        truth = np.array([0.5, -0.3, 0.8])
        est = np.array([*res.beta_hat, res.theta_hat])
        assert res.se is not None
        np.testing.assert_array_less(np.abs(est - truth), 3.0 * res.se)

    def test_monotone_ascent_trace(self, recovery_fit):
        _, res = recovery_fit
        diffs = np.diff(res.loglik_trace)
        # Non-decreasing up to the roundoff floor of the objective.
        assert diffs.min() >= -1e-9 * (1.0 + abs(res.loglik_at_mle))

    def test_first_order_conditions_at_optimum(self, recovery_fit):
        ds, res = recovery_fit
        p = Params(res.beta_hat, res.theta_hat)
        assert np.abs(score_beta(ds, p)).max() <= 1e-8
        from nbmle import score_theta

        assert abs(score_theta(ds, p) * res.theta_hat) <= 1e-8

    def test_log_and_raw_theta_searches_agree(self, recovery_fit):
        ds, res = recovery_fit
        res_raw = fit(ds, log_theta_search=False)
        assert res_raw.theta_hat == pytest.approx(res.theta_hat, rel=1e-6)


class TestBoundaryBehaviour:
    def test_poisson_data_hits_floor(self):
        hits = 0
        for seed in range(7):
            rng = np.random.default_rng(seed)
            y = rng.poisson(2.0, size=400)
            if not np.any(y > 0):
                continue
            ds = Dataset(y=y, X=np.ones((400, 1)))
            res = fit(ds)
            if res.boundary_theta:
                hits += 1
                assert res.theta_hat <= 1e-6 * (1 + 1e-9)
        assert hits >= 4  # majority of seeds

    def test_zero_variance_positive_mean_proceeds(self):
        ds = Dataset(y=np.full(30, 2), X=np.ones((30, 1)))
        res = fit(ds)
        assert res.boundary_theta
        assert res.beta_hat[0] == pytest.approx(math.log(2.0), abs=1e-6)

    def test_all_zero_response_rejected(self):
        ds = Dataset(y=np.zeros(10, dtype=int), X=np.ones((10, 1)))
        with pytest.raises(AllZeroResponseError):
            fit(ds)


class TestNestedPoissonConsistency:
    def test_beta_matches_poisson_fit_for_tiny_dispersion(self):
        rng = np.random.default_rng(8)
        n = 3000
        X = np.hstack([np.ones((n, 1)), rng.standard_normal((n, 1))])
        beta_true = np.array([0.3, 0.4])
        y = rng.poisson(np.exp(X @ beta_true))
        ds = Dataset(y=y, X=X)
        res = fit(ds)
        ref = poisson_mle(ds)
        assert res.boundary_theta
        np.testing.assert_allclose(res.beta_hat, ref, atol=1e-3)


class TestStandardErrors:
    def test_identity_info(self):
        info = InfoMatrix(kind=InfoKind.OBSERVED, m=np.eye(2))
        np.testing.assert_allclose(standard_errors(info), [1.0, 1.0])

    def test_diagonal_info(self):
        info = InfoMatrix(kind=InfoKind.OBSERVED, m=np.diag([4.0, 25.0]))
        np.testing.assert_allclose(standard_errors(info), [0.5, 0.2])

    def test_non_positive_definite_raises(self):
        info = InfoMatrix(kind=InfoKind.OBSERVED, m=np.diag([1.0, -1.0]))
        with pytest.raises(InformationNotInvertible):
            standard_errors(info)

    def test_ses_match_monte_carlo_sd(self):
        ses = None
        estimates = []
        for seed in range(200):
            ds = simulate_dataset(seed, 2000, [0.5, -0.3], 0.8)
            res = fit(ds)
            estimates.append([*res.beta_hat, res.theta_hat])
            if seed == 42:
                ses = res.se
        sd = np.array(estimates).std(axis=0, ddof=1)
        assert ses is not None
        np.testing.assert_allclose(ses, sd, rtol=0.2)


class TestOptionsAndResult:
    def test_expected_info_flag(self):
        ds = simulate_dataset(3, 400, [0.2], 1.0)
        res = fit(ds, FitOptions(info_kind=InfoKind.EXPECTED))
        assert res.info.kind is InfoKind.EXPECTED
        assert res.info.truncation is not None
        np.testing.assert_array_equal(res.info.cross_block, 0.0)

    def test_nonconvergence_reported_not_raised(self):
        ds = simulate_dataset(5, 2000, [0.4, -0.1], 1.2)
        res = fit(ds, FitOptions(max_iter=1))
        assert not res.converged
        assert res.iterations == 1

    def test_options_validation(self):
        with pytest.raises(ValueError):
            FitOptions(max_iter=0)
        with pytest.raises(ValueError):
            FitOptions(grad_tol=-1.0)

    def test_result_round_trips_losslessly(self, recovery_fit):
        import json

        _, res = recovery_fit
        payload = json.dumps(res.to_dict())
        back = FitResult.from_dict(json.loads(payload))
        np.testing.assert_array_equal(back.beta_hat, res.beta_hat)
        assert back.theta_hat == res.theta_hat
        np.testing.assert_array_equal(back.se, res.se)
        assert back.loglik_trace == res.loglik_trace
        np.testing.assert_array_equal(back.info.m, res.info.m)
        assert back.converged == res.converged

    def test_expected_result_round_trip_keeps_truncation(self):
        import json

        ds = simulate_dataset(3, 200, [0.2], 1.0)
        res = fit(ds, FitOptions(info_kind=InfoKind.EXPECTED))
        back = FitResult.from_dict(json.loads(json.dumps(res.to_dict())))
        assert back.info.truncation.chosen == res.info.truncation.chosen
        assert back.info.truncation.cutoffs == res.info.truncation.cutoffs
