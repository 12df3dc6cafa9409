import pytest

from nbmle import (
    IdentityId,
    check_digamma_chain,
    check_digamma_sum,
    check_trigamma_chain,
    check_trigamma_sum,
    default_grid,
)


def residual_at(report, point, pair):
    idx = report.grid.index(tuple(point))
    return report.residuals[idx][pair]


def value_at(report, point, label):
    idx = report.grid.index(tuple(point))
    return report.values[idx][label]


class TestDigammaSum:
    def test_zero_count_point(self):
        r = check_digamma_sum(grid=[(0, 2.0)])
        assert value_at(r, (0, 2.0), "digamma_diff") == 0.0
        assert value_at(r, (0, 2.0), "finite_sum") == 0.0

    def test_harmonic_point(self):
        r = check_digamma_sum(grid=[(3, 1.0)])
        assert value_at(r, (3, 1.0), "finite_sum") == pytest.approx(11.0 / 6.0)
        assert residual_at(r, (3, 1.0), "digamma_diff_vs_finite_sum") < 1e-10

    def test_default_grid_holds(self):
        r = check_digamma_sum()
        assert r.verdicts["digamma_diff_vs_finite_sum"].holds
        assert r.verdicts["digamma_diff_vs_finite_sum"].tol == 1e-9


class TestDigammaChain:
    def test_zero_count_point_all_zero(self):
        r = check_digamma_chain(grid=[(0, 0.4)])
        for label in ("fd_derivative", "digamma_diff", "scaled_sum"):
            assert value_at(r, (0, 0.4), label) == 0.0

    def test_unit_point_closed_form(self):
        # ln[Gamma(1 + 1/t)/Gamma(1/t)] = -ln t, so the derivative is -1 at
        # t=1; the scaled sum is -1; the bare digamma difference is +1.
        r = check_digamma_chain(grid=[(1, 1.0)])
        assert value_at(r, (1, 1.0), "fd_derivative") == pytest.approx(-1.0, abs=1e-6)
        assert value_at(r, (1, 1.0), "scaled_sum") == -1.0
        assert value_at(r, (1, 1.0), "digamma_diff") == pytest.approx(1.0, abs=1e-12)
        assert residual_at(r, (1, 1.0), "fd_derivative_vs_scaled_sum") < 1e-6
        assert residual_at(r, (1, 1.0), "digamma_diff_vs_scaled_sum") \
            == pytest.approx(2.0, abs=1e-10)

    def test_default_grid_verdicts(self):
        r = check_digamma_chain()
        assert r.verdicts["fd_derivative_vs_scaled_sum"].holds
        assert not r.verdicts["digamma_diff_vs_scaled_sum"].holds
        assert r.verdicts["digamma_diff_vs_scaled_sum"].max_residual > 0.1
        assert not r.verdicts["fd_derivative_vs_digamma_diff"].holds


class TestTrigammaChain:
    def test_zero_count_point_all_zero(self):
        r = check_trigamma_chain(grid=[(0, 2.0)])
        for label in ("fd_second", "trigamma_diff", "weighted_sum"):
            assert value_at(r, (0, 2.0), label) == 0.0

    def test_unit_point_closed_form(self):
        # Second derivative of -ln t is +1 at t=1; the weighted sum is 1;
        # the bare trigamma difference Psi'(2) - Psi'(1) is -1.
        r = check_trigamma_chain(grid=[(1, 1.0)])
        assert value_at(r, (1, 1.0), "fd_second") == pytest.approx(1.0, abs=1e-4)
        assert value_at(r, (1, 1.0), "weighted_sum") == 1.0
        assert value_at(r, (1, 1.0), "trigamma_diff") == pytest.approx(-1.0, abs=1e-12)
        assert residual_at(r, (1, 1.0), "trigamma_diff_vs_weighted_sum") \
            == pytest.approx(2.0, abs=1e-10)

    def test_default_grid_verdicts(self):
        r = check_trigamma_chain()
        assert r.verdicts["fd_second_vs_weighted_sum"].holds
        assert r.verdicts["fd_second_vs_weighted_sum"].tol == 1e-4
        assert not r.verdicts["trigamma_diff_vs_weighted_sum"].holds
        assert r.verdicts["trigamma_diff_vs_weighted_sum"].max_residual > 0.1


class TestTrigammaSum:
    def test_zero_count_point(self):
        r = check_trigamma_sum(grid=[(0, 1.0)])
        assert value_at(r, (0, 1.0), "trigamma_diff") == 0.0
        assert value_at(r, (0, 1.0), "neg_sq_sum") == 0.0

    def test_squared_reciprocal_point(self):
        r = check_trigamma_sum(grid=[(2, 1.0)])
        assert value_at(r, (2, 1.0), "trigamma_diff") == pytest.approx(-1.25)
        assert value_at(r, (2, 1.0), "neg_sq_sum") == pytest.approx(-1.25)
        assert residual_at(r, (2, 1.0), "trigamma_diff_vs_neg_sq_sum") < 1e-10

    def test_default_grid_holds_with_algebraic_rewrites(self):
        r = check_trigamma_sum()
        assert r.verdicts["trigamma_diff_vs_neg_sq_sum"].holds
        assert r.verdicts["neg_sq_sum_vs_theta_scaled_form"].holds
        assert r.verdicts["neg_sq_sum_vs_theta_scaled_form"].tol == 1e-12
        assert r.verdicts["theta_scaled_form_vs_reciprocal_form"].holds


class TestReportMechanics:
    def test_deterministic(self):
        a = check_digamma_chain().to_dict()
        b = check_digamma_chain().to_dict()
        assert a == b

    def test_residuals_nonnegative_and_complete(self):
        r = check_trigamma_chain()
        labels = {"fd_second", "trigamma_diff", "weighted_sum"}
        for res in r.residuals:
            assert len(res) == 3  # all pairs of the chain
            assert all(v >= 0.0 for v in res.values())
        for vals in r.values:
            assert set(vals) == labels

    def test_invalid_points_marked(self):
        r = check_digamma_sum(grid=[(2, 1.0), (2, -1.0)])
        assert (2, -1.0) in r.invalid_points
        assert (2, 1.0) in r.grid

    def test_empty_grid_rejected(self):
        from nbmle import DomainError

        with pytest.raises(DomainError):
            check_digamma_sum(grid=[])

    def test_default_grid_shape(self):
        assert len(default_grid()) == 30

    def test_identity_ids(self):
        assert check_digamma_sum(grid=[(1, 1.0)]).identity is IdentityId.DIGAMMA_SUM
        assert check_trigamma_sum(grid=[(1, 1.0)]).identity is IdentityId.TRIGAMMA_SUM

    def test_serialisable(self):
        import json

        payload = json.dumps(check_trigamma_sum().to_dict())
        assert "trigamma_diff_vs_neg_sq_sum" in payload

    def test_fractional_count_marked_invalid(self):
        r = check_digamma_sum(grid=[(2, 1.0), (2.5, 1.0)])
        assert (2.5, 1.0) in r.invalid_points

    def test_fully_invalid_grid_rejected(self):
        from nbmle import DomainError

        with pytest.raises(DomainError):
            check_digamma_sum(grid=[(2, -1.0), (-3, 1.0)])
