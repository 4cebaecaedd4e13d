"""Tests for fully observed variance components and the relative efficiency ratio."""
import numpy as np
import pytest
from pydantic import ValidationError
from releff.datasets import empirical_summary
from releff.efficiency.fully_observed import (
    TransformU,
    fully_adjusted_variance,
    lor_weights,
    quadratic_bundle,
    releff,
    unadjusted_variance,
    working_model_variance,
)
from releff.exceptions import (
    BoundaryCDF,
    ConfigurationError,
    DegenerateOutcome,
    MismatchedBundles,
    ModelRangeViolation,
    NonConvergedFit,
)
from releff.models.data import ContinuousDataset, CovariateSchema, OrdinalDataset
from releff.models.results import VarianceBundle
from releff.nuisance.linear import fit_ols
from releff.nuisance.ordinal import fit_proportional_odds
from releff.nuisance.regression import fit_conditional_cdf, fit_conditional_mean

from tests.utils import DataFactory


class ConstantModel:
    """Predictor returning one value everywhere."""

    def __init__(self, value: float) -> None:
        self.value = value

    def predict(self, w: np.ndarray) -> np.ndarray:
        return np.full(len(w), self.value)


def bundle(sigma2: float, n: int = 3, estimand: str = "dim", label: str = "unadjusted", **kwargs) -> VarianceBundle:
    return VarianceBundle(sigma2=sigma2, if_values=np.zeros(n), label=label, estimand=estimand, **kwargs)


class TestTransformU:
    """Test score transforms."""

    def test_identity(self) -> None:
        """Test u(k) = k."""
        u = TransformU.identity(4)
        assert u.values == [1.0, 2.0, 3.0, 4.0]
        np.testing.assert_array_equal(u.b, [-1.0, -1.0, -1.0])

    def test_nonincreasing_allowed(self) -> None:
        """Test weakly decreasing scores."""
        assert TransformU(values=[3.0, 3.0, 0.0]).K == 3

    def test_not_monotone(self) -> None:
        """Test scores that go up and down."""
        with pytest.raises(ValidationError) as exc_info:
            TransformU(values=[0.0, 2.0, 1.0])
        assert "monotone" in str(exc_info.value)

    def test_apply(self) -> None:
        """Test mapping levels to scores."""
        np.testing.assert_array_equal(TransformU(values=[0.0, 1.0, 5.0]).apply(np.array([3, 1])), [5.0, 0.0])


class TestLorWeights:
    """Test the log-odds-ratio weights."""

    def test_half(self) -> None:
        """Test F = 0.5 gives c = 4 with zero slope."""
        c, dc = lor_weights(np.array([0.5]))
        assert c[0] == pytest.approx(4.0)
        assert dc[0] == pytest.approx(0.0)

    def test_boundary(self) -> None:
        """Test F = 1 is rejected."""
        with pytest.raises(BoundaryCDF):
            lor_weights(np.array([0.3, 1.0]))


class TestQuadraticBundle:
    """Test quadratic_bundle."""

    def test_mean_square(self) -> None:
        """Test sigma2 = mean (e b)^2 and centered influence values."""
        e = np.array([[1.0, 0.0], [0.0, 2.0], [1.0, 1.0]])
        R, sigma2, if_values = quadratic_bundle(e, np.array([1.0, -1.0]))

        np.testing.assert_array_equal(R, [1.0, -2.0, 0.0])
        assert sigma2 == pytest.approx(5 / 3)
        assert if_values.mean() == pytest.approx(0.0)


class TestUnadjustedVariance:
    """Test unadjusted_variance."""

    def test_dim_uniform(self) -> None:
        """Test Y = [1, 2, 3] gives 2/3."""
        assert unadjusted_variance(DataFactory.bare_ordinal([1, 2, 3]), "dim").sigma2 == pytest.approx(2 / 3)

    def test_mw_uniform(self) -> None:
        """Test uniform p gives (1 - 3/27) / 12."""
        assert unadjusted_variance(DataFactory.bare_ordinal([1, 2, 3]), "mw").sigma2 == pytest.approx(2 / 27)

    def test_lor_binary_half(self) -> None:
        """Test K = 2 with F(1) = 1/2 gives 4."""
        assert unadjusted_variance(DataFactory.bare_ordinal([1, 2], K=2), "lor").sigma2 == pytest.approx(4.0)

    def test_ate_is_outcome_variance(self, continuous_data: ContinuousDataset) -> None:
        """Test ATE uses the divisor-n variance of Y."""
        assert unadjusted_variance(continuous_data, "ate").sigma2 == pytest.approx(np.var(continuous_data.y))

    def test_custom_transform(self) -> None:
        """Test u = (0, 0, 1) gives the variance of I{Y = 3}."""
        bundle_ = unadjusted_variance(DataFactory.bare_ordinal([1, 3, 3, 2]), "dim", [0.0, 0.0, 1.0])
        assert bundle_.sigma2 == pytest.approx(0.25)

    def test_transform_length_mismatch(self) -> None:
        """Test u with the wrong number of levels."""
        with pytest.raises(ConfigurationError):
            unadjusted_variance(DataFactory.bare_ordinal([1, 2, 3]), "dim", [0.0, 1.0])

    def test_degenerate_outcome(self) -> None:
        """Test a point mass has no variance."""
        with pytest.raises(DegenerateOutcome):
            unadjusted_variance(DataFactory.bare_ordinal([2, 2]), "dim")
        with pytest.raises(BoundaryCDF):
            unadjusted_variance(DataFactory.bare_ordinal([2, 2]), "lor")

    def test_constant_continuous_outcome(self) -> None:
        """Test a constant real outcome is degenerate despite rounding in its mean."""
        data = ContinuousDataset(covariates=CovariateSchema(columns=[]), w=np.zeros((7, 0)), y=[0.1] * 7)
        with pytest.raises(DegenerateOutcome):
            unadjusted_variance(data, "ate")

    def test_wrong_outcome_type(self, ordinal_data: OrdinalDataset) -> None:
        """Test ATE needs a continuous outcome."""
        with pytest.raises(ConfigurationError):
            unadjusted_variance(ordinal_data, "ate")

    @pytest.mark.parametrize("estimand", ["dim", "mw", "lor"])
    def test_influence_values_are_centered(self, ordinal_data: OrdinalDataset, estimand: str) -> None:
        """Test influence values average to zero."""
        bundle_ = unadjusted_variance(ordinal_data, estimand)  # type: ignore[arg-type]
        assert bundle_.n == ordinal_data.n
        assert bundle_.if_values.mean() == pytest.approx(0.0, abs=1e-12)


class TestFullyAdjustedVariance:
    """Test fully_adjusted_variance."""

    def test_cell_means_give_within_cell_variance(self, discrete_ordinal_data: OrdinalDataset) -> None:
        """Test sigma2_a is the pooled within-cell variance."""
        data = discrete_ordinal_data
        model = fit_conditional_mean(data.y.astype(float), data.w, data.covariates)

        sigma2 = fully_adjusted_variance(data, "dim", model).sigma2

        cells = data.w[:, 0]
        expected = sum(np.sum((data.y[cells == a] - data.y[cells == a].mean()) ** 2) for a in range(3)) / data.n
        assert sigma2 == pytest.approx(expected)
        assert sigma2 < unadjusted_variance(data, "dim").sigma2

    @pytest.mark.parametrize("estimand", ["dim", "mw", "lor"])
    def test_no_covariates_gives_one(self, estimand: str) -> None:
        """Test adjusting for nothing has relative efficiency 1."""
        data = DataFactory.bare_ordinal([1, 1, 2, 3, 3, 3, 2, 1])
        if estimand == "lor":
            model = fit_conditional_cdf(data)
        elif estimand == "mw":
            model = fit_conditional_mean(empirical_summary(data).eta[data.y - 1], data.w, data.covariates)
        else:
            model = fit_conditional_mean(data.y.astype(float), data.w, data.covariates)

        estimate = releff(
            fully_adjusted_variance(data, estimand, model),  # type: ignore[arg-type]
            unadjusted_variance(data, estimand),  # type: ignore[arg-type]
        )

        assert estimate.phi == pytest.approx(1.0)

    def test_ate_residual_variance(self, continuous_data: ContinuousDataset) -> None:
        """Test sigma2_a is the mean squared residual of the flexible fit."""
        data = continuous_data
        model = fit_conditional_mean(data.y, data.w, data.covariates, q_max=3)

        bundle_ = fully_adjusted_variance(data, "ate", model)

        assert bundle_.sigma2 == pytest.approx(np.mean((data.y - model.predict(data.w)) ** 2))
        assert bundle_.if_values.mean() == pytest.approx(0.0, abs=1e-12)

    def test_range_violation(self) -> None:
        """Test predictions outside the score hull."""
        data = DataFactory.bare_ordinal([1, 2, 3])
        with pytest.raises(ModelRangeViolation):
            fully_adjusted_variance(data, "dim", ConstantModel(10.0))


class TestWorkingModelVariance:
    """Test working_model_variance."""

    def test_ate_uses_ols_residuals(self, continuous_data: ContinuousDataset) -> None:
        """Test sigma2_m is the mean squared OLS residual."""
        fit = fit_ols(continuous_data)
        resid = continuous_data.y - fit.predict(continuous_data.design)

        assert working_model_variance(continuous_data, "ate", fit).sigma2 == pytest.approx(np.mean(resid**2))

    def test_no_covariates_gives_one(self) -> None:
        """Test the working model without covariates reproduces the unadjusted variance."""
        data = DataFactory.bare_ordinal([1, 1, 2, 3, 3, 3, 2, 1, 2, 2])
        fit = fit_proportional_odds(data)

        estimate = releff(working_model_variance(data, "dim", fit), unadjusted_variance(data, "dim"))

        assert estimate.phi == pytest.approx(1.0, abs=1e-8)

    @pytest.mark.parametrize("estimand", ["dim", "mw", "lor"])
    def test_predictive_covariates_help(self, ordinal_data: OrdinalDataset, estimand: str) -> None:
        """Test the working model gains precision when covariates predict the outcome."""
        fit = fit_proportional_odds(ordinal_data)

        num = working_model_variance(ordinal_data, estimand, fit)  # type: ignore[arg-type]
        estimate = releff(num, unadjusted_variance(ordinal_data, estimand))  # type: ignore[arg-type]

        assert 0.3 < estimate.phi < 1.0
        assert estimate.kind == "working_model"
        assert num.if_values.mean() == pytest.approx(0.0, abs=1e-6)
        assert 0.0 < estimate.se < 0.2

    def test_non_converged_fit(self, ordinal_data: OrdinalDataset) -> None:
        """Test a fit that did not converge is refused."""
        fit = fit_proportional_odds(ordinal_data).model_copy(update={"converged": False})
        with pytest.raises(NonConvergedFit):
            working_model_variance(ordinal_data, "dim", fit)

    def test_wrong_fit_type(self, ordinal_data: OrdinalDataset, continuous_data: ContinuousDataset) -> None:
        """Test DIM needs a proportional-odds fit."""
        with pytest.raises(ConfigurationError):
            working_model_variance(ordinal_data, "dim", fit_ols(continuous_data))


class TestReleff:
    """Test releff."""

    def test_ratio(self) -> None:
        """Test 0.42 / 0.56."""
        estimate = releff(bundle(0.42, label="working_model"), bundle(0.56))
        assert estimate.phi == pytest.approx(0.75)
        assert estimate.sigma2_u == 0.56

    def test_identical_bundles(self) -> None:
        """Test num = den gives phi = 1 and se = 0."""
        den = VarianceBundle(sigma2=0.5, if_values=[0.1, -0.3, 0.2], label="unadjusted", estimand="dim")
        estimate = releff(den, den)
        assert estimate.phi == pytest.approx(1.0)
        assert estimate.se == pytest.approx(0.0)

    def test_delta_method_influence(self) -> None:
        """Test (IF_num - phi IF_den) / sigma2_den."""
        num = VarianceBundle(sigma2=0.2, if_values=[1.0, -1.0], label="fully_adjusted", estimand="mw")
        den = VarianceBundle(sigma2=0.4, if_values=[0.5, -0.5], label="unadjusted", estimand="mw")

        estimate = releff(num, den)

        np.testing.assert_allclose(estimate.if_values, [1.875, -1.875])
        assert estimate.se == pytest.approx(1.875 / np.sqrt(2))

    def test_mismatched_length(self) -> None:
        """Test bundles over different rows."""
        with pytest.raises(MismatchedBundles):
            releff(bundle(0.4, n=3), bundle(0.5, n=4))

    def test_mismatched_estimand(self) -> None:
        """Test bundles for different estimands."""
        with pytest.raises(MismatchedBundles):
            releff(bundle(0.4, estimand="mw"), bundle(0.5))

    def test_zero_denominator(self) -> None:
        """Test sigma2_u = 0."""
        with pytest.raises(DegenerateOutcome):
            releff(bundle(0.4), bundle(0.0))

    def test_floored_terms_add_up(self) -> None:
        """Test floored counts carry into the estimate."""
        estimate = releff(bundle(0.4, estimand="rd", floored=2), bundle(0.5, estimand="rd", floored=1))
        assert estimate.floored == 3
        assert estimate.to_dict()["floored_terms"] == 3
