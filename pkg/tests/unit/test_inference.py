"""Tests for Wald intervals, the split test and two-step confidence sets."""
from typing import Any

import numpy as np
import pytest
import releff.inference as inference
from releff.efficiency.analysis import AnalysisRequest, estimate
from releff.exceptions import LogitRangeViolation, ReleffWarning, TooFewObservations
from releff.inference import (
    sample_size_reduction,
    split_test,
    two_step_set,
    wald_ci,
    wald_interval,
    z_value,
)
from releff.models.data import ContinuousDataset
from releff.models.results import RelEffEstimate, SplitTestResult

from tests.utils import DataFactory, assert_interval

ATE_WORKING = AnalysisRequest(estimand="ate", kind="working_model")


@pytest.fixture(scope="module")
def strong_data() -> ContinuousDataset:
    return DataFactory.continuous(n=1000, seed=3)


def accepting_test(*args: Any, **kwargs: Any) -> SplitTestResult:
    return SplitTestResult(
        reject=False,
        statistic=-0.5,
        pvalue=0.62,
        seed=kwargs.get("seed", 0),
        phi_split=0.95,
        se_split=0.1,
        interval=(0.754, 1.146),
        n_numerator=50,
        n_denominator=50,
        level=kwargs.get("level", 0.95),
    )


class TestWaldInterval:
    """Test wald_interval and wald_ci."""

    def test_z_value(self) -> None:
        """Test the 95% two-sided quantile."""
        assert z_value(0.95) == pytest.approx(1.959964, abs=1e-6)
        assert z_value(0.9) == pytest.approx(1.644854, abs=1e-6)

    def test_identity_scale(self) -> None:
        """Test 0.84 with se 0.021."""
        assert_interval(wald_interval(0.84, 0.021).interval, 0.7988, 0.8812)

    def test_logit_scale(self) -> None:
        """Test 0.5 with se 0.05 on the logit scale."""
        assert_interval(wald_interval(0.5, 0.05, scale="logit").interval, 0.4032, 0.5968)

    def test_logit_interval_stays_in_unit_interval(self) -> None:
        """Test a wide logit interval near the boundary."""
        ci = wald_interval(0.97, 0.05, scale="logit")
        assert 0.0 < ci.lo < 0.97 < ci.hi < 1.0

    def test_logit_needs_unit_interval(self) -> None:
        """Test phi above 1 on the logit scale."""
        with pytest.raises(LogitRangeViolation):
            wald_interval(1.05, 0.02, scale="logit")

    def test_zero_standard_error(self) -> None:
        """Test a point interval with a warning."""
        with pytest.warns(ReleffWarning):
            ci = wald_interval(0.8, 0.0)
        assert ci.interval == (0.8, 0.8)
        assert ci.degenerate
        assert ci.to_dict()["degenerate"] is True

    def test_negative_standard_error(self) -> None:
        """Test se < 0 is refused."""
        with pytest.raises(ValueError):
            wald_interval(0.8, -0.1)

    def test_wald_ci_uses_the_estimate(self) -> None:
        """Test the interval is centered on phi."""
        est = RelEffEstimate(
            phi=0.84,
            if_values=np.zeros(2),
            se=0.021,
            kind="fully_adjusted",
            estimand="dim",
            sigma2_u=1.0,
            sigma2_adj=0.84,
        )
        ci = wald_ci(est, level=0.9)
        assert (ci.lo + ci.hi) / 2 == pytest.approx(0.84)
        assert ci.level == 0.9


class TestSplitTest:
    """Test split_test."""

    def test_rejects_when_covariates_are_strong(self, strong_data: ContinuousDataset) -> None:
        """Test a large variance reduction is detected."""
        result = split_test(strong_data, ATE_WORKING, seed=1)

        assert result.reject
        assert result.statistic < 0
        assert result.pvalue < 0.05
        assert result.interval[1] < 1.0

    def test_halves(self) -> None:
        """Test ceil(n/2) rows go to the numerator."""
        result = split_test(DataFactory.continuous(n=101, seed=2), ATE_WORKING, seed=4)
        assert (result.n_numerator, result.n_denominator) == (51, 50)

    def test_reproducible(self, strong_data: ContinuousDataset) -> None:
        """Test the same seed gives the same split."""
        first = split_test(strong_data, ATE_WORKING, seed=9)
        second = split_test(strong_data, ATE_WORKING, seed=9)
        other = split_test(strong_data, ATE_WORKING, seed=10)

        assert first == second
        assert other.phi_split != first.phi_split

    def test_too_few_rows(self) -> None:
        """Test n below the minimum."""
        with pytest.raises(TooFewObservations):
            split_test(DataFactory.continuous(n=30), ATE_WORKING, min_split_n=40)


class TestTwoStepSet:
    """Test two_step_set."""

    def test_rejecting_test_keeps_wald_interval(self, strong_data: ContinuousDataset) -> None:
        """Test the set is the Wald interval when phi = 1 is rejected."""
        est = estimate(strong_data, ATE_WORKING)

        ci = two_step_set(strong_data, ATE_WORKING, seed=1, est=est)

        assert not ci.includes_one
        assert ci.interval == wald_ci(est).interval
        assert not ci.contains(1.0)
        assert ci.test is not None and ci.test.reject

    def test_accepting_test_adds_one(self, strong_data: ContinuousDataset, monkeypatch: Any) -> None:
        """Test the point 1 joins the set when the test does not reject."""
        monkeypatch.setattr(inference, "split_test", accepting_test)

        ci = two_step_set(strong_data, ATE_WORKING)

        assert ci.includes_one
        assert ci.contains(1.0)
        assert ci.hi < 1.0
        assert not ci.contains(0.999)
        assert ci.to_dict()["test"]["reject"] is False

    def test_convex_hull(self, strong_data: ContinuousDataset, monkeypatch: Any) -> None:
        """Test the hull option stretches the interval to 1."""
        monkeypatch.setattr(inference, "split_test", accepting_test)

        ci = two_step_set(strong_data, ATE_WORKING, convex_hull=True)

        assert ci.hull
        assert ci.hi == 1.0
        assert ci.contains(0.999)


class TestSampleSizeReduction:
    """Test sample_size_reduction."""

    @pytest.mark.parametrize("phi,expected", [(0.84, 0.16), (1.05, -0.05), (1.0, 0.0)])
    def test_values(self, phi: float, expected: float) -> None:
        """Test 1 - phi."""
        assert sample_size_reduction(phi) == pytest.approx(expected)

    def test_invalid(self) -> None:
        """Test negative phi."""
        with pytest.raises(ValueError):
            sample_size_reduction(-0.1)
