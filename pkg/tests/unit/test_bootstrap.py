"""Tests for the double bootstrap."""
import itertools
from typing import Any

import numpy as np
import pytest
import releff.bootstrap as bootstrap
from joblib import parallel_backend
from releff.bootstrap import check_supported, phi_tilde, run, simulate_trial
from releff.exceptions import (
    ConfigurationError,
    DegenerateDenominator,
    EmptyArm,
    ReleffWarning,
    TooManyInvalidReplicates,
    UnsupportedForBootstrap,
)
from releff.models.data import ContinuousDataset, OrdinalDataset
from releff.models.results import BootstrapConfig, TrialEstimate
from releff.utils.streams import derive_stream

from tests.utils import DataFactory


@pytest.fixture
def bare() -> OrdinalDataset:
    rng = np.random.default_rng(21)
    return DataFactory.bare_ordinal(list(rng.integers(1, 4, size=80)))


def small(**overrides: Any) -> BootstrapConfig:
    values: dict[str, Any] = {"B1": 3, "B2": 20, "N": 80, "seed": 5}
    values.update(overrides)
    return BootstrapConfig(**values)


class TestBootstrapConfig:
    """Test BootstrapConfig.for_sample."""

    def test_defaults_scale_with_n(self) -> None:
        """Test N = max(4n, 2000) and B2 = max(2n, 500)."""
        config = BootstrapConfig.for_sample(100, seed=1)
        assert (config.B1, config.B2, config.N) == (100, 500, 2000)

        config = BootstrapConfig.for_sample(1000, seed=1)
        assert (config.B2, config.N) == (2000, 4000)

    def test_overrides(self) -> None:
        """Test explicit values win and None is ignored."""
        config = BootstrapConfig.for_sample(100, seed=1, B1=10, N=None, threads=2)
        assert (config.B1, config.N, config.threads) == (10, 2000, 2)


class TestSimulateTrial:
    """Test simulate_trial."""

    def test_size_and_treatment(self, bare: OrdinalDataset) -> None:
        """Test N rows drawn from the source with binary treatment."""
        trial = simulate_trial(bare, 500, 0.3, derive_stream(1, 0, 1))

        assert trial.n == 500
        assert set(np.unique(trial.a)) <= {0, 1}
        assert 0.2 < trial.a.mean() < 0.4
        assert set(np.unique(trial.outcome.y)) <= set(np.unique(bare.y))

    def test_same_stream_same_trial(self, bare: OrdinalDataset) -> None:
        """Test trials are reproducible from their stream key."""
        first = simulate_trial(bare, 50, 0.5, derive_stream(1, 2, 3))
        second = simulate_trial(bare, 50, 0.5, derive_stream(1, 2, 3))
        np.testing.assert_array_equal(first.a, second.a)
        np.testing.assert_array_equal(first.outcome.y, second.outcome.y)


class TestCheckSupported:
    """Test check_supported."""

    def test_fully_adjusted(self, bare: OrdinalDataset) -> None:
        """Test the fully adjusted estimator is out of scope."""
        with pytest.raises(UnsupportedForBootstrap):
            check_supported(bare, "dim", "fully_adjusted")

    def test_survival(self, bare: OrdinalDataset) -> None:
        """Test survival estimands are out of scope."""
        with pytest.raises(UnsupportedForBootstrap):
            check_supported(bare, "rmst")

    def test_outcome_type(self, bare: OrdinalDataset) -> None:
        """Test ATE with an ordinal outcome."""
        with pytest.raises(ConfigurationError):
            check_supported(bare, "ate")


class TestPhiTilde:
    """Test phi_tilde."""

    def test_no_covariates_gives_one(self, bare: OrdinalDataset) -> None:
        """Test identical estimators give a ratio of 1."""
        value, invalid = phi_tilde(bare, "dim", small())
        assert value == pytest.approx(1.0, abs=1e-6)
        assert invalid == 0

    def test_strong_covariates(self, continuous_data: ContinuousDataset) -> None:
        """Test regression adjustment shrinks the spread of ATE estimates."""
        value, _ = phi_tilde(continuous_data, "ate", small(B2=40, N=200))
        assert 0.3 < value < 0.9

    def test_all_inner_trials_invalid(self, bare: OrdinalDataset, monkeypatch: Any) -> None:
        """Test the valid share check."""

        def empty_arm(*args: Any, **kwargs: Any) -> TrialEstimate:
            raise EmptyArm("Arm 1 has no observations")

        monkeypatch.setattr(bootstrap, "unadjusted_estimate", empty_arm)

        with pytest.raises(TooManyInvalidReplicates):
            phi_tilde(bare, "dim", small())

    def test_constant_unadjusted_estimates(self, bare: OrdinalDataset, monkeypatch: Any) -> None:
        """Test a zero denominator."""
        monkeypatch.setattr(
            bootstrap,
            "unadjusted_estimate",
            lambda *args, **kwargs: TrialEstimate(psi=0.3, estimand="dim", kind="unadjusted"),
        )
        with pytest.raises(DegenerateDenominator):
            phi_tilde(bare, "dim", small())

    def test_unadjusted_estimates_equal_up_to_rounding(self, bare: OrdinalDataset, monkeypatch: Any) -> None:
        """Test estimates one ulp apart still make a degenerate denominator."""
        values = itertools.cycle([0.3, 0.1 + 0.2])
        monkeypatch.setattr(
            bootstrap,
            "unadjusted_estimate",
            lambda *args, **kwargs: TrialEstimate(psi=next(values), estimand="dim", kind="unadjusted"),
        )
        with pytest.raises(DegenerateDenominator):
            phi_tilde(bare, "dim", small())

    def test_single_inner_trial(self, bare: OrdinalDataset) -> None:
        """Test B2 = 1 is refused."""
        with pytest.raises(ConfigurationError):
            phi_tilde(bare, "dim", small(B2=1))


class TestRun:
    """Test the full double bootstrap."""

    def test_result_shape(self, bare: OrdinalDataset) -> None:
        """Test one value per outer replicate and a centered interval."""
        result = run(bare, "mw", small(), progress=False)

        assert len(result.replicate_values) == 3
        assert len(result.invalid_inner_counts) == 3
        assert result.ci[0] <= result.phi_tilde <= result.ci[1]
        assert result.se == pytest.approx(np.std(result.replicate_values, ddof=1))

    def test_reproducible(self, continuous_data: ContinuousDataset) -> None:
        """Test the same seed reproduces every replicate."""
        first = run(continuous_data, "ate", small(), progress=False)
        second = run(continuous_data, "ate", small(), progress=False)
        assert first == second

    def test_worker_count_does_not_matter(self, continuous_data: ContinuousDataset) -> None:
        """Test two workers give the single-worker result."""
        serial = run(continuous_data, "ate", small(), progress=False)
        with parallel_backend("threading"):
            parallel = run(continuous_data, "ate", small(threads=2), progress=False)
        assert parallel.replicate_values == serial.replicate_values
        assert parallel.phi_tilde == serial.phi_tilde

    def test_single_outer_replicate(self, continuous_data: ContinuousDataset) -> None:
        """Test B1 = 1 gives a point interval with a warning."""
        with pytest.warns(ReleffWarning):
            result = run(continuous_data, "ate", small(B1=1), progress=False)
        assert result.se == 0.0
        assert result.degenerate
        assert result.ci == (result.phi_tilde, result.phi_tilde)

    def test_constant_replicates(self, bare: OrdinalDataset, monkeypatch: Any) -> None:
        """Test equal replicate values give se = 0 exactly."""
        monkeypatch.setattr(bootstrap, "phi_tilde", lambda *args, **kwargs: (0.3, 0))
        with pytest.warns(ReleffWarning, match="standard error is zero"):
            result = run(bare, "dim", small(B1=7), progress=False)
        assert result.se == 0.0
        assert result.degenerate

    def test_failure_names_the_replicate(self, bare: OrdinalDataset, monkeypatch: Any) -> None:
        """Test errors carry the outer replicate index."""

        def empty_arm(*args: Any, **kwargs: Any) -> TrialEstimate:
            raise EmptyArm("Arm 0 has no observations")

        monkeypatch.setattr(bootstrap, "unadjusted_estimate", empty_arm)

        with pytest.raises(TooManyInvalidReplicates) as exc_info:
            run(bare, "dim", small(), progress=False)

        assert "outer replicate 0" in exc_info.value.__notes__

    def test_rejects_fully_adjusted(self, bare: OrdinalDataset) -> None:
        """Test the kind check runs first."""
        with pytest.raises(UnsupportedForBootstrap):
            run(bare, "dim", small(), kind="fully_adjusted")
