"""Tests for the covariate schema and dataset models."""
import numpy as np
import pytest
from pydantic import ValidationError
from releff.exceptions import ConfigurationError
from releff.models.data import (
    CovariateColumn,
    CovariateSchema,
    OrdinalDataset,
    SurvivalDataset,
    TrialDataset,
)

from tests.utils import DataFactory


@pytest.fixture
def mixed_schema() -> CovariateSchema:
    return CovariateSchema(
        columns=[
            CovariateColumn(name="age", kind="discrete", levels=["a", "b", "c"], ordered=True),
            CovariateColumn(name="race", kind="discrete", levels=["x", "y", "z"]),
            CovariateColumn(name="bmi", kind="continuous"),
        ]
    )


class TestCovariateSchema:
    """Test schema validation and design matrices."""

    def test_discrete_column_needs_levels(self) -> None:
        """Test a discrete column without levels is rejected."""
        with pytest.raises(ValidationError) as exc_info:
            CovariateColumn(name="sex", kind="discrete")
        assert "needs at least one level" in str(exc_info.value)

    def test_continuous_column_rejects_levels(self) -> None:
        """Test a continuous column cannot declare levels."""
        with pytest.raises(ValidationError):
            CovariateColumn(name="bmi", kind="continuous", levels=["low"])

    def test_duplicate_names_rejected(self) -> None:
        """Test column names must be unique."""
        column = CovariateColumn(name="bmi", kind="continuous")
        with pytest.raises(ValidationError) as exc_info:
            CovariateSchema(columns=[column, column])
        assert "unique" in str(exc_info.value)

    def test_design_encodes_by_kind(self, mixed_schema: CovariateSchema) -> None:
        """Test ordered codes stay numeric, unordered ones become dummies."""
        w = np.array([[0, 0, 1.5], [2, 1, -0.5], [1, 2, 0.0]])

        X = mixed_schema.design(w)

        assert X.shape == (3, 4)
        np.testing.assert_array_equal(X[:, 0], [0, 2, 1])
        np.testing.assert_array_equal(X[:, 1:3], [[0, 0], [1, 0], [0, 1]])
        np.testing.assert_array_equal(X[:, 3], [1.5, -0.5, 0.0])

    def test_cells_group_discrete_codes(self, mixed_schema: CovariateSchema) -> None:
        """Test cells ignore continuous columns."""
        w = np.array([[0, 1, 0.3], [0, 1, 9.0], [2, 0, 0.3]])

        g, keys = mixed_schema.cells(w)

        assert g[0] == g[1]
        assert g[0] != g[2]
        assert keys.shape == (2, 2)

    def test_cell_labels(self, mixed_schema: CovariateSchema) -> None:
        """Test labels join the discrete level names."""
        labels = mixed_schema.cell_labels(np.array([[1, 2, 0.0]]))
        assert labels == ["b|z"]

    def test_empty_schema(self) -> None:
        """Test a schema without columns gives an empty design and one cell."""
        schema = CovariateSchema(columns=[])
        w = np.zeros((4, 0))

        assert schema.design(w).shape == (4, 0)
        g, keys = schema.cells(w)
        np.testing.assert_array_equal(g, 0)
        assert keys.shape[0] == 1


class TestOrdinalDataset:
    """Test ordinal dataset validation."""

    def test_valid_dataset(self) -> None:
        """Test a small valid dataset."""
        data = DataFactory.bare_ordinal([1, 2, 3])
        assert data.n == 3
        assert data.K == 3

    def test_outcome_out_of_range(self) -> None:
        """Test outcomes outside 1..K are rejected."""
        with pytest.raises(ValidationError) as exc_info:
            DataFactory.bare_ordinal([1, 4])
        assert "1..3" in str(exc_info.value)

    def test_covariate_code_out_of_range(self) -> None:
        """Test discrete codes must index a level."""
        schema = DataFactory.schema(continuous=False)
        with pytest.raises(ValidationError) as exc_info:
            OrdinalDataset(covariates=schema, w=[[0], [3]], K=2, y=[1, 2])
        assert "codes outside its levels" in str(exc_info.value)

    def test_arrays_are_read_only(self) -> None:
        """Test stored arrays cannot be mutated."""
        data = DataFactory.bare_ordinal([1, 2, 3])
        with pytest.raises(ValueError):
            data.y[0] = 2

    def test_indicators(self) -> None:
        """Test I{Y <= k} for k < K."""
        data = DataFactory.bare_ordinal([1, 2, 3])
        np.testing.assert_array_equal(data.indicators(), [[1, 1], [0, 1], [0, 0]])

    def test_take_repeats_rows(self) -> None:
        """Test take resamples with repetition."""
        data = DataFactory.bare_ordinal([1, 2, 3])
        taken = data.take(np.array([2, 2, 0]))
        np.testing.assert_array_equal(taken.y, [3, 3, 1])


class TestSurvivalDataset:
    """Test survival dataset validation."""

    def test_needs_an_event(self) -> None:
        """Test data without events is rejected."""
        with pytest.raises(ValidationError) as exc_info:
            DataFactory.bare_survival([1, 2], [0, 0], [1.0, 2.0])
        assert "At least one event" in str(exc_info.value)

    def test_grid_must_increase(self) -> None:
        """Test the grid is strictly increasing."""
        with pytest.raises(ValidationError):
            DataFactory.bare_survival([1], [1], [1.0, 1.0])

    def test_time_index(self) -> None:
        """Test the smallest grid time at or after t."""
        data = DataFactory.bare_survival([1, 3], [1, 0], [0.2, 0.4, 0.6])
        assert data.time_index(0.4) == 2
        assert data.time_index(0.45) == 3
        assert data.time_index(0.1) == 1
        with pytest.raises(ConfigurationError):
            data.time_index(0.7)

    def test_take_keeps_grid(self) -> None:
        """Test resampling keeps the grid."""
        data = DataFactory.bare_survival([1, 3], [1, 0], [0.2, 0.4, 0.6])
        taken = data.take(np.array([0, 0]))
        assert isinstance(taken, SurvivalDataset)
        np.testing.assert_array_equal(taken.grid, data.grid)


class TestTrialDataset:
    """Test trial dataset validation."""

    def test_treatment_length_must_match(self) -> None:
        """Test one treatment per row."""
        with pytest.raises(ValidationError):
            TrialDataset(outcome=DataFactory.bare_ordinal([1, 2]), a=[1], pi=0.5)

    def test_treatment_must_be_binary(self) -> None:
        """Test treatments are 0 or 1."""
        with pytest.raises(ValidationError):
            TrialDataset(outcome=DataFactory.bare_ordinal([1, 2]), a=[1, 2], pi=0.5)
