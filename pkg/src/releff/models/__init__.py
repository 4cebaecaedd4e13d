"""Domain models for datasets, fits and results."""
from .censoring import TrialCensoringSpec
from .data import (
    ContinuousDataset,
    CovariateColumn,
    CovariateSchema,
    Empirical,
    OrdinalDataset,
    OutcomeData,
    SurvivalDataset,
    TrialDataset,
)
from .results import (
    BootstrapConfig,
    BootstrapResult,
    ConfidenceSet,
    RelEffEstimate,
    ReplicationRecord,
    SimulationReport,
    SplitTestResult,
    TrialEstimate,
    VarianceBundle,
)

__all__ = [
    "BootstrapConfig",
    "BootstrapResult",
    "ConfidenceSet",
    "ContinuousDataset",
    "CovariateColumn",
    "CovariateSchema",
    "Empirical",
    "OrdinalDataset",
    "OutcomeData",
    "RelEffEstimate",
    "ReplicationRecord",
    "SimulationReport",
    "SplitTestResult",
    "SurvivalDataset",
    "TrialCensoringSpec",
    "TrialDataset",
    "TrialEstimate",
    "VarianceBundle",
]
