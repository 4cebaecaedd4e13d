"""Data-generating processes of the Monte Carlo studies."""
import numpy as np
from pydantic import BaseModel, ConfigDict, Field, model_validator

from ..datasets import bin_times, make_grid
from ..models.censoring import TrialCensoringSpec
from ..models.data import CovariateColumn, CovariateSchema, OrdinalDataset, SurvivalDataset

AGE_GROUPS = ["0-19", "20-44", "45-54", "55-64", "65-74", "75-84", ">=85"]
AGE_PROBS = [0.01, 0.09, 0.12, 0.13, 0.18, 0.22, 0.25]
# death, ICU and survived, no ICU and survived
OUTCOME_PROBS = [
    [0.00, 0.00, 1.00],
    [0.01, 0.18, 0.81],
    [0.03, 0.32, 0.65],
    [0.08, 0.31, 0.61],
    [0.11, 0.37, 0.52],
    [0.17, 0.47, 0.36],
    [0.37, 0.35, 0.28],
]


class CdcDgp(BaseModel):
    """
    Hospitalized Covid-19 patients: age group and a three-level outcome.

    Outcome 1 is death, 2 ICU admission and survival, 3 survival without ICU.
    With `independent` set, outcomes are drawn from the marginal law whatever
    the age, which makes the relative efficiency exactly 1.
    """

    age_probs: list[float] = Field(default_factory=lambda: list(AGE_PROBS), description="P(age group)")
    outcome_probs: list[list[float]] = Field(
        default_factory=lambda: [list(row) for row in OUTCOME_PROBS], description="P(outcome | age group)"
    )
    age_groups: list[str] = Field(default_factory=lambda: list(AGE_GROUPS), description="Age group labels")
    independent: bool = Field(default=False, description="Draw outcomes independently of age")

    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"independent": False}})

    @model_validator(mode="after")
    def check_table(self) -> "CdcDgp":
        """Age probabilities and each conditional row sum to 1."""
        table = np.asarray(self.outcome_probs, dtype=float)
        if len(self.age_probs) != len(self.age_groups) or table.shape[0] != len(self.age_groups):
            raise ValueError("Age probabilities, labels and outcome rows must have equal length")
        if np.any(table < 0) or np.any(np.asarray(self.age_probs) < 0):
            raise ValueError("Probabilities must be nonnegative")
        if abs(sum(self.age_probs) - 1.0) > 1e-9 or np.any(np.abs(table.sum(axis=1) - 1.0) > 1e-9):
            raise ValueError("Probability rows must sum to 1")
        return self

    @property
    def K(self) -> int:
        return len(self.outcome_probs[0])

    @property
    def schema(self) -> CovariateSchema:
        return CovariateSchema(
            columns=[CovariateColumn(name="age", kind="discrete", levels=self.age_groups, ordered=True)]
        )

    def joint(self) -> np.ndarray:
        """P(age = a, Y = k) as a (groups x K) table."""
        pa = np.asarray(self.age_probs, dtype=float)
        conditional = np.asarray(self.outcome_probs, dtype=float)
        if self.independent:
            conditional = np.tile(pa @ conditional, (pa.size, 1))
        return pa[:, None] * conditional

    def marginal_outcome(self) -> np.ndarray:
        return self.joint().sum(axis=0)

    def generate(self, n: int, stream: np.random.Generator) -> OrdinalDataset:
        """n iid (age, outcome) rows."""
        if n < 1:
            raise ValueError("n must be at least 1")
        joint = self.joint()
        cells = stream.choice(joint.size, size=n, p=joint.ravel() / joint.sum())
        age, y = np.divmod(cells, self.K)
        return OrdinalDataset(covariates=self.schema, w=age[:, None], K=self.K, y=y + 1)


class ExpSurvivalDgp(BaseModel):
    """
    W ~ Uniform(0, 1), T | W ~ Exp(event_intercept + event_slope W), C ~ Exp(censoring_rate).

    Observed times are binned to the grid step * (1..) up to the horizon. The
    planned trial censors at rate trial_censoring_rate + trial_censoring_slope W.
    """

    event_intercept: float = Field(default=0.1, description="Event rate at w = 0", gt=0.0)
    event_slope: float = Field(default=0.9, description="Change of the event rate over w in [0, 1]")
    censoring_rate: float = Field(default=0.1, description="Censoring rate of the external data", ge=0.0)
    grid_step: float = Field(default=0.2, description="Grid step", gt=0.0)
    horizon: float = Field(default=3.0, description="Last grid time", gt=0.0)
    trial_censoring_rate: float = Field(default=0.1, description="Censoring rate of the planned trial", ge=0.0)
    trial_censoring_slope: float = Field(default=0.0, description="Covariate slope of the trial censoring rate")

    model_config = ConfigDict(frozen=True, json_schema_extra={"example": {"grid_step": 0.2, "horizon": 3.0}})

    @model_validator(mode="after")
    def check_rates(self) -> "ExpSurvivalDgp":
        """Event and trial censoring rates stay positive or zero on [0, 1]."""
        if self.event_intercept + min(self.event_slope, 0.0) <= 0.0:
            raise ValueError("Event rate must be positive for every w in [0, 1]")
        if self.trial_censoring_rate + min(self.trial_censoring_slope, 0.0) < 0.0:
            raise ValueError("Trial censoring rate must be nonnegative for every w in [0, 1]")
        return self

    @property
    def schema(self) -> CovariateSchema:
        return CovariateSchema(columns=[CovariateColumn(name="w", kind="continuous")])

    def grid(self, step: float | None = None, horizon: float | None = None) -> np.ndarray:
        return make_grid(step or self.grid_step, horizon or self.horizon)

    def event_rate(self, w: np.ndarray) -> np.ndarray:
        return self.event_intercept + self.event_slope * np.asarray(w, dtype=float)

    def survival(self, grid: np.ndarray, w: np.ndarray) -> np.ndarray:
        """S(t_j, w_i) = P(T > t_j | w_i) as an (n x k) matrix."""
        return np.exp(-np.outer(self.event_rate(w), grid))

    def trial_censoring(self, grid: np.ndarray, w: np.ndarray) -> np.ndarray:
        rate = self.trial_censoring_rate + self.trial_censoring_slope * np.asarray(w, dtype=float)
        return np.exp(-np.outer(rate, grid))

    def trial_censoring_spec(self) -> TrialCensoringSpec:
        return TrialCensoringSpec(exp_rate=self.trial_censoring_rate, exp_slope=self.trial_censoring_slope)

    def generate(self, n: int, stream: np.random.Generator) -> SurvivalDataset:
        """n iid rows binned to the grid."""
        if n < 1:
            raise ValueError("n must be at least 1")
        w = stream.random(n)
        t = stream.exponential(1.0 / self.event_rate(w))
        if self.censoring_rate > 0.0:
            c = stream.exponential(1.0 / self.censoring_rate, size=n)
        else:
            c = np.full(n, np.inf)
        grid = self.grid()
        y, delta = bin_times(np.minimum(t, c), (t <= c).astype(int), grid)
        return SurvivalDataset(covariates=self.schema, w=w[:, None], grid=grid, y=y, delta=delta)


def gen_cdc(n: int, stream: np.random.Generator, dgp: CdcDgp | None = None) -> OrdinalDataset:
    return (dgp or CdcDgp()).generate(n, stream)


def gen_exp_survival(
    n: int,
    stream: np.random.Generator,
    grid_step: float = 0.2,
    horizon: float = 3.0,
    dgp: ExpSurvivalDgp | None = None,
) -> SurvivalDataset:
    """Exponential survival data on the grid grid_step * (1..) up to `horizon`."""
    base = dgp or ExpSurvivalDgp()
    return base.model_copy(update={"grid_step": grid_step, "horizon": horizon}).generate(n, stream)
