"""Double bootstrap of the working-model relative efficiency."""
import logging
import warnings
from collections.abc import Sequence
from typing import Any

import numpy as np

from .exceptions import (
    BoundaryCDF,
    ConfigurationError,
    DegenerateDenominator,
    EmptyArm,
    NonConvergedFit,
    ReleffWarning,
    SingularDesign,
    TooManyInvalidReplicates,
    UnsupportedForBootstrap,
)
from .inference import z_value
from .models.data import ContinuousDataset, OrdinalDataset, OutcomeData, TrialDataset
from .models.results import SURVIVAL_ESTIMANDS, BootstrapConfig, BootstrapResult, BundleLabel, Estimand
from .trial import unadjusted_estimate, working_model_estimate
from .utils.streams import derive_stream
from .utils.tasks import run_tasks

logger = logging.getLogger(__name__)

# Inner trials hitting these are dropped from both sums.
INVALID_INNER = (EmptyArm, BoundaryCDF, NonConvergedFit, SingularDesign)


def simulate_trial(source: OutcomeData, N: int, pi: float, stream: np.random.Generator) -> TrialDataset:
    """
    Draw N rows with replacement from `source` and attach Bernoulli(pi) treatments.

    Args:
        source: External data or an outer resample of it
        N: Trial size
        pi: Treatment probability
        stream: Generator owned by this trial

    Returns:
        TrialDataset: The simulated trial
    """
    idx = stream.integers(0, source.n, size=N)
    a = (stream.random(N) < pi).astype(int)
    return TrialDataset(outcome=source.take(idx), a=a, pi=pi)


def check_supported(data: Any, estimand: Estimand, kind: BundleLabel = "working_model") -> None:
    """
    Reject requests the double bootstrap does not cover.

    Raises:
        UnsupportedForBootstrap: For the fully adjusted estimator or a survival estimand
        ConfigurationError: If the outcome type does not match the estimand
    """
    if kind != "working_model":
        raise UnsupportedForBootstrap("The double bootstrap covers working-model estimators only")
    if estimand in SURVIVAL_ESTIMANDS:
        raise UnsupportedForBootstrap(f"No trial estimator for {estimand.upper()}; use the analytic path")
    if estimand == "ate" and not isinstance(data, ContinuousDataset):
        raise ConfigurationError("ATE needs a continuous outcome")
    if estimand != "ate" and not isinstance(data, OrdinalDataset):
        raise ConfigurationError(f"{estimand.upper()} needs an ordinal outcome")


def phi_tilde(
    source: OutcomeData,
    estimand: Estimand,
    config: BootstrapConfig,
    outer: int = 0,
    *,
    u: Sequence[float] | None = None,
    newton: dict[str, Any] | None = None,
) -> tuple[float, int]:
    """
    Ratio of the spread of working-model and unadjusted estimates over B2 simulated trials.

    Inner trial i of outer replicate `outer` draws from the stream
    (config.seed, outer, i + 1). Trials whose estimators fail on an empty arm,
    a boundary CDF, a non-converged fit or a singular design are dropped from
    numerator and denominator together.

    Args:
        source: Data the trials are drawn from
        estimand: ate, dim, mw or lor
        config: Bootstrap sizes and seed
        outer: Outer replicate index (0 is the original data)
        u: DIM score transform
        newton: Options of the proportional-odds fits

    Returns:
        tuple: (phi_tilde, number of dropped inner trials)

    Raises:
        TooManyInvalidReplicates: If the valid share falls below config.min_valid_fraction
        DegenerateDenominator: If all valid unadjusted estimates coincide
    """
    if config.B2 < 2:
        raise ConfigurationError("phi_tilde needs at least two inner trials")
    newton = newton or {}
    psi_u: list[float] = []
    psi_m: list[float] = []
    for i in range(config.B2):
        trial = simulate_trial(source, config.N, config.pi, derive_stream(config.seed, outer, i + 1))
        try:
            unadjusted = unadjusted_estimate(trial, estimand, u)
            working = working_model_estimate(trial, estimand, u, **newton)
        except INVALID_INNER as e:
            logger.debug("Inner trial dropped", extra={"outer": outer, "inner": i, "reason": type(e).__name__})
            continue
        psi_u.append(unadjusted.psi)
        psi_m.append(working.psi)

    valid = len(psi_u)
    invalid = config.B2 - valid
    if valid < 2 or valid < config.min_valid_fraction * config.B2:
        raise TooManyInvalidReplicates(
            f"Only {valid} of {config.B2} inner trials are valid (minimum share {config.min_valid_fraction})"
        )
    u_arr, m_arr = np.asarray(psi_u), np.asarray(psi_m)
    den = float(np.sum((u_arr - u_arr.mean()) ** 2))
    # spread within rounding error of the mean counts as none
    if den <= 64 * np.finfo(float).eps * valid * float(np.mean(u_arr**2)):
        raise DegenerateDenominator(f"All {valid} unadjusted inner estimates are equal up to rounding")
    value = float(np.sum((m_arr - m_arr.mean()) ** 2)) / den
    if invalid:
        logger.info("Inner trials dropped", extra={"outer": outer, "invalid": invalid, "valid": valid})
    return value, invalid


def _outer_task(item: tuple[int, OutcomeData, Estimand, BootstrapConfig, Any, Any]) -> tuple[float, int]:
    r, data, estimand, config, u, newton = item
    if r == 0:
        source = data
    else:
        source = data.take(derive_stream(config.seed, r, 0).integers(0, data.n, size=data.n))
    try:
        return phi_tilde(source, estimand, config, r, u=u, newton=newton)
    except Exception as e:
        e.add_note(f"outer replicate {r}")
        raise


def run(
    data: OutcomeData,
    estimand: Estimand,
    config: BootstrapConfig,
    *,
    kind: BundleLabel = "working_model",
    u: Sequence[float] | None = None,
    newton: dict[str, Any] | None = None,
    progress: bool | None = None,
) -> BootstrapResult:
    """
    Double bootstrap estimate of the working-model relative efficiency and its Wald interval.

    The center is phi_tilde on the original data; outer replicate r = 1..B1
    resamples n rows with the stream (seed, r, 0). Outer replicates run as
    independent tasks on up to config.threads workers and are reduced in index
    order, so the result does not depend on the worker count.

    Args:
        data: External data
        estimand: ate, dim, mw or lor
        config: Bootstrap configuration
        kind: Must be working_model
        u: DIM score transform
        newton: Options of the proportional-odds fits
        progress: Force the progress bar on or off

    Returns:
        BootstrapResult: Center, replicate values, sd and interval

    Raises:
        UnsupportedForBootstrap: For fully adjusted or survival requests
    """
    check_supported(data, estimand, kind)
    u_list = None if u is None else list(u)
    items = [(r, data, estimand, config, u_list, newton) for r in range(config.B1 + 1)]
    results = run_tasks(_outer_task, items, threads=config.threads, desc="bootstrap", progress=progress)

    center, center_invalid = results[0]
    values = [value for value, _ in results[1:]]
    invalid_counts = [count for _, count in results[1:]]
    degenerate = len(values) < 2 or float(np.ptp(values)) == 0.0
    se = 0.0 if degenerate else float(np.std(values, ddof=1))
    if degenerate:
        message = "Bootstrap standard error is zero; reporting a point interval"
        logger.warning(message, extra={"B1": config.B1})
        warnings.warn(message, ReleffWarning, stacklevel=2)
    z = z_value(config.level)
    result = BootstrapResult(
        phi_tilde=center,
        replicate_values=values,
        se=se,
        ci=(center - z * se, center + z * se),
        level=config.level,
        invalid_inner_counts=invalid_counts,
        center_invalid=center_invalid,
        degenerate=degenerate,
    )
    logger.info(
        "Double bootstrap finished",
        extra={"estimand": estimand, "B1": config.B1, "B2": config.B2, "phi_tilde": center, "se": se},
    )
    return result
