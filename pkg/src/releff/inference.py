"""Wald intervals, the sample-splitting test of phi = 1 and the two-step confidence set."""
import logging
import math
import warnings
from typing import Literal

import numpy as np
from scipy.special import expit, logit
from scipy.stats import norm

from .efficiency.analysis import AnalysisRequest, Dataset, estimate, variance_components
from .exceptions import LogitRangeViolation, ReleffWarning, TooFewObservations
from .models.results import ConfidenceSet, RelEffEstimate, SplitTestResult
from .utils.streams import derive_stream

logger = logging.getLogger(__name__)

Scale = Literal["identity", "logit"]


def z_value(level: float) -> float:
    """Two-sided normal quantile z_{1 - alpha/2} for level 1 - alpha."""
    return float(norm.ppf(1.0 - (1.0 - level) / 2.0))


def wald_interval(phi: float, se: float, level: float = 0.95, scale: Scale = "identity") -> ConfidenceSet:
    """
    Wald interval phi -/+ z se, optionally built on the logit scale and mapped back.

    Args:
        phi: Point estimate
        se: Standard error
        level: Confidence level
        scale: identity or logit

    Returns:
        ConfidenceSet: The interval; a point interval when se = 0

    Raises:
        LogitRangeViolation: If the logit scale is requested for phi outside (0, 1)
    """
    if not math.isfinite(se) or se < 0:
        raise ValueError(f"Standard error {se} is not a finite nonnegative number")
    if scale == "logit" and not 0.0 < phi < 1.0:
        raise LogitRangeViolation(f"Estimate {phi:g} is outside (0, 1); use the identity scale")
    if se == 0.0:
        message = "Standard error is zero; reporting a point interval"
        logger.warning(message, extra={"phi": phi})
        warnings.warn(message, ReleffWarning, stacklevel=2)
        return ConfidenceSet(interval=(phi, phi), level=level, scale=scale, degenerate=True)

    z = z_value(level)
    if scale == "identity":
        interval = (phi - z * se, phi + z * se)
    else:
        half = z * se / (phi * (1.0 - phi))
        center = float(logit(phi))
        interval = (float(expit(center - half)), float(expit(center + half)))
    return ConfidenceSet(interval=interval, level=level, scale=scale)


def wald_ci(est: RelEffEstimate, level: float = 0.95, scale: Scale = "identity") -> ConfidenceSet:
    """Wald interval of a relative-efficiency estimate."""
    return wald_interval(est.phi, est.se, level, scale)


def split_test(
    data: Dataset,
    request: AnalysisRequest,
    *,
    level: float = 0.95,
    seed: int = 0,
    min_split_n: int = 40,
) -> SplitTestResult:
    """
    Test phi = 1 with the adjusted component from one half of the data and the unadjusted from the other.

    The rows are shuffled with a stream derived from `seed`; the first
    ceil(n/2) shuffled rows give the adjusted component, the rest the
    unadjusted one. The two estimates are independent, so the ratio has
    variance E[IF_adj^2]/n1 + phi^2 E[IF_u^2]/n2, over sigma2_u^2.

    Args:
        data: External data
        request: Estimand and adjusted estimator
        level: 1 - alpha
        seed: Seed of the pre-split shuffle
        min_split_n: Smallest accepted n

    Returns:
        SplitTestResult: Decision, statistic, two-sided p-value and split-sample interval

    Raises:
        TooFewObservations: If n < min_split_n
    """
    n = data.n
    if n < min_split_n:
        raise TooFewObservations(f"The split test needs at least {min_split_n} rows, got {n}")
    order = derive_stream(seed).permutation(n)
    n1 = (n + 1) // 2
    first, second = data.take(order[:n1]), data.take(order[n1:])
    num, _ = variance_components(first, request)
    _, den = variance_components(second, request)

    phi = num.sigma2 / den.sigma2
    var = (np.mean(num.if_values**2) / n1 + phi**2 * np.mean(den.if_values**2) / (n - n1)) / den.sigma2**2
    se = float(np.sqrt(var))
    if se > 0.0:
        statistic = (phi - 1.0) / se
    else:
        statistic = 0.0 if phi == 1.0 else math.copysign(math.inf, phi - 1.0)
    pvalue = float(2.0 * norm.sf(abs(statistic)))
    z = z_value(level)
    result = SplitTestResult(
        reject=pvalue < 1.0 - level,
        statistic=float(statistic),
        pvalue=min(pvalue, 1.0),
        seed=seed,
        phi_split=phi,
        se_split=se,
        interval=(phi - z * se, phi + z * se),
        n_numerator=n1,
        n_denominator=n - n1,
        level=level,
    )
    logger.debug(
        "Split test",
        extra={"estimand": request.estimand, "statistic": result.statistic, "reject": result.reject},
    )
    return result


def two_step_set(
    data: Dataset,
    request: AnalysisRequest,
    *,
    level: float = 0.95,
    seed: int = 0,
    scale: Scale = "identity",
    convex_hull: bool = False,
    min_split_n: int = 40,
    est: RelEffEstimate | None = None,
) -> ConfidenceSet:
    """
    Wald interval joined with {1} unless the split test rejects phi = 1.

    Args:
        data: External data
        request: Estimand and adjusted estimator
        level: Confidence level of both the interval and the test
        seed: Seed of the split
        scale: Scale of the Wald interval
        convex_hull: Report the smallest interval containing the set
        min_split_n: Smallest n for the split test
        est: Full-sample estimate, if already computed

    Returns:
        ConfidenceSet: includes_one set when the test does not reject
    """
    est = est if est is not None else estimate(data, request)
    wald = wald_ci(est, level, scale)
    test = split_test(data, request, level=level, seed=seed, min_split_n=min_split_n)
    includes_one = not test.reject
    interval = wald.interval
    hull = False
    if includes_one and convex_hull:
        interval = (min(wald.lo, 1.0), max(wald.hi, 1.0))
        hull = True
    return ConfidenceSet(
        interval=interval,
        includes_one=includes_one,
        level=level,
        scale=scale,
        degenerate=wald.degenerate,
        hull=hull,
        test=test,
    )


def sample_size_reduction(phi: float) -> float:
    """
    Approximate proportional sample-size saving 1 - phi; negative when adjustment hurts.

    Raises:
        ValueError: If phi is negative or not finite
    """
    if not math.isfinite(phi) or phi < 0.0:
        raise ValueError(f"Relative efficiency {phi} must be finite and nonnegative")
    return 1.0 - phi
