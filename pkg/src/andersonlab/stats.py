"""Confidence intervals and bound comparisons for the Monte Carlo labs.

Probabilities get Wilson score intervals (well behaved near 0 and 1),
moment means get the normal approximation.  A closed-form bound is flagged
violated only when the entire confidence interval sits above it, so
Monte Carlo noise cannot produce false alarms on a true inequality.
"""

from dataclasses import dataclass, field

import math

import numpy as np

# Two-sided 99% normal quantile (Phi^{-1}(0.995)).
Z99 = 2.5758293035489004


def wilson_interval(successes: int, trials: int, z: float = Z99):
    """Wilson score interval for a binomial proportion."""
    if trials < 1:
        raise ValueError("need at least one trial")
    if not 0 <= successes <= trials:
        raise ValueError("successes out of range")
    p = successes / trials
    z2 = z * z
    denom = 1.0 + z2 / trials
    center = (p + z2 / (2.0 * trials)) / denom
    half = z * math.sqrt(p * (1.0 - p) / trials + z2 / (4.0 * trials * trials)) / denom
    return max(0.0, center - half), min(1.0, center + half)


def normal_mean_interval(values, z: float = Z99):
    """(mean, low, high) under the normal approximation; degenerate at n=1."""
    values = np.asarray(values, dtype=np.float64)
    n = values.shape[0]
    if n < 1:
        raise ValueError("need at least one value")
    mean = float(values.mean())
    if n == 1:
        return mean, mean, mean
    half = z * float(values.std(ddof=1)) / math.sqrt(n)
    return mean, mean - half, mean + half


@dataclass(frozen=True)
class BoundComparison:
    """An empirical statistic with its CI against a closed-form bound."""

    name: str
    n: int
    empirical: float
    ci_low: float
    ci_high: float
    bound: float = None
    extra: dict = field(default_factory=dict)

    @property
    def violated(self) -> bool:
        return self.bound is not None and self.ci_low > self.bound

    def to_dict(self) -> dict:
        out = {
            "name": self.name,
            "n": self.n,
            "empirical": self.empirical,
            "ci_low": self.ci_low,
            "ci_high": self.ci_high,
            "bound": self.bound,
            "violated": self.violated,
        }
        if self.extra:
            out["extra"] = self.extra
        return out


def proportion_comparison(name: str, successes: int, trials: int,
                          bound: float = None, **extra) -> BoundComparison:
    low, high = wilson_interval(successes, trials)
    return BoundComparison(
        name=name, n=trials, empirical=successes / trials,
        ci_low=low, ci_high=high, bound=bound, extra=dict(extra),
    )


def mean_comparison(name: str, values, bound: float = None, **extra) -> BoundComparison:
    mean, low, high = normal_mean_interval(values)
    return BoundComparison(
        name=name, n=len(values), empirical=mean,
        ci_low=low, ci_high=high, bound=bound, extra=dict(extra),
    )
