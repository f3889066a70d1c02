"""Pure interestingness and risk metrics.

All functions are referentially transparent; division-by-zero conditions
surface as typed sentinels (``math.inf`` for "novel"/ratio blow-ups, ``None``
for genuinely undefined values) so a batch run never aborts mid-report.
"""

from __future__ import annotations

import math
import statistics
from dataclasses import dataclass
from typing import Iterable, Sequence


class EmptyBucketError(ValueError):
    """No volume traded in the bucket; there is no price signal."""


class InsufficientDataError(ValueError):
    """Too few price points to estimate return volatility."""


@dataclass(frozen=True)
class PricePoint:
    """Volume-weighted average price of one time bucket."""

    time_bucket: int
    vwap: float

    def __post_init__(self) -> None:
        if self.vwap <= 0:
            raise ValueError("vwap must be positive")


@dataclass(frozen=True)
class BenchmarkPeriod:
    support: float
    avg_len: float
    weight: float

    def __post_init__(self) -> None:
        if self.avg_len <= 0:
            raise ValueError("benchmark average length must be positive")


@dataclass(frozen=True)
class BenchmarkSet:
    """Per-period (support, average length, weight) triples."""

    periods: tuple[BenchmarkPeriod, ...]

    def __post_init__(self) -> None:
        if not self.periods:
            raise ValueError("benchmark set must not be empty")
        if sum(p.weight for p in self.periods) <= 0:
            raise ValueError("benchmark weights must sum to a positive value")

    @classmethod
    def equal_weights(cls, pairs: Iterable[tuple[float, float]]) -> "BenchmarkSet":
        pairs = list(pairs)
        w = 1.0 / len(pairs) if pairs else 0.0
        return cls(tuple(BenchmarkPeriod(s, a, w) for s, a in pairs))


def vwap(orders: Iterable[tuple[float, float]]) -> float:
    """Volume-weighted average price: sum(price*volume) / sum(volume)."""
    num = 0.0
    den = 0.0
    for price, volume in orders:
        num += price * volume
        den += volume
    if den <= 0:
        raise EmptyBucketError("no volume in bucket")
    return num / den


def abnormal_return(prices: Sequence[PricePoint]) -> float:
    """Scaled volatility of log returns over consecutive non-empty buckets.

    Sample (n-1) standard deviation of ln(p_t / p_{t-1}) divided by the
    square root of the number of returns.  Needs at least three price points
    so the sample deviation is defined.
    """
    if len(prices) < 3:
        raise InsufficientDataError(
            f"need >= 3 price points for a sample deviation, got {len(prices)}"
        )
    returns = [
        math.log(b.vwap / a.vwap) for a, b in zip(prices, prices[1:])
    ]
    return statistics.stdev(returns) / math.sqrt(len(returns))


def intentional_interestingness(supp: float, pattern_len: int, avg_len: float) -> float:
    """Support scaled by pattern length relative to the mean sequence length."""
    if avg_len <= 0:
        raise ValueError("average sequence length must be positive")
    return supp * pattern_len / avg_len


def exceptional_interestingness(
    supp: float, avg_len: float, benchmarks: BenchmarkSet
) -> float:
    """Target-period support ratio against weighted benchmark ratios.

    Returns ``math.inf`` when the pattern never appears in any benchmark
    period ("novel"); equals 1.0 whenever the target ratio matches every
    benchmark ratio regardless of the weights.
    """
    if avg_len <= 0:
        raise ValueError("target average length must be positive")
    weight_sum = sum(p.weight for p in benchmarks.periods)
    denominator = sum(p.support / p.avg_len * p.weight for p in benchmarks.periods)
    if denominator <= 0:
        return math.inf
    return (supp / avg_len) * weight_sum / denominator


def class_difference(supp_a: float, supp_b: float) -> float:
    """Support gap of a pattern between two datasets; reverse is the negation."""
    return supp_a - supp_b


def class_difference_ratio(supp_a: float, supp_b: float) -> float:
    """Support ratio between two datasets; reverse direction is the reciprocal.

    A zero denominator yields ``math.inf`` (one-sided pattern).
    """
    if supp_b == 0:
        return math.inf
    return supp_a / supp_b


def conditional_impact_ratio(
    prob_pq_nt: float, prob_pq: float, prob_p_nt: float, prob_p: float
) -> float | None:
    """How much a trailing pattern shifts the outcome odds of its prefix.

    Ratio of conf(PQ -> flipped) to conf(P -> flipped).  Returns ``None``
    when any conditioning probability is zero (undefined, flagged upstream
    per pattern); returns 0.0 exactly when no PQ match carries the flipped
    label.
    """
    if prob_pq <= 0 or prob_p <= 0 or prob_p_nt <= 0:
        return None
    return (prob_pq_nt / prob_pq) / (prob_p_nt / prob_p)


def conditional_ps_ratio(
    prob_pq_nt: float, prob_pq: float, prob_p_nt: float, prob_p: float
) -> float:
    """Piatetsky-Shapiro style difference conditioned on the prefix pattern.

    Positive exactly when the trailing pattern raises the flipped-label odds
    (same sign as ``conditional_impact_ratio`` minus one).
    """
    if prob_p <= 0:
        raise ValueError("prefix probability must be positive")
    return prob_pq_nt / prob_p - (prob_pq / prob_p) * (prob_p_nt / prob_p)


@dataclass(frozen=True)
class RiskScores:
    """Share of debt money / debt days attributable to a pattern's matches.

    ``None`` marks an undefined ratio (no amounts or durations to divide by).
    """

    amount: float | None
    duration: float | None


def _amount_duration(entry) -> tuple[float, float]:
    if hasattr(entry, "debt_amount"):
        amt = entry.debt_amount or 0.0
        dur = entry.debt_duration or 0
        return float(amt), float(dur)
    amt, dur = entry
    return float(amt or 0.0), float(dur or 0)


def risk(target_matches: Iterable, all_matches: Iterable) -> RiskScores:
    """Summed amounts/durations of debt-labeled matches over all matches.

    Inputs may be behavior sequences (``debt_amount`` / ``debt_duration``
    attributes) or plain ``(amount, duration)`` pairs; missing values count
    as zero.
    """
    num_amt = num_dur = 0.0
    for entry in target_matches:
        a, d = _amount_duration(entry)
        num_amt += a
        num_dur += d
    den_amt = den_dur = 0.0
    for entry in all_matches:
        a, d = _amount_duration(entry)
        den_amt += a
        den_dur += d
    return RiskScores(
        amount=num_amt / den_amt if den_amt > 0 else None,
        duration=num_dur / den_dur if den_dur > 0 else None,
    )


def confidence(supp_rule: float, supp_pattern: float) -> float:
    """Conditional label frequency given the pattern."""
    if supp_pattern <= 0:
        raise ValueError("pattern support must be positive")
    return supp_rule / supp_pattern


def lift(conf: float, prevalence: float) -> float:
    """Confidence normalized by label prevalence."""
    if prevalence <= 0:
        raise ValueError("label prevalence must be positive")
    return conf / prevalence
