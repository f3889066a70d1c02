"""End-to-end mining of exceptional microstructure behavior patterns.

For every target trading day with enough history: mine the day's frequent
vector patterns, score each against the preceding benchmark days, attach the
abnormal-return impact of the accounts trading the pattern, and keep the
patterns clearing both interestingness thresholds.  Scored patterns convert
one-to-one into alert rules.
"""

from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from datetime import date
from typing import Callable, Mapping, Sequence

from . import metrics
from .ingestion import OrderRecord
from .model import BehaviorSequence, Pattern, contains
from .seqmine import MiningConfig, mine_frequent


@dataclass(frozen=True)
class ExceptionalPattern:
    """A pattern that cleared both thresholds on one trading day."""

    pattern: Pattern
    day: date
    intentional: float            # support scaled by relative length
    exceptional: float            # ratio against benchmark days (inf = novel)
    abnormal_return: float | None  # None when too few price points
    novel: bool = False

    def sort_key(self) -> tuple:
        return (-self.exceptional, self.day.toordinal(), self.pattern.sort_key())


@dataclass(frozen=True)
class SkippedDay:
    day: date
    reason: str


@dataclass(frozen=True)
class ExceptionalMiningResult:
    patterns: tuple[ExceptionalPattern, ...]
    skipped: tuple[SkippedDay, ...]


def mean_sequence_length(sequences: Sequence[BehaviorSequence]) -> float:
    """Default average-length estimator: unweighted mean item count."""
    if not sequences:
        return 0.0
    return sum(len(s.items) for s in sequences) / len(sequences)


def pattern_abnormal_return(
    pattern: Pattern,
    sequences: Sequence[BehaviorSequence],
    orders: Sequence[OrderRecord],
    bucket_seconds: int,
) -> float | None:
    """Volatility of the VWAP series of accounts whose sequences match.

    Buckets every order row (placements and fills) of matching accounts by
    time-of-day; empty buckets are skipped, not forward-filled.  Returns None
    when fewer than three non-empty buckets survive.
    """
    accounts = {s.subject_id for s in sequences if contains(s, pattern)}
    buckets: dict[int, list[tuple[float, float]]] = {}
    for row in orders:
        if row.account_id not in accounts:
            continue
        t = row.order_time
        idx = (t.hour * 3600 + t.minute * 60 + t.second) // bucket_seconds
        buckets.setdefault(idx, []).append((row.price, float(row.volume)))
    points = []
    for idx in sorted(buckets):
        try:
            points.append(metrics.PricePoint(idx, metrics.vwap(buckets[idx])))
        except (metrics.EmptyBucketError, ValueError):
            continue
    try:
        return metrics.abnormal_return(points)
    except metrics.InsufficientDataError:
        return None


@dataclass(frozen=True)
class _DayJob:
    day: date
    sequences: tuple[BehaviorSequence, ...]
    benchmarks: tuple[tuple[date, tuple[BehaviorSequence, ...]], ...]
    orders: tuple[OrderRecord, ...]
    cfg: MiningConfig
    min_intentional: float
    min_exceptional: float
    bucket_seconds: int


def _count_contains(sequences: Sequence[BehaviorSequence], pattern: Pattern) -> float:
    total = sum(s.weight for s in sequences)
    if total == 0:
        return 0.0
    return sum(s.weight for s in sequences if contains(s, pattern)) / total


def _mine_day(
    job: _DayJob,
    avg_len_fn: Callable[[Sequence[BehaviorSequence]], float] | None = None,
) -> list[ExceptionalPattern]:
    estimate = avg_len_fn or mean_sequence_length
    day_sequences = list(job.sequences)
    avg_len = estimate(day_sequences)
    if avg_len <= 0:
        return []
    # Benchmark supports are exact per-day fractions, not thresholded mining
    # results: a pattern rare in history is precisely the interesting case.
    bench_stats = [
        (bench_seqs, estimate(list(bench_seqs)))
        for _, bench_seqs in job.benchmarks
    ]
    out = []
    for sp in mine_frequent(day_sequences, job.cfg):
        intentional = metrics.intentional_interestingness(
            sp.support, len(sp.pattern), avg_len
        )
        if intentional < job.min_intentional:
            continue
        benchmark_set = metrics.BenchmarkSet.equal_weights(
            (_count_contains(seqs, sp.pattern), bench_avg)
            for seqs, bench_avg in bench_stats
            if bench_avg > 0
        )
        exceptional = metrics.exceptional_interestingness(sp.support, avg_len, benchmark_set)
        if exceptional < job.min_exceptional:
            continue
        abnormal = (
            pattern_abnormal_return(sp.pattern, day_sequences, job.orders, job.bucket_seconds)
            if job.orders
            else None
        )
        out.append(
            ExceptionalPattern(
                pattern=sp.pattern,
                day=job.day,
                intentional=intentional,
                exceptional=exceptional,
                abnormal_return=abnormal,
                novel=math.isinf(exceptional),
            )
        )
    return out


def mine_exceptional(
    daily: Mapping[date, Sequence[BehaviorSequence]],
    benchmark_days: int,
    min_intentional: float,
    min_exceptional: float,
    cfg: MiningConfig,
    orders: Sequence[OrderRecord] = (),
    bucket_seconds: int = 60,
    avg_len_fn: Callable[[Sequence[BehaviorSequence]], float] | None = None,
    workers: int = 1,
) -> ExceptionalMiningResult:
    """Score every day with at least ``benchmark_days`` preceding days.

    Benchmark periods are the immediately preceding days present in the data,
    weighted equally.  Days lacking history are skipped with a warning record
    instead of failing the batch.  Day jobs are independent, so they may run
    in a process pool; output order is canonical either way (descending
    exceptional score, then day, then pattern).

    ``avg_len_fn`` replaces the unweighted mean-length estimator; custom
    callables force serial execution since they may not survive pickling.
    """
    if benchmark_days < 1:
        raise ValueError("need at least one benchmark day")
    if min_intentional < 0 or min_exceptional < 0:
        raise ValueError("thresholds must be >= 0")
    days = sorted(daily)
    orders_by_day: dict[date, list[OrderRecord]] = {}
    for row in orders:
        orders_by_day.setdefault(row.order_date, []).append(row)

    jobs: list[_DayJob] = []
    skipped: list[SkippedDay] = []
    for idx, day in enumerate(days):
        if idx < benchmark_days:
            skipped.append(
                SkippedDay(day, f"only {idx} preceding days, need {benchmark_days}")
            )
            continue
        bench = tuple(
            (d, tuple(daily[d])) for d in days[idx - benchmark_days : idx]
        )
        jobs.append(
            _DayJob(
                day=day,
                sequences=tuple(daily[day]),
                benchmarks=bench,
                orders=tuple(orders_by_day.get(day, ())),
                cfg=cfg,
                min_intentional=min_intentional,
                min_exceptional=min_exceptional,
                bucket_seconds=bucket_seconds,
            )
        )

    if avg_len_fn is None and workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_mine_day, jobs))
    else:
        results = [_mine_day(job, avg_len_fn) for job in jobs]

    merged = [p for day_patterns in results for p in day_patterns]
    merged.sort(key=ExceptionalPattern.sort_key)
    return ExceptionalMiningResult(tuple(merged), tuple(skipped))


@dataclass(frozen=True)
class AlertRule:
    """Business alert derived from one exceptional pattern.

    The trigger is subsequence containment of the pattern; severity follows
    the exceptional score tiers and is therefore monotone in it.
    """

    pattern: Pattern
    severity: str
    exceptional: float
    day: date
    message: str

    def fires(self, sequence: BehaviorSequence) -> bool:
        return contains(sequence, self.pattern)


DEFAULT_SEVERITY_TIERS = (5.0, 10.0)


def severity_for(score: float, tiers: tuple[float, float] = DEFAULT_SEVERITY_TIERS) -> str:
    low, high = tiers
    if score >= high:
        return "high"
    if score >= low:
        return "medium"
    return "low"


def to_alert_rules(
    patterns: Sequence[ExceptionalPattern],
    tiers: tuple[float, float] = DEFAULT_SEVERITY_TIERS,
) -> list[AlertRule]:
    """One alert rule per scored pattern."""
    rules = []
    for p in patterns:
        severity = severity_for(p.exceptional, tiers)
        rate = (
            "was absent from every benchmark day"
            if p.novel
            else f"traded {p.exceptional:.1f}x its benchmark rate"
        )
        rules.append(
            AlertRule(
                pattern=p.pattern,
                severity=severity,
                exceptional=p.exceptional,
                day=p.day,
                message=(
                    f"{severity} alert: pattern of {len(p.pattern)} order vectors "
                    f"{rate} on {p.day.isoformat()}"
                ),
            )
        )
    return rules
