"""Impact-contrasted and impact-reversed pattern mining with risk annotation.

Contrast mining scores the same pattern across a target-labeled and a
non-target-labeled dataset; reversal mining looks for trailing patterns that
flip the dominant outcome of their prefix.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, replace
from typing import Sequence

from . import metrics
from .model import BehaviorSequence, Pattern, concat, contains
from .seqmine import MiningConfig, mine_frequent

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class ContrastPattern:
    """Support of one pattern in dataset A versus dataset B.

    ``difference`` and ``ratio`` are oriented A over B; the opposite direction
    is the negation / reciprocal via the ``*_reversed`` accessors.
    """

    pattern: Pattern
    supp_in_a: float
    supp_in_b: float
    difference: float        # supp_in_a - supp_in_b
    ratio: float             # supp_in_a / supp_in_b (inf when one-sided)
    risk_amount: float | None = None
    risk_duration: float | None = None

    @property
    def difference_reversed(self) -> float:
        return -self.difference

    @property
    def ratio_reversed(self) -> float:
        return metrics.class_difference_ratio(self.supp_in_b, self.supp_in_a)


def mine_contrast(
    data_a: Sequence[BehaviorSequence],
    data_b: Sequence[BehaviorSequence],
    cfg: MiningConfig,
) -> list[ContrastPattern]:
    """Patterns frequent in at least one dataset, scored against both.

    The frequent sets of both sides are unioned before scoring so one-sided
    patterns are kept (their ratio degenerates to the infinity sentinel).
    Disjoint alphabets make the contrast meaningless: the result is empty and
    a warning is logged.
    """
    if not data_a or not data_b:
        raise ValueError("both datasets must be non-empty")
    alphabet_a = {i for s in data_a for i in s.items}
    alphabet_b = {i for s in data_b for i in s.items}
    if not (alphabet_a & alphabet_b):
        log.warning("contrast datasets share no items; returning an empty result")
        return []

    union: dict[tuple, Pattern] = {}
    for sp in mine_frequent(data_a, cfg):
        union[sp.pattern.items] = sp.pattern
    for sp in mine_frequent(data_b, cfg):
        union.setdefault(sp.pattern.items, sp.pattern)

    total_a = sum(s.weight for s in data_a)
    total_b = sum(s.weight for s in data_b)
    out = []
    for pattern in union.values():
        supp_a = sum(s.weight for s in data_a if contains(s, pattern)) / total_a
        supp_b = sum(s.weight for s in data_b if contains(s, pattern)) / total_b
        out.append(
            ContrastPattern(
                pattern=pattern,
                supp_in_a=supp_a,
                supp_in_b=supp_b,
                difference=metrics.class_difference(supp_a, supp_b),
                ratio=metrics.class_difference_ratio(supp_a, supp_b),
            )
        )
    out.sort(key=lambda c: (-abs(c.difference), c.pattern.sort_key()))
    return out


@dataclass(frozen=True)
class ReversalPair:
    """An underlying pattern whose dominant outcome flips once extended.

    ``direction`` is "target_to_nontarget" when the underlying leans target
    and the derivative leans non-target, or the mirror image.
    """

    underlying: Pattern
    trigger: Pattern
    derivative: Pattern
    impact_ratio: float       # conf(derivative -> flipped) / conf(underlying -> flipped)
    ps_ratio: float           # conditional Piatetsky-Shapiro difference
    direction: str
    risk_amount: float | None = None
    risk_duration: float | None = None


def _flip_stats(
    data: Sequence[BehaviorSequence],
    underlying: Pattern,
    derivative: Pattern,
    flipped_is_target: bool,
) -> tuple[float, float, float, float] | None:
    total = sum(s.weight for s in data)
    n_p = n_p_flip = n_pq = n_pq_flip = 0
    for s in data:
        if not contains(s, underlying):
            continue
        flip = s.label is not None and s.label.is_target == flipped_is_target
        n_p += s.weight
        if flip:
            n_p_flip += s.weight
        if contains(s, derivative):
            n_pq += s.weight
            if flip:
                n_pq_flip += s.weight
    if n_p == 0 or n_pq == 0:
        return None
    return (
        n_pq_flip / total,
        n_pq / total,
        n_p_flip / total,
        n_p / total,
    )


def mine_reversals(
    data: Sequence[BehaviorSequence],
    cfg: MiningConfig,
    min_impact_ratio: float = 1.0,
    min_ps_ratio: float = 0.0,
) -> list[ReversalPair]:
    """All (underlying, trigger) splits of frequent patterns that flip outcome.

    A flip requires the flipped label to dominate the derivative (confidence
    above one half) and to beat its confidence on the underlying alone.  Both
    flip directions are searched; pairs below either threshold are dropped.
    Single-label data cannot flip, so it yields an empty result with a
    warning.
    """
    labels = {s.label.is_target for s in data if s.label is not None}
    if len(labels) < 2:
        log.warning("reversal mining needs both labels present; returning an empty result")
        return []
    frequent = mine_frequent(data, cfg)
    by_items = {sp.pattern.items: sp for sp in frequent}

    out = []
    for sp in frequent:
        items = sp.pattern.items
        if len(items) < 2:
            continue
        for cut in range(1, len(items)):
            prefix_items = items[:cut]
            if prefix_items not in by_items:
                continue  # length-capped prefix; cannot happen below the cap
            underlying = by_items[prefix_items].pattern
            trigger = Pattern(items[cut:], sp.pattern.kind)
            for flipped_is_target, direction in (
                (False, "target_to_nontarget"),
                (True, "nontarget_to_target"),
            ):
                stats = _flip_stats(data, underlying, sp.pattern, flipped_is_target)
                if stats is None:
                    continue
                prob_pq_flip, prob_pq, prob_p_flip, prob_p = stats
                conf_derivative = prob_pq_flip / prob_pq
                conf_underlying = prob_p_flip / prob_p
                if not (conf_derivative > 0.5 and conf_derivative > conf_underlying):
                    continue
                impact_ratio = metrics.conditional_impact_ratio(
                    prob_pq_flip, prob_pq, prob_p_flip, prob_p
                )
                if impact_ratio is None:
                    continue
                ps_ratio = metrics.conditional_ps_ratio(
                    prob_pq_flip, prob_pq, prob_p_flip, prob_p
                )
                if impact_ratio < min_impact_ratio or ps_ratio < min_ps_ratio:
                    continue
                out.append(
                    ReversalPair(
                        underlying=underlying,
                        trigger=trigger,
                        derivative=sp.pattern,
                        impact_ratio=impact_ratio,
                        ps_ratio=ps_ratio,
                        direction=direction,
                    )
                )
    out.sort(
        key=lambda r: (-r.impact_ratio, r.underlying.sort_key(), r.trigger.sort_key(), r.direction)
    )
    return out


def annotate_risk(
    patterns: Sequence,
    sequences: Sequence[BehaviorSequence],
):
    """Attach debt-amount and debt-duration risk shares to mined patterns.

    Works on any result object exposing a pattern: contrast patterns use
    their own pattern, reversal pairs their derivative.  Matches without
    debt information contribute zero; a pattern with no matches (or no debt
    mass among them) gets the undefined sentinel.
    """
    annotated = []
    for obj in patterns:
        pattern = obj.derivative if isinstance(obj, ReversalPair) else obj.pattern
        negated = bool(getattr(obj, "negated", False))
        matches = [s for s in sequences if contains(s, pattern) != negated]
        target_matches = [s for s in matches if s.label is not None and s.label.is_target]
        scores = metrics.risk(target_matches, matches)
        annotated.append(
            replace(obj, risk_amount=scores.amount, risk_duration=scores.duration)
        )
    return annotated
