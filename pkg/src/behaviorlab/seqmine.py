"""Frequent-sequence mining over labeled behavior sequences.

The miner enumerates patterns depth-first by prefix projection in
lexicographic item order, which keeps output deterministic and lets the
anti-monotone support bound prune whole subtrees.  Support counts sequences
(one sequence, one vote) as weighted fractions of the dataset.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Sequence

from .model import (
    BehaviorSequence,
    ItemKind,
    Pattern,
    TargetLabel,
    contains,
    item_sort_key,
)


class UndefinedSupportError(ValueError):
    """Support is undefined on an empty dataset."""


@dataclass(frozen=True)
class MiningConfig:
    """Thresholds and bounds for one mining run."""

    min_support: float
    max_pattern_length: int = 6
    alphabet: frozenset | None = None
    contiguous: bool = False  # strict-run matching; off by default

    def __post_init__(self) -> None:
        if not (0.0 < self.min_support <= 1.0):
            raise ValueError("min_support must be in (0, 1]")
        if self.max_pattern_length < 1:
            raise ValueError("max_pattern_length must be >= 1")


@dataclass(frozen=True)
class SupportedPattern:
    """A mined pattern with its dataset and per-label supports."""

    pattern: Pattern
    support: float
    support_target: float
    support_nontarget: float
    count: int


def meets_min_support(count: int, total: int, min_support: float) -> bool:
    """Threshold test in exact rational arithmetic (shared with tests)."""
    return Fraction(count, total) >= Fraction(*min_support.as_integer_ratio())


def support(pattern: Pattern, data: Sequence[BehaviorSequence]) -> float:
    """Weighted fraction of sequences containing the pattern."""
    total = sum(s.weight for s in data)
    if total == 0:
        raise UndefinedSupportError("support is undefined on an empty dataset")
    hit = sum(s.weight for s in data if contains(s, pattern))
    return hit / total


def _canonical_items(seq: BehaviorSequence) -> tuple:
    # Demographic itemsets mine as sorted tuples so subsequence containment
    # coincides with subset containment.
    if seq.kind is ItemKind.DEMOGRAPHIC:
        return tuple(sorted(seq.items))
    return seq.items


@dataclass
class _Row:
    items: tuple
    weight: int
    is_target: bool
    is_nontarget: bool


def _rows(data: Sequence[BehaviorSequence], alphabet: frozenset | None) -> list[_Row]:
    rows = []
    for seq in data:
        items = _canonical_items(seq)
        if alphabet is not None:
            items = tuple(i for i in items if i in alphabet)
        rows.append(
            _Row(
                items=items,
                weight=seq.weight,
                is_target=seq.label is not None and seq.label.is_target,
                is_nontarget=seq.label is not None and not seq.label.is_target,
            )
        )
    return rows


def mine_frequent(
    data: Sequence[BehaviorSequence], cfg: MiningConfig
) -> list[SupportedPattern]:
    """All patterns with support >= min_support and length <= the bound.

    Output is sorted by descending support, ties broken by lexicographic
    pattern order, so identical inputs always produce identical output.
    """
    if not data:
        raise UndefinedSupportError("cannot mine an empty dataset")
    kind = data[0].kind
    rows = _rows(data, cfg.alphabet)
    total = sum(r.weight for r in rows)
    results: list[SupportedPattern] = []

    # A projection entry is (row_index, next_positions).  Non-contiguous
    # matching only ever needs the leftmost continuation point; contiguous
    # matching must track every position a match block can end at.
    if cfg.contiguous:
        projection = [(i, tuple(range(len(r.items)))) for i, r in enumerate(rows)]
    else:
        projection = [(i, (0,)) for i, r in enumerate(rows)]

    def extensions(proj):
        found: dict[object, list[tuple[int, tuple]]] = {}
        for row_idx, positions in proj:
            items = rows[row_idx].items
            if cfg.contiguous:
                per_item: dict[object, list[int]] = {}
                for pos in positions:
                    if pos < len(items):
                        per_item.setdefault(items[pos], []).append(pos + 1)
                for item, nxt in per_item.items():
                    found.setdefault(item, []).append((row_idx, tuple(nxt)))
            else:
                start = positions[0]
                seen: dict[object, int] = {}
                for j in range(start, len(items)):
                    if items[j] not in seen:
                        seen[items[j]] = j
                for item, j in seen.items():
                    found.setdefault(item, []).append((row_idx, (j + 1,)))
        return found

    def descend(prefix: tuple, proj, depth: int) -> None:
        if depth >= cfg.max_pattern_length:
            return
        found = extensions(proj)
        for item in sorted(found, key=item_sort_key):
            sub = found[item]
            count = sum(rows[i].weight for i, _ in sub)
            if not meets_min_support(count, total, cfg.min_support):
                continue
            count_t = sum(rows[i].weight for i, _ in sub if rows[i].is_target)
            count_nt = sum(rows[i].weight for i, _ in sub if rows[i].is_nontarget)
            pattern_items = prefix + (item,)
            results.append(
                SupportedPattern(
                    pattern=Pattern(pattern_items, kind),
                    support=count / total,
                    support_target=count_t / total,
                    support_nontarget=count_nt / total,
                    count=count,
                )
            )
            descend(pattern_items, sub, depth + 1)

    descend((), projection, 0)
    results.sort(key=lambda sp: (-sp.support, sp.pattern.sort_key()))
    return results


def label_prevalence(data: Sequence[BehaviorSequence]) -> tuple[float, float]:
    """(target, non-target) weighted fractions of the dataset."""
    total = sum(s.weight for s in data)
    if total == 0:
        raise UndefinedSupportError("empty dataset")
    t = sum(s.weight for s in data if s.label is not None and s.label.is_target)
    nt = sum(s.weight for s in data if s.label is not None and not s.label.is_target)
    return t / total, nt / total


@dataclass(frozen=True)
class ImpactRule:
    """One rule P -> L or not-P -> L with its interestingness annotations.

    ``lift`` is None (and flagged) when the label never occurs, which makes
    lift undefined rather than the whole run fatal.
    """

    pattern: Pattern
    negated: bool
    label: TargetLabel
    support_rule: float
    confidence: float
    lift: float | None
    flags: tuple[str, ...] = ()
    risk_amount: float | None = None
    risk_duration: float | None = None


@dataclass(frozen=True)
class ImpactRuleSets:
    positive: tuple[ImpactRule, ...]
    negative: tuple[ImpactRule, ...]
    frequent: tuple[SupportedPattern, ...]


def mine_impact_oriented(
    data: Sequence[BehaviorSequence],
    cfg: MiningConfig,
    target: TargetLabel,
) -> ImpactRuleSets:
    """Positive (P -> L) and negative (not-P -> L) rules for both labels.

    For every frequent P and each label L: Supp(P -> L) is the fraction of
    sequences containing P with label L, confidence divides by Supp(P), and
    lift divides confidence by the label prevalence.  Negative rules use the
    complement identity Supp(not-P -> L) = Supp(L) - Supp(P -> L).
    """
    frequent = mine_frequent(data, cfg)
    prev_t, prev_nt = label_prevalence(data)
    nontarget = next(
        (s.label for s in data if s.label is not None and not s.label.is_target),
        TargetLabel.non_target(),
    )
    positive: list[ImpactRule] = []
    negative: list[ImpactRule] = []
    for sp in frequent:
        for label, supp_rule, prevalence in (
            (target, sp.support_target, prev_t),
            (nontarget, sp.support_nontarget, prev_nt),
        ):
            confidence = supp_rule / sp.support if sp.support > 0 else 0.0
            lift, flags = _lift(confidence, prevalence)
            positive.append(
                ImpactRule(sp.pattern, False, label, supp_rule, confidence, lift, flags)
            )
            neg_supp = prevalence - supp_rule
            not_p = 1.0 - sp.support
            neg_conf = neg_supp / not_p if not_p > 0 else 0.0
            neg_lift, neg_flags = _lift(neg_conf, prevalence)
            if not_p <= 0:
                neg_flags = neg_flags + ("complement_empty",)
            negative.append(
                ImpactRule(sp.pattern, True, label, neg_supp, neg_conf, neg_lift, neg_flags)
            )
    return ImpactRuleSets(tuple(positive), tuple(negative), tuple(frequent))


def _lift(confidence: float, prevalence: float) -> tuple[float | None, tuple[str, ...]]:
    if prevalence <= 0.0:
        return None, ("lift_undefined",)
    return confidence / prevalence, ()
