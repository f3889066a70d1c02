"""Demographic-activity combined pattern mining, pairing and clustering.

Demographic itemsets and activity patterns are mined separately, then joined
on person cohorts into rules of the form "demographics AND activities imply
class".  Rules sharing the demographic side group into pairs and clusters
whose interestingness contrasts the activity contributions across classes.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import Callable, Mapping, Sequence

from .model import BehaviorSequence, Pattern, contains
from .seqmine import MiningConfig, meets_min_support, mine_frequent

log = logging.getLogger(__name__)


class KeyUniverseError(ValueError):
    """The two datasets do not cover the same person ids."""

    def __init__(self, orphans_demo: list[str], orphans_activity: list[str]):
        self.orphans_demo = orphans_demo
        self.orphans_activity = orphans_activity
        super().__init__(
            "person universes differ: "
            f"{len(orphans_demo)} only in demographics {orphans_demo[:10]}, "
            f"{len(orphans_activity)} only in activities {orphans_activity[:10]}"
        )


@dataclass(frozen=True)
class CombinedPattern:
    """One rule: demographic itemset AND activity pattern imply a class."""

    demo_items: tuple[str, ...]
    activity: Pattern
    label: str
    count: int                     # cohort members with the class
    confidence: float
    lift: float
    lift_demo: float               # lift of the demographic side alone
    lift_activity: float           # lift of the activity side alone
    interestingness: float | None  # lift / (lift_demo * lift_activity)

    def sort_key(self) -> tuple:
        score = self.interestingness if self.interestingness is not None else float("-inf")
        return (-score, self.demo_items, self.activity.sort_key(), self.label)


def pattern_interestingness(
    lift: float, lift_demo: float, lift_activity: float
) -> float | None:
    """Joint lift over the product of the single-side lifts.

    Equals 1 exactly when the two sides contribute independently; ``None``
    when a single-side lift is zero (undefined).
    """
    if lift_demo <= 0 or lift_activity <= 0:
        return None
    return lift / (lift_demo * lift_activity)


def _unique_by_subject(data: Sequence[BehaviorSequence], name: str) -> dict[str, BehaviorSequence]:
    out: dict[str, BehaviorSequence] = {}
    for seq in data:
        if seq.subject_id in out:
            raise ValueError(f"duplicate subject {seq.subject_id!r} in {name} dataset")
        out[seq.subject_id] = seq
    return out


def mine_combined(
    demographics: Sequence[BehaviorSequence],
    activities: Sequence[BehaviorSequence],
    classes: Mapping[str, str] | None,
    cfg: MiningConfig,
) -> list[CombinedPattern]:
    """Join frequent demographic itemsets and activity patterns per class.

    ``classes`` maps person id to an arbitrary class token; when omitted the
    sequences' own labels are used (their display strings).  A combined rule
    is emitted when its joint support (cohort members of the class over all
    persons) clears the mining threshold.  An empty activity side is the
    degenerate case whose interestingness is exactly 1; it is not emitted,
    it anchors the metric.
    """
    demo_by_person = _unique_by_subject(demographics, "demographic")
    act_by_person = _unique_by_subject(activities, "activity")
    only_demo = sorted(set(demo_by_person) - set(act_by_person))
    only_act = sorted(set(act_by_person) - set(demo_by_person))
    if only_demo or only_act:
        raise KeyUniverseError(only_demo, only_act)

    persons = sorted(demo_by_person)
    n = len(persons)
    if classes is None:
        classes = {
            pid: demo_by_person[pid].label.display
            for pid in persons
            if demo_by_person[pid].label is not None
        }
    missing = [pid for pid in persons if pid not in classes]
    if missing:
        raise ValueError(f"persons without a class label: {missing[:10]}")

    prevalence: dict[str, float] = {}
    for pid in persons:
        prevalence[classes[pid]] = prevalence.get(classes[pid], 0.0) + 1.0 / n
    class_values = sorted(prevalence)

    demo_patterns = mine_frequent(demographics, cfg)
    activity_patterns = mine_frequent(activities, cfg)

    demo_matches = {
        sp.pattern.items: frozenset(
            pid for pid in persons if contains(demo_by_person[pid], sp.pattern)
        )
        for sp in demo_patterns
    }
    act_matches = {
        sp.pattern.items: frozenset(
            pid for pid in persons if contains(act_by_person[pid], sp.pattern)
        )
        for sp in activity_patterns
    }

    def side_lift(members: frozenset, label: str) -> float:
        if not members:
            return 0.0
        conf = sum(1 for pid in members if classes[pid] == label) / len(members)
        return conf / prevalence[label]

    out = []
    for dsp in demo_patterns:
        d_members = demo_matches[dsp.pattern.items]
        for asp in activity_patterns:
            cohort = d_members & act_matches[asp.pattern.items]
            if not cohort:
                continue
            for label in class_values:
                count = sum(1 for pid in cohort if classes[pid] == label)
                if count == 0 or not meets_min_support(count, n, cfg.min_support):
                    continue
                confidence = count / len(cohort)
                lift = confidence / prevalence[label]
                lift_demo = side_lift(d_members, label)
                lift_activity = side_lift(act_matches[asp.pattern.items], label)
                out.append(
                    CombinedPattern(
                        demo_items=dsp.pattern.items,
                        activity=asp.pattern,
                        label=label,
                        count=count,
                        confidence=confidence,
                        lift=lift,
                        lift_demo=lift_demo,
                        lift_activity=lift_activity,
                        interestingness=pattern_interestingness(lift, lift_demo, lift_activity),
                    )
                )
    out.sort(key=CombinedPattern.sort_key)
    return out


def nominal_distance(label_a: str, label_b: str) -> float:
    """Binary dissimilarity for nominal classes."""
    return 0.0 if label_a == label_b else 1.0


def activity_contribution(pattern: CombinedPattern) -> float | None:
    """How much the activity side lifts the rule beyond its demographic side."""
    if pattern.lift_demo <= 0:
        return None
    return pattern.lift / pattern.lift_demo


def pair_interestingness(
    left: CombinedPattern,
    right: CombinedPattern,
    distance: Callable[[str, str], float] = nominal_distance,
) -> float | None:
    """Product of both activity contributions, scaled by class dissimilarity.

    Zero whenever the two rules predict the same class; ``None`` when a
    contribution is undefined.
    """
    c1 = activity_contribution(left)
    c2 = activity_contribution(right)
    if c1 is None or c2 is None:
        return None
    return c1 * c2 * distance(left.label, right.label)


@dataclass(frozen=True)
class PatternPair:
    """Two rules sharing demographics, with distinct activities and classes."""

    shared_demo: tuple[str, ...]
    left: CombinedPattern
    right: CombinedPattern
    interestingness: float


def make_pairs(
    patterns: Sequence[CombinedPattern],
    distance: Callable[[str, str], float] = nominal_distance,
) -> list[PatternPair]:
    """All rule pairs sharing the demographic side with distinct activity
    sides and distinct classes.  Zero pairs is a perfectly valid outcome."""
    by_demo: dict[tuple[str, ...], list[CombinedPattern]] = {}
    for p in patterns:
        by_demo.setdefault(p.demo_items, []).append(p)
    pairs = []
    for demo_items in sorted(by_demo):
        group = sorted(by_demo[demo_items], key=CombinedPattern.sort_key)
        for i in range(len(group)):
            for j in range(i + 1, len(group)):
                left, right = group[i], group[j]
                if left.activity.items == right.activity.items:
                    continue
                if left.label == right.label:
                    continue
                score = pair_interestingness(left, right, distance)
                if score is None:
                    log.warning(
                        "skipping pair with undefined contribution under %s", demo_items
                    )
                    continue
                pairs.append(PatternPair(demo_items, left, right, score))
    pairs.sort(key=lambda p: (-p.interestingness, p.shared_demo, p.left.sort_key(), p.right.sort_key()))
    return pairs


@dataclass(frozen=True)
class PatternCluster:
    """All rules sharing one demographic side, scored by their best pair."""

    shared_demo: tuple[str, ...]
    members: tuple[CombinedPattern, ...]
    interestingness: float


def make_clusters(
    patterns: Sequence[CombinedPattern],
    distance: Callable[[str, str], float] = nominal_distance,
) -> list[PatternCluster]:
    """Group rules by their exact demographic side.

    Cluster members must carry pairwise distinct activity sides, so when the
    input holds several classes for one (demographics, activity) combination
    only the highest-ranked rule represents that activity side.  A group
    becomes a cluster with at least two members; its score is the best pair
    score over opposite-class members, zero when every member predicts one
    class.  Each rule lands in at most one cluster since grouping keys on
    the exact demographic itemset.
    """
    by_demo: dict[tuple[str, ...], dict[tuple, CombinedPattern]] = {}
    for p in sorted(patterns, key=CombinedPattern.sort_key):
        group = by_demo.setdefault(p.demo_items, {})
        group.setdefault(p.activity.items, p)  # first seen = best ranked
    clusters = []
    for demo_items in sorted(by_demo):
        members = sorted(by_demo[demo_items].values(), key=CombinedPattern.sort_key)
        if len(members) < 2:
            continue
        best = 0.0
        for i in range(len(members)):
            for j in range(i + 1, len(members)):
                if members[i].label == members[j].label:
                    continue
                score = pair_interestingness(members[i], members[j], distance)
                if score is not None:
                    best = max(best, score)
        clusters.append(PatternCluster(demo_items, tuple(members), best))
    clusters.sort(key=lambda c: (-c.interestingness, c.shared_demo))
    return clusters
