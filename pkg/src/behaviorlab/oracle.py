"""Brute-force reference implementations used by the test suite.

Everything here is exponential on purpose and refuses inputs above hard size
guards so oracle runs stay in the seconds range.
"""

from __future__ import annotations

from dataclasses import dataclass
from itertools import combinations
from typing import Iterable, Mapping, Sequence

from .model import BehaviorSequence, ItemKind, Pattern, TargetLabel, contains

MAX_SEQUENCES = 12
MAX_SEQUENCE_LENGTH = 8
MAX_ALPHABET = 6


class OracleSizeError(ValueError):
    """Input exceeds the guard bounds; the oracle refuses to run."""


def _guard(data: Sequence[BehaviorSequence]) -> None:
    if len(data) > MAX_SEQUENCES:
        raise OracleSizeError(f"{len(data)} sequences exceed guard of {MAX_SEQUENCES}")
    longest = max((len(s.items) for s in data), default=0)
    if longest > MAX_SEQUENCE_LENGTH:
        raise OracleSizeError(f"sequence length {longest} exceeds guard of {MAX_SEQUENCE_LENGTH}")
    alphabet = {i for s in data for i in s.items}
    if len(alphabet) > MAX_ALPHABET:
        raise OracleSizeError(f"alphabet size {len(alphabet)} exceeds guard of {MAX_ALPHABET}")


def contains_by_enumeration(items: Sequence, pattern_items: Sequence) -> bool:
    """Subsequence test by trying every index tuple i1 < ... < ik."""
    k = len(pattern_items)
    if k > len(items):
        return False
    return any(
        all(items[ix[j]] == pattern_items[j] for j in range(k))
        for ix in combinations(range(len(items)), k)
    )


def enumerate_patterns(
    data: Sequence[BehaviorSequence], max_len: int
) -> dict[tuple, float]:
    """Exact support of every distinct subsequence up to ``max_len``.

    Demographic sequences enumerate subsets (canonical sorted tuples) instead
    of ordered subsequences.  Supports are weighted sequence fractions.
    """
    _guard(data)
    total = sum(s.weight for s in data)
    if total == 0:
        return {}
    counts: dict[tuple, int] = {}
    for seq in data:
        items = seq.items
        if seq.kind is ItemKind.DEMOGRAPHIC:
            items = tuple(sorted(items))
        distinct: set[tuple] = set()
        for k in range(1, min(max_len, len(items)) + 1):
            for ix in combinations(range(len(items)), k):
                distinct.add(tuple(items[i] for i in ix))
        for sub in distinct:
            counts[sub] = counts.get(sub, 0) + seq.weight
    return {sub: c / total for sub, c in counts.items()}


@dataclass(frozen=True)
class ContingencyTable:
    """Exact counts feeding the reversal probability ratios."""

    n_pq_t: int
    n_pq_nt: int
    n_p_t: int
    n_p_nt: int
    n_total: int

    def __post_init__(self) -> None:
        if self.n_pq_t > self.n_p_t or self.n_pq_nt > self.n_p_nt:
            raise ValueError("PQ counts cannot exceed P counts")
        if max(self.n_p_t, self.n_p_nt, self.n_pq_t, self.n_pq_nt) > self.n_total:
            raise ValueError("counts cannot exceed the dataset size")

    @property
    def n_p(self) -> int:
        return self.n_p_t + self.n_p_nt

    @property
    def n_pq(self) -> int:
        return self.n_pq_t + self.n_pq_nt


def probabilities(
    data: Sequence[BehaviorSequence],
    p: Pattern,
    q: Pattern,
    target: TargetLabel,
) -> ContingencyTable:
    """Count P / PQ matches split by target label, by exhaustive containment.

    ``n_*_nt`` buckets collect everything that is not the target label,
    including unlabeled sequences.
    """
    _guard(data)
    from .model import concat

    pq = concat(p, q)
    n_pq_t = n_pq_nt = n_p_t = n_p_nt = 0
    total = 0
    for seq in data:
        total += seq.weight
        is_t = seq.label is not None and seq.label.is_target == target.is_target
        if contains(seq, p):
            if is_t:
                n_p_t += seq.weight
            else:
                n_p_nt += seq.weight
            if contains(seq, pq):
                if is_t:
                    n_pq_t += seq.weight
                else:
                    n_pq_nt += seq.weight
    return ContingencyTable(n_pq_t, n_pq_nt, n_p_t, n_p_nt, total)


def nested_loop_label_join(
    person_ids: Iterable[str],
    debts: Iterable,
    window,
) -> dict[str, tuple[TargetLabel, float | None, int | None]]:
    """Reference label assignment: scan every (person, debt) pair.

    ``debts`` must provide ``person_id``, ``raised_date``, ``amount`` and
    ``duration_days`` attributes.  Returns per-person (label, amount, duration)
    with amounts summed over in-window debts.
    """
    out: dict[str, tuple[TargetLabel, float | None, int | None]] = {}
    debts = list(debts)
    for pid in person_ids:
        amount = 0.0
        duration = 0
        hit = False
        for d in debts:
            if d.person_id == pid and window.contains_date(d.raised_date):
                hit = True
                amount += d.amount
                duration += d.duration_days
        if hit:
            out[pid] = (TargetLabel.target(), amount, duration)
        else:
            out[pid] = (TargetLabel.non_target(), None, None)
    return out


def probabilities_as_mapping(table: ContingencyTable) -> Mapping[str, float]:
    """Probability view of a table (fractions of the dataset)."""
    n = table.n_total
    if n == 0:
        raise ValueError("empty dataset")
    return {
        "prob_p": table.n_p / n,
        "prob_pq": table.n_pq / n,
        "prob_p_nt": table.n_p_nt / n,
        "prob_pq_nt": table.n_pq_nt / n,
    }
