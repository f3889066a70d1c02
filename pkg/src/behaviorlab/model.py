"""Core behavior data model: vectors, sequences, labels and patterns.

Everything here is immutable after construction and therefore safe to share
across concurrent workers.  The canonical on-disk form is JSON lines, one
record per sequence (see ``sequence_to_record`` / ``sequence_from_record``).
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields
from datetime import date, datetime, timedelta
from enum import Enum
from typing import Any, Iterable, Iterator, Sequence, TextIO

ORDER_SIZES = ("S", "M", "L")
TRADE_ACTIONS = ("B", "S")
PROBABILITY_BINS = ("L", "M", "H")
TERNARY = (-1, 0, 1)


class KindMismatchError(TypeError):
    """Raised when pattern and sequence item kinds disagree."""


class ItemKind(str, Enum):
    """What the items of a sequence or pattern are."""

    ACTIVITY = "activity_code"
    MICRO = "microstructure_vector"
    DEMOGRAPHIC = "demographic_item"


@dataclass(frozen=True)
class TargetLabel:
    """Binary outcome label; ``display`` carries the domain spelling (DET/NDT)."""

    value: str  # "target" | "non_target"
    display: str

    def __post_init__(self) -> None:
        if self.value not in ("target", "non_target"):
            raise ValueError(f"label value must be target/non_target, got {self.value!r}")

    @classmethod
    def target(cls, display: str = "DET") -> "TargetLabel":
        return cls("target", display)

    @classmethod
    def non_target(cls, display: str = "NDT") -> "TargetLabel":
        return cls("non_target", display)

    @property
    def is_target(self) -> bool:
        return self.value == "target"


@dataclass(frozen=True)
class BehaviorVector:
    """Full 13-attribute behavior instance.

    ``subject_id``, ``action`` and ``time`` are mandatory; everything else may
    be absent (``None``).  ``impact`` may be numeric or a label string.
    """

    subject_id: str
    action: str
    time: datetime
    object_id: str | None = None
    context: tuple[tuple[str, str], ...] = ()
    goal: str | None = None
    belief: str | None = None
    plan: str | None = None
    impact: float | str | None = None
    constraint: tuple[str, ...] = ()
    place: str | None = None
    status: str | None = None
    associates: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if not self.subject_id:
            raise ValueError("subject_id is required")
        if not self.action:
            raise ValueError("action is required")


@dataclass(frozen=True)
class SimplifiedVector:
    """The {subject, object, action, impact, time} restriction of a vector.

    Absent object/impact stay explicit as ``None``.
    """

    subject_id: str
    object_id: str | None
    action: str
    impact: float | str | None
    time: datetime


def project_simplified(v: BehaviorVector) -> SimplifiedVector:
    """Project a full vector onto its five-field simplified form."""
    return SimplifiedVector(v.subject_id, v.object_id, v.action, v.impact, v.time)


def embed(sv: SimplifiedVector) -> BehaviorVector:
    """Lift a simplified vector back into the full form (other fields absent)."""
    return BehaviorVector(
        subject_id=sv.subject_id,
        action=sv.action,
        time=sv.time,
        object_id=sv.object_id,
        impact=sv.impact,
    )


@dataclass(frozen=True)
class MicrostructureVector:
    """One order lifecycle, discretized: size, side, fill probability, status, associate."""

    order_size: str       # S / M / L
    action: str           # B / S
    trade_probability: str  # L / M / H
    status: int           # -1 withdrawn/expired, 0 open, 1 done
    associate: int        # -1 opposite-side follow-up, 0 none, 1 same-side

    def __post_init__(self) -> None:
        if self.order_size not in ORDER_SIZES:
            raise ValueError(f"order_size must be one of {ORDER_SIZES}, got {self.order_size!r}")
        if self.action not in TRADE_ACTIONS:
            raise ValueError(f"action must be one of {TRADE_ACTIONS}, got {self.action!r}")
        if self.trade_probability not in PROBABILITY_BINS:
            raise ValueError(
                f"trade_probability must be one of {PROBABILITY_BINS}, got {self.trade_probability!r}"
            )
        if self.status not in TERNARY:
            raise ValueError(f"status must be in {TERNARY}, got {self.status!r}")
        if self.associate not in TERNARY:
            raise ValueError(f"associate must be in {TERNARY}, got {self.associate!r}")


def item_sort_key(item: Any) -> tuple:
    """Deterministic total order over items of one kind."""
    if isinstance(item, MicrostructureVector):
        return (item.order_size, item.action, item.trade_probability, item.status, item.associate)
    return (str(item),)


def infer_item_kind(item: Any) -> ItemKind:
    if isinstance(item, MicrostructureVector):
        return ItemKind.MICRO
    if isinstance(item, str):
        return ItemKind.DEMOGRAPHIC if "=" in item else ItemKind.ACTIVITY
    raise TypeError(f"unsupported item type: {type(item)!r}")


@dataclass(frozen=True)
class Pattern:
    """A non-empty ordered list of items, all of one kind."""

    items: tuple
    kind: ItemKind

    def __post_init__(self) -> None:
        if len(self.items) < 1:
            raise ValueError("pattern must be non-empty")

    def __len__(self) -> int:
        return len(self.items)

    @classmethod
    def of(cls, items: Iterable, kind: ItemKind | None = None) -> "Pattern":
        items = tuple(items)
        if kind is None:
            if not items:
                raise ValueError("pattern must be non-empty")
            kind = infer_item_kind(items[0])
        if kind is ItemKind.DEMOGRAPHIC:
            items = tuple(sorted(items))
        return cls(items, kind)

    @classmethod
    def itemset(cls, items: Iterable[str]) -> "Pattern":
        """Order-free demographic itemset, stored in canonical sorted order."""
        return cls(tuple(sorted(items)), ItemKind.DEMOGRAPHIC)

    def sort_key(self) -> tuple:
        return tuple(item_sort_key(i) for i in self.items)


def concat(p: Pattern, q: Pattern) -> Pattern:
    """Append q's items after p's.  Both patterns must share one item kind."""
    if p.kind is not q.kind:
        raise KindMismatchError(f"cannot concatenate {p.kind.value} with {q.kind.value}")
    return Pattern(p.items + q.items, p.kind)


@dataclass(frozen=True)
class Window:
    """Half-open time interval [start, end) a sequence was observed in."""

    start: datetime
    end: datetime

    def __post_init__(self) -> None:
        if self.end <= self.start:
            raise ValueError("window end must be after start")

    @classmethod
    def day(cls, d: date) -> "Window":
        start = datetime(d.year, d.month, d.day)
        return cls(start, start + timedelta(days=1))

    @classmethod
    def span(cls, start: date | datetime, end: date | datetime) -> "Window":
        if isinstance(start, date) and not isinstance(start, datetime):
            start = datetime(start.year, start.month, start.day)
        if isinstance(end, date) and not isinstance(end, datetime):
            end = datetime(end.year, end.month, end.day) + timedelta(days=1)
        return cls(start, end)

    def contains_instant(self, t: datetime) -> bool:
        return self.start <= t < self.end

    def contains_date(self, d: date) -> bool:
        return self.contains_instant(datetime(d.year, d.month, d.day))


@dataclass(frozen=True)
class BehaviorSequence:
    """Ordered, optionally labeled items for one subject in one window.

    ``weight`` supports pre-aggregated duplicates; debt amount/duration ride
    along for risk scoring when the sequence was labeled from a debt event.
    """

    subject_id: str
    items: tuple
    window: Window
    kind: ItemKind
    label: TargetLabel | None = None
    weight: int = 1
    debt_amount: float | None = None
    debt_duration: int | None = None

    def __post_init__(self) -> None:
        if self.weight < 1:
            raise ValueError("weight must be a positive count")

    def __len__(self) -> int:
        return len(self.items)


def contains(seq: BehaviorSequence | Sequence, pattern: Pattern) -> bool:
    """True iff the pattern occurs in the sequence.

    Activity and microstructure patterns match as non-contiguous ordered
    subsequences; demographic itemsets match as subsets.  Each sequence can
    only ever count once toward a support, regardless of occurrence count.
    """
    if isinstance(seq, BehaviorSequence):
        if seq.kind is not pattern.kind:
            raise KindMismatchError(f"sequence holds {seq.kind.value}, pattern is {pattern.kind.value}")
        items = seq.items
    else:
        items = tuple(seq)
    if pattern.kind is ItemKind.DEMOGRAPHIC:
        return set(pattern.items) <= set(items)
    return contains_subsequence(items, pattern.items)


def contains_subsequence(items: Sequence, pattern_items: Sequence) -> bool:
    """Greedy two-pointer subsequence test (gaps allowed, order respected)."""
    it = iter(items)
    return all(any(x == p for x in it) for p in pattern_items)


def contains_contiguous(items: Sequence, pattern_items: Sequence) -> bool:
    """Strict run test: the pattern must occur as an unbroken block."""
    n, k = len(items), len(pattern_items)
    return any(tuple(items[i : i + k]) == tuple(pattern_items) for i in range(n - k + 1))


# ---------------------------------------------------------------------------
# canonical JSON-lines serialization


def _item_to_json(item: Any) -> Any:
    if isinstance(item, MicrostructureVector):
        return {
            "b": item.order_size,
            "a": item.action,
            "l": item.trade_probability,
            "u": item.status,
            "m": item.associate,
        }
    return item


def _item_from_json(obj: Any) -> Any:
    if isinstance(obj, dict):
        return MicrostructureVector(obj["b"], obj["a"], obj["l"], int(obj["u"]), int(obj["m"]))
    return obj


def pattern_to_json(pattern: Pattern) -> list:
    return [_item_to_json(i) for i in pattern.items]


def pattern_from_json(items: Iterable, kind: ItemKind) -> Pattern:
    return Pattern(tuple(_item_from_json(i) for i in items), kind)


def sequence_to_record(seq: BehaviorSequence) -> dict:
    rec: dict[str, Any] = {
        "subject_id": seq.subject_id,
        "window": [seq.window.start.isoformat(), seq.window.end.isoformat()],
        "kind": seq.kind.value,
        "label": None if seq.label is None else seq.label.display,
        "label_is_target": None if seq.label is None else seq.label.is_target,
        "items": [_item_to_json(i) for i in seq.items],
        "weight": seq.weight,
    }
    if seq.debt_amount is not None:
        rec["debt_amount"] = seq.debt_amount
    if seq.debt_duration is not None:
        rec["debt_duration"] = seq.debt_duration
    return rec


def sequence_from_record(rec: dict) -> BehaviorSequence:
    label = None
    if rec.get("label") is not None:
        is_target = bool(rec.get("label_is_target"))
        label = TargetLabel("target" if is_target else "non_target", rec["label"])
    start, end = rec["window"]
    return BehaviorSequence(
        subject_id=rec["subject_id"],
        items=tuple(_item_from_json(i) for i in rec["items"]),
        window=Window(datetime.fromisoformat(start), datetime.fromisoformat(end)),
        kind=ItemKind(rec["kind"]),
        label=label,
        weight=int(rec.get("weight", 1)),
        debt_amount=rec.get("debt_amount"),
        debt_duration=rec.get("debt_duration"),
    )


def dump_json_line(obj: dict) -> str:
    """Canonical single-line JSON: sorted keys, compact separators."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))


def write_sequences(sequences: Iterable[BehaviorSequence], fh: TextIO) -> int:
    n = 0
    for seq in sequences:
        fh.write(dump_json_line(sequence_to_record(seq)) + "\n")
        n += 1
    return n


def read_sequences(fh: TextIO) -> Iterator[BehaviorSequence]:
    for line in fh:
        line = line.strip()
        if line:
            yield sequence_from_record(json.loads(line))


# Behavior vectors themselves round-trip through JSON as well; the ingestion
# pipelines work directly with sequences, this exists so every attribute of
# the full model is storable.

def vector_to_record(v: BehaviorVector) -> dict:
    rec: dict[str, Any] = {}
    for f in fields(v):
        value = getattr(v, f.name)
        if isinstance(value, datetime):
            value = value.isoformat()
        elif isinstance(value, tuple):
            value = [list(x) if isinstance(x, tuple) else x for x in value]
        rec[f.name] = value
    return rec


def vector_from_record(rec: dict) -> BehaviorVector:
    return BehaviorVector(
        subject_id=rec["subject_id"],
        action=rec["action"],
        time=datetime.fromisoformat(rec["time"]),
        object_id=rec.get("object_id"),
        context=tuple((k, v) for k, v in rec.get("context", [])),
        goal=rec.get("goal"),
        belief=rec.get("belief"),
        plan=rec.get("plan"),
        impact=rec.get("impact"),
        constraint=tuple(rec.get("constraint", [])),
        place=rec.get("place"),
        status=rec.get("status"),
        associates=tuple(rec.get("associates", [])),
    )
