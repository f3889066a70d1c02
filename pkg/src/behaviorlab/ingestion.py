"""CSV parsing and conversion of transactional records into behavior sequences.

Converts raw orderbook, activity, debt and demographic extracts into the
canonical sequence model.  All grouping and ordering is stable, so re-running
a conversion on the same input and config produces byte-identical output.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from datetime import date, datetime, time, timedelta
from typing import Iterable, Sequence, TextIO

from .model import (
    BehaviorSequence,
    ItemKind,
    MicrostructureVector,
    TargetLabel,
    Window,
)

ORDERBOOK_HEADER = ["serial_id", "date", "time", "account_id", "security", "action", "price", "volume"]
ACTIVITIES_HEADER = ["person_id", "timestamp", "activity_code"]
DEBTS_HEADER = ["person_id", "debt_id", "raised_date", "amount", "duration_days"]
DEMOGRAPHICS_HEADER = [
    "person_id",
    "partner_person_id",
    "indigenous_code",
    "medical_condition",
    "region_office",
    "gender",
    "age_band",
    "marital_status",
    "birth_country",
    "migration_status",
    "education_level",
    "postcode",
    "language",
    "rent_type",
    "method_of_payment",
]

# Identifier columns never become mineable items; the remaining attributes
# are emitted as "name=value" items using their domain spellings.
DEMOGRAPHIC_ITEM_NAMES = {
    "indigenous_code": "indigenous-code",
    "medical_condition": "medical-condition",
    "region_office": "region-office",
    "gender": "gender",
    "age_band": "age",
    "marital_status": "marital-status",
    "birth_country": "birth-country",
    "migration_status": "migration-status",
    "education_level": "education-level",
    "postcode": "postcode",
    "language": "language",
    "rent_type": "rent-type",
    "method_of_payment": "method-of-payment",
}

DATE_FORMATS = ("%d/%m/%Y", "%Y-%m-%d")
FILL_BINS = (0.0, 1.0 / 3.0, 2.0 / 3.0, 1.0)  # fixed thirds


class ParseError(ValueError):
    """Malformed input row; carries the 1-based line number and column name."""

    def __init__(self, line: int, column: str, message: str):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class OrderRecord:
    serial_id: str
    order_date: date
    order_time: time
    account_id: str
    security: str
    action: str  # B | S
    price: float
    volume: int

    @property
    def instant(self) -> datetime:
        return datetime.combine(self.order_date, self.order_time)


@dataclass(frozen=True)
class ActivityRecord:
    person_id: str
    timestamp: datetime
    activity_code: str


@dataclass(frozen=True)
class DebtRecord:
    person_id: str
    debt_id: str
    raised_date: date
    amount: float
    duration_days: int


@dataclass(frozen=True)
class DemographicRecord:
    person_id: str
    attributes: tuple[tuple[str, str], ...]  # (column, raw value); blanks omitted
    label: TargetLabel | None = None

    def items(self) -> tuple[str, ...]:
        return tuple(
            sorted(
                f"{DEMOGRAPHIC_ITEM_NAMES[col]}={val}"
                for col, val in self.attributes
                if col in DEMOGRAPHIC_ITEM_NAMES
            )
        )


@dataclass(frozen=True)
class ConversionConfig:
    """Knobs of the transactional-to-behavioral conversion.

    ``size_cutpoints`` maps security to explicit (c1, c2) volume thresholds;
    securities without an entry get empirical terciles over the whole input.
    ``expiry_seconds`` enables status -1 for orders that expire unfilled;
    without it an unfilled order stays "open" (status 0) at window close.
    """

    size_cutpoints: dict[str, tuple[int, int]] = field(default_factory=dict)
    association_window_seconds: float = 300.0
    window_days: int = 1
    bucket_seconds: int = 60
    expiry_seconds: float | None = None
    date_formats: tuple[str, ...] = DATE_FORMATS
    window_start: datetime | None = None
    window_end: datetime | None = None

    def __post_init__(self) -> None:
        for security, (c1, c2) in self.size_cutpoints.items():
            if not c1 < c2:
                raise ValueError(f"cutpoints for {security} must be strictly increasing")
        if self.association_window_seconds <= 0:
            raise ValueError("association window must be positive")
        if self.window_days < 1:
            raise ValueError("window length must be at least one day")
        if self.bucket_seconds < 1:
            raise ValueError("bucket length must be positive")


@dataclass(frozen=True)
class ConversionSummary:
    input_rows: int
    sequences: int
    dropped_empty: int
    label_counts: dict[str, int]

    def to_json(self) -> dict:
        return {
            "input_rows": self.input_rows,
            "sequences": self.sequences,
            "dropped_empty": self.dropped_empty,
            "label_distribution": dict(sorted(self.label_counts.items())),
        }


@dataclass(frozen=True)
class ConversionResult:
    sequences: list[BehaviorSequence]
    summary: ConversionSummary


def _parse_date(raw: str, formats: Sequence[str], line: int, column: str) -> date:
    for fmt in formats:
        try:
            return datetime.strptime(raw, fmt).date()
        except ValueError:
            continue
    raise ParseError(line, column, f"unrecognized date {raw!r} (accepted formats: {', '.join(formats)})")


def _parse_timestamp(raw: str, line: int, column: str) -> datetime:
    for candidate in (raw, raw.replace(" ", "T")):
        try:
            return datetime.fromisoformat(candidate)
        except ValueError:
            continue
    raise ParseError(line, column, f"unrecognized timestamp {raw!r}")


def _reader(fh: TextIO, expected_header: list[str], path: str) -> Iterable[tuple[int, dict]]:
    reader = csv.reader(fh)
    try:
        header = next(reader)
    except StopIteration:
        raise ParseError(1, expected_header[0], f"{path}: empty file, expected header row")
    header = [h.strip() for h in header]
    if header != expected_header:
        raise ParseError(1, ",".join(expected_header), f"{path}: header {header!r} does not match schema")
    for line_no, row in enumerate(reader, start=2):
        if not row or all(not cell.strip() for cell in row):
            continue
        if len(row) != len(expected_header):
            raise ParseError(line_no, expected_header[0], f"expected {len(expected_header)} fields, got {len(row)}")
        yield line_no, dict(zip(expected_header, (cell.strip() for cell in row)))


def parse_orderbook(
    fh: TextIO, path: str = "<orderbook>", date_formats: Sequence[str] = DATE_FORMATS
) -> list[OrderRecord]:
    """Parse an orderbook CSV in file order, canonicalizing dates to ISO."""
    records = []
    for line_no, row in _reader(fh, ORDERBOOK_HEADER, path):
        d = _parse_date(row["date"], date_formats, line_no, "date")
        try:
            t = time.fromisoformat(row["time"])
        except ValueError:
            raise ParseError(line_no, "time", f"unrecognized time {row['time']!r}")
        if row["action"] not in ("B", "S"):
            raise ParseError(line_no, "action", f"action must be B or S, got {row['action']!r}")
        try:
            price = float(row["price"])
        except ValueError:
            raise ParseError(line_no, "price", f"not a number: {row['price']!r}")
        if price < 0 or not math.isfinite(price):
            raise ParseError(line_no, "price", f"price must be >= 0, got {row['price']!r}")
        try:
            volume = int(row["volume"])
        except ValueError:
            raise ParseError(line_no, "volume", f"not an integer: {row['volume']!r}")
        if volume <= 0:
            raise ParseError(line_no, "volume", f"volume must be positive, got {volume}")
        records.append(
            OrderRecord(row["serial_id"], d, t, row["account_id"], row["security"], row["action"], price, volume)
        )
    return records


def parse_activities(fh: TextIO, path: str = "<activities>") -> list[ActivityRecord]:
    records = []
    for line_no, row in _reader(fh, ACTIVITIES_HEADER, path):
        code = row["activity_code"]
        if not code:
            raise ParseError(line_no, "activity_code", "activity code must be non-empty")
        if code != code.upper():
            raise ParseError(line_no, "activity_code", f"activity code must be uppercase, got {code!r}")
        records.append(ActivityRecord(row["person_id"], _parse_timestamp(row["timestamp"], line_no, "timestamp"), code))
    return records


def parse_debts(
    fh: TextIO, path: str = "<debts>", date_formats: Sequence[str] = DATE_FORMATS
) -> list[DebtRecord]:
    records = []
    for line_no, row in _reader(fh, DEBTS_HEADER, path):
        try:
            amount = float(row["amount"])
        except ValueError:
            raise ParseError(line_no, "amount", f"not a number: {row['amount']!r}")
        if amount < 0:
            raise ParseError(line_no, "amount", f"amount must be >= 0, got {amount}")
        try:
            duration = int(row["duration_days"])
        except ValueError:
            raise ParseError(line_no, "duration_days", f"not an integer: {row['duration_days']!r}")
        if duration < 0:
            raise ParseError(line_no, "duration_days", f"duration must be >= 0, got {duration}")
        records.append(
            DebtRecord(
                row["person_id"],
                row["debt_id"],
                _parse_date(row["raised_date"], date_formats, line_no, "raised_date"),
                amount,
                duration,
            )
        )
    return records


def parse_demographics(fh: TextIO, path: str = "<demographics>") -> list[DemographicRecord]:
    records = []
    seen: dict[str, int] = {}
    duplicates: list[str] = []
    for line_no, row in _reader(fh, DEMOGRAPHICS_HEADER, path):
        pid = row["person_id"]
        if not pid:
            raise ParseError(line_no, "person_id", "person_id must be non-empty")
        if pid in seen:
            duplicates.append(pid)
        seen[pid] = line_no
        attrs = tuple(
            (col, row[col]) for col in DEMOGRAPHICS_HEADER[1:] if row[col]
        )
        records.append(DemographicRecord(pid, attrs))
    if duplicates:
        raise ParseError(
            seen[duplicates[0]], "person_id", f"duplicate person ids: {sorted(set(duplicates))}"
        )
    return records


# ---------------------------------------------------------------------------
# discretization


def tercile_cutpoints(volumes: Sequence[int]) -> tuple[int, int]:
    """Empirical tercile cutpoints; bins are closed on the left (ties go low)."""
    if not volumes:
        raise ValueError("cannot compute cutpoints of an empty volume set")
    ordered = sorted(volumes)
    n = len(ordered)
    c1 = ordered[math.ceil(n / 3) - 1]
    c2 = ordered[math.ceil(2 * n / 3) - 1]
    return c1, c2


def discretize_order_size(volume: int, cutpoints: tuple[int, int]) -> str:
    """S below the first cut (inclusive), M up to the second, L beyond."""
    if volume <= 0:
        raise ValueError(f"volume must be positive, got {volume}")
    c1, c2 = cutpoints
    if volume <= c1:
        return "S"
    if volume <= c2:
        return "M"
    return "L"


def trade_probability(fills: Sequence[int], ordered_volume: int) -> tuple[float, str]:
    """Fill fraction and its bin: L on [0, 1/3), M on [1/3, 2/3), H on [2/3, 1]."""
    if ordered_volume <= 0:
        raise ValueError("ordered volume must be positive")
    filled = sum(fills)
    if filled > ordered_volume:
        raise ValueError(f"fills {filled} exceed ordered volume {ordered_volume}")
    raw = filled / ordered_volume
    if raw < FILL_BINS[1]:
        return raw, "L"
    if raw < FILL_BINS[2]:
        return raw, "M"
    return raw, "H"


# ---------------------------------------------------------------------------
# order lifecycles -> microstructure sequences


@dataclass(frozen=True)
class OrderLifecycle:
    """A placement row plus its partial-fill rows (same serial id)."""

    placement: OrderRecord
    fills: tuple[OrderRecord, ...]

    @property
    def filled_volume(self) -> int:
        return sum(f.volume for f in self.fills)


def group_lifecycles(orders: Sequence[OrderRecord]) -> list[OrderLifecycle]:
    """Group rows by serial id: first row places the order, the rest fill it.

    Rows are ordered by timestamp first (stable on source order), so every
    input row lands in exactly one lifecycle.
    """
    ordered = sorted(enumerate(orders), key=lambda pair: (pair[1].instant, pair[0]))
    by_serial: dict[str, list[OrderRecord]] = {}
    serial_order: list[str] = []
    for _, rec in ordered:
        if rec.serial_id not in by_serial:
            by_serial[rec.serial_id] = []
            serial_order.append(rec.serial_id)
        by_serial[rec.serial_id].append(rec)
    lifecycles = []
    for serial in serial_order:
        rows = by_serial[serial]
        placement, fills = rows[0], rows[1:]
        for f in fills:
            if f.account_id != placement.account_id or f.action != placement.action:
                raise ValueError(
                    f"order {serial}: fill rows must match the placement account and action"
                )
        total_fill = sum(f.volume for f in fills)
        if total_fill > placement.volume:
            raise ValueError(
                f"order {serial}: fills ({total_fill}) exceed ordered volume ({placement.volume})"
            )
        lifecycles.append(OrderLifecycle(placement, tuple(fills)))
    return lifecycles


def _window_of(day: date, cfg: ConversionConfig) -> Window:
    anchor = day.toordinal() - (day.toordinal() % cfg.window_days)
    start = date.fromordinal(anchor)
    return Window.span(start, date.fromordinal(anchor + cfg.window_days - 1))


def _status(lifecycle: OrderLifecycle, window: Window, cfg: ConversionConfig) -> int:
    in_window = [f for f in lifecycle.fills if window.contains_instant(f.instant)]
    filled = sum(f.volume for f in in_window)
    if filled >= lifecycle.placement.volume:
        return 1
    if filled == 0 and cfg.expiry_seconds is not None:
        expiry = lifecycle.placement.instant + timedelta(seconds=cfg.expiry_seconds)
        if expiry <= window.end:
            return -1
    return 0


def build_microstructure_sequences(
    orders: Sequence[OrderRecord], cfg: ConversionConfig
) -> ConversionResult:
    """One sequence per (account, window); one vector per order lifecycle.

    Status is resolved against the placement window; the associate field looks
    at the account's next placement inside the association window (+1 same
    side, -1 opposite side, 0 none).
    """
    lifecycles = group_lifecycles(orders)

    cutpoints = dict(cfg.size_cutpoints)
    for security in sorted({lc.placement.security for lc in lifecycles}):
        if security not in cutpoints:
            volumes = [lc.placement.volume for lc in lifecycles if lc.placement.security == security]
            cutpoints[security] = tercile_cutpoints(volumes)

    by_account: dict[str, list[OrderLifecycle]] = {}
    for lc in lifecycles:
        by_account.setdefault(lc.placement.account_id, []).append(lc)

    sequences = []
    for account in sorted(by_account):
        account_lcs = by_account[account]  # already time-ordered via group_lifecycles
        vectors_by_window: dict[Window, list[MicrostructureVector]] = {}
        for idx, lc in enumerate(account_lcs):
            placement = lc.placement
            window = _window_of(placement.order_date, cfg)
            _, prob_bin = trade_probability(
                [f.volume for f in lc.fills if window.contains_instant(f.instant)],
                placement.volume,
            )
            associate = 0
            if idx + 1 < len(account_lcs):
                nxt = account_lcs[idx + 1].placement
                gap = (nxt.instant - placement.instant).total_seconds()
                if gap <= cfg.association_window_seconds:
                    associate = 1 if nxt.action == placement.action else -1
            vector = MicrostructureVector(
                order_size=discretize_order_size(placement.volume, cutpoints[placement.security]),
                action=placement.action,
                trade_probability=prob_bin,
                status=_status(lc, window, cfg),
                associate=associate,
            )
            vectors_by_window.setdefault(window, []).append(vector)
        for window in sorted(vectors_by_window, key=lambda w: w.start):
            sequences.append(
                BehaviorSequence(
                    subject_id=account,
                    items=tuple(vectors_by_window[window]),
                    window=window,
                    kind=ItemKind.MICRO,
                )
            )
    summary = ConversionSummary(
        input_rows=len(orders), sequences=len(sequences), dropped_empty=0, label_counts={}
    )
    return ConversionResult(sequences, summary)


# ---------------------------------------------------------------------------
# social security activities and demographics


def label_debts(
    person_ids: Iterable[str], debts: Sequence[DebtRecord], window: Window
) -> dict[str, tuple[TargetLabel, float | None, int | None]]:
    """Per-person label from in-window debts, with summed amount/duration."""
    in_window: dict[str, tuple[float, int]] = {}
    for d in debts:
        if window.contains_date(d.raised_date):
            amt, dur = in_window.get(d.person_id, (0.0, 0))
            in_window[d.person_id] = (amt + d.amount, dur + d.duration_days)
    out = {}
    for pid in person_ids:
        if pid in in_window:
            amt, dur = in_window[pid]
            out[pid] = (TargetLabel.target(), amt, dur)
        else:
            out[pid] = (TargetLabel.non_target(), None, None)
    return out


def observation_window(
    cfg: ConversionConfig, instants: Sequence[datetime]
) -> Window:
    if cfg.window_start is not None and cfg.window_end is not None:
        return Window(cfg.window_start, cfg.window_end)
    if not instants:
        raise ValueError("cannot infer an observation window from empty data")
    lo, hi = min(instants), max(instants)
    return Window(lo, hi + timedelta(seconds=1))


def build_activity_sequences(
    activities: Sequence[ActivityRecord],
    debts: Sequence[DebtRecord],
    window: Window,
) -> ConversionResult:
    """One activity-code sequence per person in the window, labeled from debts.

    Persons whose debt is raised inside the window are labeled DET and carry
    the summed debt amount/duration; everyone else is NDT.  Persons with a
    debt but no in-window activities would produce empty sequences: those are
    dropped from the mining input but counted in the summary.
    """
    in_window = [a for a in activities if window.contains_instant(a.timestamp)]
    by_person: dict[str, list[tuple[int, ActivityRecord]]] = {}
    for idx, rec in enumerate(in_window):
        by_person.setdefault(rec.person_id, []).append((idx, rec))

    labels = label_debts(
        sorted(set(by_person) | {d.person_id for d in debts if window.contains_date(d.raised_date)}),
        debts,
        window,
    )

    sequences = []
    dropped = 0
    label_counts: dict[str, int] = {}
    for pid in sorted(labels):
        label, amount, duration = labels[pid]
        rows = by_person.get(pid, [])
        if not rows:
            dropped += 1
            continue
        rows.sort(key=lambda pair: (pair[1].timestamp, pair[0]))
        sequences.append(
            BehaviorSequence(
                subject_id=pid,
                items=tuple(rec.activity_code for _, rec in rows),
                window=window,
                kind=ItemKind.ACTIVITY,
                label=label,
                debt_amount=amount,
                debt_duration=duration,
            )
        )
        label_counts[label.display] = label_counts.get(label.display, 0) + 1
    summary = ConversionSummary(
        input_rows=len(activities),
        sequences=len(sequences),
        dropped_empty=dropped,
        label_counts=label_counts,
    )
    return ConversionResult(sequences, summary)


def build_demographic_vectors(
    demographics: Sequence[DemographicRecord],
    debts: Sequence[DebtRecord],
    window: Window,
) -> ConversionResult:
    """One itemized record per person ("attr=value" items), labeled from debts.

    Records with no usable attributes keep their label and an empty itemset.
    """
    seen: set[str] = set()
    duplicates: set[str] = set()
    for rec in demographics:
        (duplicates if rec.person_id in seen else seen).add(rec.person_id)
    if duplicates:
        raise ValueError(f"duplicate person ids in demographics: {sorted(duplicates)}")
    labels = label_debts([r.person_id for r in demographics], debts, window)
    sequences = []
    label_counts: dict[str, int] = {}
    for rec in sorted(demographics, key=lambda r: r.person_id):
        label, amount, duration = labels[rec.person_id]
        sequences.append(
            BehaviorSequence(
                subject_id=rec.person_id,
                items=rec.items(),
                window=window,
                kind=ItemKind.DEMOGRAPHIC,
                label=label,
                debt_amount=amount,
                debt_duration=duration,
            )
        )
        label_counts[label.display] = label_counts.get(label.display, 0) + 1
    summary = ConversionSummary(
        input_rows=len(demographics),
        sequences=len(sequences),
        dropped_empty=0,
        label_counts=label_counts,
    )
    return ConversionResult(sequences, summary)
