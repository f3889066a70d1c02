"""Reproducible synthetic datasets with known planted structure.

Every profile writes plain CSV inputs (the same schemas the converters read),
a run config, and a ground-truth sidecar recording what was planted and at
which true rates, so miner output can be checked against known answers.
All randomness flows from one seeded generator; identical seeds produce
byte-identical files.
"""

from __future__ import annotations

import csv
import json
import random
from dataclasses import dataclass
from datetime import date, timedelta
from pathlib import Path

from .model import MicrostructureVector

SIZE_VOLUMES = {"S": 100, "M": 500, "L": 900}
SIZE_CUTPOINTS = (300, 700)
FILL_STATES = (("H", 1), ("M", 0), ("L", 0))  # reachable (probability, status) pairs
FILLER_CODES = ("DOC", "EAN", "CCO", "NDB", "AVC")

PLANTED_FIRST = MicrostructureVector("S", "B", "H", 1, 0)
PLANTED_SECOND = MicrostructureVector("M", "S", "M", 0, 0)


@dataclass(frozen=True)
class GeneratedData:
    out_dir: Path
    files: dict[str, Path]
    ground_truth: dict


def _all_vectors() -> list[MicrostructureVector]:
    out = []
    for size in ("S", "M", "L"):
        for action in ("B", "S"):
            for prob, status in FILL_STATES:
                out.append(MicrostructureVector(size, action, prob, status, 0))
    return out


def _write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with path.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_json(path: Path, payload: dict) -> None:
    path.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n", encoding="utf-8")


def _write_config(path: Path, entries: dict) -> None:
    lines = [f"{key} = {json.dumps(value)}" for key, value in entries.items()]
    path.write_text("\n".join(lines) + "\n", encoding="utf-8")


def _vector_rows(
    vector: MicrostructureVector, serial: str, day: date, seconds: int, account: str
) -> list[list]:
    """Placement row plus the fill rows that reproduce the vector on conversion."""
    volume = SIZE_VOLUMES[vector.order_size]
    hh, rem = divmod(seconds, 3600)
    t = f"{hh:02d}:{rem // 60:02d}:{rem % 60:02d}"
    rows = [[serial, day.strftime("%d/%m/%Y"), t, account, "SYN1", vector.action, "10.00", volume]]
    if vector.trade_probability == "H":
        fill = volume
    elif vector.trade_probability == "M":
        fill = volume // 2
    else:
        fill = 0
    if fill:
        fs = seconds + 30
        ft = f"{fs // 3600:02d}:{fs % 3600 // 60:02d}:{fs % 60:02d}"
        rows.append([serial, day.strftime("%d/%m/%Y"), ft, account, "SYN1", vector.action, "10.00", fill])
    return rows


def _orderbook_day(
    day: date,
    day_idx: int,
    sequences: list[list[MicrostructureVector]],
) -> list[list]:
    rows = []
    for seq_idx, vectors in enumerate(sequences):
        account = f"A{seq_idx:04d}"
        for k, vector in enumerate(vectors):
            serial = f"O{day_idx:03d}{seq_idx:04d}{k}"
            rows.extend(_vector_rows(vector, serial, day, 10 * 3600 + k * 600, account))
    rows.sort(key=lambda r: (r[2], r[0]))  # chronological within the day
    return rows


MARKET_CONFIG = {
    "size_cutpoints": {"SYN1": list(SIZE_CUTPOINTS)},
    "association_window_seconds": 300,
    "bucket_seconds": 60,
    "min_support": 0.05,
    "max_pattern_length": 6,
}


def generate_uniform(out_dir: Path, seed: int, days: int = 3, sequences_per_day: int = 50) -> GeneratedData:
    """Orderbook with no planted structure: every vector drawn uniformly."""
    rng = random.Random(seed)
    pool = _all_vectors()
    out_dir.mkdir(parents=True, exist_ok=True)
    start = date(2005, 6, 1)
    rows = []
    for day_idx in range(days):
        day = start + timedelta(days=day_idx)
        sequences = [[rng.choice(pool) for _ in range(3)] for _ in range(sequences_per_day)]
        rows.extend(_orderbook_day(day, day_idx, sequences))
    orderbook = out_dir / "orderbook.csv"
    _write_csv(orderbook, ["serial_id", "date", "time", "account_id", "security", "action", "price", "volume"], rows)
    config = out_dir / "run.cfg"
    _write_config(config, MARKET_CONFIG)
    truth = {
        "profile": "uniform",
        "seed": seed,
        "days": days,
        "sequences_per_day": sequences_per_day,
        "planted_patterns": [],
    }
    sidecar = out_dir / "ground_truth.json"
    _write_json(sidecar, truth)
    return GeneratedData(out_dir, {"orderbook": orderbook, "config": config, "ground_truth": sidecar}, truth)


def generate_planted_exception(
    out_dir: Path,
    seed: int,
    benchmark_days: int = 20,
    sequences_per_day: int = 500,
    rate_ratio: float = 10.0,
    target_rate: float = 0.2,
) -> GeneratedData:
    """Orderbook where one two-vector pattern trades at a known excess rate.

    The planted pattern appears in an exact count of sequences per day:
    ``target_rate`` of the final day, ``target_rate / rate_ratio`` of every
    benchmark day.  Its component vectors never occur in background
    sequences and all sequences have identical length, so the exceptional
    score of the planted pattern equals ``rate_ratio`` by construction.
    """
    if rate_ratio <= 0 or not (0 < target_rate <= 1):
        raise ValueError("rate_ratio must be positive and target_rate in (0, 1]")
    rng = random.Random(seed)
    background = [
        v for v in _all_vectors() if v not in (PLANTED_FIRST, PLANTED_SECOND)
    ]
    out_dir.mkdir(parents=True, exist_ok=True)
    start = date(2005, 6, 1)
    benchmark_rate = target_rate / rate_ratio
    target_count = round(sequences_per_day * target_rate)
    benchmark_count = max(1, round(sequences_per_day * benchmark_rate))
    rows = []
    day_plan = []
    for day_idx in range(benchmark_days + 1):
        day = start + timedelta(days=day_idx)
        is_target = day_idx == benchmark_days
        planted_count = target_count if is_target else benchmark_count
        planted_ids = set(rng.sample(range(sequences_per_day), planted_count))
        sequences = []
        for seq_idx in range(sequences_per_day):
            if seq_idx in planted_ids:
                items = [PLANTED_FIRST, PLANTED_SECOND]
                items.insert(rng.randrange(3), rng.choice(background))
            else:
                items = [rng.choice(background) for _ in range(3)]
            sequences.append(items)
        rows.extend(_orderbook_day(day, day_idx, sequences))
        day_plan.append({"date": day.isoformat(), "planted_sequences": planted_count})
    orderbook = out_dir / "orderbook.csv"
    _write_csv(orderbook, ["serial_id", "date", "time", "account_id", "security", "action", "price", "volume"], rows)
    config = out_dir / "run.cfg"
    _write_config(
        config,
        {**MARKET_CONFIG, "benchmark_days": benchmark_days, "min_ie": 5.0, "min_ii": 0.0},
    )
    planted_json = [
        {"b": v.order_size, "a": v.action, "l": v.trade_probability, "u": v.status, "m": v.associate}
        for v in (PLANTED_FIRST, PLANTED_SECOND)
    ]
    # Rounding to whole sequences can nudge the realized rates off the nominal
    # ones; the sidecar records the ratio the planted counts actually imply.
    true_ratio = target_count / benchmark_count
    truth = {
        "profile": "planted-exception",
        "seed": seed,
        "benchmark_days": benchmark_days,
        "sequences_per_day": sequences_per_day,
        "target_date": (start + timedelta(days=benchmark_days)).isoformat(),
        "rate_target": target_count / sequences_per_day,
        "rate_benchmark": benchmark_count / sequences_per_day,
        "true_ratio": true_ratio,
        "expected_exceptional_score": true_ratio,
        "planted_patterns": [{"pattern": planted_json, "true_ratio": true_ratio}],
        "days": day_plan,
    }
    sidecar = out_dir / "ground_truth.json"
    _write_json(sidecar, truth)
    return GeneratedData(out_dir, {"orderbook": orderbook, "config": config, "ground_truth": sidecar}, truth)


def generate_planted_reversal(out_dir: Path, seed: int, persons: int = 250) -> GeneratedData:
    """Activity and debt data with a known outcome-flipping trailing pattern.

    Everyone whose sequence holds the underlying code leans toward debt, but
    appending the trigger code flips the majority to non-debt.  Group sizes
    are exact, so the expected conditional ratios in the sidecar are exact.
    """
    if persons < 25:
        raise ValueError("need at least 25 persons for stable group sizes")
    rng = random.Random(seed)
    scale = persons / 250
    n_pq_nt = round(48 * scale)
    n_pq_t = round(32 * scale)
    n_p_only_nt = round(12 * scale)
    n_p_only_t = round(108 * scale)
    n_rest = persons - (n_pq_nt + n_pq_t + n_p_only_nt + n_p_only_t)

    def fillers(k: int) -> list[str]:
        return [rng.choice(FILLER_CODES) for _ in range(k)]

    plans: list[tuple[list[str], bool]] = []  # (codes, is_debt)
    plans += [(["STM", *fillers(1), "UPD"], False) for _ in range(n_pq_nt)]
    plans += [(["STM", *fillers(1), "UPD"], True) for _ in range(n_pq_t)]
    plans += [(["STM", *fillers(2)], False) for _ in range(n_p_only_nt)]
    plans += [(["STM", *fillers(2)], True) for _ in range(n_p_only_t)]
    rest_debt = n_rest // 2
    plans += [(fillers(3), idx < rest_debt) for idx in range(n_rest)]
    rng.shuffle(plans)

    out_dir.mkdir(parents=True, exist_ok=True)
    base = date(2006, 1, 10)
    activity_rows = []
    debt_rows = []
    for idx, (codes, is_debt) in enumerate(plans):
        pid = f"P{idx:05d}"
        for k, code in enumerate(codes):
            ts = f"{(base + timedelta(days=k)).isoformat()}T09:00:00"
            activity_rows.append([pid, ts, code])
        if is_debt:
            debt_rows.append(
                [pid, f"D{idx:05d}", date(2006, 2, 1).isoformat(), rng.randrange(100, 1000), rng.randrange(5, 60)]
            )
    activities = out_dir / "activities.csv"
    debts = out_dir / "debts.csv"
    _write_csv(activities, ["person_id", "timestamp", "activity_code"], activity_rows)
    _write_csv(debts, ["person_id", "debt_id", "raised_date", "amount", "duration_days"], debt_rows)
    config = out_dir / "run.cfg"
    _write_config(config, {"min_support": 0.25, "max_pattern_length": 4, "cir_min": 1.5, "cps_min": 0.01})

    n_p = n_pq_nt + n_pq_t + n_p_only_nt + n_p_only_t
    n_pq = n_pq_nt + n_pq_t
    conf_pq_nt = n_pq_nt / n_pq
    conf_p_nt = (n_pq_nt + n_p_only_nt) / n_p
    prob = lambda k: k / persons  # noqa: E731
    expected_cps = prob(n_pq_nt) / prob(n_p) - (prob(n_pq) / prob(n_p)) * (
        prob(n_pq_nt + n_p_only_nt) / prob(n_p)
    )
    truth = {
        "profile": "planted-reversal",
        "seed": seed,
        "persons": persons,
        "underlying": ["STM"],
        "trigger": ["UPD"],
        "derivative": ["STM", "UPD"],
        "direction": "target_to_nontarget",
        "counts": {
            "derivative_nontarget": n_pq_nt,
            "derivative_target": n_pq_t,
            "underlying_only_nontarget": n_p_only_nt,
            "underlying_only_target": n_p_only_t,
            "rest": n_rest,
        },
        "conf_underlying_nontarget": conf_p_nt,
        "conf_derivative_nontarget": conf_pq_nt,
        "expected_cir": conf_pq_nt / conf_p_nt,
        "expected_cps": expected_cps,
    }
    sidecar = out_dir / "ground_truth.json"
    _write_json(sidecar, truth)
    return GeneratedData(
        out_dir,
        {"activities": activities, "debts": debts, "config": config, "ground_truth": sidecar},
        truth,
    )


AGE_BANDS = (("16-21", 0.3), ("22-64", 0.5), ("65+", 0.2))


def generate_debt_cohort(
    out_dir: Path, seed: int, persons: int = 10000, debt_rate: float = 0.1
) -> GeneratedData:
    """Demographic + activity + debt cohort with an exact debt prevalence.

    Exactly ``round(persons * debt_rate)`` persons carry a debt.  Debtors are
    drawn with double weight from the oldest age band and lean toward the
    irregular arrangement item, so combined mining has real structure to
    find; the sidecar records the exact per-group rates.
    """
    if not (0 < debt_rate < 1):
        raise ValueError("debt_rate must be in (0, 1)")
    rng = random.Random(seed)
    out_dir.mkdir(parents=True, exist_ok=True)

    ages: list[str] = []
    for band, share in AGE_BANDS[:-1]:
        ages += [band] * round(persons * share)
    ages += [AGE_BANDS[-1][0]] * (persons - len(ages))
    rng.shuffle(ages)

    old = [i for i, a in enumerate(ages) if a == "65+"]
    young = [i for i, a in enumerate(ages) if a != "65+"]
    k = round(persons * debt_rate)
    k_old = min(len(old), round(k * 2 * len(old) / (2 * len(old) + len(young))))
    debtors = set(rng.sample(old, k_old)) | set(rng.sample(young, k - k_old))

    demo_rows = []
    activity_rows = []
    debt_rows = []
    base = date(2006, 3, 1)
    for idx in range(persons):
        pid = f"C{idx:06d}"
        is_debt = idx in debtors
        gender = rng.choice(("female", "male"))
        region = rng.choice(("remote", "urban", "rural"))
        marital = rng.choice(("single", "married", "separated"))
        demo_rows.append(
            [pid, "", "", "", region, gender, ages[idx], marital, "", "", "", "", "", "", ""]
        )
        arr = "ARR:IRREGULAR" if rng.random() < (0.6 if is_debt else 0.3) else "ARR:WITHHOLD"
        rep = rng.choice(("REP:CASH-OR-POST", "REP:WITHHOLD"))
        for k_act, code in enumerate((arr, rep, rng.choice(FILLER_CODES))):
            ts = f"{(base + timedelta(days=k_act)).isoformat()}T10:00:00"
            activity_rows.append([pid, ts, code])
        if is_debt:
            debt_rows.append(
                [pid, f"D{idx:06d}", (base + timedelta(days=10)).isoformat(), rng.randrange(50, 2000), rng.randrange(5, 120)]
            )

    demographics = out_dir / "demographics.csv"
    activities = out_dir / "activities.csv"
    debts = out_dir / "debts.csv"
    _write_csv(
        demographics,
        ["person_id", "partner_person_id", "indigenous_code", "medical_condition", "region_office",
         "gender", "age_band", "marital_status", "birth_country", "migration_status",
         "education_level", "postcode", "language", "rent_type", "method_of_payment"],
        demo_rows,
    )
    _write_csv(activities, ["person_id", "timestamp", "activity_code"], activity_rows)
    _write_csv(debts, ["person_id", "debt_id", "raised_date", "amount", "duration_days"], debt_rows)
    config = out_dir / "run.cfg"
    _write_config(config, {"min_support": 0.01, "max_pattern_length": 3})

    old_debt_rate = k_old / len(old) if old else 0.0
    truth = {
        "profile": "debt-cohort",
        "seed": seed,
        "persons": persons,
        "configured_debt_rate": debt_rate,
        "exact_prevalence": k / persons,
        "debtors": k,
        "age_band_rates": {
            "65+": old_debt_rate,
            "other": (k - k_old) / len(young) if young else 0.0,
        },
        "planted_patterns": [
            {"item": "age=65+", "debt_rate": old_debt_rate, "lift_vs_prevalence": old_debt_rate / (k / persons)}
        ],
    }
    sidecar = out_dir / "ground_truth.json"
    _write_json(sidecar, truth)
    return GeneratedData(
        out_dir,
        {
            "demographics": demographics,
            "activities": activities,
            "debts": debts,
            "config": config,
            "ground_truth": sidecar,
        },
        truth,
    )


PROFILES = {
    "uniform": generate_uniform,
    "planted-exception": generate_planted_exception,
    "planted-reversal": generate_planted_reversal,
    "debt-cohort": generate_debt_cohort,
}
