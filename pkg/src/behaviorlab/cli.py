"""Command line pipeline: convert, mine, generate, oracle.

Exit codes: 0 success, 1 usage error, 2 input parse error, 3 behavior-file
schema error.  Reports are JSON lines sorted by each mode's primary metric
(descending, ties broken lexicographically) so reruns diff cleanly.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from dataclasses import dataclass, fields
from datetime import datetime
from pathlib import Path

from . import combined, exceptional, impact, ingestion, oracle, seqmine
from .model import (
    BehaviorSequence,
    ItemKind,
    TargetLabel,
    dump_json_line,
    pattern_to_json,
    sequence_from_record,
    write_sequences,
)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_PARSE = 2
EXIT_SCHEMA = 3


class SchemaError(ValueError):
    """A behavior file does not match the canonical record schema."""


class UsageError(ValueError):
    pass


@dataclass(frozen=True)
class RunConfig:
    """Flat run configuration; file values are overridden by flags."""

    size_cutpoints: dict | None = None
    association_window_seconds: float = 300.0
    window_days: int = 1
    bucket_seconds: int = 60
    expiry_seconds: float | None = None
    window_start: str | None = None
    window_end: str | None = None
    min_support: float = 0.05
    max_pattern_length: int = 6
    contiguous: bool = False
    benchmark_days: int = 5
    min_ii: float = 0.0
    min_ie: float = 5.0
    cir_min: float = 1.0
    cps_min: float = 0.0
    severity_tiers: tuple[float, float] = (5.0, 10.0)
    workers: int = 1
    seed: int | None = None

    def conversion(self) -> ingestion.ConversionConfig:
        cutpoints = {
            sec: (int(lo), int(hi)) for sec, (lo, hi) in (self.size_cutpoints or {}).items()
        }
        return ingestion.ConversionConfig(
            size_cutpoints=cutpoints,
            association_window_seconds=self.association_window_seconds,
            window_days=self.window_days,
            bucket_seconds=self.bucket_seconds,
            expiry_seconds=self.expiry_seconds,
            window_start=datetime.fromisoformat(self.window_start) if self.window_start else None,
            window_end=datetime.fromisoformat(self.window_end) if self.window_end else None,
        )

    def mining(self) -> seqmine.MiningConfig:
        return seqmine.MiningConfig(
            min_support=self.min_support,
            max_pattern_length=self.max_pattern_length,
            contiguous=self.contiguous,
        )


def load_config(path: Path) -> dict:
    """Parse a flat ``key = value`` config file; values are JSON literals."""
    values: dict = {}
    known = {f.name for f in fields(RunConfig)}
    for line_no, raw in enumerate(path.read_text(encoding="utf-8").splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{line_no}: expected 'key = value', got {raw!r}")
        key, _, value = line.partition("=")
        key = key.strip()
        if key not in known:
            raise UsageError(f"{path}:{line_no}: unknown config key {key!r}")
        try:
            values[key] = json.loads(value.strip())
        except json.JSONDecodeError:
            values[key] = value.strip()
    return values


def build_run_config(args: argparse.Namespace) -> RunConfig:
    values: dict = {}
    if getattr(args, "config", None):
        values.update(load_config(Path(args.config)))
    overrides = {
        "min_support": getattr(args, "min_supp", None),
        "benchmark_days": getattr(args, "benchmark_days", None),
        "min_ii": getattr(args, "min_ii", None),
        "min_ie": getattr(args, "min_ie", None),
        "cir_min": getattr(args, "cir_min", None),
        "cps_min": getattr(args, "cps_min", None),
        "workers": getattr(args, "workers", None),
        "seed": getattr(args, "seed", None),
    }
    values.update({k: v for k, v in overrides.items() if v is not None})
    if "severity_tiers" in values:
        values["severity_tiers"] = tuple(values["severity_tiers"])
    return RunConfig(**values)


# ---------------------------------------------------------------------------
# convert


def _read_text(path: str):
    return open(path, "r", encoding="utf-8", newline="")


def cmd_convert(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    conv = cfg.conversion()
    out_path = Path(args.out)

    if args.kind == "orderbook":
        with _read_text(args.input) as fh:
            orders = ingestion.parse_orderbook(fh, args.input, conv.date_formats)
        result = ingestion.build_microstructure_sequences(orders, conv)
    else:
        if not args.debts:
            raise UsageError(f"--debts is required for kind {args.kind!r}")
        with _read_text(args.debts) as fh:
            debts = ingestion.parse_debts(fh, args.debts, conv.date_formats)
        if args.kind == "activity":
            with _read_text(args.input) as fh:
                acts = ingestion.parse_activities(fh, args.input)
            instants = [a.timestamp for a in acts] + [
                datetime.combine(d.raised_date, datetime.min.time()) for d in debts
            ]
            window = ingestion.observation_window(conv, instants)
            result = ingestion.build_activity_sequences(acts, debts, window)
        else:  # demographic
            with _read_text(args.input) as fh:
                demos = ingestion.parse_demographics(fh, args.input)
            instants = [datetime.combine(d.raised_date, datetime.min.time()) for d in debts]
            if not instants:
                instants = [datetime(1970, 1, 1)]
            window = ingestion.observation_window(conv, instants)
            result = ingestion.build_demographic_vectors(demos, debts, window)

    out_path.parent.mkdir(parents=True, exist_ok=True)
    with out_path.open("w", encoding="utf-8", newline="\n") as fh:
        write_sequences(result.sequences, fh)
    summary = {"command": "convert", "kind": args.kind, "out": str(out_path)}
    summary.update(result.summary.to_json())
    print(dump_json_line(summary))
    return EXIT_OK


# ---------------------------------------------------------------------------
# mine


def _load_behavior_file(path: str, expected_kind: ItemKind) -> list[BehaviorSequence]:
    sequences = []
    try:
        with open(path, "r", encoding="utf-8") as fh:
            for line_no, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                    seq = sequence_from_record(record)
                except (KeyError, ValueError, TypeError) as exc:
                    raise SchemaError(f"{path}:{line_no}: bad behavior record: {exc}") from exc
                if seq.kind is not expected_kind:
                    raise SchemaError(
                        f"{path}:{line_no}: expected {expected_kind.value} items, got {seq.kind.value}"
                    )
                sequences.append(seq)
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc}") from exc
    return sequences


def _score_json(value: float | None) -> float | None:
    if value is None:
        return None
    if math.isinf(value) or math.isnan(value):
        return None
    return value


def _write_report(path: Path, rows: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", encoding="utf-8", newline="\n") as fh:
        for row in rows:
            fh.write(dump_json_line(row) + "\n")


def _mine_exceptional(args, cfg: RunConfig) -> list[dict]:
    sequences = _load_behavior_file(args.input[0], ItemKind.MICRO)
    daily: dict = {}
    for seq in sequences:
        daily.setdefault(seq.window.start.date(), []).append(seq)
    orders = []
    if args.orders:
        with _read_text(args.orders) as fh:
            orders = ingestion.parse_orderbook(fh, args.orders)
    result = exceptional.mine_exceptional(
        daily,
        benchmark_days=cfg.benchmark_days,
        min_intentional=cfg.min_ii,
        min_exceptional=cfg.min_ie,
        cfg=cfg.mining(),
        orders=orders,
        bucket_seconds=cfg.bucket_seconds,
        workers=cfg.workers,
    )
    for skip in result.skipped:
        print(f"warning: skipped {skip.day.isoformat()}: {skip.reason}", file=sys.stderr)
    rows = []
    for p in result.patterns:
        ar = p.abnormal_return
        rows.append(
            {
                "date": p.day.isoformat(),
                "pattern": pattern_to_json(p.pattern),
                "I_i": p.intentional,
                "I_e": _score_json(p.exceptional),
                "novel": p.novel,
                "AR": ar,
                "AR_pct": None if ar is None else ar * 100.0,
                "severity": exceptional.severity_for(p.exceptional, cfg.severity_tiers),
            }
        )
    return rows


def _mine_impact(args, cfg: RunConfig) -> list[dict]:
    sequences = _load_behavior_file(args.input[0], ItemKind.ACTIVITY)
    rules = seqmine.mine_impact_oriented(sequences, cfg.mining(), TargetLabel.target())
    annotated = impact.annotate_risk(list(rules.positive) + list(rules.negative), sequences)
    rows = []
    for rule in annotated:
        rows.append(
            {
                "pattern": pattern_to_json(rule.pattern),
                "negated": rule.negated,
                "label": rule.label.display,
                "support": rule.support_rule,
                "confidence": rule.confidence,
                "lift": _score_json(rule.lift),
                "flags": list(rule.flags),
                "risk_amt": rule.risk_amount,
                "risk_dur": rule.risk_duration,
            }
        )
    rows.sort(
        key=lambda r: (
            -(r["lift"] if r["lift"] is not None else float("-inf")),
            -r["support"],
            json.dumps(r["pattern"]),
            r["negated"],
            r["label"],
        )
    )
    return rows


def _mine_contrast(args, cfg: RunConfig) -> list[dict]:
    if len(args.input) == 2:
        data_a = _load_behavior_file(args.input[0], ItemKind.ACTIVITY)
        data_b = _load_behavior_file(args.input[1], ItemKind.ACTIVITY)
    elif len(args.input) == 1:
        # One labeled file splits into the target and non-target datasets.
        everything = _load_behavior_file(args.input[0], ItemKind.ACTIVITY)
        data_a = [s for s in everything if s.label is not None and s.label.is_target]
        data_b = [s for s in everything if s.label is not None and not s.label.is_target]
        if not data_a or not data_b:
            raise UsageError("contrast mode on one file needs both labels present")
    else:
        raise UsageError("contrast mode takes one labeled file or two dataset files")
    patterns = impact.mine_contrast(data_a, data_b, cfg.mining())
    patterns = impact.annotate_risk(patterns, data_a)
    rows = []
    for c in patterns:
        rows.append(
            {
                "pattern": pattern_to_json(c.pattern),
                "supp_A": c.supp_in_a,
                "supp_B": c.supp_in_b,
                "Cd": c.difference,
                "Cdr": _score_json(c.ratio),
                "Cd_reversed": c.difference_reversed,
                "Cdr_reversed": _score_json(c.ratio_reversed),
                "one_sided": c.supp_in_a == 0 or c.supp_in_b == 0,
                "risk_amt": c.risk_amount,
                "risk_dur": c.risk_duration,
            }
        )
    return rows


def _mine_reversal(args, cfg: RunConfig) -> list[dict]:
    sequences = _load_behavior_file(args.input[0], ItemKind.ACTIVITY)
    pairs = impact.mine_reversals(sequences, cfg.mining(), cfg.cir_min, cfg.cps_min)
    pairs = impact.annotate_risk(pairs, sequences)
    rows = []
    for r in pairs:
        rows.append(
            {
                "P": pattern_to_json(r.underlying),
                "Q": pattern_to_json(r.trigger),
                "derivative": pattern_to_json(r.derivative),
                "Cir": r.impact_ratio,
                "Cps": r.ps_ratio,
                "direction": r.direction,
                "risk_amt": r.risk_amount,
                "risk_dur": r.risk_duration,
            }
        )
    return rows


def _mine_combined(args, cfg: RunConfig, out_path: Path) -> list[dict]:
    if len(args.input) != 2:
        raise UsageError("combined mode needs two --input files: demographics then activities")
    demos = _load_behavior_file(args.input[0], ItemKind.DEMOGRAPHIC)
    acts = _load_behavior_file(args.input[1], ItemKind.ACTIVITY)
    patterns = combined.mine_combined(demos, acts, None, cfg.mining())
    ids = {id(p): f"p{idx + 1}" for idx, p in enumerate(patterns)}
    rows = []
    for p in patterns:
        rows.append(
            {
                "id": ids[id(p)],
                "D": list(p.demo_items),
                "A": pattern_to_json(p.activity),
                "T": p.label,
                "count": p.count,
                "conf": p.confidence,
                "lift": p.lift,
                "lift_D": p.lift_demo,
                "lift_A": p.lift_activity,
                "I_P": p.interestingness,
            }
        )
    pairs = combined.make_pairs(patterns)
    pair_rows = [
        {
            "D": list(pr.shared_demo),
            "members": [ids[id(pr.left)], ids[id(pr.right)]],
            "I_pair": pr.interestingness,
        }
        for pr in pairs
    ]
    clusters = combined.make_clusters(patterns)
    cluster_rows = [
        {
            "D": list(cl.shared_demo),
            "members": [ids[id(m)] for m in cl.members],
            "I_cluster": cl.interestingness,
        }
        for cl in clusters
    ]
    _write_report(out_path.with_suffix(out_path.suffix + ".pairs"), pair_rows)
    _write_report(out_path.with_suffix(out_path.suffix + ".clusters"), cluster_rows)
    return rows


def cmd_mine(args: argparse.Namespace) -> int:
    cfg = build_run_config(args)
    out_path = Path(args.out)
    if args.mode == "exceptional":
        rows = _mine_exceptional(args, cfg)
    elif args.mode == "impact":
        rows = _mine_impact(args, cfg)
    elif args.mode == "contrast":
        rows = _mine_contrast(args, cfg)
    elif args.mode == "reversal":
        rows = _mine_reversal(args, cfg)
    else:
        rows = _mine_combined(args, cfg, out_path)
    _write_report(out_path, rows)
    print(dump_json_line({"command": "mine", "mode": args.mode, "patterns": len(rows), "out": str(out_path)}))
    return EXIT_OK


# ---------------------------------------------------------------------------
# generate / oracle


def cmd_generate(args: argparse.Namespace) -> int:
    from . import synthetic

    if args.seed is None:
        raise UsageError("--seed is required for generate")
    profile = synthetic.PROFILES.get(args.profile)
    if profile is None:
        raise UsageError(f"unknown profile {args.profile!r}; choose from {sorted(synthetic.PROFILES)}")
    kwargs = {}
    if args.profile in ("uniform",):
        if args.days is not None:
            kwargs["days"] = args.days
        if args.sequences_per_day is not None:
            kwargs["sequences_per_day"] = args.sequences_per_day
    if args.profile == "planted-exception":
        if args.days is not None:
            kwargs["benchmark_days"] = args.days
        if args.sequences_per_day is not None:
            kwargs["sequences_per_day"] = args.sequences_per_day
        if args.rate_ratio is not None:
            kwargs["rate_ratio"] = args.rate_ratio
    if args.profile in ("planted-reversal", "debt-cohort") and args.persons is not None:
        kwargs["persons"] = args.persons
    if args.profile == "debt-cohort" and args.debt_rate is not None:
        kwargs["debt_rate"] = args.debt_rate
    result = profile(Path(args.out), args.seed, **kwargs)
    print(
        dump_json_line(
            {
                "command": "generate",
                "profile": args.profile,
                "out": str(result.out_dir),
                "files": {name: str(path) for name, path in sorted(result.files.items())},
            }
        )
    )
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    kind = None
    sequences = []
    for candidate in (ItemKind.MICRO, ItemKind.ACTIVITY, ItemKind.DEMOGRAPHIC):
        try:
            sequences = _load_behavior_file(args.input[0], candidate)
            kind = candidate
            break
        except SchemaError:
            continue
    if kind is None:
        raise SchemaError(f"{args.input[0]}: not a behavior file")
    supports = oracle.enumerate_patterns(sequences, args.max_len)
    rows = [
        {"pattern": [_json_item(i) for i in items], "support": supp}
        for items, supp in supports.items()
    ]
    rows.sort(key=lambda r: (-r["support"], json.dumps(r["pattern"])))
    for row in rows:
        print(dump_json_line(row))
    return EXIT_OK


def _json_item(item):
    from .model import _item_to_json

    return _item_to_json(item)


# ---------------------------------------------------------------------------
# argument parsing


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # exit 1 on usage errors, not argparse's 2
        self.print_usage(sys.stderr)
        raise SystemExit(EXIT_USAGE)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="behaviorlab", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    convert = sub.add_parser("convert", help="convert raw CSV extracts into behavior JSON lines")
    convert.add_argument("--kind", required=True, choices=("orderbook", "activity", "demographic"))
    convert.add_argument("--input", required=True)
    convert.add_argument("--debts", help="debts.csv (labels for activity/demographic kinds)")
    convert.add_argument("--config")
    convert.add_argument("--out", required=True)
    convert.set_defaults(func=cmd_convert)

    mine = sub.add_parser("mine", help="mine behavior files into pattern reports")
    mine.add_argument(
        "--mode", required=True, choices=("exceptional", "impact", "contrast", "reversal", "combined")
    )
    mine.add_argument("--input", action="append", required=True, help="behavior file (repeatable)")
    mine.add_argument("--orders", help="orderbook.csv for abnormal-return scoring")
    mine.add_argument("--config")
    mine.add_argument("--out", required=True)
    mine.add_argument("--benchmark-days", type=int, dest="benchmark_days")
    mine.add_argument("--min-ii", type=float, dest="min_ii")
    mine.add_argument("--min-ie", type=float, dest="min_ie")
    mine.add_argument("--min-supp", type=float, dest="min_supp")
    mine.add_argument("--cir-min", type=float, dest="cir_min")
    mine.add_argument("--cps-min", type=float, dest="cps_min")
    mine.add_argument("--workers", type=int)
    mine.set_defaults(func=cmd_mine)

    generate = sub.add_parser("generate", help="write synthetic CSV inputs with a ground-truth sidecar")
    generate.add_argument("--profile", required=True)
    generate.add_argument("--seed", type=int)
    generate.add_argument("--out", required=True)
    generate.add_argument("--days", type=int)
    generate.add_argument("--sequences-per-day", type=int, dest="sequences_per_day")
    generate.add_argument("--rate-ratio", type=float, dest="rate_ratio")
    generate.add_argument("--persons", type=int)
    generate.add_argument("--debt-rate", type=float, dest="debt_rate")
    generate.set_defaults(func=cmd_generate)

    orc = sub.add_parser("oracle", help="exhaustively enumerate pattern supports (small inputs only)")
    orc.add_argument("--input", action="append", required=True)
    orc.add_argument("--max-len", type=int, default=3, dest="max_len")
    orc.set_defaults(func=cmd_oracle)

    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except ingestion.ParseError as exc:
        print(f"parse error: {exc}", file=sys.stderr)
        return EXIT_PARSE
    except SchemaError as exc:
        print(f"schema error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    except oracle.OracleSizeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
