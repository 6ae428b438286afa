"""Command-line pipeline driver.

Subcommands: ``preprocess``, ``mine``, ``classify``, ``sweep``, ``forensics``,
``repro-example``.  Every subcommand is a pure function of its input files
and configuration: no clock (outside the reports' ``timings`` block), no
randomness, no environment-dependent output.  A JSON config file may supply
any long-option value; explicit flags override it.

Exit codes: 0 success, 1 assertion/reproduction failure, 2 usage, 3 I/O.
"""

from __future__ import annotations

import argparse
import csv
import json
import sys
from pathlib import Path

from . import __version__
from .evaluate import evaluate_verdicts, ratio_sweep, render_sweep_text, roc_points
from .forensics import (
    render_entries_dot,
    render_entries_json,
    render_entries_text,
    top_patterns,
)
from .mining import MiningConfig, mine
from .preprocess import (
    EncodingError,
    MODE_SIGMA,
    MODE_TOKENS,
    compute_column_stats,
    encode,
    load_pretokenized,
    remove_contradictions,
)
from .repro import run_worked_example
from .schema import (
    LABEL_NAMES,
    DatasetError,
    SchemaError,
    concat_datasets,
    load_dataset,
    load_schema,
)
from .scoring import ScoringConfig, classify_batch
from .split import DegenerateSplitError, SplitSpec, sequential_split
from .storage import (
    ENC_MAGIC,
    StorageError,
    dataset_digest,
    export_bank_json,
    read_bank,
    read_encoded,
    write_bank,
    write_encoded,
)

EXIT_OK = 0
EXIT_MISMATCH = 1
EXIT_USAGE = 2
EXIT_IO = 3


def _dump_json(obj, path: Path) -> None:
    path.write_text(json.dumps(obj, sort_keys=True, indent=2) + "\n", encoding="utf-8")


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        config = json.loads(Path(path).read_text(encoding="utf-8"))
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read config: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise DatasetError(f"{path}: config is not valid JSON: {exc}") from exc
    if not isinstance(config, dict):
        raise DatasetError(f"{path}: config root must be a JSON object")
    return config


def _effective(args: argparse.Namespace, config: dict, key: str, default):
    value = getattr(args, key, None)
    if value is not None:
        return value
    if key in config:
        return config[key]
    return default


def _parse_ratios(text: str) -> list[int]:
    if ":" in text:
        parts = text.split(":")
        if len(parts) != 3:
            raise ValueError(f"ratio range must be start:stop:step, got '{text}'")
        start, stop, step = (int(p) for p in parts)
        if step <= 0 or not 1 <= start <= stop <= 99:
            raise ValueError(f"invalid ratio range '{text}'")
        return list(range(start, stop + 1, step))
    return [int(p) for p in text.split(",") if p]


def _mining_config(args, config) -> MiningConfig:
    return MiningConfig(
        include_instances=_effective(args, config, "include_instances", "off"),
        min_pattern_len=int(_effective(args, config, "min_pattern_len", 1)),
    )


def _scoring_config(args, config) -> ScoringConfig:
    return ScoringConfig(
        p=int(_effective(args, config, "p", 2)),
        r=float(_effective(args, config, "r", 0.1)),
    )


def _split_spec(args, config, ratio: int) -> SplitSpec:
    return SplitSpec(
        train_ratio=ratio,
        per_class=_effective(args, config, "split", "positional") == "per-class",
    )


def cmd_preprocess(args: argparse.Namespace, config: dict) -> int:
    data_paths = _effective(args, config, "data", None)
    if not data_paths:
        raise DatasetError("preprocess requires at least one --data file")
    limits = _effective(args, config, "limit", None) or []
    mode = _effective(args, config, "mode", MODE_SIGMA)
    out = Path(_effective(args, config, "out", "encoded.igenc"))

    for path in data_paths:
        with open(path, "rb") as handle:
            if handle.read(len(ENC_MAGIC)) == ENC_MAGIC:
                raise DatasetError(f"{path}: expected raw CSV, got an encoded container")

    if _effective(args, config, "tokens", False):
        if len(data_paths) != 1:
            raise DatasetError("pre-tokenized input takes exactly one --data file")
        ds = load_pretokenized(data_paths[0])
    else:
        schema_path = _effective(args, config, "schema", None)
        if not schema_path:
            raise SchemaError("preprocess requires --schema for CSV input")
        schema = load_schema(schema_path)
        parts = []
        for i, path in enumerate(data_paths):
            limit = int(limits[i]) if i < len(limits) else None
            parts.append(load_dataset(path, schema, limit))
        raw = concat_datasets(parts)
        stats = compute_column_stats(raw)
        ds = encode(raw, stats, mode)
        for key, count in raw.warnings.items():
            if count:
                print(f"warning: {key}: {count}", file=sys.stderr)

    ds = remove_contradictions(ds)
    write_encoded(ds, out)
    print(f"removed: {len(ds.removed)}")
    print(f"instances: {len(ds.instances)}")
    print(f"encoded: {out}")
    return EXIT_OK


def cmd_mine(args: argparse.Namespace, config: dict) -> int:
    encoded_path = _effective(args, config, "encoded", None)
    if not encoded_path:
        raise DatasetError("mine requires --encoded")
    ratio = int(_effective(args, config, "ratio", 10))
    threads = int(_effective(args, config, "threads", 1))
    out = Path(_effective(args, config, "out", "bank.igbank"))

    ds = read_encoded(encoded_path)
    result = sequential_split(ds, ds.original_count, _split_spec(args, config, ratio))
    bank = mine(result.train, _mining_config(args, config), threads=threads)
    write_bank(bank, out, source_digest=dataset_digest(encoded_path))
    _dump_json(export_bank_json(bank), Path(str(out) + ".json"))
    print(json.dumps(bank.provenance, sort_keys=True))
    print(f"bank: {out}")
    return EXIT_OK


def cmd_classify(args: argparse.Namespace, config: dict) -> int:
    encoded_path = _effective(args, config, "encoded", None)
    bank_path = _effective(args, config, "bank", None)
    if not encoded_path or not bank_path:
        raise DatasetError("classify requires --encoded and --bank")
    ratio = int(_effective(args, config, "ratio", 10))
    threads = int(_effective(args, config, "threads", 1))
    out = Path(_effective(args, config, "out", "verdicts.csv"))

    ds = read_encoded(encoded_path)
    bank = read_bank(bank_path)
    result = sequential_split(ds, ds.original_count, _split_spec(args, config, ratio))
    scoring_cfg = _scoring_config(args, config)
    verdicts = classify_batch(result.test, bank, scoring_cfg, threads=threads)

    with open(out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(["origin", "ns", "as", "margin", "regulation", "predicted", "truth"])
        for v in verdicts:
            writer.writerow(
                [
                    v.origin,
                    repr(v.ns),
                    repr(v.as_),
                    repr(v.margin),
                    v.regulation,
                    LABEL_NAMES[v.predicted],
                    LABEL_NAMES[v.truth],
                ]
            )
    summary = {
        "config": {"p": scoring_cfg.p, "r": scoring_cfg.r, "ratio": ratio},
        "metrics": evaluate_verdicts(verdicts),
    }
    print(json.dumps(summary, sort_keys=True))
    print(f"verdicts: {out}")
    return EXIT_OK


def cmd_sweep(args: argparse.Namespace, config: dict) -> int:
    encoded_path = _effective(args, config, "encoded", None)
    if not encoded_path:
        raise DatasetError("sweep requires --encoded")
    ratios = _parse_ratios(_effective(args, config, "sweep", "10:90:10"))
    threads = int(_effective(args, config, "threads", 1))
    out_dir = Path(_effective(args, config, "out_dir", "."))
    out_dir.mkdir(parents=True, exist_ok=True)

    ds = read_encoded(encoded_path)
    report = ratio_sweep(
        ds,
        ratios,
        mining_cfg=_mining_config(args, config),
        scoring_cfg=_scoring_config(args, config),
        per_class=_effective(args, config, "split", "positional") == "per-class",
        threads=threads,
    )
    payload = report.to_dict()
    payload["invocation"] = {
        "encoded": str(encoded_path),
        "sweep": ratios,
        "threads": threads,
    }
    _dump_json(payload, out_dir / "sweep.json")
    (out_dir / "sweep.txt").write_text(render_sweep_text(report), encoding="utf-8")
    print(render_sweep_text(report), end="")
    print(f"report: {out_dir / 'sweep.json'}")
    return EXIT_OK


def cmd_forensics(args: argparse.Namespace, config: dict) -> int:
    bank_path = _effective(args, config, "bank", None)
    if not bank_path:
        raise DatasetError("forensics requires --bank")
    side = _effective(args, config, "side", "cap")
    top_k = int(_effective(args, config, "top_k", 10))
    fmt = _effective(args, config, "format", "text")
    encoded_path = _effective(args, config, "encoded", None)

    bank = read_bank(bank_path)
    stats = None
    mode = MODE_SIGMA
    if encoded_path:
        ds = read_encoded(encoded_path)
        stats, mode = ds.stats, ds.mode
    entries = top_patterns(bank, side, top_k, stats=stats, mode=mode)
    if fmt == "json":
        text = json.dumps(render_entries_json(entries, side), sort_keys=True, indent=2) + "\n"
    elif fmt == "dot":
        text = render_entries_dot(entries, side)
    else:
        text = render_entries_text(entries, side)

    out = _effective(args, config, "out", None)
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"forensics: {out}")
    else:
        print(text, end="")
    return EXIT_OK


def cmd_repro_example(_args: argparse.Namespace, _config: dict) -> int:
    result = run_worked_example()
    if result.ok:
        print("repro-example: PASS")
        return EXIT_OK
    print("repro-example: FAIL")
    for diff in result.diffs:
        print(f"  {diff}")
    return EXIT_MISMATCH


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cpad",
        description="Coherent-pattern anomaly detection pipeline",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    pre = sub.add_parser("preprocess", help="encode a raw dataset")
    pre.add_argument("--data", action="append", help="input file (repeatable)")
    pre.add_argument("--limit", action="append", type=int, help="row prefix per --data")
    pre.add_argument("--schema", help="JSON schema path")
    pre.add_argument("--mode", choices=["sigma_bins", "exact"], default=None)
    pre.add_argument("--tokens", action="store_true", default=None,
                     help="input is pre-tokenized token sets")
    pre.add_argument("--out", help="output container path (.igenc)")
    pre.set_defaults(func=cmd_preprocess)

    mine_p = sub.add_parser("mine", help="mine a pattern bank from the training side")
    mine_p.add_argument("--encoded", help="encoded dataset path")
    mine_p.add_argument("--ratio", type=int, help="train percentage (1..99)")
    mine_p.add_argument("--split", choices=["positional", "per-class"], default=None)
    mine_p.add_argument("--include-instances", dest="include_instances",
                        choices=["off", "dedup", "multiset"], default=None)
    mine_p.add_argument("--min-pattern-len", dest="min_pattern_len", type=int)
    mine_p.add_argument("--threads", type=int)
    mine_p.add_argument("--out", help="output bank path (.igbank)")
    mine_p.set_defaults(func=cmd_mine)

    cls = sub.add_parser("classify", help="classify the test side against a bank")
    cls.add_argument("--encoded")
    cls.add_argument("--bank")
    cls.add_argument("--ratio", type=int)
    cls.add_argument("--split", choices=["positional", "per-class"], default=None)
    cls.add_argument("--p", type=int, help="score length exponent (1 or 2)")
    cls.add_argument("--r", type=float, help="R3 margin")
    cls.add_argument("--threads", type=int)
    cls.add_argument("--out", help="verdicts CSV path")
    cls.set_defaults(func=cmd_classify)

    sweep = sub.add_parser("sweep", help="run the full pipeline across ratios")
    sweep.add_argument("--encoded")
    sweep.add_argument("--sweep", help="ratios as start:stop:step or comma list")
    sweep.add_argument("--split", choices=["positional", "per-class"], default=None)
    sweep.add_argument("--include-instances", dest="include_instances",
                       choices=["off", "dedup", "multiset"], default=None)
    sweep.add_argument("--min-pattern-len", dest="min_pattern_len", type=int)
    sweep.add_argument("--p", type=int)
    sweep.add_argument("--r", type=float)
    sweep.add_argument("--threads", type=int)
    sweep.add_argument("--out-dir", dest="out_dir")
    sweep.set_defaults(func=cmd_sweep)

    forensic = sub.add_parser("forensics", help="report top patterns")
    forensic.add_argument("--bank")
    forensic.add_argument("--encoded", help="encoded dataset (for decoding)")
    forensic.add_argument("--side", choices=["cnp", "cap"], default=None)
    forensic.add_argument("--top-k", dest="top_k", type=int)
    forensic.add_argument("--format", choices=["text", "json", "dot"], default=None)
    forensic.add_argument("--out")
    forensic.set_defaults(func=cmd_forensics)

    repro = sub.add_parser("repro-example", help="run the built-in fixture check")
    repro.set_defaults(func=cmd_repro_example)

    for sub_parser in (pre, mine_p, cls, sweep, forensic, repro):
        sub_parser.add_argument("--config", help="JSON config file (flags override)")
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = _load_config(getattr(args, "config", None))
        return args.func(args, config)
    except (DegenerateSplitError, ValueError) as exc:
        if isinstance(exc, (SchemaError, DatasetError, StorageError, EncodingError)):
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_IO
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
