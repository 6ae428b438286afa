"""Confusion-matrix metrics, rank-based AUC, and the ratio-sweep harness.

The anomaly class is positive throughout.  Metrics with a zero denominator
are reported as None (rendered ``null`` in JSON), never silently as 0.  The
ROC score of an instance is its margin AS - NS: higher means more anomalous.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .mining import MiningConfig, mine
from .preprocess import EncodedDataset
from .schema import ANOMALOUS, LABEL_NAMES, NORMAL
from .scoring import ScoringConfig, Verdict, classify_batch
from .split import DegenerateSplitError, SplitSpec, class_counts, sequential_split

REPORT_SCHEMA = "ig-report/1"


@dataclass(frozen=True)
class ConfusionMatrix:
    tp: int
    fp: int
    tn: int
    fn: int

    @property
    def total(self) -> int:
        return self.tp + self.fp + self.tn + self.fn


@dataclass(frozen=True)
class Metrics:
    accuracy: float | None
    precision: float | None
    recall: float | None
    auc: float | None = None


def confusion(verdicts: Sequence[Verdict]) -> ConfusionMatrix:
    """Count (predicted, truth) outcomes; anomaly is the positive class."""
    tp = fp = tn = fn = 0
    for v in verdicts:
        if v.predicted == ANOMALOUS:
            if v.truth == ANOMALOUS:
                tp += 1
            else:
                fp += 1
        else:
            if v.truth == NORMAL:
                tn += 1
            else:
                fn += 1
    return ConfusionMatrix(tp=tp, fp=fp, tn=tn, fn=fn)


def metrics(cm: ConfusionMatrix) -> Metrics:
    """Accuracy, precision, recall; None where the denominator is zero."""
    total = cm.total
    accuracy = (cm.tp + cm.tn) / total if total else None
    precision = cm.tp / (cm.tp + cm.fp) if (cm.tp + cm.fp) else None
    recall = cm.tp / (cm.tp + cm.fn) if (cm.tp + cm.fn) else None
    return Metrics(accuracy=accuracy, precision=precision, recall=recall)


def auc(margins: Sequence[float], truths: Sequence[int]) -> float | None:
    """Rank-based (Mann-Whitney) AUC of the margins; ties credit 0.5.

    None when either truth class is absent.
    """
    m = np.asarray(margins, dtype=np.float64)
    t = np.asarray(truths)
    positives = int((t == ANOMALOUS).sum())
    negatives = len(t) - positives
    if positives == 0 or negatives == 0:
        return None
    order = np.argsort(m, kind="mergesort")
    sorted_m = m[order]
    ranks = np.empty(len(m), dtype=np.float64)
    i = 0
    while i < len(m):
        j = i
        while j < len(m) and sorted_m[j] == sorted_m[i]:
            j += 1
        ranks[order[i:j]] = (i + j + 1) / 2.0  # average of 1-based ranks i+1..j
        i = j
    rank_sum = float(ranks[t == ANOMALOUS].sum())
    u = rank_sum - positives * (positives + 1) / 2.0
    return u / (positives * negatives)


def roc_points(
    margins: Sequence[float], truths: Sequence[int]
) -> list[tuple[float, float, float]]:
    """(threshold, tpr, fpr) sweeping thresholds over the distinct margins.

    An instance is called anomalous when its margin is >= the threshold.
    """
    t = np.asarray(truths)
    positives = int((t == ANOMALOUS).sum())
    negatives = len(t) - positives
    points = []
    for threshold in sorted(set(float(m) for m in margins), reverse=True):
        called = np.asarray(margins) >= threshold
        tp = int((called & (t == ANOMALOUS)).sum())
        fp = int((called & (t == NORMAL)).sum())
        tpr = tp / positives if positives else 0.0
        fpr = fp / negatives if negatives else 0.0
        points.append((threshold, tpr, fpr))
    return points


@dataclass
class SweepReport:
    """One row per requested ratio, plus the effective config and timings."""

    config: dict
    rows: list[dict]
    timings: dict = field(default_factory=dict)
    schema_version: str = REPORT_SCHEMA

    def to_dict(self) -> dict:
        return {
            "schema": self.schema_version,
            "config": self.config,
            "rows": self.rows,
            "timings": self.timings,
        }


def _count_block(instances) -> dict:
    normal, anomalous = class_counts(instances)
    return {"normal": normal, "anomalous": anomalous}


def evaluate_verdicts(verdicts: Sequence[Verdict]) -> dict:
    cm = confusion(verdicts)
    m = metrics(cm)
    area = auc([v.margin for v in verdicts], [v.truth for v in verdicts])
    return {
        "confusion": {"tp": cm.tp, "fp": cm.fp, "tn": cm.tn, "fn": cm.fn},
        "accuracy": m.accuracy,
        "precision": m.precision,
        "recall": m.recall,
        "auc": area,
        "regulations": {
            tag: sum(1 for v in verdicts if v.regulation == tag)
            for tag in ("R1", "R2", "R3", "none")
        },
    }


def ratio_sweep(
    ds: EncodedDataset,
    ratios: Sequence[int],
    mining_cfg: MiningConfig = MiningConfig(),
    scoring_cfg: ScoringConfig = ScoringConfig(),
    per_class: bool = False,
    threads: int = 1,
) -> SweepReport:
    """Split, mine, classify, and evaluate at each requested ratio.

    A ratio whose split is degenerate contributes an error row; the other
    ratios still run.  Wall times live in the report's ``timings`` block,
    which is excluded from determinism comparisons.
    """
    config = {
        "ratios": list(ratios),
        "binning": ds.mode,
        "include_instances": mining_cfg.include_instances,
        "min_pattern_len": mining_cfg.min_pattern_len,
        "p": scoring_cfg.p,
        "r": scoring_cfg.r,
        "split": "per-class" if per_class else "positional",
        "threads": threads,
        "instances": len(ds.instances),
        "removed": len(ds.removed),
    }
    rows: list[dict] = []
    timings: dict[str, float] = {}
    for ratio in ratios:
        started = time.perf_counter()
        row: dict = {"ratio": int(ratio)}
        try:
            result = sequential_split(
                ds, ds.original_count, SplitSpec(train_ratio=ratio, per_class=per_class)
            )
        except DegenerateSplitError as exc:
            row["error"] = str(exc)
            rows.append(row)
            timings[str(ratio)] = time.perf_counter() - started
            continue
        bank = mine(result.train, mining_cfg, threads=threads)
        verdicts = classify_batch(result.test, bank, scoring_cfg, threads=threads)
        row.update(
            {
                "boundary": result.boundary,
                "train": _count_block(result.train),
                "test": _count_block(result.test),
                "metrics": evaluate_verdicts(verdicts),
                "bank": dict(bank.provenance),
                "error": None,
            }
        )
        rows.append(row)
        timings[str(ratio)] = time.perf_counter() - started
    return SweepReport(config=config, rows=rows, timings=timings)


def render_sweep_text(report: SweepReport) -> str:
    """Aligned plain-text table of a sweep report (no timings)."""

    def fmt(value: float | None) -> str:
        return "null" if value is None else f"{value:.4f}"

    header = (
        f"{'ratio':>5} {'train_n':>8} {'train_a':>8} {'test_n':>8} {'test_a':>8} "
        f"{'accuracy':>9} {'recall':>9} {'precision':>9} {'auc':>9}"
    )
    lines = [header, "-" * len(header)]
    for row in report.rows:
        if row.get("error"):
            lines.append(f"{row['ratio']:>5} error: {row['error']}")
            continue
        m = row["metrics"]
        lines.append(
            f"{row['ratio']:>5} {row['train']['normal']:>8} {row['train']['anomalous']:>8} "
            f"{row['test']['normal']:>8} {row['test']['anomalous']:>8} "
            f"{fmt(m['accuracy']):>9} {fmt(m['recall']):>9} "
            f"{fmt(m['precision']):>9} {fmt(m['auc']):>9}"
        )
    cfg = report.config
    lines.append("")
    lines.append(
        "config: "
        + ", ".join(f"{key}={cfg[key]}" for key in sorted(cfg))
    )
    return "\n".join(lines) + "\n"
