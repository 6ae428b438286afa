"""Built-in end-to-end check on a tiny opaque-token fixture.

Seven training instances and four test instances over tokens a..g (plus four
tokens the training never saw) exercise the whole chain: pairwise mining,
coherence filtering, scoring with p=1, batch statistics, and the R1/R2/R3
rule chain with r=0.1.  Every intermediate value is pinned, so any drift in
the pipeline shows up as a field-by-field diff.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .mining import MiningConfig, PatternBank, mine
from .preprocess import EncodedDataset, encode_token_sets
from .schema import ANOMALOUS, NORMAL
from .scoring import (
    NO_REGULATION,
    R1,
    R2,
    ScoringConfig,
    Verdict,
    batch_stats,
    classify_batch,
)

TRAIN_ROWS: tuple[tuple[tuple[str, ...], int], ...] = (
    (("a", "b", "d", "e"), NORMAL),
    (("a", "b", "e", "f"), NORMAL),
    (("a", "b", "d", "f"), NORMAL),
    (("a", "b", "d", "e"), NORMAL),
    (("a", "b", "c", "d"), ANOMALOUS),
    (("a", "b", "d", "g"), ANOMALOUS),
    (("b", "c", "d", "g"), ANOMALOUS),
)

TEST_ROWS: tuple[tuple[tuple[str, ...], int], ...] = (
    (("a", "b", "c", "d", "e", "f"), NORMAL),
    (("b", "c", "d", "f"), ANOMALOUS),
    (("a", "b", "d", "g", "f"), ANOMALOUS),
    (("s", "t", "u", "v"), ANOMALOUS),
)

EXPECTED_CNP: dict[frozenset[str], int] = {
    frozenset("abe"): 2,
    frozenset("abde"): 1,
    frozenset("abf"): 1,
}
EXPECTED_CAP: dict[frozenset[str], int] = {
    frozenset("bcd"): 1,
    frozenset("bdg"): 1,
}
EXPECTED_SCORES: tuple[tuple[float, float], ...] = ((13, 3), (0, 3), (3, 3), (0, 0))
EXPECTED_NS_AVE = 4.0
EXPECTED_NS_STD = 6.164
NS_STD_TOLERANCE = 0.001
EXPECTED_PREDICTIONS = (NORMAL, ANOMALOUS, ANOMALOUS, ANOMALOUS)
EXPECTED_REGULATIONS = (NO_REGULATION, R1, R1, R2)

MINING_CONFIG = MiningConfig(include_instances="off", min_pattern_len=1)
SCORING_CONFIG = ScoringConfig(p=1, r=0.1)


@dataclass
class ReproResult:
    ok: bool
    diffs: list[str]
    bank: PatternBank
    verdicts: list[Verdict]


def build_fixture() -> tuple[EncodedDataset, list, list]:
    """Encode train and test rows under one shared vocabulary."""
    ds = encode_token_sets(list(TRAIN_ROWS) + list(TEST_ROWS))
    train = ds.instances[: len(TRAIN_ROWS)]
    test = ds.instances[len(TRAIN_ROWS) :]
    return ds, train, test


def _named_side(patterns, names: list[str]) -> dict[frozenset[str], int]:
    out: dict[frozenset[str], int] = {}
    for pat in patterns:
        out[frozenset(names[col] for col, _ in pat.tokens)] = pat.freq
    return out


def run_worked_example() -> ReproResult:
    """Run the fixture and diff every pinned value."""
    ds, train, test = build_fixture()
    bank = mine(train, MINING_CONFIG)
    verdicts = classify_batch(test, bank, SCORING_CONFIG)
    stats = batch_stats([v.ns for v in verdicts])

    diffs: list[str] = []
    names = ds.stats.names
    got_cnp = _named_side(bank.cnp, names)
    got_cap = _named_side(bank.cap, names)
    if got_cnp != EXPECTED_CNP:
        diffs.append(f"cnp: expected {_fmt(EXPECTED_CNP)}, got {_fmt(got_cnp)}")
    if got_cap != EXPECTED_CAP:
        diffs.append(f"cap: expected {_fmt(EXPECTED_CAP)}, got {_fmt(got_cap)}")
    for i, (verdict, (ns, as_)) in enumerate(zip(verdicts, EXPECTED_SCORES), start=1):
        if verdict.ns != ns or verdict.as_ != as_:
            diffs.append(
                f"scores[T{i}]: expected (ns={ns}, as={as_}), "
                f"got (ns={verdict.ns}, as={verdict.as_})"
            )
    if stats.ns_ave != EXPECTED_NS_AVE:
        diffs.append(f"ns_ave: expected {EXPECTED_NS_AVE}, got {stats.ns_ave}")
    if not math.isclose(stats.ns_std, EXPECTED_NS_STD, abs_tol=NS_STD_TOLERANCE):
        diffs.append(
            f"ns_std: expected {EXPECTED_NS_STD} ± {NS_STD_TOLERANCE}, got {stats.ns_std}"
        )
    for i, (verdict, predicted, regulation) in enumerate(
        zip(verdicts, EXPECTED_PREDICTIONS, EXPECTED_REGULATIONS), start=1
    ):
        if verdict.predicted != predicted:
            diffs.append(
                f"label[T{i}]: expected {predicted}, got {verdict.predicted}"
            )
        if verdict.regulation != regulation:
            diffs.append(
                f"regulation[T{i}]: expected {regulation}, got {verdict.regulation}"
            )
    return ReproResult(ok=not diffs, diffs=diffs, bank=bank, verdicts=verdicts)


def _fmt(side: dict[frozenset[str], int]) -> str:
    rendered = sorted(
        ("(" + ",".join(sorted(tokens)) + f")x{freq}") for tokens, freq in side.items()
    )
    return "{" + ", ".join(rendered) + "}"
