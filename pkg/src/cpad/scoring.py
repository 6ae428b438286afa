"""Score test instances against a pattern bank and classify them.

An instance's normal score (NS) sums freq * len**p over every CNP contained
in it; the anomaly score (AS) does the same over CAP.  Classification is a
batch operation because the third rule compares each NS against statistics
of the whole test batch:

  R1: AS >= NS -> anomalous (reported as R2 when both scores are zero);
  R3: NS below ns_ave - r * ns_std -> anomalous (catches instances whose
      normal evidence is abnormally weak, e.g. attacks never trained on);
  otherwise normal.

``ns_std`` is the sample standard deviation (n-1 denominator), defined as 0
for batches smaller than two so R3 degenerates to NS < ns_ave.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .mining import Pattern, PatternBank, PatternSet
from .preprocess import ABSENT, CODE_DTYPE, EncodedInstance, codes_matrix
from .schema import ANOMALOUS, NORMAL

R1 = "R1"
R2 = "R2"
R3 = "R3"
NO_REGULATION = "none"


@dataclass(frozen=True)
class ScoringConfig:
    """Score exponent ``p`` (pattern length weight) and R3 margin ``r``."""

    p: int = 2
    r: float = 0.1

    def __post_init__(self) -> None:
        if self.p not in (1, 2):
            raise ValueError(f"score exponent p must be 1 or 2, got {self.p}")
        if self.r < 0:
            raise ValueError(f"r must be non-negative, got {self.r}")


@dataclass(frozen=True)
class Verdict:
    """Per-test-instance outcome."""

    origin: int
    ns: float
    as_: float
    margin: float
    regulation: str
    predicted: int
    truth: int


@dataclass(frozen=True)
class BatchStats:
    ns_ave: float
    ns_std: float
    n: int


def is_subset(pattern: Pattern, instance: EncodedInstance) -> bool:
    """True iff every token of the pattern occurs in the instance."""
    codes = instance.codes
    return all(codes[col] == code for col, code in pattern.tokens)


def score_instance(
    instance: EncodedInstance, bank: PatternBank, cfg: ScoringConfig = ScoringConfig()
) -> tuple[float, float]:
    """(NS, AS) for one instance, by direct iteration over the bank."""

    def side(patterns: PatternSet) -> float:
        total = 0.0
        for pat in patterns:
            if is_subset(pat, instance):
                total += pat.freq * len(pat) ** cfg.p
        return total

    return side(bank.cnp), side(bank.cap)


def batch_stats(ns_values: Sequence[float]) -> BatchStats:
    """Mean and sample standard deviation (n-1) of a score batch."""
    n = len(ns_values)
    if n == 0:
        return BatchStats(ns_ave=0.0, ns_std=0.0, n=0)
    mean = math.fsum(ns_values) / n
    if n < 2:
        return BatchStats(ns_ave=mean, ns_std=0.0, n=n)
    var = math.fsum((v - mean) ** 2 for v in ns_values) / (n - 1)
    return BatchStats(ns_ave=mean, ns_std=math.sqrt(var), n=n)


def _side_scores(
    patterns: PatternSet, test_matrix: np.ndarray, p: int, threads: int
) -> np.ndarray:
    """Scores of every test row against one bank side, in test order."""
    n = test_matrix.shape[0]
    scores = np.zeros(n, dtype=np.float64)
    if len(patterns) == 0 or n == 0:
        return scores
    matrix = patterns.matrix
    unconstrained = matrix == CODE_DTYPE(ABSENT)
    weights = patterns.freqs.astype(np.float64) * patterns.token_lengths().astype(
        np.float64
    ) ** p

    def run(start: int, stop: int) -> None:
        for i in range(start, stop):
            row = test_matrix[i]
            matched = (unconstrained | (matrix == row)).all(axis=1)
            scores[i] = weights[matched].sum()

    if threads <= 1 or n < 32:
        run(0, n)
    else:
        bounds = np.linspace(0, n, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda se: run(se[0], se[1]), zip(bounds[:-1], bounds[1:])))
    return scores


def classify_batch(
    test: Sequence[EncodedInstance],
    bank: PatternBank,
    cfg: ScoringConfig = ScoringConfig(),
    threads: int = 1,
) -> list[Verdict]:
    """Score and classify a whole test batch, in input order.

    The R3 threshold uses batch statistics over all test NS values, so the
    batch must be classified as a unit.  Output is deterministic and
    independent of ``threads``.
    """
    if not test:
        raise ValueError("classify_batch requires a non-empty test batch")
    width = len(test[0].codes)
    test_matrix = codes_matrix(test, width)
    ns = _side_scores(bank.cnp, test_matrix, cfg.p, threads)
    as_ = _side_scores(bank.cap, test_matrix, cfg.p, threads)
    stats = batch_stats(ns.tolist())
    threshold = stats.ns_ave - cfg.r * stats.ns_std

    verdicts: list[Verdict] = []
    for i, inst in enumerate(test):
        ns_i = float(ns[i])
        as_i = float(as_[i])
        if as_i >= ns_i:
            regulation = R2 if (ns_i == 0.0 and as_i == 0.0) else R1
            predicted = ANOMALOUS
        elif ns_i < threshold:
            regulation = R3
            predicted = ANOMALOUS
        else:
            regulation = NO_REGULATION
            predicted = NORMAL
        verdicts.append(
            Verdict(
                origin=inst.origin,
                ns=ns_i,
                as_=as_i,
                margin=as_i - ns_i,
                regulation=regulation,
                predicted=predicted,
                truth=inst.label,
            )
        )
    return verdicts
