"""Sequential training/test partitions.

The cut point is computed on the pre-removal row count (``original_count``)
with half-up rounding, then applied to surviving instances by their original
row index.  Contradictory rows are therefore absent from both sides, and the
boundary for a given ratio never depends on how many rows were removed.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .preprocess import EncodedDataset, EncodedInstance
from .schema import ANOMALOUS, NORMAL


class DegenerateSplitError(ValueError):
    """A split left the training or test side empty."""


@dataclass(frozen=True)
class SplitSpec:
    """A train percentage (1..99) and the cut strategy."""

    train_ratio: int
    per_class: bool = False

    def __post_init__(self) -> None:
        if not 1 <= self.train_ratio <= 99:
            raise ValueError(f"train_ratio must be in 1..99, got {self.train_ratio}")


@dataclass
class SplitResult:
    train: list[EncodedInstance]
    test: list[EncodedInstance]
    boundary: int


def boundary_index(original_count: int, train_ratio: int) -> int:
    """Half-up rounded cut position: round(original_count * ratio / 100)."""
    return (original_count * train_ratio + 50) // 100


def class_counts(instances: Sequence[EncodedInstance]) -> tuple[int, int]:
    """(normal, anomalous) counts over a list of instances."""
    normal = sum(1 for inst in instances if inst.label == NORMAL)
    return normal, len(instances) - normal


def sequential_split(
    ds: EncodedDataset, original_count: int, spec: SplitSpec
) -> SplitResult:
    """Partition surviving instances at the positional (or per-class) cut.

    Positional mode: train holds survivors with origin below the boundary.
    Per-class mode (sensitivity runs): each class contributes its own
    half-up-rounded prefix, computed over surviving per-class counts.

    Raises:
        DegenerateSplitError: if either side ends up empty.
    """
    boundary = boundary_index(original_count, spec.train_ratio)
    if not spec.per_class:
        train = [inst for inst in ds.instances if inst.origin < boundary]
        test = [inst for inst in ds.instances if inst.origin >= boundary]
    else:
        normal_total, anomalous_total = class_counts(ds.instances)
        quotas = {
            NORMAL: boundary_index(normal_total, spec.train_ratio),
            ANOMALOUS: boundary_index(anomalous_total, spec.train_ratio),
        }
        taken = {NORMAL: 0, ANOMALOUS: 0}
        train, test = [], []
        for inst in ds.instances:
            if taken[inst.label] < quotas[inst.label]:
                train.append(inst)
                taken[inst.label] += 1
            else:
                test.append(inst)
    if not train or not test:
        raise DegenerateSplitError(
            f"degenerate split: ratio {spec.train_ratio} leaves "
            f"{len(train)} train / {len(test)} test instances"
        )
    return SplitResult(train=train, test=test, boundary=boundary)
