"""Test-only construction helpers and frozen published-count tables.

``synthesize_counts_dataset`` builds an encoded dataset whose per-ratio split
class counts are forced to match a given counts table exactly, including the
contradiction-removal interplay, so the split arithmetic can be checked
against every published cell without the third-party data files.
"""

from __future__ import annotations

import random

from cpad.preprocess import ABSENT, ColumnStats, EncodedDataset, EncodedInstance
from cpad.schema import ANOMALOUS, NORMAL
from cpad.split import boundary_index

RATIOS = (10, 20, 30, 40, 50, 60, 70, 80, 90)

# ratio -> (train_anomalous, train_normal, test_anomalous, test_normal)
NSL_SPLITS = {
    10: (743, 744, 6726, 6654),
    20: (1418, 1555, 6051, 5843),
    30: (2127, 2333, 5342, 5065),
    40: (2784, 3163, 4685, 4235),
    50: (3482, 3952, 3987, 3446),
    60: (4174, 4746, 3295, 2652),
    70: (4932, 5475, 2537, 1923),
    80: (5757, 6137, 1712, 1261),
    90: (6611, 6769, 858, 629),
}
NSL_ORIGINAL_TOTAL = 15000
NSL_REMOVED = 133
NSL_PRE_REMOVAL_COUNTS = (7439, 7561)  # (normal, anomalous)

UNSW_SPLITS = {
    10: (417, 1000, 3757, 9000),
    20: (835, 2000, 3339, 8000),
    30: (1252, 3000, 2922, 7000),
    40: (1670, 4000, 2504, 6000),
    50: (2087, 5000, 2087, 5000),
    60: (2504, 6000, 1670, 4000),
    70: (2922, 7000, 1252, 3000),
    80: (3339, 8000, 835, 2000),
    90: (3757, 9000, 417, 1000),
}
UNSW_TOTAL = 14174

UKM_SPLITS = {
    10: (409, 880, 3569, 8029),
    20: (848, 1729, 3130, 7180),
    30: (1237, 2629, 2741, 6280),
    40: (1628, 3527, 2350, 5382),
    50: (2006, 4438, 1972, 4471),
    60: (2398, 5334, 1580, 3575),
    70: (2787, 6234, 1191, 2675),
    80: (3169, 7141, 809, 1768),
    90: (3585, 8013, 393, 896),
}
UKM_TOTAL = 12887


def _dummy_stats(width: int = 2) -> ColumnStats:
    return ColumnStats(
        names=[f"c{i}" for i in range(width)],
        kinds=["categorical"] * width,
        means=[0.0] * width,
        stds=[0.0] * width,
        dicts=[{} for _ in range(width)],
    )


def synthesize_counts_dataset(
    total: int,
    splits: dict[int, tuple[int, int, int, int]],
    removed_labels: tuple[int, int] = (0, 0),
) -> EncodedDataset:
    """Pre-removal dataset matching a per-ratio counts table.

    Survivor class counts per boundary segment are derived from consecutive
    table rows; ``removed_labels`` = (normal, anomalous) counts of rows that
    contradiction removal must delete.  Removed rows are arranged in groups
    sharing one unique code array with mixed labels, so ``remove_contradictions``
    deletes exactly them.
    """
    edges = [0] + [boundary_index(total, r) for r in RATIOS] + [total]
    n_removed_normal, n_removed_anomalous = removed_labels
    total_removed = n_removed_normal + n_removed_anomalous

    prev_anom = prev_total_surv = 0
    segments = []  # (anomalous, normal, removed) per segment
    cumulative_removed = 0
    for k, ratio in enumerate(RATIOS):
        train_anom, train_norm = splits[ratio][0], splits[ratio][1]
        seg_size = edges[k + 1] - edges[k]
        seg_anom = train_anom - prev_anom
        seg_surv = (train_anom + train_norm) - prev_total_surv
        seg_removed = seg_size - seg_surv
        segments.append((seg_anom, seg_surv - seg_anom, seg_removed))
        cumulative_removed += seg_removed
        prev_anom, prev_total_surv = train_anom, train_anom + train_norm
    # Final segment: everything past the 90% boundary.
    tail_size = edges[-1] - edges[-2]
    tail_anom = splits[90][2]
    tail_norm = splits[90][3]
    segments.append((tail_anom, tail_norm, tail_size - tail_anom - tail_norm))

    # Removal rows: first n_removed_normal slots (in origin order) are normal;
    # groups pair each normal with anomalous partners so every group mixes labels.
    n_groups = max(n_removed_normal, 1 if n_removed_anomalous else 0)
    removal_label = []
    removal_group = []
    for slot in range(total_removed):
        if slot < n_removed_normal:
            removal_label.append(NORMAL)
            removal_group.append(slot)
        else:
            j = slot - n_removed_normal
            removal_label.append(ANOMALOUS)
            removal_group.append(j if j < n_groups else j % n_groups)

    instances: list[EncodedInstance] = []
    origin = 0
    removal_slot = 0
    for seg_anom, seg_norm, seg_removed in segments:
        for _ in range(seg_anom):
            instances.append(EncodedInstance((origin, 0), ANOMALOUS, origin))
            origin += 1
        for _ in range(seg_norm):
            instances.append(EncodedInstance((origin, 0), NORMAL, origin))
            origin += 1
        for _ in range(seg_removed):
            group = removal_group[removal_slot]
            label = removal_label[removal_slot]
            instances.append(EncodedInstance((total + group, 1), label, origin))
            origin += 1
            removal_slot += 1
    assert origin == total and removal_slot == total_removed
    return EncodedDataset(
        instances=instances, stats=_dummy_stats(), removed=[], mode="exact"
    )


def random_instances(
    seed: int,
    n: int,
    width: int,
    codes: int,
    sparse: float = 0.0,
    start_origin: int = 0,
    label: int | None = None,
) -> list[EncodedInstance]:
    """Deterministic random instances; ``sparse`` is the ABSENT probability."""
    rng = random.Random(seed)
    out = []
    for i in range(n):
        row = tuple(
            ABSENT if (sparse and rng.random() < sparse) else rng.randrange(codes)
            for _ in range(width)
        )
        out.append(
            EncodedInstance(
                codes=row,
                label=rng.randrange(2) if label is None else label,
                origin=start_origin + i,
            )
        )
    return out
