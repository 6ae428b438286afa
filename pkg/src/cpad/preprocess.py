"""Discretization, encoding, and contradiction removal.

Raw cells become column-qualified category codes.  Numeric columns are either
binned by z-score (``sigma_bins``: round half away from zero, clamp to ±3, so
seven bins plus a missing-value code) or given one code per distinct raw value
(``exact``).  Categorical columns always use first-appearance dictionaries.
Missing or unparseable cells map to the distinguished ``NotNumber`` category
in every mode; missingness is treated as signal, never imputed.

Instances whose full code array appears under both class labels are removed
in their entirety (both sides of every clash), which guarantees that no
surviving feature vector is ambiguous about its label.

Encoded code arrays may contain the reserved ``ABSENT`` sentinel; a cell that
is ABSENT carries no token.  CSV-derived instances are always full width, but
the pre-tokenized input format (opaque token sets, one instance per line)
produces sparse instances where ABSENT marks tokens the instance lacks.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .schema import ANOMALOUS, NORMAL, DatasetError, RawDataset

ABSENT = -1
MISSING = "NotNumber"

MODE_SIGMA = "sigma_bins"
MODE_EXACT = "exact"
MODE_TOKENS = "tokens"
MODES = (MODE_SIGMA, MODE_EXACT, MODE_TOKENS)

# Codes are stored as int16; dictionaries larger than this cannot be encoded.
MAX_CODE = 32000

SIGMA_CLAMP = 3
SIGMA_BIN_CODES = 2 * SIGMA_CLAMP + 1  # codes 0..6 are bins -3..+3
NOTNUMBER_BIN_CODE = SIGMA_BIN_CODES  # code 7

CODE_DTYPE = np.int16


class EncodingError(ValueError):
    """A dataset cannot be encoded (for example, too many categories)."""


@dataclass
class ColumnStats:
    """Per-column codec: z-score parameters plus category dictionaries.

    ``dicts[c]`` maps raw strings to dense codes in first-appearance order
    and is populated for every column; numeric columns consult it only in
    ``exact`` mode.  ``means``/``stds`` hold population statistics over the
    parseable cells of numeric columns (0.0 for categorical columns).
    """

    names: list[str]
    kinds: list[str]
    means: list[float]
    stds: list[float]
    dicts: list[dict[str, int]]

    @property
    def width(self) -> int:
        return len(self.names)


@dataclass(frozen=True)
class EncodedInstance:
    """A fixed-width code array with its label and original row index."""

    codes: tuple[int, ...]
    label: int
    origin: int

    def tokens(self) -> tuple[tuple[int, int], ...]:
        """The instance's (column, code) tokens, skipping ABSENT cells."""
        return tuple((c, v) for c, v in enumerate(self.codes) if v != ABSENT)


@dataclass
class EncodedDataset:
    """Encoded instances in original order, plus the codec that produced them.

    ``removed`` lists origins deleted by contradiction removal, ascending.
    """

    instances: list[EncodedInstance]
    stats: ColumnStats
    removed: list[int]
    mode: str

    def __len__(self) -> int:
        return len(self.instances)

    @property
    def original_count(self) -> int:
        return len(self.instances) + len(self.removed)

    @property
    def width(self) -> int:
        return self.stats.width


def codes_matrix(instances: Sequence[EncodedInstance], width: int) -> np.ndarray:
    """Stack instance code arrays into an (n, width) int16 matrix."""
    if not instances:
        return np.empty((0, width), dtype=CODE_DTYPE)
    return np.array([inst.codes for inst in instances], dtype=CODE_DTYPE)


def _parse_numeric(cell: str) -> float | None:
    """Parse a numeric cell; None for missing, unparseable, or non-finite."""
    if not cell:
        return None
    try:
        value = float(cell)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def round_half_away_from_zero(z: float) -> int:
    """Round to the nearest integer, ties going away from zero."""
    rounded = math.floor(abs(z) + 0.5)
    return rounded if z >= 0 else -rounded


def sigma_bin_code(value: float, mean: float, std: float) -> int:
    """Code for a finite value under sigma binning (0..6; bin k maps to k+3).

    Zero-variance columns put every finite value in the center bin.
    """
    if std == 0.0:
        return SIGMA_CLAMP
    z = (value - mean) / std
    bin_index = round_half_away_from_zero(z)
    bin_index = max(-SIGMA_CLAMP, min(SIGMA_CLAMP, bin_index))
    return bin_index + SIGMA_CLAMP


def compute_column_stats(raw: RawDataset) -> ColumnStats:
    """Build the per-column codec over the whole dataset.

    Numeric means and (population) standard deviations ignore missing cells
    and are accumulated per column in row order, so results are independent
    of any parallel execution over columns.  Dictionaries assign dense codes
    in first-appearance order; a missing cell contributes the ``NotNumber``
    entry in the column it occurs in.
    """
    if not raw.rows:
        raise DatasetError("cannot compute column statistics of an empty dataset")
    specs = raw.schema.feature_columns
    names = [c.name for c in specs]
    kinds = [c.kind for c in specs]
    means: list[float] = []
    stds: list[float] = []
    dicts: list[dict[str, int]] = []

    for col, spec in enumerate(specs):
        mapping: dict[str, int] = {}
        if spec.kind == "numeric":
            finite: list[float] = []
            for row in raw.rows:
                value = _parse_numeric(row[col])
                key = MISSING if value is None else row[col]
                if value is not None:
                    finite.append(value)
                if key not in mapping:
                    mapping[key] = len(mapping)
            if finite:
                arr = np.asarray(finite, dtype=np.float64)
                mean = float(arr.mean())
                std = float(np.sqrt(np.mean((arr - mean) ** 2)))
            else:
                mean, std = 0.0, 0.0
            means.append(mean)
            stds.append(std)
        else:
            for row in raw.rows:
                key = row[col] if row[col] else MISSING
                if key not in mapping:
                    mapping[key] = len(mapping)
            means.append(0.0)
            stds.append(0.0)
        if len(mapping) > MAX_CODE:
            raise EncodingError(
                f"column '{spec.name}' has {len(mapping)} categories, "
                f"exceeding the encodable maximum of {MAX_CODE}"
            )
        dicts.append(mapping)

    return ColumnStats(names=names, kinds=kinds, means=means, stds=stds, dicts=dicts)


def discretize(raw: RawDataset, stats: ColumnStats, mode: str = MODE_SIGMA) -> np.ndarray:
    """Turn raw cells into an (n, width) matrix of category codes."""
    if mode not in (MODE_SIGMA, MODE_EXACT):
        raise ValueError(f"unknown discretization mode '{mode}'")
    n = len(raw.rows)
    width = stats.width
    out = np.empty((n, width), dtype=CODE_DTYPE)
    for col in range(width):
        numeric_bins = stats.kinds[col] == "numeric" and mode == MODE_SIGMA
        mapping = stats.dicts[col]
        mean = stats.means[col]
        std = stats.stds[col]
        for i, row in enumerate(raw.rows):
            cell = row[col]
            if numeric_bins:
                value = _parse_numeric(cell)
                code = (
                    NOTNUMBER_BIN_CODE
                    if value is None
                    else sigma_bin_code(value, mean, std)
                )
            elif stats.kinds[col] == "numeric":
                key = MISSING if _parse_numeric(cell) is None else cell
                code = mapping[key]
            else:
                code = mapping[cell if cell else MISSING]
            out[i, col] = code
    return out


def encode(raw: RawDataset, stats: ColumnStats, mode: str = MODE_SIGMA) -> EncodedDataset:
    """Encode a raw dataset; origins are the 0-based original row indices."""
    matrix = discretize(raw, stats, mode)
    instances = [
        EncodedInstance(codes=tuple(int(v) for v in matrix[i]), label=raw.labels[i], origin=i)
        for i in range(len(raw.rows))
    ]
    return EncodedDataset(instances=instances, stats=stats, removed=[], mode=mode)


def remove_contradictions(ds: EncodedDataset) -> EncodedDataset:
    """Drop every instance whose code array appears under both labels.

    All members of a clashing group are removed; duplicates that agree on the
    label are kept with their multiplicity.
    """
    labels_by_codes: dict[tuple[int, ...], int] = {}
    CLASH = 2
    for inst in ds.instances:
        seen = labels_by_codes.get(inst.codes)
        if seen is None:
            labels_by_codes[inst.codes] = inst.label
        elif seen != CLASH and seen != inst.label:
            labels_by_codes[inst.codes] = CLASH

    survivors: list[EncodedInstance] = []
    removed = list(ds.removed)
    for inst in ds.instances:
        if labels_by_codes[inst.codes] == CLASH:
            removed.append(inst.origin)
        else:
            survivors.append(inst)
    return EncodedDataset(
        instances=survivors, stats=ds.stats, removed=sorted(removed), mode=ds.mode
    )


# ---------------------------------------------------------------------------
# Pre-tokenized input: opaque token sets, one instance per line.
# ---------------------------------------------------------------------------


def encode_token_sets(
    rows: Iterable[tuple[Iterable[str], int]],
) -> EncodedDataset:
    """Encode (token set, label) pairs under a shared token vocabulary.

    Each distinct token becomes its own column (first-appearance order) with
    presence code 1; columns an instance lacks are ABSENT.  Intersections and
    subset tests therefore behave as plain set operations over the tokens.
    """
    materialized = [(list(tokens), label) for tokens, label in rows]
    vocab: dict[str, int] = {}
    for tokens, _ in materialized:
        for tok in tokens:
            if tok not in vocab:
                vocab[tok] = len(vocab)
    width = len(vocab)
    instances: list[EncodedInstance] = []
    for origin, (tokens, label) in enumerate(materialized):
        codes = [ABSENT] * width
        for tok in tokens:
            codes[vocab[tok]] = 1
        instances.append(EncodedInstance(codes=tuple(codes), label=label, origin=origin))
    stats = ColumnStats(
        names=list(vocab),
        kinds=["categorical"] * width,
        means=[0.0] * width,
        stds=[0.0] * width,
        dicts=[{name: 1} for name in vocab],
    )
    return EncodedDataset(instances=instances, stats=stats, removed=[], mode=MODE_TOKENS)


def parse_token_line(line: str) -> tuple[list[str], int]:
    """Parse one ``tok,tok,...<TAB>label`` line of the pre-tokenized format."""
    body, sep, label_raw = line.rstrip("\n").partition("\t")
    if not sep:
        raise DatasetError(f"pre-tokenized line lacks a TAB before the label: {line!r}")
    tokens = [tok for tok in body.split(",") if tok]
    label = NORMAL if label_raw == "normal" else ANOMALOUS
    return tokens, label


def load_pretokenized(path: str | Path) -> EncodedDataset:
    """Load a pre-tokenized file (see :func:`parse_token_line`)."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read pre-tokenized file: {exc}") from exc
    rows = [parse_token_line(line) for line in text.splitlines() if line.strip()]
    return encode_token_sets(rows)
