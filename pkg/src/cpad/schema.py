"""Schema-driven loading of tabular network-traffic datasets.

Datasets arrive as CSV files (RFC-4180 quoting) described by a JSON schema:
column names and kinds, the label column, the raw label strings that count as
normal traffic, and columns to drop before encoding.  Loading is strictly
sequential and deterministic: row order is file order, subsetting is a
file-order prefix via ``limit``, and loading the same bytes twice yields
identical datasets.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

NORMAL = 0
ANOMALOUS = 1

LABEL_NAMES = {NORMAL: "normal", ANOMALOUS: "anomalous"}

_KINDS = ("numeric", "categorical")


class SchemaError(ValueError):
    """Schema file is malformed or violates an invariant."""


class DatasetError(ValueError):
    """Data file cannot be read against its schema."""


@dataclass(frozen=True)
class ColumnSpec:
    """One column of the raw file: a name and a kind."""

    name: str
    kind: str


@dataclass(frozen=True)
class CategoryCap:
    """File-order cap on anomalous rows per distinct value of ``column``.

    Normal rows are not attack categories: they pass through uncapped unless
    ``normal_cap`` bounds them.  Both caps count accepted rows in file order,
    so extraction is a deterministic per-category prefix.
    """

    column: str
    cap: int
    normal_cap: int | None = None


@dataclass(frozen=True)
class Schema:
    """File layout plus labeling rules for one dataset family."""

    columns: tuple[ColumnSpec, ...]
    label_column: str
    normal_values: frozenset[str]
    drop_columns: frozenset[str]
    has_header: bool = False
    category_cap: CategoryCap | None = None

    @property
    def feature_columns(self) -> tuple[ColumnSpec, ...]:
        excluded = self.drop_columns | {self.label_column}
        return tuple(c for c in self.columns if c.name not in excluded)


@dataclass
class RawDataset:
    """Rows (feature cells only) and binarized labels, in file order."""

    schema: Schema
    rows: list[tuple[str, ...]]
    labels: list[int]
    warnings: dict[str, int] = field(default_factory=dict)

    def __len__(self) -> int:
        return len(self.rows)

    def class_counts(self) -> tuple[int, int]:
        """(normal, anomalous) label counts."""
        anomalous = sum(self.labels)
        return len(self.labels) - anomalous, anomalous


def binarize_labels(raw_label: str, schema: Schema) -> int:
    """Map a raw label cell to NORMAL/ANOMALOUS.

    A label is normal exactly when it appears in ``schema.normal_values``;
    everything else, including labels never seen before, is anomalous.
    """
    return NORMAL if raw_label in schema.normal_values else ANOMALOUS


def load_schema(path: str | Path) -> Schema:
    """Load and validate a JSON schema file.

    Raises:
        SchemaError: on parse failure or any invariant violation, with a
            message naming the offending field.
    """
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise SchemaError(f"{path}: cannot read schema file: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise SchemaError(f"{path}: schema is not valid JSON: {exc}") from exc

    if not isinstance(raw, dict):
        raise SchemaError(f"{path}: schema root must be a JSON object")
    for key in ("columns", "label_column", "normal_values"):
        if key not in raw:
            raise SchemaError(f"{path}: missing required field '{key}'")

    columns: list[ColumnSpec] = []
    seen: set[str] = set()
    for i, entry in enumerate(raw["columns"]):
        name = entry.get("name", "")
        kind = entry.get("kind", "")
        if not name:
            raise SchemaError(f"{path}: columns[{i}] has an empty name")
        if kind not in _KINDS:
            raise SchemaError(
                f"{path}: column '{name}' has kind '{kind}', expected one of {_KINDS}"
            )
        if name in seen:
            raise SchemaError(f"{path}: duplicate column name '{name}'")
        seen.add(name)
        columns.append(ColumnSpec(name=name, kind=kind))

    label_column = raw["label_column"]
    if label_column not in seen:
        raise SchemaError(f"{path}: label column '{label_column}' not among columns")
    drop_columns = frozenset(raw.get("drop_columns", []))
    unknown = drop_columns - seen
    if unknown:
        raise SchemaError(f"{path}: drop_columns name unknown columns {sorted(unknown)}")
    if label_column in drop_columns:
        raise SchemaError(f"{path}: label column '{label_column}' is in drop_columns")

    cap = None
    if raw.get("category_cap") is not None:
        cap_raw = raw["category_cap"]
        cap_col = cap_raw.get("column", "")
        if cap_col not in seen:
            raise SchemaError(f"{path}: category_cap column '{cap_col}' not among columns")
        cap = CategoryCap(
            column=cap_col,
            cap=int(cap_raw["cap"]),
            normal_cap=(
                int(cap_raw["normal_cap"]) if cap_raw.get("normal_cap") is not None else None
            ),
        )

    schema = Schema(
        columns=tuple(columns),
        label_column=label_column,
        normal_values=frozenset(raw["normal_values"]),
        drop_columns=drop_columns,
        has_header=bool(raw.get("has_header", False)),
        category_cap=cap,
    )
    if not schema.feature_columns:
        raise SchemaError(f"{path}: no feature columns left after label/drop exclusions")
    return schema


def load_dataset(
    path: str | Path, schema: Schema, limit: int | None = None
) -> RawDataset:
    """Read the first ``limit`` rows of a CSV file (all rows when absent).

    Labels are binarized on the fly.  When the schema carries a category cap,
    rows beyond the per-category quota are skipped before ``limit`` counting,
    so ``limit`` bounds accepted rows.

    Raises:
        DatasetError: unreadable file, header mismatch, or a row whose cell
            count does not match the schema (reported with its line number).
    """
    path = Path(path)
    col_names = [c.name for c in schema.columns]
    label_idx = col_names.index(schema.label_column)
    excluded = schema.drop_columns | {schema.label_column}
    keep_idx = [i for i, c in enumerate(schema.columns) if c.name not in excluded]
    cap = schema.category_cap
    cap_idx = col_names.index(cap.column) if cap else -1

    rows: list[tuple[str, ...]] = []
    labels: list[int] = []
    warnings = {"empty_labels": 0}
    category_taken: dict[str, int] = {}
    normal_taken = 0

    try:
        handle = open(path, newline="", encoding="utf-8")
    except OSError as exc:
        raise DatasetError(f"{path}: cannot read data file: {exc}") from exc

    with handle:
        reader = csv.reader(handle)
        if schema.has_header:
            header = next(reader, None)
            if header is None:
                raise DatasetError(f"{path}: empty file, expected a header row")
            if [h.strip() for h in header] != col_names:
                raise DatasetError(
                    f"{path}: header does not match schema columns "
                    f"(got {len(header)} names, expected {len(col_names)})"
                )
        for record in reader:
            if not record:
                continue
            if limit is not None and len(rows) >= limit:
                break
            if len(record) != len(col_names):
                raise DatasetError(
                    f"{path}:{reader.line_num}: expected {len(col_names)} cells, "
                    f"got {len(record)}"
                )
            raw_label = record[label_idx]
            label = binarize_labels(raw_label, schema)
            if raw_label == "":
                warnings["empty_labels"] += 1
            if cap is not None:
                if label == ANOMALOUS:
                    key = record[cap_idx]
                    taken = category_taken.get(key, 0)
                    if taken >= cap.cap:
                        continue
                    category_taken[key] = taken + 1
                else:
                    if cap.normal_cap is not None and normal_taken >= cap.normal_cap:
                        continue
                    normal_taken += 1
            rows.append(tuple(record[i] for i in keep_idx))
            labels.append(label)

    return RawDataset(schema=schema, rows=rows, labels=labels, warnings=warnings)


def concat_datasets(parts: Sequence[RawDataset]) -> RawDataset:
    """Concatenate datasets loaded under the same schema, preserving order."""
    if not parts:
        raise DatasetError("cannot concatenate zero datasets")
    schema = parts[0].schema
    for part in parts[1:]:
        if part.schema != schema:
            raise DatasetError("cannot concatenate datasets with different schemas")
    rows: list[tuple[str, ...]] = []
    labels: list[int] = []
    warnings: dict[str, int] = {}
    for part in parts:
        rows.extend(part.rows)
        labels.extend(part.labels)
        for key, count in part.warnings.items():
            warnings[key] = warnings.get(key, 0) + count
    return RawDataset(schema=schema, rows=rows, labels=labels, warnings=warnings)
