"""Binary containers for encoded datasets and pattern banks.

Encoded dataset (magic ``IGENC1``), little-endian throughout::

    6s  magic "IGENC1"
    B   mode (0 sigma_bins, 1 exact, 2 tokens)
    I   column count
    I   instance count
    I   removed count
    I   stats block length, then that many bytes of canonical JSON
        {"names": [...], "kinds": [...], "means": [...], "stds": [...]}
    removed origins, Q each
    per instance: Q origin, B label, column-count * h codes

A JSON sidecar at ``<path>.json`` carries the per-column dictionaries needed
for decoding, plus the same stats echo, serialized with sorted keys so a
rewrite is byte-identical.

Pattern bank (magic ``IGBANK1``)::

    7s  magic "IGBANK1"
    B   include_instances (0 off, 1 dedup, 2 multiset)
    I   min_pattern_len
    I   width
    32s sha256 of the source dataset's sidecar bytes (zeros when unknown)
    I   provenance block length, then canonical JSON
    I   cnp count, I cap count
    per pattern: I freq, H token count, then per token H column-delta, h code
        (the first delta is the absolute column index)

``export_bank_json`` renders the same bank as human-readable JSON.
"""

from __future__ import annotations

import hashlib
import json
import struct
from pathlib import Path

import numpy as np

from .mining import INCLUDE_MODES, MiningConfig, Pattern, PatternBank, PatternSet
from .preprocess import CODE_DTYPE, ColumnStats, EncodedDataset, EncodedInstance, MODES

ENC_MAGIC = b"IGENC1"
BANK_MAGIC = b"IGBANK1"


class StorageError(ValueError):
    """A container file is missing, truncated, or malformed."""


def _canonical_json(obj) -> bytes:
    return json.dumps(obj, sort_keys=True, separators=(",", ":")).encode("utf-8")


def sidecar_path(path: str | Path) -> Path:
    return Path(str(path) + ".json")


def write_encoded(ds: EncodedDataset, path: str | Path) -> Path:
    """Write the binary container and its JSON sidecar; returns the sidecar path."""
    path = Path(path)
    stats = ds.stats
    stats_block = _canonical_json(
        {
            "names": stats.names,
            "kinds": stats.kinds,
            "means": stats.means,
            "stds": stats.stds,
        }
    )
    parts = [
        ENC_MAGIC,
        struct.pack(
            "<BIII", MODES.index(ds.mode), stats.width, len(ds.instances), len(ds.removed)
        ),
        struct.pack("<I", len(stats_block)),
        stats_block,
        struct.pack(f"<{len(ds.removed)}Q", *ds.removed),
    ]
    row_fmt = struct.Struct(f"<QB{stats.width}h")
    for inst in ds.instances:
        parts.append(row_fmt.pack(inst.origin, inst.label, *inst.codes))
    path.write_bytes(b"".join(parts))

    sidecar = {
        "format": "igenc-sidecar/1",
        "mode": ds.mode,
        "names": stats.names,
        "kinds": stats.kinds,
        "means": stats.means,
        "stds": stats.stds,
        "dictionaries": [
            {raw: code for raw, code in mapping.items()} for mapping in stats.dicts
        ],
        "removed": ds.removed,
    }
    side = sidecar_path(path)
    side.write_bytes(_canonical_json(sidecar) + b"\n")
    return side


def read_encoded(path: str | Path) -> EncodedDataset:
    """Read a dataset container written by :func:`write_encoded`."""
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise StorageError(f"{path}: cannot read container: {exc}") from exc
    if not blob.startswith(ENC_MAGIC):
        raise StorageError(f"{path}: bad magic, not an encoded dataset container")
    offset = len(ENC_MAGIC)
    mode_idx, width, n_rows, n_removed = struct.unpack_from("<BIII", blob, offset)
    offset += struct.calcsize("<BIII")
    (stats_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    stats_obj = json.loads(blob[offset : offset + stats_len])
    offset += stats_len
    removed = list(struct.unpack_from(f"<{n_removed}Q", blob, offset))
    offset += 8 * n_removed
    row_fmt = struct.Struct(f"<QB{width}h")
    instances: list[EncodedInstance] = []
    for _ in range(n_rows):
        fields = row_fmt.unpack_from(blob, offset)
        offset += row_fmt.size
        instances.append(
            EncodedInstance(codes=tuple(fields[2:]), label=fields[1], origin=fields[0])
        )

    side = sidecar_path(path)
    try:
        sidecar = json.loads(side.read_text(encoding="utf-8"))
    except OSError as exc:
        raise StorageError(f"{side}: missing sidecar (needed for decoding): {exc}") from exc
    stats = ColumnStats(
        names=stats_obj["names"],
        kinds=stats_obj["kinds"],
        means=stats_obj["means"],
        stds=stats_obj["stds"],
        dicts=[
            {raw: int(code) for raw, code in mapping.items()}
            for mapping in sidecar["dictionaries"]
        ],
    )
    return EncodedDataset(
        instances=instances, stats=stats, removed=removed, mode=MODES[mode_idx]
    )


def _pack_side(patterns: PatternSet) -> bytes:
    parts = []
    for pat in patterns:
        parts.append(struct.pack("<IH", pat.freq, len(pat.tokens)))
        prev = 0
        for col, code in pat.tokens:
            parts.append(struct.pack("<Hh", col - prev, code))
            prev = col
    return b"".join(parts)


def _unpack_side(blob: bytes, offset: int, count: int, width: int):
    patterns = []
    for _ in range(count):
        freq, n_tokens = struct.unpack_from("<IH", blob, offset)
        offset += 6
        tokens = []
        col = 0
        for _ in range(n_tokens):
            delta, code = struct.unpack_from("<Hh", blob, offset)
            offset += 4
            col += delta
            tokens.append((col, code))
        patterns.append(Pattern(tokens=tuple(tokens), freq=freq))
    return PatternSet.from_patterns(patterns, width), offset


def write_bank(bank: PatternBank, path: str | Path, source_digest: bytes = b"") -> None:
    """Write a pattern bank container (and nothing else; JSON export is separate)."""
    path = Path(path)
    digest = source_digest.ljust(32, b"\0")[:32]
    provenance_block = _canonical_json(bank.provenance)
    parts = [
        BANK_MAGIC,
        struct.pack(
            "<BII",
            INCLUDE_MODES.index(bank.config.include_instances),
            bank.config.min_pattern_len,
            bank.width,
        ),
        digest,
        struct.pack("<I", len(provenance_block)),
        provenance_block,
        struct.pack("<II", len(bank.cnp), len(bank.cap)),
        _pack_side(bank.cnp),
        _pack_side(bank.cap),
    ]
    path.write_bytes(b"".join(parts))


def read_bank(path: str | Path) -> PatternBank:
    path = Path(path)
    try:
        blob = path.read_bytes()
    except OSError as exc:
        raise StorageError(f"{path}: cannot read bank: {exc}") from exc
    if not blob.startswith(BANK_MAGIC):
        raise StorageError(f"{path}: bad magic, not a pattern bank container")
    offset = len(BANK_MAGIC)
    include_idx, min_len, width = struct.unpack_from("<BII", blob, offset)
    offset += struct.calcsize("<BII")
    offset += 32  # source digest
    (prov_len,) = struct.unpack_from("<I", blob, offset)
    offset += 4
    provenance = json.loads(blob[offset : offset + prov_len])
    offset += prov_len
    n_cnp, n_cap = struct.unpack_from("<II", blob, offset)
    offset += 8
    cnp, offset = _unpack_side(blob, offset, n_cnp, width)
    cap, offset = _unpack_side(blob, offset, n_cap, width)
    cfg = MiningConfig(
        include_instances=INCLUDE_MODES[include_idx], min_pattern_len=min_len
    )
    return PatternBank(cnp=cnp, cap=cap, config=cfg, width=width, provenance=provenance)


def export_bank_json(bank: PatternBank) -> dict:
    def side(patterns: PatternSet) -> list[dict]:
        return [
            {"tokens": [[col, code] for col, code in pat.tokens], "freq": pat.freq}
            for pat in patterns
        ]

    return {
        "format": "igbank-export/1",
        "config": {
            "include_instances": bank.config.include_instances,
            "min_pattern_len": bank.config.min_pattern_len,
        },
        "width": bank.width,
        "provenance": bank.provenance,
        "cnp": side(bank.cnp),
        "cap": side(bank.cap),
    }


def dataset_digest(path: str | Path) -> bytes:
    """sha256 of a dataset sidecar, used as the bank's dictionaries reference."""
    return hashlib.sha256(sidecar_path(path).read_bytes()).digest()
