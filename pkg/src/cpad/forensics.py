"""Ranked pattern reports: decoded intrusion paths and pattern diffs.

High-support coherent anomaly patterns, rendered as conjunctions of readable
feature conditions, are the unit of forensic reporting.  Ranking is a total
order (frequency desc, then token count desc, then lexicographic tokens) so
reports are reproducible byte for byte.  Diffing two patterns buckets every
column by the shared color semantics: green for identical tokens, red for
the same column constrained to different codes, blue for columns constrained
by only one of the two.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

from .mining import Pattern, PatternBank, PatternSet
from .preprocess import (
    MISSING,
    MODE_SIGMA,
    MODE_TOKENS,
    NOTNUMBER_BIN_CODE,
    SIGMA_CLAMP,
    ColumnStats,
)


class DecodeError(ValueError):
    """A pattern token does not decode under the given column codec."""


@dataclass(frozen=True)
class ForensicsEntry:
    pattern: Pattern
    rank: int
    decoded: tuple[str, ...]
    support: int


@dataclass(frozen=True)
class PatternDiff:
    green: tuple[int, ...]
    red: tuple[int, ...]
    blue: tuple[int, ...]


def _rank_key(pattern: Pattern) -> tuple:
    return (-pattern.freq, -len(pattern), pattern.tokens)


def sigma_bin_description(code: int) -> str:
    """Human-readable z-score range of a sigma-bin code."""
    if code == NOTNUMBER_BIN_CODE:
        return MISSING
    bin_index = code - SIGMA_CLAMP
    if bin_index == -SIGMA_CLAMP:
        return f"z<{-SIGMA_CLAMP + 0.5}σ"
    if bin_index == SIGMA_CLAMP:
        return f"z≥{SIGMA_CLAMP - 0.5}σ"
    return f"z∈[{bin_index - 0.5},{bin_index + 0.5})σ"


def decode_pattern(
    pattern: Pattern, stats: ColumnStats, mode: str = MODE_SIGMA
) -> list[str]:
    """Render each token as ``column-name ∈ bin-description`` text.

    Raises:
        DecodeError: if a token names an unknown column or code.
    """
    out: list[str] = []
    for col, code in pattern.tokens:
        if not 0 <= col < stats.width:
            raise DecodeError(f"token ({col}, {code}) references an unknown column")
        name = stats.names[col]
        if stats.kinds[col] == "numeric" and mode == MODE_SIGMA:
            if not 0 <= code <= NOTNUMBER_BIN_CODE:
                raise DecodeError(f"token ({col}, {code}) is not a valid sigma bin")
            out.append(f"{name}: {sigma_bin_description(code)}")
            continue
        raw = next(
            (value for value, assigned in stats.dicts[col].items() if assigned == code),
            None,
        )
        if raw is None:
            raise DecodeError(
                f"token ({col}, {code}) has no dictionary entry for column '{name}'"
            )
        # Presence tokens (opaque-token inputs) read best as the bare token.
        out.append(raw if raw == name and mode == MODE_TOKENS else f"{name} = {raw}")
    return out


def top_patterns(
    bank: PatternBank,
    side: str,
    k: int,
    stats: ColumnStats | None = None,
    mode: str = MODE_SIGMA,
) -> list[ForensicsEntry]:
    """The first ``k`` entries of one bank side under the report order."""
    if side not in ("cnp", "cap"):
        raise ValueError(f"side must be 'cnp' or 'cap', got '{side}'")
    if k < 1:
        raise ValueError("k must be >= 1")
    patterns: PatternSet = getattr(bank, side)
    ordered = sorted(patterns, key=_rank_key)[:k]
    entries = []
    for rank, pattern in enumerate(ordered, start=1):
        decoded = (
            tuple(decode_pattern(pattern, stats, mode))
            if stats is not None
            else tuple(f"col{col} = {code}" for col, code in pattern.tokens)
        )
        entries.append(
            ForensicsEntry(
                pattern=pattern, rank=rank, decoded=decoded, support=pattern.freq
            )
        )
    return entries


def diff_patterns(a: Pattern, b: Pattern) -> PatternDiff:
    """Bucket the union of constrained columns by the color semantics."""
    codes_a = dict(a.tokens)
    codes_b = dict(b.tokens)
    green, red, blue = [], [], []
    for col in sorted(set(codes_a) | set(codes_b)):
        if col in codes_a and col in codes_b:
            (green if codes_a[col] == codes_b[col] else red).append(col)
        else:
            blue.append(col)
    return PatternDiff(green=tuple(green), red=tuple(red), blue=tuple(blue))


def render_entries_text(entries: Sequence[ForensicsEntry], side: str) -> str:
    lines = [f"top {side} patterns ({len(entries)})"]
    for entry in entries:
        conditions = " AND ".join(entry.decoded) if entry.decoded else "(empty)"
        lines.append(f"{entry.rank:>3}. support={entry.support:<6} {conditions}")
    return "\n".join(lines) + "\n"


def render_entries_json(entries: Sequence[ForensicsEntry], side: str) -> dict:
    return {
        "side": side,
        "entries": [
            {
                "rank": entry.rank,
                "support": entry.support,
                "tokens": [[col, code] for col, code in entry.pattern.tokens],
                "decoded": list(entry.decoded),
            }
            for entry in entries
        ],
    }


def render_entries_dot(entries: Sequence[ForensicsEntry], side: str) -> str:
    """GraphViz digraph of top entries; edges join entries sharing tokens."""
    lines = [f'digraph "{side}_paths" {{', "  rankdir=LR;"]
    for entry in entries:
        label = "\\n".join(entry.decoded) or "(empty)"
        lines.append(
            f'  p{entry.rank} [shape=box, label="#{entry.rank} x{entry.support}\\n{label}"];'
        )
    for i, a in enumerate(entries):
        for b in entries[i + 1 :]:
            shared = len(set(a.pattern.tokens) & set(b.pattern.tokens))
            if shared:
                lines.append(f'  p{a.rank} -> p{b.rank} [label="{shared}", dir=none];')
    lines.append("}")
    return "\n".join(lines) + "\n"
