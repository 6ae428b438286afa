"""Pattern mining by pairwise instance intersection.

Every unordered pair of same-class training instances contributes the token
set on which the two agree; identical token sets merge by summing their
frequencies.  A mined pattern is *coherent* when it is not contained in any
opposite-class training instance, so coherent normal patterns (CNP) never
fire on anomalous training traffic and coherent anomaly patterns (CAP) never
fire on normal training traffic.

Patterns are held columnar: a masked (P, width) code matrix where ABSENT
marks columns a pattern does not constrain, plus a frequency vector.  This
bounds memory by the distinct-pattern count and keeps the subset-exclusion
filter a tight loop over per-token postings bitmasks built from the opposite
class (a pattern is excluded exactly when the intersection of its tokens'
postings is non-empty, evaluated smallest posting first).

``reference_mine`` is the independent nested-loop transcription of the same
contract, kept free of indexing and vectorization so it can serve as an
equivalence oracle.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Iterable, Iterator, Mapping, Sequence

import numpy as np

from .preprocess import ABSENT, CODE_DTYPE, EncodedInstance, codes_matrix
from .schema import ANOMALOUS, NORMAL

INCLUDE_MODES = ("off", "dedup", "multiset")

Token = tuple[int, int]
TokenSet = tuple[Token, ...]


@dataclass(frozen=True)
class Pattern:
    """A sparse set of (column, code) tokens with an occurrence count."""

    tokens: TokenSet
    freq: int

    def __post_init__(self) -> None:
        cols = [c for c, _ in self.tokens]
        if cols != sorted(set(cols)):
            raise ValueError("pattern tokens must be strictly ascending by column")
        if self.freq < 1:
            raise ValueError("pattern freq must be >= 1")

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass(frozen=True)
class MiningConfig:
    """Knobs for pattern generation.

    include_instances: whether full training instances join the pattern pool
        ("off" mines pairwise intersections only, the default; "dedup" adds
        each distinct instance token set once; "multiset" adds one occurrence
        per instance).
    min_pattern_len: discard intersections with fewer tokens than this.
    """

    include_instances: str = "off"
    min_pattern_len: int = 1

    def __post_init__(self) -> None:
        if self.include_instances not in INCLUDE_MODES:
            raise ValueError(
                f"include_instances must be one of {INCLUDE_MODES}, "
                f"got '{self.include_instances}'"
            )
        if self.min_pattern_len < 1:
            raise ValueError("min_pattern_len must be >= 1")


class PatternSet:
    """Immutable collection of patterns in a canonical (sorted) order."""

    def __init__(self, matrix: np.ndarray, freqs: np.ndarray):
        self._matrix = matrix
        self._freqs = freqs

    @classmethod
    def from_counts(cls, counts: Mapping[bytes, int], width: int) -> "PatternSet":
        if not counts:
            return cls(np.empty((0, width), dtype=CODE_DTYPE), np.empty(0, dtype=np.int64))
        keys = list(counts.keys())
        matrix = np.frombuffer(b"".join(keys), dtype=CODE_DTYPE).reshape(len(keys), width)
        freqs = np.fromiter(counts.values(), dtype=np.int64, count=len(keys))
        order = _canonical_order(matrix)
        return cls(np.ascontiguousarray(matrix[order]), freqs[order])

    @classmethod
    def from_patterns(cls, patterns: Iterable[Pattern], width: int) -> "PatternSet":
        items = list(patterns)
        matrix = np.full((len(items), width), ABSENT, dtype=CODE_DTYPE)
        freqs = np.empty(len(items), dtype=np.int64)
        for i, pat in enumerate(items):
            for col, code in pat.tokens:
                matrix[i, col] = code
            freqs[i] = pat.freq
        order = _canonical_order(matrix)
        return cls(np.ascontiguousarray(matrix[order]), freqs[order])

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def freqs(self) -> np.ndarray:
        return self._freqs

    @property
    def width(self) -> int:
        return self._matrix.shape[1]

    def token_lengths(self) -> np.ndarray:
        return (self._matrix != ABSENT).sum(axis=1)

    def __len__(self) -> int:
        return self._matrix.shape[0]

    def __getitem__(self, index: int) -> Pattern:
        row = self._matrix[index]
        tokens = tuple((int(c), int(v)) for c, v in enumerate(row) if v != ABSENT)
        return Pattern(tokens=tokens, freq=int(self._freqs[index]))

    def __iter__(self) -> Iterator[Pattern]:
        for i in range(len(self)):
            yield self[i]

    def as_dict(self) -> dict[TokenSet, int]:
        return {pat.tokens: pat.freq for pat in self}


@dataclass
class PatternBank:
    """The coherent pattern collections produced by training."""

    cnp: PatternSet
    cap: PatternSet
    config: MiningConfig
    width: int
    provenance: dict[str, int] = field(default_factory=dict)


def _canonical_order(matrix: np.ndarray) -> np.ndarray:
    """Lexicographic row order (column 0 primary); stable and total."""
    if matrix.shape[0] == 0 or matrix.shape[1] == 0:
        return np.arange(matrix.shape[0])
    return np.lexsort(matrix.T[::-1])


def _check_uniform(instances: Sequence[EncodedInstance]) -> int:
    width = len(instances[0].codes)
    label = instances[0].label
    for inst in instances:
        if len(inst.codes) != width:
            raise ValueError("instances passed to mining must share one width")
        if inst.label != label:
            raise ValueError("instances passed to mining must share one class label")
    return width


def _pairwise_counts(
    matrix: np.ndarray, cfg: MiningConfig, threads: int = 1
) -> dict[bytes, int]:
    """Masked-row byte keys of all pairwise intersections, with frequencies."""
    n = matrix.shape[0]
    min_len = cfg.min_pattern_len

    def run(rows: range) -> dict[bytes, int]:
        counts: dict[bytes, int] = {}
        get = counts.get
        for i in rows:
            row = matrix[i]
            block = matrix[i + 1 :]
            if block.shape[0] == 0:
                continue
            agree = (block == row) & (row != ABSENT)
            masked = np.where(agree, block, CODE_DTYPE(ABSENT))
            lengths = agree.sum(axis=1)
            for key_row in masked[lengths >= min_len]:
                key = key_row.tobytes()
                counts[key] = get(key, 0) + 1
        return counts

    if threads <= 1 or n < 4:
        counts = run(range(max(n - 1, 0)))
    else:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            partials = list(
                pool.map(run, [range(w, max(n - 1, 0), threads) for w in range(threads)])
            )
        counts = partials[0]
        for part in partials[1:]:
            for key, freq in part.items():
                counts[key] = counts.get(key, 0) + freq

    if cfg.include_instances != "off" and n:
        token_counts = (matrix != ABSENT).sum(axis=1)
        indices: Sequence[int] = range(n)
        if cfg.include_instances == "dedup":
            indices = _first_indices([matrix[i].tobytes() for i in range(n)])
        for i in indices:
            if token_counts[i] >= cfg.min_pattern_len:
                key = matrix[i].tobytes()
                counts[key] = counts.get(key, 0) + 1
    return counts


def _first_indices(keys: Sequence[bytes]) -> list[int]:
    firsts: dict[bytes, int] = {}
    for i, key in enumerate(keys):
        firsts.setdefault(key, i)
    return list(firsts.values())


def _postings_masks(matrix: np.ndarray) -> dict[Token, int]:
    """Per-token bitmask over instance rows containing that token."""
    masks: dict[Token, int] = {}
    for idx in range(matrix.shape[0]):
        bit = 1 << idx
        for col, code in enumerate(matrix[idx].tolist()):
            if code != ABSENT:
                key = (col, code)
                masks[key] = masks.get(key, 0) | bit
    return masks


def _filter_counts(
    counts: dict[bytes, int],
    opposite: np.ndarray,
    width: int,
    threads: int = 1,
) -> PatternSet:
    """Keep patterns contained in no opposite-class instance."""
    if not counts:
        return PatternSet.from_counts({}, width)
    keys = list(counts.keys())
    total = len(keys)
    matrix = np.frombuffer(b"".join(keys), dtype=CODE_DTYPE).reshape(total, width)
    freqs = np.fromiter(counts.values(), dtype=np.int64, count=total)

    postings = _postings_masks(opposite)
    popcounts = {tok: mask.bit_count() for tok, mask in postings.items()}
    keep = np.ones(total, dtype=bool)

    def run(start: int, stop: int) -> None:
        get = postings.get
        for lo in range(start, stop, 65536):
            hi = min(lo + 65536, stop)
            rows, cols = np.nonzero(matrix[lo:hi] != ABSENT)
            vals = matrix[lo:hi][rows, cols]
            offsets = np.zeros(hi - lo + 1, dtype=np.int64)
            offsets[1:] = np.bincount(rows, minlength=hi - lo).cumsum()
            cols_l = cols.tolist()
            vals_l = vals.tolist()
            for p in range(hi - lo):
                tokens = [
                    (cols_l[k], vals_l[k]) for k in range(offsets[p], offsets[p + 1])
                ]
                tokens.sort(key=lambda tok: popcounts.get(tok, 0))
                acc = -1  # all-ones accumulator
                for tok in tokens:
                    mask = get(tok)
                    if mask is None:
                        acc = 0
                        break
                    acc &= mask
                    if acc == 0:
                        break
                keep[lo + p] = acc == 0

    if threads <= 1 or total < 1024:
        run(0, total)
    else:
        bounds = np.linspace(0, total, threads + 1, dtype=int)
        with ThreadPoolExecutor(max_workers=threads) as pool:
            list(pool.map(lambda se: run(se[0], se[1]), zip(bounds[:-1], bounds[1:])))

    kept = {
        matrix[i].tobytes(): int(freqs[i]) for i in range(total) if keep[i]
    }
    return PatternSet.from_counts(kept, width)


def _decode_counts(counts: Mapping[bytes, int], width: int) -> dict[TokenSet, int]:
    out: dict[TokenSet, int] = {}
    for key, freq in counts.items():
        row = np.frombuffer(key, dtype=CODE_DTYPE)
        tokens = tuple((int(c), int(v)) for c, v in enumerate(row) if v != ABSENT)
        out[tokens] = freq
    return out


def pairwise_patterns(
    instances: Sequence[EncodedInstance], cfg: MiningConfig = MiningConfig()
) -> dict[TokenSet, int]:
    """Mine the pattern multiset of one class (token sets -> frequency).

    Every unordered pair contributes the token set it agrees on; empty
    intersections are discarded, identical token sets merge by summing.
    Fewer than two instances yield patterns only under instance inclusion.
    """
    if not instances:
        return {}
    width = _check_uniform(instances)
    matrix = codes_matrix(instances, width)
    return _decode_counts(_pairwise_counts(matrix, cfg), width)


def filter_coherent(
    patterns: Mapping[TokenSet, int] | Iterable[Pattern],
    opposite: Sequence[EncodedInstance],
) -> list[Pattern]:
    """Keep the patterns contained in no opposite-class instance."""
    if isinstance(patterns, Mapping):
        items = [Pattern(tokens=t, freq=f) for t, f in patterns.items()]
    else:
        items = list(patterns)
    if not items:
        return []
    if opposite:
        opp_matrix = codes_matrix(opposite, len(opposite[0].codes))
        postings = _postings_masks(opp_matrix)
    else:
        postings = {}
    kept = []
    for pat in items:
        if not pat.tokens:
            # The empty token set is a subset of every instance.
            if not opposite:
                kept.append(pat)
            continue
        acc = -1
        for tok in sorted(pat.tokens, key=lambda t: postings.get(t, 0).bit_count()):
            mask = postings.get(tok)
            if mask is None:
                acc = 0
                break
            acc &= mask
            if acc == 0:
                break
        if acc == 0:
            kept.append(pat)
    return kept


def mine(
    train: Sequence[EncodedInstance],
    cfg: MiningConfig = MiningConfig(),
    threads: int = 1,
) -> PatternBank:
    """Mine a full pattern bank from a training partition.

    CNP are normal-pair patterns surviving exclusion against anomalous
    training instances; CAP symmetrically.  An absent class leaves its side
    empty and the opposite side unfiltered.
    """
    normals = [inst for inst in train if inst.label == NORMAL]
    anomalous = [inst for inst in train if inst.label == ANOMALOUS]
    width = len(train[0].codes) if train else 0

    normal_matrix = codes_matrix(normals, width)
    anomalous_matrix = codes_matrix(anomalous, width)
    normal_counts = _pairwise_counts(normal_matrix, cfg, threads)
    anomalous_counts = _pairwise_counts(anomalous_matrix, cfg, threads)
    cnp = _filter_counts(normal_counts, anomalous_matrix, width, threads)
    cap = _filter_counts(anomalous_counts, normal_matrix, width, threads)

    provenance = {
        "normal_instances": len(normals),
        "anomalous_instances": len(anomalous),
        "pairs_normal": len(normals) * (len(normals) - 1) // 2,
        "pairs_anomalous": len(anomalous) * (len(anomalous) - 1) // 2,
        "normal_patterns": len(normal_counts),
        "anomalous_patterns": len(anomalous_counts),
        "cnp": len(cnp),
        "cap": len(cap),
    }
    return PatternBank(cnp=cnp, cap=cap, config=cfg, width=width, provenance=provenance)


def reference_mine(
    train: Sequence[EncodedInstance], cfg: MiningConfig = MiningConfig()
) -> PatternBank:
    """Nested-loop transcription of :func:`mine`; the equivalence oracle.

    No indexing, no vectorization, no parallelism: token sets are plain
    frozensets, exclusion checks every pattern against every opposite
    instance, and the result must match ``mine`` exactly.
    """

    def token_set(inst: EncodedInstance) -> frozenset[Token]:
        return frozenset(inst.tokens())

    def side_patterns(side: list[EncodedInstance]) -> dict[frozenset[Token], int]:
        counts: dict[frozenset[Token], int] = {}
        for i in range(len(side)):
            for j in range(i + 1, len(side)):
                inter = token_set(side[i]) & token_set(side[j])
                if len(inter) >= cfg.min_pattern_len:
                    counts[inter] = counts.get(inter, 0) + 1
        if cfg.include_instances != "off":
            full = [token_set(inst) for inst in side]
            if cfg.include_instances == "dedup":
                full = list(dict.fromkeys(full))
            for tokens in full:
                if len(tokens) >= cfg.min_pattern_len:
                    counts[tokens] = counts.get(tokens, 0) + 1
        return counts

    def coherent(
        counts: dict[frozenset[Token], int], opposite: list[EncodedInstance]
    ) -> list[Pattern]:
        kept = []
        for tokens, freq in counts.items():
            contained = any(tokens <= token_set(opp) for opp in opposite)
            if not contained:
                kept.append(Pattern(tokens=tuple(sorted(tokens)), freq=freq))
        return kept

    normals = [inst for inst in train if inst.label == NORMAL]
    anomalous = [inst for inst in train if inst.label == ANOMALOUS]
    width = len(train[0].codes) if train else 0
    normal_counts = side_patterns(normals)
    anomalous_counts = side_patterns(anomalous)
    cnp = coherent(normal_counts, anomalous)
    cap = coherent(anomalous_counts, normals)
    provenance = {
        "normal_instances": len(normals),
        "anomalous_instances": len(anomalous),
        "pairs_normal": len(normals) * (len(normals) - 1) // 2,
        "pairs_anomalous": len(anomalous) * (len(anomalous) - 1) // 2,
        "normal_patterns": len(normal_counts),
        "anomalous_patterns": len(anomalous_counts),
        "cnp": len(cnp),
        "cap": len(cap),
    }
    return PatternBank(
        cnp=PatternSet.from_patterns(cnp, width),
        cap=PatternSet.from_patterns(cap, width),
        config=cfg,
        width=width,
        provenance=provenance,
    )
