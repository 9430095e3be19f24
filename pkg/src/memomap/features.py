"""The 28 surface features of a sentence pair, in fixed column order.

Null values (missing alignments or backtranslations, all-punctuation
sources) are NaN in the vector and flag it partial; downstream consumers
must impute or drop, never default silently.
"""

from __future__ import annotations

import math
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Sequence

import numpy as np

from .align import AlignmentLinks
from .corpus import (
    FrequencyTable,
    TokenizedPair,
    content_words,
    is_digit_token,
    is_punctuation_token,
)
from .kernels import encode_sequences, levenshtein_ids

__all__ = [
    "FEATURE_NAMES",
    "FeatureVector",
    "extract_features",
    "extract_features_corpus",
    "edit_distance",
    "fuzzy_reordering",
    "overlap_features",
    "build_repetition_index",
    "build_feature_tables",
]

FEATURE_NAMES = (
    "src_len_ws",
    "src_len_bpe",
    "trg_len_ws",
    "trg_len_bpe",
    "len_ratio_ws",
    "len_ratio_bpe",
    "avg_logfreq_src_ws",
    "avg_logfreq_src_bpe",
    "avg_logfreq_trg_ws",
    "avg_logfreq_trg_bpe",
    "min_logfreq_src_ws",
    "min_logfreq_src_bpe",
    "min_logfreq_trg_ws",
    "min_logfreq_trg_bpe",
    "target_repetitions",
    "segmentation_src",
    "segmentation_trg",
    "digit_ratio",
    "punct_ratio",
    "edit_distance",
    "backtranslation_edit_distance",
    "len_diff_ws",
    "len_diff_bpe",
    "unaligned_src_ratio",
    "unaligned_trg_ratio",
    "fuzzy_reordering_score",
    "token_overlap",
    "word_overlap",
)

N_FEATURES = len(FEATURE_NAMES)
_INDEX = {name: i for i, name in enumerate(FEATURE_NAMES)}


@dataclass(frozen=True)
class FeatureVector:
    pair_id: int
    values: np.ndarray  # (28,) float64; NaN marks a null feature

    @property
    def partial(self) -> bool:
        return bool(np.isnan(self.values).any())

    def __getitem__(self, name: str) -> float:
        return float(self.values[_INDEX[name]])

    def as_dict(self) -> dict[str, float]:
        return {name: float(v) for name, v in zip(FEATURE_NAMES, self.values)}


def build_feature_tables(tokenized: list[TokenizedPair]) -> dict[tuple[str, str], FrequencyTable]:
    """All four frequency tables the extractor needs."""
    from .corpus import build_frequency_table

    return {
        (side, gran): build_frequency_table(tokenized, side, gran)
        for side in ("source", "target")
        for gran in ("whitespace", "bpe")
    }


def build_repetition_index(tokenized: list[TokenizedPair]) -> Counter:
    """Exact-match counts of target token sequences over the corpus."""
    return Counter(pair.trg_ws for pair in tokenized)


def edit_distance(a: Sequence[str], b: Sequence[str]) -> int:
    """Token-level Levenshtein distance (insert/delete/substitute cost 1)."""
    a_ids, b_ids = encode_sequences(list(a), list(b))
    return levenshtein_ids(a_ids, b_ids)


def fuzzy_reordering(links: AlignmentLinks, trg_len: int) -> float:
    """Alignment monotonicity: 1 - (chunks - 1) / (aligned positions - 1).

    The source-index sequence visits, for each target position in order, its
    aligned source indices ascending; a chunk is a maximal run increasing by
    exactly 1. One or zero aligned positions score 1.0.
    """
    per_target: dict[int, list[int]] = {}
    for i, j in links.links:
        per_target.setdefault(j, []).append(i)
    sigma: list[int] = []
    for j in range(trg_len):
        sigma.extend(sorted(per_target.get(j, ())))
    m = len(sigma)
    if m <= 1:
        return 1.0
    chunks = 1
    for prev, cur in zip(sigma, sigma[1:]):
        if cur != prev + 1:
            chunks += 1
    return 1.0 - (chunks - 1) / (m - 1)


def overlap_features(pair: TokenizedPair) -> tuple[float, float]:
    """(token_overlap, word_overlap); word overlap is NaN for all-punctuation sources.

    Token overlap is the fraction of source BPE tokens that occur in the
    target BPE tokens; word overlap is the analogue on lowercased
    whitespace tokens with punctuation excluded.
    """
    trg_bpe = set(pair.trg_bpe)
    token_overlap = (
        sum(1 for t in pair.src_bpe if t in trg_bpe) / len(pair.src_bpe) if pair.src_bpe else 0.0
    )
    src_words = content_words(pair.src_ws)
    if not src_words:
        return token_overlap, math.nan
    trg_words = set(content_words(pair.trg_ws))
    word_overlap = sum(1 for w in src_words if w in trg_words) / len(src_words)
    return token_overlap, word_overlap


def _log_freq(table: FrequencyTable, token: str) -> float:
    # unseen tokens (scoring new corpora) count as 1 -> log 0
    return math.log(table.counts.get(token, 1))


def _freq_stats(table: FrequencyTable, tokens: tuple[str, ...]) -> tuple[float, float]:
    if not tokens:
        return math.nan, math.nan
    logs = [_log_freq(table, t) for t in tokens]
    return float(np.mean(logs)), float(min(logs))


def extract_features(
    pair: TokenizedPair,
    freq_tables: Mapping[tuple[str, str], FrequencyTable],
    alignment: AlignmentLinks | None,
    backtranslation: Sequence[str] | None,
    repetition_index: Mapping,
) -> FeatureVector:
    """Compute all 28 features for one pair.

    ``freq_tables`` maps (side, granularity) to tables built on the same
    corpus; ``backtranslation`` is the whitespace-tokenized back-translated
    target. Missing alignment or backtranslation leaves the dependent
    features NaN.
    """
    v = np.full(N_FEATURES, np.nan, dtype=np.float64)

    ns_ws, ns_bpe = len(pair.src_ws), len(pair.src_bpe)
    nt_ws, nt_bpe = len(pair.trg_ws), len(pair.trg_bpe)
    v[_INDEX["src_len_ws"]] = ns_ws
    v[_INDEX["src_len_bpe"]] = ns_bpe
    v[_INDEX["trg_len_ws"]] = nt_ws
    v[_INDEX["trg_len_bpe"]] = nt_bpe
    if nt_ws:
        v[_INDEX["len_ratio_ws"]] = ns_ws / nt_ws
    if nt_bpe:
        v[_INDEX["len_ratio_bpe"]] = ns_bpe / nt_bpe

    avg, mn = _freq_stats(freq_tables[("source", "whitespace")], pair.src_ws)
    v[_INDEX["avg_logfreq_src_ws"]], v[_INDEX["min_logfreq_src_ws"]] = avg, mn
    avg, mn = _freq_stats(freq_tables[("source", "bpe")], pair.src_bpe)
    v[_INDEX["avg_logfreq_src_bpe"]], v[_INDEX["min_logfreq_src_bpe"]] = avg, mn
    avg, mn = _freq_stats(freq_tables[("target", "whitespace")], pair.trg_ws)
    v[_INDEX["avg_logfreq_trg_ws"]], v[_INDEX["min_logfreq_trg_ws"]] = avg, mn
    avg, mn = _freq_stats(freq_tables[("target", "bpe")], pair.trg_bpe)
    v[_INDEX["avg_logfreq_trg_bpe"]], v[_INDEX["min_logfreq_trg_bpe"]] = avg, mn

    v[_INDEX["target_repetitions"]] = repetition_index.get(pair.trg_ws, 0)
    if ns_bpe:
        v[_INDEX["segmentation_src"]] = 1.0 - ns_ws / ns_bpe
    if nt_bpe:
        v[_INDEX["segmentation_trg"]] = 1.0 - nt_ws / nt_bpe
    if ns_ws:
        v[_INDEX["digit_ratio"]] = sum(1 for t in pair.src_ws if is_digit_token(t)) / ns_ws
        v[_INDEX["punct_ratio"]] = sum(1 for t in pair.src_ws if is_punctuation_token(t)) / ns_ws

    v[_INDEX["edit_distance"]] = edit_distance(pair.src_ws, pair.trg_ws)
    if backtranslation is not None:
        v[_INDEX["backtranslation_edit_distance"]] = edit_distance(pair.src_ws, backtranslation)
    v[_INDEX["len_diff_ws"]] = ns_ws - nt_ws
    v[_INDEX["len_diff_bpe"]] = ns_bpe - nt_bpe

    if alignment is not None:
        aligned_src = {i for i, _ in alignment.links}
        aligned_trg = {j for _, j in alignment.links}
        if ns_ws:
            v[_INDEX["unaligned_src_ratio"]] = 1.0 - len(aligned_src) / ns_ws
        if nt_ws:
            v[_INDEX["unaligned_trg_ratio"]] = 1.0 - len(aligned_trg) / nt_ws
        v[_INDEX["fuzzy_reordering_score"]] = fuzzy_reordering(alignment, nt_ws)

    token_ov, word_ov = overlap_features(pair)
    v[_INDEX["token_overlap"]] = token_ov
    v[_INDEX["word_overlap"]] = word_ov

    return FeatureVector(pair_id=pair.pair_id, values=v)


def extract_features_corpus(
    tokenized: list[TokenizedPair],
    freq_tables: Mapping[tuple[str, str], FrequencyTable] | None = None,
    alignments: Mapping[int, AlignmentLinks] | None = None,
    backtranslations: Sequence[Sequence[str]] | None = None,
    repetition_index: Mapping | None = None,
) -> list[FeatureVector]:
    """Extract features for every pair; backtranslations are line-aligned."""
    if freq_tables is None:
        freq_tables = build_feature_tables(tokenized)
    if repetition_index is None:
        repetition_index = build_repetition_index(tokenized)
    if backtranslations is not None and len(backtranslations) != len(tokenized):
        raise ValueError(
            f"{len(backtranslations)} backtranslation lines for {len(tokenized)} pairs"
        )
    out = []
    for row, pair in enumerate(tokenized):
        alignment = alignments.get(pair.pair_id) if alignments is not None else None
        bt = backtranslations[row] if backtranslations is not None else None
        out.append(extract_features(pair, freq_tables, alignment, bt, repetition_index))
    return out
