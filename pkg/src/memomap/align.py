"""Word alignments: Pharaoh-format ingestion and an IBM Model 1 fallback.

The built-in aligner is desk-scale plumbing for when no external alignments
are supplied; production maps should ingest alignments from a real aligner.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import TokenizedPair
from .kernels import ibm1_expectation

__all__ = ["AlignmentLinks", "AlignmentError", "ibm1_align", "ingest_alignments"]


class AlignmentError(ValueError):
    pass


@dataclass(frozen=True)
class AlignmentLinks:
    """Set of (source_index, target_index) links over whitespace tokens."""

    pair_id: int
    links: frozenset


def _encode_corpus(tokenized: list[TokenizedPair]):
    src_vocab: dict[str, int] = {}
    trg_vocab: dict[str, int] = {}
    src_flat: list[int] = []
    trg_flat: list[int] = []
    src_off = [0]
    trg_off = [0]
    for pair in tokenized:
        for tok in pair.src_ws:
            src_flat.append(src_vocab.setdefault(tok, len(src_vocab)))
        for tok in pair.trg_ws:
            trg_flat.append(trg_vocab.setdefault(tok, len(trg_vocab)))
        src_off.append(len(src_flat))
        trg_off.append(len(trg_flat))
    return (
        np.array(src_flat, dtype=np.int64),
        np.array(src_off, dtype=np.int64),
        np.array(trg_flat, dtype=np.int64),
        np.array(trg_off, dtype=np.int64),
        len(src_vocab),
        len(trg_vocab),
    )


def ibm1_align(tokenized: list[TokenizedPair], iterations: int = 5) -> dict[int, AlignmentLinks]:
    """EM-train t(trg|src) with a NULL source token and decode argmax links.

    Each target token links to its most probable source position; a token
    whose best explanation is NULL (strictly) stays unaligned. Deterministic
    for a fixed iteration count.
    """
    if iterations < 1:
        raise AlignmentError("ibm1_align requires iterations >= 1")
    if not tokenized:
        return {}

    src_flat, src_off, trg_flat, trg_off, n_src, n_trg = _encode_corpus(tokenized)
    null_id = n_src  # virtual source token appended to every sentence

    # append NULL to each source sentence in the flat layout
    n_pairs = len(tokenized)
    src_flat_null = np.empty(src_flat.shape[0] + n_pairs, dtype=np.int64)
    src_off_null = np.empty_like(src_off)
    src_off_null[0] = 0
    pos = 0
    for p in range(n_pairs):
        s0, s1 = src_off[p], src_off[p + 1]
        src_flat_null[pos : pos + (s1 - s0)] = src_flat[s0:s1]
        pos += s1 - s0
        src_flat_null[pos] = null_id
        pos += 1
        src_off_null[p + 1] = pos

    # translation table restricted to co-occurring type pairs
    key_set = set()
    for p in range(n_pairs):
        s_ids = set(src_flat_null[src_off_null[p] : src_off_null[p + 1]].tolist())
        t_ids = set(trg_flat[trg_off[p] : trg_off[p + 1]].tolist())
        for s in s_ids:
            for t in t_ids:
                key_set.add(s * n_trg + t)
    keys = np.array(sorted(key_set), dtype=np.int64)
    src_types = keys // n_trg

    # uniform init per source type over its co-occurring targets
    type_counts = np.bincount(src_types, minlength=n_src + 1)
    probs = 1.0 / type_counts[src_types].astype(np.float64)

    for _ in range(iterations):
        counts = ibm1_expectation(
            src_flat_null, src_off_null, trg_flat, trg_off, keys, probs, n_trg
        )
        totals = np.bincount(src_types, weights=counts, minlength=n_src + 1)
        denom = totals[src_types]
        probs = np.where(denom > 0, counts / np.where(denom > 0, denom, 1.0), probs)

    # argmax decode
    out: dict[int, AlignmentLinks] = {}
    for p, pair in enumerate(tokenized):
        s_ids = src_flat[src_off[p] : src_off[p + 1]]
        t_ids = trg_flat[trg_off[p] : trg_off[p + 1]]
        links = []
        if s_ids.size and t_ids.size:
            idx = np.searchsorted(keys, s_ids[:, None] * n_trg + t_ids[None, :])
            table = probs[idx]  # (n_src_pos, n_trg_pos)
            null_p = probs[np.searchsorted(keys, null_id * n_trg + t_ids)]
            best_src = np.argmax(table, axis=0)  # first max wins ties
            best_p = table[best_src, np.arange(t_ids.size)]
            for j in range(t_ids.size):
                if null_p[j] > best_p[j]:
                    continue  # NULL wins strictly -> unaligned
                links.append((int(best_src[j]), j))
        out[pair.pair_id] = AlignmentLinks(pair_id=pair.pair_id, links=frozenset(links))
    return out


def ingest_alignments(
    path: str | Path, tokenized: list[TokenizedPair]
) -> dict[int, AlignmentLinks]:
    """Parse a Pharaoh-format file ('i-j' links, line-aligned with the corpus).

    Empty lines mean fully unaligned pairs. Malformed tokens and indices
    beyond the sentence lengths raise with line (and column) positions.
    """
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if len(lines) != len(tokenized):
        raise AlignmentError(
            f"{path}: {len(lines)} alignment lines for {len(tokenized)} corpus pairs"
        )
    out: dict[int, AlignmentLinks] = {}
    for lineno, (line, pair) in enumerate(zip(lines, tokenized), start=1):
        links = []
        for col, token in enumerate(line.split()):
            parts = token.split("-")
            if len(parts) != 2 or not parts[0].isdigit() or not parts[1].isdigit():
                raise AlignmentError(f"{path}:{lineno}: malformed link {token!r} (column {col})")
            i, j = int(parts[0]), int(parts[1])
            if i >= len(pair.src_ws):
                raise AlignmentError(
                    f"{path}:{lineno}: source index {i} out of range "
                    f"(sentence has {len(pair.src_ws)} tokens)"
                )
            if j >= len(pair.trg_ws):
                raise AlignmentError(
                    f"{path}:{lineno}: target index {j} out of range "
                    f"(sentence has {len(pair.trg_ws)} tokens)"
                )
            links.append((i, j))
        out[pair.pair_id] = AlignmentLinks(pair_id=pair.pair_id, links=frozenset(links))
    return out
