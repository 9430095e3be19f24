"""Hot numeric kernels with numba-jitted and pure-numpy twins.

Everything here operates on integer-encoded token sequences so the inner
loops stay allocation-free. The numba path is used when available; set
``MEMOMAP_NO_NUMBA=1`` to force the numpy fallbacks (the two paths are
asserted equivalent in the test suite and compared in
``benchmarks/bench_kernels.py``).
"""

from __future__ import annotations

import os

import numpy as np

__all__ = [
    "BACKEND",
    "levenshtein_ids",
    "bleu_match_stats",
    "ibm1_expectation",
    "encode_sequences",
]


def _numba_disabled() -> bool:
    return os.environ.get("MEMOMAP_NO_NUMBA", "").strip().lower() not in ("", "0", "false")


try:
    if _numba_disabled():
        raise ImportError("disabled via MEMOMAP_NO_NUMBA")
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

    def njit(*args, **kwargs):  # no-op decorator so both paths share source
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


BACKEND = "numba" if _HAVE_NUMBA else "numpy"


def encode_sequences(*seqs: list, vocab: dict | None = None) -> list[np.ndarray]:
    """Map token sequences to int64 id arrays sharing one vocabulary.

    A fresh vocabulary is built unless ``vocab`` is given; unseen tokens
    extend it in encounter order, so encoding is deterministic.
    """
    if vocab is None:
        vocab = {}
    out = []
    for seq in seqs:
        ids = np.empty(len(seq), dtype=np.int64)
        for i, tok in enumerate(seq):
            idx = vocab.get(tok)
            if idx is None:
                idx = len(vocab)
                vocab[tok] = idx
            ids[i] = idx
        out.append(ids)
    return out


# ---------------------------------------------------------------------------
# Levenshtein distance (token level, unit costs)
# ---------------------------------------------------------------------------


@njit(cache=True)
def _levenshtein_nb(a, b):
    n = b.shape[0]
    prev = np.empty(n + 1, dtype=np.int64)
    cur = np.empty(n + 1, dtype=np.int64)
    for j in range(n + 1):
        prev[j] = j
    for i in range(a.shape[0]):
        cur[0] = i + 1
        for j in range(1, n + 1):
            cost = 0 if a[i] == b[j - 1] else 1
            best = prev[j] + 1
            if cur[j - 1] + 1 < best:
                best = cur[j - 1] + 1
            if prev[j - 1] + cost < best:
                best = prev[j - 1] + cost
            cur[j] = best
        prev, cur = cur, prev
    return prev[n]


def _levenshtein_np(a, b):
    # Row-wise DP; the sequential insertion chain cur[j-1]+1 is resolved
    # with a running minimum: cur[j] = j + min_{k<=j}(m[k] - k).
    n = b.shape[0]
    prev = np.arange(n + 1, dtype=np.int64)
    js = np.arange(1, n + 1, dtype=np.int64)
    for i in range(a.shape[0]):
        m = np.minimum(prev[1:] + 1, prev[:-1] + (b != a[i]))
        u = np.empty(n + 1, dtype=np.int64)
        u[0] = i + 1
        u[1:] = m - js
        prev = np.minimum.accumulate(u)
        prev[1:] += js
    return int(prev[n])


def levenshtein_ids(a: np.ndarray, b: np.ndarray) -> int:
    """Edit distance between two int64 id arrays (insert/delete/substitute = 1)."""
    a = np.ascontiguousarray(a, dtype=np.int64)
    b = np.ascontiguousarray(b, dtype=np.int64)
    if a.shape[0] == 0:
        return int(b.shape[0])
    if b.shape[0] == 0:
        return int(a.shape[0])
    if _HAVE_NUMBA:
        return int(_levenshtein_nb(a, b))
    return _levenshtein_np(a, b)


# ---------------------------------------------------------------------------
# Clipped n-gram match counts for sentence BLEU
# ---------------------------------------------------------------------------


@njit(cache=True)
def _bleu_match_stats_nb(hyp, ref, max_order):
    matches = np.zeros(max_order, dtype=np.int64)
    totals = np.zeros(max_order, dtype=np.int64)
    nh = hyp.shape[0]
    nr = ref.shape[0]
    for order in range(1, max_order + 1):
        th = nh - order + 1
        if th <= 0:
            continue
        totals[order - 1] = th
        for i in range(th):
            # count each distinct hypothesis n-gram once, at first occurrence
            seen = False
            for j in range(i):
                eq = True
                for k in range(order):
                    if hyp[j + k] != hyp[i + k]:
                        eq = False
                        break
                if eq:
                    seen = True
                    break
            if seen:
                continue
            hyp_count = 0
            for j in range(th):
                eq = True
                for k in range(order):
                    if hyp[j + k] != hyp[i + k]:
                        eq = False
                        break
                if eq:
                    hyp_count += 1
            ref_count = 0
            for j in range(nr - order + 1):
                eq = True
                for k in range(order):
                    if ref[j + k] != hyp[i + k]:
                        eq = False
                        break
                if eq:
                    ref_count += 1
            matches[order - 1] += min(hyp_count, ref_count)
    return matches, totals


def _bleu_match_stats_np(hyp, ref, max_order):
    matches = np.zeros(max_order, dtype=np.int64)
    totals = np.zeros(max_order, dtype=np.int64)
    for order in range(1, max_order + 1):
        th = hyp.shape[0] - order + 1
        if th <= 0:
            continue
        totals[order - 1] = th
        hyp_grams: dict = {}
        for i in range(th):
            g = tuple(hyp[i : i + order])
            hyp_grams[g] = hyp_grams.get(g, 0) + 1
        ref_grams: dict = {}
        for i in range(ref.shape[0] - order + 1):
            g = tuple(ref[i : i + order])
            ref_grams[g] = ref_grams.get(g, 0) + 1
        m = 0
        for g, c in hyp_grams.items():
            m += min(c, ref_grams.get(g, 0))
        matches[order - 1] = m
    return matches, totals


def bleu_match_stats(hyp: np.ndarray, ref: np.ndarray, max_order: int = 4):
    """Per-order clipped n-gram matches and hypothesis n-gram totals."""
    hyp = np.ascontiguousarray(hyp, dtype=np.int64)
    ref = np.ascontiguousarray(ref, dtype=np.int64)
    if _HAVE_NUMBA:
        return _bleu_match_stats_nb(hyp, ref, max_order)
    return _bleu_match_stats_np(hyp, ref, max_order)


# ---------------------------------------------------------------------------
# IBM Model 1 expectation step
# ---------------------------------------------------------------------------
#
# The corpus is flattened into id arrays with offsets; the translation table
# lives in a sorted key array (key = src_type * n_trg_types + trg_type) with
# probabilities aligned to it, so lookups are binary searches and the E-step
# never allocates per sentence.


@njit(cache=True)
def _ibm1_expectation_nb(src_flat, src_off, trg_flat, trg_off, keys, probs, n_trg_types):
    counts = np.zeros(probs.shape[0], dtype=np.float64)
    n_pairs = src_off.shape[0] - 1
    for p in range(n_pairs):
        s0 = src_off[p]
        s1 = src_off[p + 1]
        for ti in range(trg_off[p], trg_off[p + 1]):
            t_id = trg_flat[ti]
            denom = 0.0
            for si in range(s0, s1):
                key = src_flat[si] * n_trg_types + t_id
                idx = np.searchsorted(keys, key)
                denom += probs[idx]
            if denom <= 0.0:
                continue
            for si in range(s0, s1):
                key = src_flat[si] * n_trg_types + t_id
                idx = np.searchsorted(keys, key)
                counts[idx] += probs[idx] / denom
    return counts


def _ibm1_expectation_np(src_flat, src_off, trg_flat, trg_off, keys, probs, n_trg_types):
    counts = np.zeros(probs.shape[0], dtype=np.float64)
    n_pairs = src_off.shape[0] - 1
    for p in range(n_pairs):
        s = src_flat[src_off[p] : src_off[p + 1]]
        t = trg_flat[trg_off[p] : trg_off[p + 1]]
        if s.size == 0 or t.size == 0:
            continue
        idx = np.searchsorted(keys, s[:, None] * n_trg_types + t[None, :])
        tv = probs[idx]
        denom = tv.sum(axis=0)
        np.add.at(counts, idx, tv / denom[None, :])
    return counts


def ibm1_expectation(
    src_flat: np.ndarray,
    src_off: np.ndarray,
    trg_flat: np.ndarray,
    trg_off: np.ndarray,
    keys: np.ndarray,
    probs: np.ndarray,
    n_trg_types: int,
) -> np.ndarray:
    """Accumulate fractional link counts for one EM iteration.

    ``keys`` must be sorted and contain every co-occurring (src, trg) type
    pair reachable from the corpus; lookups of unseen pairs are undefined.
    """
    args = (
        np.ascontiguousarray(src_flat, dtype=np.int64),
        np.ascontiguousarray(src_off, dtype=np.int64),
        np.ascontiguousarray(trg_flat, dtype=np.int64),
        np.ascontiguousarray(trg_off, dtype=np.int64),
        np.ascontiguousarray(keys, dtype=np.int64),
        np.ascontiguousarray(probs, dtype=np.float64),
        np.int64(n_trg_types),
    )
    if _HAVE_NUMBA:
        return _ibm1_expectation_nb(*args)
    return _ibm1_expectation_np(*args)
