"""Memorisation metrics: LL aggregation, TM/GS/CM records, sentence BLEU,
the BLEU-based map variant, and split-half reliability."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .kernels import bleu_match_stats, encode_sequences

__all__ = [
    "PROB_FLOOR",
    "ModelScore",
    "MemorisationRecord",
    "MetricsError",
    "geometric_mean_ll",
    "aggregate_tm_gs_cm",
    "records_from_score_logs",
    "sentence_bleu",
    "bleu_map_variant",
    "split_half_reliability",
]

PROB_FLOOR = 1e-12


class MetricsError(ValueError):
    pass


@dataclass(frozen=True)
class ModelScore:
    """Geometric-mean target probability of one example under one model."""

    example_id: int
    seed: int
    geometric_mean_prob: float
    in_train: bool
    clamped: bool = False


@dataclass(frozen=True)
class MemorisationRecord:
    """TM, GS and capped CM for one example under one metric variant."""

    example_id: int
    tm: float
    gs: float
    cm: float
    variant: str = "ll"
    n_train_models: int = 0
    n_heldout_models: int = 0
    clamped: bool = False


def geometric_mean_ll(token_probs: Sequence[float], floor: float = PROB_FLOOR) -> float:
    """(prod p_t)^(1/len), computed in log space.

    Probabilities at or below zero are clamped to ``floor``; values above 1
    are rejected.
    """
    probs = np.asarray(token_probs, dtype=np.float64)
    if probs.size == 0:
        raise MetricsError("geometric_mean_ll requires at least one token probability")
    if np.any(probs > 1.0):
        raise MetricsError("token probabilities must not exceed 1")
    probs = np.maximum(probs, floor)
    return float(np.exp(np.mean(np.log(probs))))


def aggregate_tm_gs_cm(
    scores: Iterable[ModelScore], variant: str = "ll"
) -> MemorisationRecord | None:
    """Average per-model probabilities into one record; None if a side is empty.

    TM averages models that trained on the example, GS the hold-out models;
    CM is the difference capped at 0. Deterministic regardless of input
    order (scores are sorted by seed before averaging).
    """
    scores = sorted(scores, key=lambda s: s.seed)
    if not scores:
        return None
    example_id = scores[0].example_id
    train = [s.geometric_mean_prob for s in scores if s.in_train]
    heldout = [s.geometric_mean_prob for s in scores if not s.in_train]
    if not train or not heldout:
        return None
    tm = float(np.mean(train))
    gs = float(np.mean(heldout))
    return MemorisationRecord(
        example_id=example_id,
        tm=tm,
        gs=gs,
        cm=max(0.0, tm - gs),
        variant=variant,
        n_train_models=len(train),
        n_heldout_models=len(heldout),
        clamped=any(s.clamped for s in scores),
    )


def records_from_score_logs(
    logs: Iterable, seeds: set[int] | None = None, variant: str = "ll"
) -> tuple[dict[int, MemorisationRecord], dict[int, str]]:
    """Group score logs per example and aggregate.

    ``logs`` are objects with seed/example_id/split/mean_token_logprob
    attributes (ensemble.ScoreLog). ``seeds`` restricts to a seed subset,
    which is how the reliability halves are built. Returns (records,
    invalid-reasons).
    """
    per_example: dict[int, list[ModelScore]] = {}
    for log in logs:
        if seeds is not None and log.seed not in seeds:
            continue
        lp = log.mean_token_logprob
        clamped = lp == -math.inf or lp < math.log(PROB_FLOOR)
        prob = math.exp(max(lp, math.log(PROB_FLOOR)))
        per_example.setdefault(log.example_id, []).append(
            ModelScore(
                example_id=log.example_id,
                seed=log.seed,
                geometric_mean_prob=prob,
                in_train=log.split == "train",
                clamped=clamped,
            )
        )
    records: dict[int, MemorisationRecord] = {}
    invalid: dict[int, str] = {}
    for example_id in sorted(per_example):
        rec = aggregate_tm_gs_cm(per_example[example_id], variant=variant)
        if rec is None:
            n_train = sum(1 for s in per_example[example_id] if s.in_train)
            side = "train" if n_train == 0 else "heldout"
            invalid[example_id] = f"empty {side} model set"
        else:
            records[example_id] = rec
    return records, invalid


def sentence_bleu(hypothesis: Sequence[str], reference: Sequence[str]) -> float:
    """4-gram sentence BLEU in [0, 100] with brevity penalty.

    Higher-order precisions (n >= 2) with zero matches get add-one smoothing
    on numerator and denominator; unigram precision is unsmoothed, so fully
    disjoint outputs score 0. An empty hypothesis scores 0.
    """
    if len(reference) == 0:
        raise MetricsError("reference must be non-empty")
    if len(hypothesis) == 0:
        return 0.0
    hyp_ids, ref_ids = encode_sequences(list(hypothesis), list(reference))
    matches, totals = bleu_match_stats(hyp_ids, ref_ids, 4)
    log_precision_sum = 0.0
    for n in range(4):
        m, t = int(matches[n]), int(totals[n])
        if n == 0:
            if m == 0:
                return 0.0
            p = m / t
        elif m == 0:
            p = (m + 1) / (t + 1)
        else:
            p = m / t
        log_precision_sum += math.log(p)
    hyp_len, ref_len = len(hypothesis), len(reference)
    bp = 1.0 if hyp_len > ref_len else math.exp(1.0 - ref_len / hyp_len)
    return 100.0 * bp * math.exp(log_precision_sum / 4.0)


def bleu_map_variant(
    hypotheses: Mapping[tuple[int, int], Sequence[str]],
    references: Mapping[int, Sequence[str]],
    membership: np.ndarray,
) -> tuple[dict[int, MemorisationRecord], dict[int, str]]:
    """Records where TM/GS are mean sentence BLEU / 100 instead of LL.

    ``hypotheses`` maps (seed, example_id) to greedy-decoded tokens;
    ``membership`` is the K x N train matrix. Examples with any missing
    hypothesis are flagged, not scored.
    """
    n_seeds, n_examples = membership.shape
    records: dict[int, MemorisationRecord] = {}
    flagged: dict[int, str] = {}
    for example_id in sorted(references):
        if example_id < 0 or example_id >= n_examples:
            flagged[example_id] = "example id outside membership matrix"
            continue
        ref = references[example_id]
        scores = []
        missing = [k for k in range(n_seeds) if (k, example_id) not in hypotheses]
        if missing:
            flagged[example_id] = f"missing hypotheses for seeds {missing}"
            continue
        for seed in range(n_seeds):
            bleu = sentence_bleu(hypotheses[(seed, example_id)], ref)
            scores.append(
                ModelScore(
                    example_id=example_id,
                    seed=seed,
                    geometric_mean_prob=bleu / 100.0,
                    in_train=bool(membership[seed, example_id]),
                )
            )
        rec = aggregate_tm_gs_cm(scores, variant="bleu")
        if rec is None:
            flagged[example_id] = "empty train or heldout model set"
        else:
            records[example_id] = rec
    return records, flagged


def split_half_reliability(
    records_half_a: Mapping[int, MemorisationRecord],
    records_half_b: Mapping[int, MemorisationRecord],
    metric: str = "cm",
    capped: bool = True,
) -> float:
    """Pearson r between one metric computed from two disjoint seed halves.

    ``capped=False`` correlates the raw tm - gs difference instead of the
    capped cm (only meaningful for metric="cm").
    """
    if metric not in ("tm", "gs", "cm"):
        raise MetricsError(f"unknown metric {metric!r}")

    def value(rec: MemorisationRecord) -> float:
        if metric == "cm" and not capped:
            return rec.tm - rec.gs
        return getattr(rec, metric)

    shared = sorted(set(records_half_a) & set(records_half_b))
    if len(shared) < 3:
        raise MetricsError(f"need >= 3 shared valid examples, got {len(shared)}")
    a = np.array([value(records_half_a[i]) for i in shared])
    b = np.array([value(records_half_b[i]) for i in shared])
    if np.ptp(a) == 0 or np.ptp(b) == 0:
        raise MetricsError("correlation undefined: zero variance on one half")
    return float(stats.pearsonr(a, b)[0])
