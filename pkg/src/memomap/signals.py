"""Training signals extracted from a diagnostic run's epoch-indexed logs."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .metrics import PROB_FLOOR

__all__ = [
    "SIGNAL_NAMES",
    "EpochSeries",
    "TrainingSignals",
    "SignalError",
    "extract_signals",
    "read_epoch_log",
    "extract_signals_from_log",
]

SIGNAL_NAMES = (
    "confidence",
    "variability",
    "final_likelihood",
    "forgetting",
    "hyp_likelihood",
    "final_minus_confidence",
)


class SignalError(ValueError):
    pass


@dataclass(frozen=True)
class EpochSeries:
    """Per-epoch geometric-mean target probabilities for one example."""

    example_id: int
    target_probs: tuple[float, ...]
    hyp_probs: tuple[float, ...] | None = None


@dataclass(frozen=True)
class TrainingSignals:
    example_id: int
    confidence: float  # mean over epochs
    variability: float  # population standard deviation over epochs
    final_likelihood: float
    forgetting: float  # accumulated drops between consecutive epochs
    hyp_likelihood: float
    final_minus_confidence: float
    hyp_from_target: bool = False  # provenance: no hypothesis series supplied

    def as_array(self) -> np.ndarray:
        return np.array(
            [
                self.confidence,
                self.variability,
                self.final_likelihood,
                self.forgetting,
                self.hyp_likelihood,
                self.final_minus_confidence,
            ],
            dtype=np.float64,
        )


def extract_signals(series: EpochSeries) -> TrainingSignals:
    """The six diagnostic signals of one example's epoch series.

    Variability is the population standard deviation; forgetting sums the
    probability drops between consecutive epochs (0 for monotone series).
    """
    probs = np.asarray(series.target_probs, dtype=np.float64)
    if probs.size == 0:
        raise SignalError(f"example {series.example_id}: empty epoch series")
    confidence = float(probs.mean())
    variability = float(probs.std())  # population, ddof=0
    final = float(probs[-1])
    drops = np.diff(probs)
    forgetting = float(np.sum(np.maximum(0.0, -drops))) if probs.size > 1 else 0.0
    if series.hyp_probs is not None:
        if len(series.hyp_probs) != probs.size:
            raise SignalError(
                f"example {series.example_id}: hypothesis series length "
                f"{len(series.hyp_probs)} != {probs.size}"
            )
        hyp = float(series.hyp_probs[-1])
        hyp_from_target = False
    else:
        hyp = final
        hyp_from_target = True
    return TrainingSignals(
        example_id=series.example_id,
        confidence=confidence,
        variability=variability,
        final_likelihood=final,
        forgetting=forgetting,
        hyp_likelihood=hyp,
        final_minus_confidence=final - confidence,
        hyp_from_target=hyp_from_target,
    )


def read_epoch_log(path: str | Path) -> dict[int, EpochSeries]:
    """Parse one diagnostic run's epoch log into per-example series.

    Format per line: epoch, example_id, mean_token_logprob, target_len, and
    an optional hypothesis log-probability, tab-separated. Rows may arrive
    in any order; series are sorted by epoch index.
    """
    rows: dict[int, list[tuple[int, float, float | None]]] = {}
    floor = math.log(PROB_FLOOR)
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) not in (4, 5):
                raise SignalError(f"{path}:{lineno}: expected 4 or 5 fields, got {len(parts)}")
            try:
                epoch = int(parts[0])
                example_id = int(parts[1])
                lp = float(parts[2])
                hyp_lp = float(parts[4]) if len(parts) == 5 else None
            except ValueError as e:
                raise SignalError(f"{path}:{lineno}: {e}") from None
            prob = math.exp(max(lp, floor))
            hyp_prob = math.exp(max(hyp_lp, floor)) if hyp_lp is not None else None
            rows.setdefault(example_id, []).append((epoch, prob, hyp_prob))

    out: dict[int, EpochSeries] = {}
    for example_id, entries in rows.items():
        entries.sort(key=lambda e: e[0])
        epochs = [e[0] for e in entries]
        if len(set(epochs)) != len(epochs):
            raise SignalError(f"example {example_id}: duplicate epoch rows")
        target = tuple(e[1] for e in entries)
        hyps = tuple(e[2] for e in entries)
        hyp_series = hyps if all(h is not None for h in hyps) else None
        out[example_id] = EpochSeries(example_id, target, hyp_series)
    return out


def extract_signals_from_log(path: str | Path) -> dict[int, TrainingSignals]:
    return {eid: extract_signals(series) for eid, series in read_epoch_log(path).items()}
