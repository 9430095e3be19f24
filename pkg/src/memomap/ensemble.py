"""Hold-out ensembles: split plans, membership tracking, and per-model scoring.

Real metric runs train an external NMT system per seed; this module shells
out to it through a fixed command contract and validates its score logs. A
deterministic toy scorer stands in at desk scale.
"""

from __future__ import annotations

import hashlib
import math
import subprocess
import tempfile
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .corpus import TokenizedPair

__all__ = [
    "SplitPlan",
    "ScoreLog",
    "EnsembleError",
    "make_splits",
    "ToyScorer",
    "run_scorer",
    "parse_score_log",
    "write_membership_manifest",
    "read_membership_manifest",
    "write_scorer_input",
]


class EnsembleError(ValueError):
    pass


@dataclass(frozen=True)
class SplitPlan:
    """Deterministic recipe for the K-seed 50/50 hold-out ensemble."""

    n_examples: int
    n_seeds: int
    master_seed: int = 0
    train_fraction: float = 0.5

    def __post_init__(self):
        if not 0 < self.train_fraction < 1:
            raise EnsembleError(f"train_fraction must be in (0, 1), got {self.train_fraction}")
        if self.n_seeds < 2:
            raise EnsembleError("need at least 2 seeds")
        if self.n_examples < 2:
            raise EnsembleError("need at least 2 examples")


@dataclass(frozen=True)
class ScoreLog:
    """One (seed, example) score row from a model run."""

    seed: int
    example_id: int
    split: str  # train | heldout
    mean_token_logprob: float  # natural log, per target BPE token
    target_len: int
    hyp_mean_token_logprob: float | None = None


def make_splits(plan: SplitPlan) -> np.ndarray:
    """K x N boolean membership matrix; row k is a seeded uniform subset.

    Each row has exactly floor(train_fraction * N) true entries and is fully
    determined by (master_seed, k).
    """
    n, k = plan.n_examples, plan.n_seeds
    m = int(plan.train_fraction * n)
    matrix = np.zeros((k, n), dtype=bool)
    for row in range(k):
        rng = np.random.default_rng([plan.master_seed, row])
        matrix[row, rng.permutation(n)[:m]] = True
    return matrix


class ToyScorer:
    """Deterministic stand-in for per-seed NMT training.

    Per-token probability is a mixture of an exact-match memorisation term
    and a Laplace-smoothed unigram over the full-corpus target side:
    ``p = alpha * [pair in train half] + (1 - alpha) * (count+1)/(total+V)``.
    The unigram table is corpus-wide (not per train half), so with zero
    noise a model's score for an example does not depend on which half the
    model trained on beyond the membership term.

    Optional log-normal noise multiplies the geometric mean, clamped to
    (0, 1]. The noise is seeded by (noise_seed, example id) and therefore
    shared by all models scoring that example: it plays the role of a
    per-example difficulty factor, spreading examples over the map the way
    real corpora do, while keeping the split-half machinery consistent.
    """

    def __init__(
        self,
        tokenized: list[TokenizedPair],
        alpha: float = 0.9,
        noise_sigma: float = 0.0,
        vocab_size: int | None = None,
        noise_seed: int = 0,
    ):
        if not 0 <= alpha < 1:
            raise EnsembleError(f"alpha must be in [0, 1), got {alpha}")
        self.alpha = alpha
        self.noise_sigma = noise_sigma
        self.noise_seed = noise_seed
        counts: dict[str, int] = {}
        total = 0
        for pair in tokenized:
            for tok in pair.trg_bpe:
                counts[tok] = counts.get(tok, 0) + 1
                total += 1
        self.counts = counts
        self.total = total
        self.vocab_size = vocab_size if vocab_size is not None else len(counts)

    def unigram_prob(self, token: str) -> float:
        return (self.counts.get(token, 0) + 1) / (self.total + self.vocab_size)

    def score(self, in_train: bool, pair: TokenizedPair, seed: int) -> tuple[float, int]:
        """Return (mean per-token natural log-probability, target length)."""
        base = self.alpha if in_train else 0.0
        log_probs = [
            math.log(base + (1.0 - self.alpha) * self.unigram_prob(tok)) for tok in pair.trg_bpe
        ]
        mean_lp = float(np.mean(log_probs))
        if self.noise_sigma > 0:
            rng = np.random.default_rng([self.noise_seed, pair.pair_id])
            mean_lp = min(0.0, mean_lp + self.noise_sigma * rng.standard_normal())
        return mean_lp, len(pair.trg_bpe)


def write_scorer_input(path: str | Path, tokenized: list[TokenizedPair]) -> None:
    """TSV of (id, source, target) rows consumed by external scorers."""
    with open(path, "w", encoding="utf-8") as f:
        for pair in tokenized:
            f.write(f"{pair.pair_id}\t{' '.join(pair.src_ws)}\t{' '.join(pair.trg_ws)}\n")


def parse_score_log(lines, seed: int) -> list[ScoreLog]:
    """Parse the line-delimited scorer output for one seed.

    Format: example_id, split, mean_token_logprob, target_len, and an
    optional hypothesis log-probability, tab-separated.
    """
    logs = []
    for lineno, line in enumerate(lines, start=1):
        line = line.rstrip("\n")
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) not in (4, 5):
            raise EnsembleError(f"score log line {lineno}: expected 4 or 5 fields, got {len(parts)}")
        try:
            example_id = int(parts[0])
            split = parts[1]
            lp = float(parts[2])
            target_len = int(parts[3])
            hyp_lp = float(parts[4]) if len(parts) == 5 else None
        except ValueError as e:
            raise EnsembleError(f"score log line {lineno}: {e}") from None
        if split not in ("train", "heldout"):
            raise EnsembleError(f"score log line {lineno}: unknown split {split!r}")
        if lp > 0:
            raise EnsembleError(f"score log line {lineno}: positive log-probability {lp}")
        if hyp_lp is not None and hyp_lp > 0:
            raise EnsembleError(f"score log line {lineno}: positive hypothesis log-probability")
        logs.append(ScoreLog(seed, example_id, split, lp, target_len, hyp_lp))
    return logs


def _run_external_seed(command, matrix_row, tokenized, seed, workdir) -> list[ScoreLog]:
    train_path = workdir / f"train.{seed}.tsv"
    eval_path = workdir / f"eval.{seed}.tsv"
    out_path = workdir / f"scores.{seed}.tsv"
    write_scorer_input(train_path, [p for p, m in zip(tokenized, matrix_row) if m])
    write_scorer_input(eval_path, tokenized)
    cmd = list(command) + [
        "--train", str(train_path),
        "--eval", str(eval_path),
        "--out", str(out_path),
        "--seed", str(seed),
    ]
    proc = subprocess.run(cmd, capture_output=True, text=True)
    if proc.returncode != 0:
        raise EnsembleError(
            f"scorer failed for seed {seed} (exit {proc.returncode}): {proc.stderr.strip()}"
        )
    with open(out_path, encoding="utf-8") as f:
        return parse_score_log(f, seed)


def run_scorer(
    matrix: np.ndarray,
    tokenized: list[TokenizedPair],
    scorer,
    workdir: str | Path | None = None,
    max_workers: int = 1,
) -> list[ScoreLog]:
    """Score every (seed, example) cell of the membership matrix.

    ``scorer`` is a ToyScorer or an external command (string or argv list)
    honoring the contract ``cmd --train f --eval f --out f --seed k``.
    Output is sorted by (seed, example id) regardless of arrival order, and
    validated for cardinality, split consistency, and log-probability sign.
    """
    n_seeds, n_examples = matrix.shape
    if n_examples != len(tokenized):
        raise EnsembleError(
            f"membership matrix width {n_examples} != corpus size {len(tokenized)}"
        )
    id_to_col = {pair.pair_id: col for col, pair in enumerate(tokenized)}

    logs: list[ScoreLog] = []
    if isinstance(scorer, ToyScorer):
        for seed in range(n_seeds):
            row = matrix[seed]
            for col, pair in enumerate(tokenized):
                in_train = bool(row[col])
                lp, tlen = scorer.score(in_train, pair, seed)
                logs.append(
                    ScoreLog(
                        seed=seed,
                        example_id=pair.pair_id,
                        split="train" if in_train else "heldout",
                        mean_token_logprob=lp,
                        target_len=tlen,
                        hyp_mean_token_logprob=lp,  # no decoder: defaults to target
                    )
                )
    else:
        command = scorer.split() if isinstance(scorer, str) else list(scorer)
        with tempfile.TemporaryDirectory() as tmp:
            base = Path(workdir) if workdir is not None else Path(tmp)
            base.mkdir(parents=True, exist_ok=True)
            with ThreadPoolExecutor(max_workers=max(1, max_workers)) as pool:
                futures = [
                    pool.submit(_run_external_seed, command, matrix[seed], tokenized, seed, base)
                    for seed in range(n_seeds)
                ]
                for fut in futures:
                    logs.extend(fut.result())

    # validation: exactly one log per cell, split tags consistent
    seen = np.zeros((n_seeds, n_examples), dtype=np.int32)
    for log in logs:
        col = id_to_col.get(log.example_id)
        if col is None:
            raise EnsembleError(f"score log references unknown example id {log.example_id}")
        if log.seed < 0 or log.seed >= n_seeds:
            raise EnsembleError(f"score log references unknown seed {log.seed}")
        expected = "train" if matrix[log.seed, col] else "heldout"
        if log.split != expected:
            raise EnsembleError(
                f"seed {log.seed} example {log.example_id}: split {log.split!r} "
                f"contradicts membership ({expected})"
            )
        seen[log.seed, col] += 1
    if int(seen.sum()) != n_seeds * n_examples or np.any(seen != 1):
        gaps = [
            (int(s), tokenized[c].pair_id)
            for s, c in zip(*np.nonzero(seen != 1))
        ][:20]
        raise EnsembleError(f"scorer output incomplete or duplicated; first gaps: {gaps}")

    logs.sort(key=lambda r: (r.seed, r.example_id))
    return logs


def _matrix_hash(matrix: np.ndarray) -> str:
    return hashlib.sha256(np.packbits(matrix).tobytes()).hexdigest()


def write_membership_manifest(path: str | Path, matrix: np.ndarray, plan: SplitPlan) -> str:
    """One line per seed listing its train ids; trailing content hash."""
    digest = _matrix_hash(matrix)
    with open(path, "w", encoding="utf-8") as f:
        f.write("#memomap splits v1\n")
        f.write(
            f"#n={plan.n_examples}\tk={plan.n_seeds}\tmaster_seed={plan.master_seed}"
            f"\ttrain_fraction={plan.train_fraction}\n"
        )
        for seed in range(matrix.shape[0]):
            ids = np.nonzero(matrix[seed])[0]
            f.write(f"{seed}\t{' '.join(map(str, ids))}\n")
        f.write(f"#sha256={digest}\n")
    return digest


def read_membership_manifest(path: str | Path) -> tuple[np.ndarray, dict]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "#memomap splits v1":
        raise EnsembleError(f"{path}: not a membership manifest")
    meta = {}
    for field in lines[1].lstrip("#").split("\t"):
        key, value = field.split("=", 1)
        meta[key] = value
    n, k = int(meta["n"]), int(meta["k"])
    matrix = np.zeros((k, n), dtype=bool)
    for line in lines[2:]:
        if line.startswith("#sha256="):
            if line.split("=", 1)[1] != _matrix_hash(matrix):
                raise EnsembleError(f"{path}: content hash mismatch")
            return matrix, meta
        seed_str, _, ids_str = line.partition("\t")
        cols = [int(t) for t in ids_str.split()] if ids_str else []
        matrix[int(seed_str), cols] = True
    raise EnsembleError(f"{path}: missing content hash line (truncated?)")
