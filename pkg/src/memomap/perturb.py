"""Single-token insertion perturbations and hallucination judging.

A source hallucinates if some insertion drives the translation's sentence
BLEU against the reference below the gate (default 1.0). Translating the
perturbed sources is external; this module emits the manifest and judges
ingested translations.
"""

from __future__ import annotations

import hashlib
import warnings
from dataclasses import dataclass
from pathlib import Path
from typing import Mapping, Sequence

from .corpus import FrequencyTable, is_punctuation_token
from .metrics import sentence_bleu

__all__ = [
    "PerturbationSet",
    "HallucinationReport",
    "PerturbError",
    "build_insertion_vocab",
    "insertion_positions",
    "perturb_sources",
    "judge_hallucinations",
    "write_perturbation_manifest",
    "read_perturbation_manifest",
]


class PerturbError(ValueError):
    pass


@dataclass
class PerturbationSet:
    """All single-token insertions for one source sentence."""

    base_id: int
    insertions: list[tuple[str, int]]  # (token, position)
    perturbed: list[tuple[str, ...]]  # token sequences, parallel to insertions


@dataclass
class HallucinationReport:
    flagged: dict[int, bool]  # evaluated sources only
    triggers: dict[int, list[tuple[str, int, float]]]  # (token, position, bleu)
    evaluated_ids: list[int]
    excluded_ids: list[int]  # failed the unperturbed-BLEU gate
    ratio: float


def build_insertion_vocab(
    table: FrequencyTable, sizes: tuple[int, int, int] = (100, 100, 100)
) -> list[str]:
    """High-, mid-, and low-frequency token slices plus punctuation marks.

    Tokens are ranked by descending count (ties alphabetical); the three
    slices take the top ranks, a block centered on the median rank, and the
    bottom ranks. All single-character punctuation tokens present in the
    table are added. Result is deduplicated and sorted (deterministic).
    """
    ranked = sorted(table.counts, key=lambda t: (-table.counts[t], t))
    n = len(ranked)
    want = sum(sizes)
    if n < want:
        scale = n / want
        sizes = tuple(max(1, int(s * scale)) for s in sizes)  # type: ignore[assignment]
        warnings.warn(
            f"vocabulary has {n} tokens < {want}; shrinking slices to {sizes}", stacklevel=2
        )
    top, mid, low = sizes
    picked = set(ranked[:top])
    mid_start = max(0, n // 2 - mid // 2)
    picked.update(ranked[mid_start : mid_start + mid])
    picked.update(ranked[max(0, n - low) :])
    picked.update(t for t in ranked if len(t) == 1 and is_punctuation_token(t))
    return sorted(picked)


def insertion_positions(length: int, positions: int = 4) -> list[int]:
    """Evenly spread insertion indices over 0..length, clipped and deduplicated."""
    if positions < 1:
        raise PerturbError("need at least one insertion position")
    if positions == 1:
        return [0]
    raw = {min(length, (m * length) // (positions - 1)) for m in range(positions)}
    return sorted(raw)


def perturb_sources(
    sources: Mapping[int, Sequence[str]], vocab: Sequence[str], positions: int = 4
) -> list[PerturbationSet]:
    """One perturbed copy per (token, position) for every source.

    Each perturbed sentence is the source with a single token inserted, so
    its length is the base length + 1.
    """
    out = []
    for base_id in sorted(sources):
        tokens = list(sources[base_id])
        if not tokens:
            raise PerturbError(f"source {base_id} is empty")
        pos_list = insertion_positions(len(tokens), positions)
        insertions: list[tuple[str, int]] = []
        perturbed: list[tuple[str, ...]] = []
        for token in vocab:
            for pos in pos_list:
                insertions.append((token, pos))
                perturbed.append(tuple(tokens[:pos] + [token] + tokens[pos:]))
        out.append(PerturbationSet(base_id=base_id, insertions=insertions, perturbed=perturbed))
    return out


def _manifest_rows(sets: Sequence[PerturbationSet]):
    row_id = 0
    for pset in sets:
        for (token, pos), tokens in zip(pset.insertions, pset.perturbed):
            yield row_id, pset.base_id, token, pos, tokens
            row_id += 1


def write_perturbation_manifest(path: str | Path, sets: Sequence[PerturbationSet]) -> str:
    """TSV of (row_id, base_id, token, position, perturbed text); returns the
    content hash, which covers vocab, positions, and sources."""
    lines = ["#memomap perturbations v1", "#columns=row_id\tbase_id\ttoken\tposition\ttext"]
    for row_id, base_id, token, pos, tokens in _manifest_rows(sets):
        lines.append(f"{row_id}\t{base_id}\t{token}\t{pos}\t{' '.join(tokens)}")
    body = "\n".join(lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    Path(path).write_text(body + f"#sha256={digest}\n", encoding="utf-8")
    return digest


def read_perturbation_manifest(path: str | Path) -> list[tuple[int, int, str, int, tuple[str, ...]]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "#memomap perturbations v1":
        raise PerturbError(f"{path}: not a perturbation manifest")
    if not lines[-1].startswith("#sha256="):
        raise PerturbError(f"{path}: missing content hash")
    body = "\n".join(lines[:-1]) + "\n"
    if hashlib.sha256(body.encode()).hexdigest() != lines[-1].split("=", 1)[1]:
        raise PerturbError(f"{path}: content hash mismatch")
    rows = []
    for line in lines[2:-1]:
        parts = line.split("\t")
        if len(parts) != 5:
            raise PerturbError(f"{path}: malformed manifest row {line!r}")
        rows.append((int(parts[0]), int(parts[1]), parts[2], int(parts[3]), tuple(parts[4].split())))
    return rows


def judge_hallucinations(
    manifest: Sequence[tuple[int, int, str, int, tuple[str, ...]]],
    translations: Sequence[Sequence[str]],
    references: Mapping[int, Sequence[str]],
    baseline_translations: Mapping[int, Sequence[str]] | None = None,
    gate_bleu: float = 1.0,
    gate: bool = True,
    against_hypothesis: bool = False,
) -> HallucinationReport:
    """Judge ingested translations of perturbed sources.

    A perturbation hallucinates iff its translation scores below
    ``gate_bleu`` sentence BLEU against the reference (or, with
    ``against_hypothesis``, against the source's own unperturbed
    translation). A source is flagged if any of its perturbations
    hallucinate; with the gate on, sources whose unperturbed translation
    already scores below the gate against the reference are excluded from
    the ratio entirely (pass gate=False for the literal ungated reading).
    """
    if len(translations) != len(manifest):
        missing = range(len(translations), len(manifest))
        raise PerturbError(
            f"{len(translations)} translations for {len(manifest)} manifest rows; "
            f"missing rows {list(missing)[:10]}"
        )
    if (gate or against_hypothesis) and baseline_translations is None:
        raise PerturbError("gating or hypothesis judging requires baseline translations")

    base_ids = sorted({base_id for _, base_id, _, _, _ in manifest})
    excluded: list[int] = []
    evaluated: list[int] = []
    for base_id in base_ids:
        if base_id not in references:
            raise PerturbError(f"no reference for source {base_id}")
        if against_hypothesis and base_id not in baseline_translations:
            raise PerturbError(f"no baseline translation for source {base_id}")
        if gate:
            baseline = baseline_translations.get(base_id)
            if baseline is None:
                raise PerturbError(f"no baseline translation for source {base_id}")
            if sentence_bleu(baseline, references[base_id]) < gate_bleu:
                excluded.append(base_id)
                continue
        evaluated.append(base_id)

    evaluated_set = set(evaluated)
    flagged = {base_id: False for base_id in evaluated}
    triggers: dict[int, list[tuple[str, int, float]]] = {base_id: [] for base_id in evaluated}
    for (row_id, base_id, token, pos, _), translation in zip(manifest, translations):
        if base_id not in evaluated_set:
            continue
        judge_against = (
            baseline_translations[base_id] if against_hypothesis else references[base_id]
        )
        bleu = sentence_bleu(translation, judge_against)
        if bleu < gate_bleu:
            flagged[base_id] = True
            triggers[base_id].append((token, pos, bleu))

    ratio = sum(flagged.values()) / len(evaluated) if evaluated else 0.0
    return HallucinationReport(
        flagged=flagged,
        triggers=triggers,
        evaluated_ids=evaluated,
        excluded_ids=excluded,
        ratio=ratio,
    )
