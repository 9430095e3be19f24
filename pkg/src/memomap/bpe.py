"""Byte-pair-encoding subword model: greedy merge learning and application.

The continuation marker is ``@@`` on non-final pieces, so joining pieces and
stripping markers reproduces the original text exactly. Input tokens must not
themselves contain the marker.
"""

from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable

__all__ = ["BpeModel", "bpe_learn", "bpe_apply", "bpe_detokenize", "save_merges", "load_merges"]

MARKER = "@@"


@dataclass(frozen=True)
class BpeModel:
    """Ordered merge rules; list order is learning order (= priority)."""

    merges: tuple[tuple[str, str], ...]
    vocab_size_target: int = 0
    _ranks: dict = field(default_factory=dict, repr=False, compare=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        self._ranks.update({pair: i for i, pair in enumerate(self.merges)})

    def segment_word(self, word: str) -> tuple[str, ...]:
        """Split one whitespace token into subword pieces (no markers)."""
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        pieces = _merge_word(tuple(word), self._ranks)
        self._cache[word] = pieces
        return pieces

    def apply(self, tokens: Iterable[str]) -> list[str]:
        return bpe_apply(self, tokens)


def _merge_word(pieces: tuple[str, ...], ranks: dict) -> tuple[str, ...]:
    # Repeatedly apply the highest-priority applicable merge to all its
    # occurrences, left to right. Deterministic for a fixed merge list.
    pieces = list(pieces)
    while len(pieces) > 1:
        best_rank = None
        best_pair = None
        for a, b in zip(pieces, pieces[1:]):
            r = ranks.get((a, b))
            if r is not None and (best_rank is None or r < best_rank):
                best_rank = r
                best_pair = (a, b)
        if best_pair is None:
            break
        merged = []
        i = 0
        while i < len(pieces):
            if i < len(pieces) - 1 and (pieces[i], pieces[i + 1]) == best_pair:
                merged.append(pieces[i] + pieces[i + 1])
                i += 2
            else:
                merged.append(pieces[i])
                i += 1
        pieces = merged
    return tuple(pieces)


def _word_pairs(pieces: tuple[str, ...]) -> Counter:
    return Counter(zip(pieces, pieces[1:]))


def bpe_learn(corpus: Iterable[Iterable[str]], vocab_size: int) -> BpeModel:
    """Learn merges by greedy highest-frequency pair merging.

    Stops when the vocabulary (base characters + merged symbols) reaches
    ``vocab_size`` or no pair occurs twice. Ties break to the
    lexicographically smallest pair.
    """
    word_freq: Counter = Counter()
    for tokens in corpus:
        word_freq.update(tokens)
    if not word_freq:
        raise ValueError("cannot learn BPE from an empty corpus")

    words = {w: tuple(w) for w in word_freq}
    base_chars = {ch for w in word_freq for ch in w}
    if vocab_size < len(base_chars):
        raise ValueError(
            f"vocab_size {vocab_size} is below the base character inventory ({len(base_chars)})"
        )
    budget = vocab_size - len(base_chars)

    # pair statistics plus an index of which words contain each pair,
    # updated incrementally so each merge only touches affected words
    stats: Counter = Counter()
    index: defaultdict = defaultdict(set)
    for w, pieces in words.items():
        f = word_freq[w]
        for pair, c in _word_pairs(pieces).items():
            stats[pair] += c * f
            index[pair].add(w)

    merges: list[tuple[str, str]] = []
    while len(merges) < budget and stats:
        best_count = max(stats.values())
        if best_count < 2:
            break
        best_pair = min(p for p, c in stats.items() if c == best_count)
        merges.append(best_pair)
        ranks = {best_pair: 0}
        for w in list(index[best_pair]):
            f = word_freq[w]
            old_pieces = words[w]
            new_pieces = _merge_word(old_pieces, ranks)
            for pair, c in _word_pairs(old_pieces).items():
                stats[pair] -= c * f
                if stats[pair] <= 0:
                    del stats[pair]
                index[pair].discard(w)
            for pair, c in _word_pairs(new_pieces).items():
                stats[pair] += c * f
                index[pair].add(w)
            words[w] = new_pieces

    return BpeModel(merges=tuple(merges), vocab_size_target=vocab_size)


def bpe_apply(model: BpeModel, tokens: Iterable[str]) -> list[str]:
    """Segment whitespace tokens into marked BPE tokens."""
    out = []
    for token in tokens:
        pieces = model.segment_word(token)
        for piece in pieces[:-1]:
            out.append(piece + MARKER)
        out.append(pieces[-1])
    return out


def bpe_detokenize(bpe_tokens: Iterable[str]) -> list[str]:
    """Invert bpe_apply: glue marked pieces back into whitespace tokens."""
    words = []
    current: list[str] = []
    for piece in bpe_tokens:
        if piece.endswith(MARKER):
            current.append(piece[: -len(MARKER)])
        else:
            current.append(piece)
            words.append("".join(current))
            current = []
    if current:  # dangling continuation piece; keep whatever we have
        words.append("".join(current))
    return words


def save_merges(model: BpeModel, path: str | Path) -> None:
    """One 'left right' pair per line; line order is merge priority."""
    lines = [f"{a} {b}" for a, b in model.merges]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_merges(path: str | Path, vocab_size_target: int = 0) -> BpeModel:
    merges = []
    for i, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines()):
        if not line.strip():
            continue
        parts = line.split(" ")
        if len(parts) != 2:
            raise ValueError(f"{path}:{i + 1}: malformed merge line {line!r}")
        merges.append((parts[0], parts[1]))
    return BpeModel(merges=tuple(merges), vocab_size_target=vocab_size_target)
