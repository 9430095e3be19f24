"""Parallel corpus loading, tokenization, filtering, and frequency tables."""

from __future__ import annotations

import hashlib
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass
from pathlib import Path

__all__ = [
    "SentencePair",
    "TokenizedPair",
    "FrequencyTable",
    "FilterResult",
    "CorpusError",
    "load_parallel",
    "corpus_hash",
    "tokenize_corpus",
    "split_punctuation",
    "is_punctuation_token",
    "is_digit_token",
    "content_words",
    "filter_corpus",
    "build_frequency_table",
    "write_rejection_report",
]

FILTER_CRITERIA = ("length_ratio", "punctuation_ratio", "word_overlap", "digit_mismatch")

_DIGIT_RE = re.compile(r"^[0-9]+([.,][0-9]+)?$")


class CorpusError(ValueError):
    """Raised for malformed corpus inputs (mismatched files, empty lines)."""


@dataclass(frozen=True)
class SentencePair:
    """One parallel example; ``id`` is the 0-based line number."""

    id: int
    source: str
    target: str


@dataclass(frozen=True)
class TokenizedPair:
    """Whitespace and BPE token views of one pair."""

    pair_id: int
    src_ws: tuple[str, ...]
    trg_ws: tuple[str, ...]
    src_bpe: tuple[str, ...]
    trg_bpe: tuple[str, ...]

    @property
    def target_len(self) -> int:
        return len(self.trg_bpe)


@dataclass
class FrequencyTable:
    """Exact token counts over one corpus side at one granularity."""

    side: str  # source | target
    granularity: str  # whitespace | bpe
    counts: dict[str, int]
    total: int

    def merge(self, other: "FrequencyTable") -> "FrequencyTable":
        """Combine with another shard; order-independent."""
        if (self.side, self.granularity) != (other.side, other.granularity):
            raise ValueError("cannot merge tables of different side/granularity")
        merged = Counter(self.counts)
        merged.update(other.counts)
        return FrequencyTable(self.side, self.granularity, dict(merged), self.total + other.total)


@dataclass
class FilterResult:
    kept_ids: list[int]
    rejections: dict[str, int]  # criterion -> number of pairs violating it


def load_parallel(source_file: str | Path, target_file: str | Path) -> list[SentencePair]:
    """Read line-aligned plain-text files into SentencePairs (NFC-normalized).

    Raises CorpusError on line-count mismatch or any line empty after trimming.
    """
    src_lines = Path(source_file).read_text(encoding="utf-8").splitlines()
    trg_lines = Path(target_file).read_text(encoding="utf-8").splitlines()
    if len(src_lines) != len(trg_lines):
        raise CorpusError(
            f"line count mismatch: {source_file} has {len(src_lines)} lines, "
            f"{target_file} has {len(trg_lines)}"
        )
    pairs = []
    for i, (src, trg) in enumerate(zip(src_lines, trg_lines)):
        src = unicodedata.normalize("NFC", src.strip())
        trg = unicodedata.normalize("NFC", trg.strip())
        if not src:
            raise CorpusError(f"empty source line at line {i + 1}")
        if not trg:
            raise CorpusError(f"empty target line at line {i + 1}")
        pairs.append(SentencePair(id=i, source=src, target=trg))
    return pairs


def corpus_hash(pairs: list[SentencePair]) -> str:
    """Content hash of a corpus, stable across processes."""
    h = hashlib.sha256()
    for p in pairs:
        h.update(p.source.encode("utf-8"))
        h.update(b"\t")
        h.update(p.target.encode("utf-8"))
        h.update(b"\n")
    return h.hexdigest()


def is_punctuation_token(token: str) -> bool:
    """True if every character has a Unicode P* general category."""
    return bool(token) and all(unicodedata.category(ch).startswith("P") for ch in token)


def is_digit_token(token: str) -> bool:
    """True for plain integers and [.,]-separated decimals."""
    return bool(_DIGIT_RE.match(token))


def split_punctuation(text: str) -> str:
    """Plain normalizer: put spaces around punctuation characters."""
    out = []
    for ch in text:
        if unicodedata.category(ch).startswith("P"):
            out.append(f" {ch} ")
        else:
            out.append(ch)
    return " ".join("".join(out).split())


def content_words(tokens: tuple[str, ...]) -> list[str]:
    """Lowercase-folded tokens with punctuation tokens dropped."""
    return [t.lower() for t in tokens if not is_punctuation_token(t)]


def tokenize_corpus(
    pairs: list[SentencePair],
    bpe_model=None,
    split_punct: bool = False,
) -> list[TokenizedPair]:
    """Whitespace-tokenize pairs and attach BPE views.

    Without a model the BPE view equals the whitespace view (identity
    segmentation). ``split_punct`` applies the plain punctuation splitter
    before tokenizing.
    """
    out = []
    for p in pairs:
        src_text = split_punctuation(p.source) if split_punct else p.source
        trg_text = split_punctuation(p.target) if split_punct else p.target
        src_ws = tuple(src_text.split())
        trg_ws = tuple(trg_text.split())
        if bpe_model is not None:
            src_bpe = tuple(bpe_model.apply(src_ws))
            trg_bpe = tuple(bpe_model.apply(trg_ws))
        else:
            src_bpe, trg_bpe = src_ws, trg_ws
        out.append(TokenizedPair(p.id, src_ws, trg_ws, src_bpe, trg_bpe))
    return out


def _punct_ratio(tokens: tuple[str, ...]) -> float:
    if not tokens:
        return 0.0
    return sum(1 for t in tokens if is_punctuation_token(t)) / len(tokens)


def _passes_length_ratio(pair: TokenizedPair) -> bool:
    ns, nt = len(pair.src_ws), len(pair.trg_ws)
    # 2/3 <= ns/nt <= 3/2, in integer arithmetic
    return 2 * nt <= 3 * ns and 2 * ns <= 3 * nt


def _passes_punctuation(pair: TokenizedPair) -> bool:
    return _punct_ratio(pair.src_ws) < 0.5 and _punct_ratio(pair.trg_ws) < 0.5


def _passes_word_overlap(pair: TokenizedPair) -> bool:
    src_words = content_words(pair.src_ws)
    if not src_words:
        return True
    trg_words = set(content_words(pair.trg_ws))
    overlap = sum(1 for w in src_words if w in trg_words) / len(src_words)
    return overlap < 0.30


def _passes_digits(pair: TokenizedPair) -> bool:
    trg_digits = {t for t in pair.trg_ws if is_digit_token(t)}
    if not trg_digits:
        return True
    src_digits = {t for t in pair.src_ws if is_digit_token(t)}
    return len(trg_digits & src_digits) / len(trg_digits) > 0.90


_CRITERION_FNS = {
    "length_ratio": _passes_length_ratio,
    "punctuation_ratio": _passes_punctuation,
    "word_overlap": _passes_word_overlap,
    "digit_mismatch": _passes_digits,
}


def filter_corpus(tokenized: list[TokenizedPair]) -> FilterResult:
    """Apply the four quality criteria; a pair is kept iff it passes all.

    Rejection counts are per criterion, so one pair can count against
    several. Idempotent: criteria are pure per-pair predicates.
    """
    kept = []
    rejections = {name: 0 for name in FILTER_CRITERIA}
    for pair in tokenized:
        ok = True
        for name, fn in _CRITERION_FNS.items():
            if not fn(pair):
                rejections[name] += 1
                ok = False
        if ok:
            kept.append(pair.pair_id)
    return FilterResult(kept_ids=kept, rejections=rejections)


def build_frequency_table(
    tokenized: list[TokenizedPair], side: str, granularity: str
) -> FrequencyTable:
    """Count tokens on one side at one granularity over the full corpus."""
    if side not in ("source", "target"):
        raise ValueError(f"unknown side: {side!r}")
    if granularity not in ("whitespace", "bpe"):
        raise ValueError(f"unknown granularity: {granularity!r}")
    counts: Counter = Counter()
    for pair in tokenized:
        if side == "source":
            tokens = pair.src_ws if granularity == "whitespace" else pair.src_bpe
        else:
            tokens = pair.trg_ws if granularity == "whitespace" else pair.trg_bpe
        counts.update(t for t in tokens if t)
    return FrequencyTable(side, granularity, dict(counts), sum(counts.values()))


def write_rejection_report(path: str | Path, result: FilterResult) -> None:
    """TSV of (criterion, count) rows."""
    lines = ["criterion\tcount"]
    for name in FILTER_CRITERIA:
        lines.append(f"{name}\t{result.rejections[name]}")
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")
