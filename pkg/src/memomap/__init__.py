"""Memorisation-generalisation cartography for parallel MT corpora."""

__version__ = "0.1.0"

from .corpus import SentencePair, TokenizedPair, load_parallel, tokenize_corpus  # noqa: F401
from .metrics import MemorisationRecord, sentence_bleu  # noqa: F401
from .cartography import MemorisationMap, grid_coordinates  # noqa: F401
