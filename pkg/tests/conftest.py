import numpy as np
import pytest

from memomap.cartography import MemorisationMap
from memomap.corpus import SentencePair, tokenize_corpus


def make_pairs(n, rng=None, rare_fraction=0.0):
    """Synthetic parallel corpus with unique targets.

    ``rare_fraction`` of the targets carry a one-off rare token; the rest
    reuse a small common vocabulary, giving the frequency features signal.
    """
    rng = rng or np.random.default_rng(0)
    common = [f"w{i}" for i in range(12)]
    pairs = []
    for i in range(n):
        length = int(rng.integers(3, 9))
        src = " ".join(rng.choice(common, size=length)) + f" s{i}"
        trg_tokens = list(rng.choice(common, size=length))
        if rare_fraction and rng.random() < rare_fraction:
            trg_tokens.append(f"rare{i}")
        trg = " ".join(trg_tokens) + f" t{i}"
        pairs.append(SentencePair(id=i, source=src, target=trg))
    return pairs


def make_map(n=50, seed=0, with_features=False):
    """Small synthetic map with tm >= gs and the cm identity holding."""
    rng = np.random.default_rng(seed)
    tm = rng.uniform(0.05, 1.0, size=n)
    gs = tm * rng.uniform(0.0, 1.0, size=n)
    cm = np.maximum(0.0, tm - gs)
    features = None
    if with_features:
        from memomap.features import N_FEATURES

        features = rng.uniform(0.0, 10.0, size=(n, N_FEATURES))
        features[:, 0] = rng.integers(3, 12, size=n)  # src_len_ws: token counts
    return MemorisationMap(
        ids=np.arange(n, dtype=np.int64),
        tm=tm,
        gs=gs,
        cm=cm,
        n_train=np.full(n, 4, dtype=np.int32),
        n_heldout=np.full(n, 4, dtype=np.int32),
        variant="ll",
        k=8,
        corpus_hash="test",
        features=features,
    )


@pytest.fixture
def tiny_tokenized():
    pairs = [
        SentencePair(0, "the cat sat", "le chat assis"),
        SentencePair(1, "a dog", "un chien"),
        SentencePair(2, "the dog ran fast", "le chien courait vite"),
    ]
    return tokenize_corpus(pairs)
