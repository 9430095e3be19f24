import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from memomap.align import AlignmentLinks
from memomap.corpus import TokenizedPair, build_frequency_table
from memomap.features import (
    FEATURE_NAMES,
    build_repetition_index,
    edit_distance,
    extract_features,
    extract_features_corpus,
    fuzzy_reordering,
    overlap_features,
)

LN2 = math.log(2)


def test_feature_header_is_stable():
    # golden column order; changing it breaks every serialized artifact
    assert FEATURE_NAMES == (
        "src_len_ws", "src_len_bpe", "trg_len_ws", "trg_len_bpe",
        "len_ratio_ws", "len_ratio_bpe",
        "avg_logfreq_src_ws", "avg_logfreq_src_bpe",
        "avg_logfreq_trg_ws", "avg_logfreq_trg_bpe",
        "min_logfreq_src_ws", "min_logfreq_src_bpe",
        "min_logfreq_trg_ws", "min_logfreq_trg_bpe",
        "target_repetitions", "segmentation_src", "segmentation_trg",
        "digit_ratio", "punct_ratio",
        "edit_distance", "backtranslation_edit_distance",
        "len_diff_ws", "len_diff_bpe",
        "unaligned_src_ratio", "unaligned_trg_ratio",
        "fuzzy_reordering_score", "token_overlap", "word_overlap",
    )
    assert len(FEATURE_NAMES) == 28


# Three hand-crafted pairs with explicit BPE views; every expected value
# below is hand-computed from the corpus counts.
PAIR_A = TokenizedPair(
    0,
    src_ws=("the", "cat", "sat"),
    trg_ws=("le", "chat", "assis"),
    src_bpe=("the", "c@@", "at", "s@@", "at"),
    trg_bpe=("le", "chat", "as@@", "sis"),
)
PAIR_B = TokenizedPair(
    1,
    src_ws=("a", "dog"),
    trg_ws=("un", "dog"),
    src_bpe=("a", "dog"),
    trg_bpe=("un", "dog"),
)
PAIR_C = TokenizedPair(
    2,
    src_ws=("the", "dog", "ran", "!", "9"),
    trg_ws=("le", "chien", "courait"),
    src_bpe=("the", "dog", "ran", "!", "9"),
    trg_bpe=("le", "chien", "cour@@", "ait"),
)
CORPUS = [PAIR_A, PAIR_B, PAIR_C]
ALIGNMENTS = {
    0: AlignmentLinks(0, frozenset({(0, 0), (1, 1), (2, 2)})),  # monotone
    1: AlignmentLinks(1, frozenset({(0, 1), (1, 0)})),  # reversed
    2: AlignmentLinks(2, frozenset({(0, 0), (1, 1)})),
}
BACKTRANSLATIONS = [
    ["the", "cat", "sat"],
    ["a", "cat"],
    ["the", "dog", "ran", "!", "9"],
]

GOLDEN = {
    0: {
        "src_len_ws": 3, "src_len_bpe": 5, "trg_len_ws": 3, "trg_len_bpe": 4,
        "len_ratio_ws": 1.0, "len_ratio_bpe": 5 / 4,
        "avg_logfreq_src_ws": LN2 / 3,      # the:2 cat:1 sat:1
        "avg_logfreq_src_bpe": 3 * LN2 / 5,  # the:2 c@@:1 at:2 s@@:1 at:2
        "avg_logfreq_trg_ws": LN2 / 3,      # le:2 chat:1 assis:1
        "avg_logfreq_trg_bpe": LN2 / 4,     # le:2 chat:1 as@@:1 sis:1
        "min_logfreq_src_ws": 0.0, "min_logfreq_src_bpe": 0.0,
        "min_logfreq_trg_ws": 0.0, "min_logfreq_trg_bpe": 0.0,
        "target_repetitions": 1, "segmentation_src": 1 - 3 / 5,
        "segmentation_trg": 1 - 3 / 4, "digit_ratio": 0.0, "punct_ratio": 0.0,
        "edit_distance": 3, "backtranslation_edit_distance": 0,
        "len_diff_ws": 0, "len_diff_bpe": 1,
        "unaligned_src_ratio": 0.0, "unaligned_trg_ratio": 0.0,
        "fuzzy_reordering_score": 1.0, "token_overlap": 0.0, "word_overlap": 0.0,
    },
    1: {
        "src_len_ws": 2, "src_len_bpe": 2, "trg_len_ws": 2, "trg_len_bpe": 2,
        "len_ratio_ws": 1.0, "len_ratio_bpe": 1.0,
        "avg_logfreq_src_ws": LN2 / 2,      # a:1 dog:2
        "avg_logfreq_src_bpe": LN2 / 2,
        "avg_logfreq_trg_ws": 0.0,          # un:1 dog:1
        "avg_logfreq_trg_bpe": 0.0,
        "min_logfreq_src_ws": 0.0, "min_logfreq_src_bpe": 0.0,
        "min_logfreq_trg_ws": 0.0, "min_logfreq_trg_bpe": 0.0,
        "target_repetitions": 1, "segmentation_src": 0.0, "segmentation_trg": 0.0,
        "digit_ratio": 0.0, "punct_ratio": 0.0,
        "edit_distance": 1, "backtranslation_edit_distance": 1,
        "len_diff_ws": 0, "len_diff_bpe": 0,
        "unaligned_src_ratio": 0.0, "unaligned_trg_ratio": 0.0,
        "fuzzy_reordering_score": 0.0, "token_overlap": 1 / 2, "word_overlap": 1 / 2,
    },
    2: {
        "src_len_ws": 5, "src_len_bpe": 5, "trg_len_ws": 3, "trg_len_bpe": 4,
        "len_ratio_ws": 5 / 3, "len_ratio_bpe": 5 / 4,
        "avg_logfreq_src_ws": 2 * LN2 / 5,  # the:2 dog:2 ran:1 !:1 9:1
        "avg_logfreq_src_bpe": 2 * LN2 / 5,
        "avg_logfreq_trg_ws": LN2 / 3,      # le:2 chien:1 courait:1
        "avg_logfreq_trg_bpe": LN2 / 4,     # le:2 chien:1 cour@@:1 ait:1
        "min_logfreq_src_ws": 0.0, "min_logfreq_src_bpe": 0.0,
        "min_logfreq_trg_ws": 0.0, "min_logfreq_trg_bpe": 0.0,
        "target_repetitions": 1, "segmentation_src": 0.0, "segmentation_trg": 1 - 3 / 4,
        "digit_ratio": 1 / 5, "punct_ratio": 1 / 5,
        "edit_distance": 5, "backtranslation_edit_distance": 0,
        "len_diff_ws": 2, "len_diff_bpe": 1,
        "unaligned_src_ratio": 3 / 5, "unaligned_trg_ratio": 1 / 3,
        "fuzzy_reordering_score": 1.0, "token_overlap": 0.0, "word_overlap": 0.0,
    },
}


def test_golden_vectors_match_hand_computation():
    vectors = extract_features_corpus(
        CORPUS, alignments=ALIGNMENTS, backtranslations=BACKTRANSLATIONS
    )
    for fv in vectors:
        expected = GOLDEN[fv.pair_id]
        assert not fv.partial
        for name in FEATURE_NAMES:
            assert fv[name] == pytest.approx(expected[name], abs=1e-12), (
                f"pair {fv.pair_id}, feature {name}"
            )


class TestNullHandling:
    def test_missing_alignment_and_backtranslation(self):
        tables = {
            (side, gran): build_frequency_table(CORPUS, side, gran)
            for side in ("source", "target")
            for gran in ("whitespace", "bpe")
        }
        fv = extract_features(PAIR_A, tables, None, None, build_repetition_index(CORPUS))
        assert fv.partial
        assert math.isnan(fv["unaligned_src_ratio"])
        assert math.isnan(fv["fuzzy_reordering_score"])
        assert math.isnan(fv["backtranslation_edit_distance"])
        assert not math.isnan(fv["edit_distance"])

    def test_min_logfreq_picks_rarest_count(self):
        from memomap.corpus import FrequencyTable

        tables = {
            (side, gran): build_frequency_table(CORPUS, side, gran)
            for side in ("source", "target")
            for gran in ("whitespace", "bpe")
        }
        tables[("target", "whitespace")] = FrequencyTable(
            "target", "whitespace", {"the": 1000, "zyx": 2}, 1002
        )
        pair = TokenizedPair(5, ("x",), ("the", "zyx"), ("x",), ("the", "zyx"))
        fv = extract_features(pair, tables, None, None, {})
        assert fv["min_logfreq_trg_ws"] == pytest.approx(math.log(2))
        assert fv["avg_logfreq_trg_ws"] == pytest.approx((math.log(1000) + math.log(2)) / 2)

    def test_unseen_token_logfreq_is_zero(self):
        tables = {
            (side, gran): build_frequency_table(CORPUS, side, gran)
            for side in ("source", "target")
            for gran in ("whitespace", "bpe")
        }
        new_pair = TokenizedPair(9, ("unseen",), ("nouveau",), ("unseen",), ("nouveau",))
        fv = extract_features(new_pair, tables, None, None, {})
        assert fv["min_logfreq_src_ws"] == 0.0
        assert fv["target_repetitions"] == 0.0

    def test_backtranslation_length_mismatch(self):
        with pytest.raises(ValueError, match="backtranslation"):
            extract_features_corpus(CORPUS, backtranslations=[["a"]])


class TestEditDistance:
    def test_examples(self):
        assert edit_distance("a b c".split(), "a b c".split()) == 0
        assert edit_distance("a b c".split(), "a x c".split()) == 1
        assert edit_distance(["a"], "b c".split()) == 2

    def test_symmetry_and_triangle_random(self):
        rng = np.random.default_rng(3)
        vocab = ["u", "v", "w", "x"]
        for _ in range(1000):
            a, b, c = (
                [vocab[i] for i in rng.integers(0, 4, size=rng.integers(0, 8))] for _ in range(3)
            )
            dab = edit_distance(a, b)
            assert dab == edit_distance(b, a)
            assert dab <= edit_distance(a, c) + edit_distance(c, b)


@settings(max_examples=50, deadline=None)
@given(st.lists(st.sampled_from("pqrs"), max_size=10), st.lists(st.sampled_from("pqrs"), max_size=10))
def test_edit_distance_bounds_property(a, b):
    d = edit_distance(a, b)
    assert abs(len(a) - len(b)) <= d <= max(len(a), len(b))
    assert (d == 0) == (a == b)


class TestFuzzyReordering:
    def _links(self, pairs):
        return AlignmentLinks(0, frozenset(pairs))

    def test_monotone_is_one(self):
        assert fuzzy_reordering(self._links({(i, i) for i in range(4)}), 4) == 1.0

    def test_reversed_is_zero(self):
        assert fuzzy_reordering(self._links({(3 - j, j) for j in range(4)}), 4) == 0.0

    def test_single_swap(self):
        # sigma = [0, 1, 3, 2]: chunks [0,1], [3], [2] -> 1 - 2/3
        links = {(0, 0), (1, 1), (3, 2), (2, 3)}
        assert fuzzy_reordering(self._links(links), 4) == pytest.approx(1 / 3)

    def test_short_sigma_is_one(self):
        assert fuzzy_reordering(self._links(set()), 5) == 1.0
        assert fuzzy_reordering(self._links({(2, 1)}), 5) == 1.0

    def test_unaligned_tokens_do_not_change_score(self):
        base = {(0, 0), (1, 1), (3, 2), (2, 3)}
        assert fuzzy_reordering(self._links(base), 4) == fuzzy_reordering(self._links(base), 9)

    def test_multi_link_ascending(self):
        # target token 0 aligned to sources 1 and 0: contributes [0, 1]
        links = {(1, 0), (0, 0), (2, 1)}
        assert fuzzy_reordering(self._links(links), 2) == 1.0


class TestOverlap:
    def test_disjoint_and_identical(self):
        disjoint = TokenizedPair(0, ("a", "b"), ("x", "y"), ("a", "b"), ("x", "y"))
        assert overlap_features(disjoint) == (0.0, 0.0)
        same = TokenizedPair(0, ("a", "b", "a"), ("a", "b", "a"), ("a", "b", "a"), ("a", "b", "a"))
        assert overlap_features(same) == (1.0, 1.0)

    def test_token_overlap_positional(self):
        pair = TokenizedPair(0, ("a", "b", "c"), ("c", "d"), ("a", "b", "c"), ("c", "d"))
        token_ov, _ = overlap_features(pair)
        assert token_ov == pytest.approx(1 / 3)

    def test_all_punct_source_word_overlap_nan(self):
        pair = TokenizedPair(0, ("!", "?"), ("a",), ("!", "?"), ("a",))
        token_ov, word_ov = overlap_features(pair)
        assert math.isnan(word_ov)

    def test_word_overlap_case_folded_excludes_punct(self):
        pair = TokenizedPair(0, ("The", "!", "Dog"), ("the", "dog", "."), ("x",), ("y",))
        _, word_ov = overlap_features(pair)
        assert word_ov == 1.0
