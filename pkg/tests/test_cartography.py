import numpy as np
import pytest
from scipy import stats

from conftest import make_map
from memomap.cartography import (
    CartographyError,
    GridCoordinate,
    MemorisationMap,
    PerformanceRecord,
    RemovalSet,
    assemble_map,
    assign_regions,
    compare_maps,
    correlation_table,
    grid_coordinates,
    group_centroids,
    nearest_removal_set,
    probability_buckets,
    read_manifest,
    read_performance_records,
    region_relevance,
    specialised_sample,
    trace_cm_of_examples,
    trigram_uniqueness,
    write_manifest,
    write_performance_records,
)
from memomap.metrics import MemorisationRecord

rng = np.random.default_rng(21)


class TestGrid:
    def test_55_coordinates(self):
        grid = grid_coordinates(0.1)
        assert len(grid) == 55
        assert all(c.j <= c.i for c in grid)
        assert len(set(grid)) == 55

    def test_step_half(self):
        grid = grid_coordinates(0.5)
        assert {(c.i, c.j) for c in grid} == {(0.5, 0.5), (1.0, 0.5), (1.0, 1.0)}

    def test_bad_step(self):
        with pytest.raises(CartographyError):
            grid_coordinates(0.3)


class TestAssembleMap:
    def test_records_and_invalid(self):
        records = {
            0: MemorisationRecord(0, 0.8, 0.3, 0.5, n_train_models=2, n_heldout_models=2),
            2: MemorisationRecord(2, 0.4, 0.4, 0.0, n_train_models=3, n_heldout_models=1),
        }
        invalid = {1: "empty train model set"}
        map_ = assemble_map(records, invalid, n_examples=3, variant="ll", k=4)
        assert map_.valid_mask.tolist() == [True, False, True]
        assert map_.tm[0] == 0.8
        assert "invalid_train_side" in map_.flags[1]

    def test_missing_example_errors(self):
        records = {0: MemorisationRecord(0, 0.8, 0.3, 0.5, n_train_models=1, n_heldout_models=1)}
        with pytest.raises(CartographyError, match="without record"):
            assemble_map(records, {}, n_examples=2)

    def test_foreign_signal_ids_rejected(self):
        from memomap.signals import EpochSeries, extract_signals

        records = {0: MemorisationRecord(0, 0.8, 0.3, 0.5, n_train_models=1, n_heldout_models=1)}
        sig = extract_signals(EpochSeries(9, (0.2, 0.4)))
        with pytest.raises(CartographyError, match="unknown example id 9"):
            assemble_map(records, {}, n_examples=1, signals={9: sig})


class TestRegionAssignment:
    def test_partition_and_tie_break(self):
        grid = grid_coordinates(0.1)
        map_ = make_map(300, seed=1)
        assignment = assign_regions(map_, grid)
        valid_rows = np.nonzero(map_.valid_mask)[0]
        assert np.all(assignment[valid_rows] >= 0)
        # exact midpoint between (0.1,0.1) and (0.2,0.2): smaller i then j wins
        tie_map = MemorisationMap(
            ids=np.array([0]), tm=np.array([0.15]), gs=np.array([0.15]),
            cm=np.array([0.0]), n_train=np.array([1], dtype=np.int32),
            n_heldout=np.array([1], dtype=np.int32),
        )
        g = assign_regions(tie_map, grid)[0]
        assert (grid[g].i, grid[g].j) == (0.1, 0.1)

    def test_matches_bruteforce(self):
        grid = grid_coordinates(0.1)
        map_ = make_map(200, seed=2)
        assignment = assign_regions(map_, grid)
        order = sorted(range(len(grid)), key=lambda g: (grid[g].i, grid[g].j))
        for row in range(len(map_)):
            d2 = [(map_.tm[row] - c.i) ** 2 + (map_.gs[row] - c.j) ** 2 for c in grid]
            best = min(order, key=lambda g: (d2[g], grid[g].i, grid[g].j))
            assert assignment[row] == best


class TestRemovalSet:
    def test_unbounded_budget_takes_all(self):
        map_ = make_map(40, with_features=True)
        rs = nearest_removal_set(map_, GridCoordinate(0.5, 0.3), token_budget=10**9)
        assert len(rs.example_ids) == 40

    def test_budget_greedy_stop(self):
        map_ = make_map(10, with_features=True)
        counts = np.full(10, 3)
        rs = nearest_removal_set(map_, GridCoordinate(0.5, 0.3), token_budget=5,
                                 src_token_counts=counts)
        assert len(rs.example_ids) == 1
        assert rs.total_source_tokens == 3

    def test_maximal_under_budget(self):
        map_ = make_map(60, with_features=True)
        counts = map_.features[:, 0].astype(int)
        budget = 100
        rs = nearest_removal_set(map_, GridCoordinate(0.4, 0.2), token_budget=budget,
                                 src_token_counts=counts)
        assert rs.total_source_tokens <= budget
        # adding the next nearest example would exceed the budget
        chosen = set(rs.example_ids)
        d2 = (map_.tm - 0.4) ** 2 + (map_.gs - 0.2) ** 2
        order = np.lexsort((map_.ids, d2))
        remaining = [r for r in order if int(map_.ids[r]) not in chosen]
        assert remaining
        assert rs.total_source_tokens + counts[remaining[0]] > budget

    def test_deterministic_and_distance_sorted(self):
        map_ = make_map(50, with_features=True)
        coord = GridCoordinate(0.6, 0.4)
        a = nearest_removal_set(map_, coord, token_budget=120)
        b = nearest_removal_set(map_, coord, token_budget=120)
        assert a.example_ids == b.example_ids
        d2 = [(map_.tm[map_.row_of(i)] - 0.6) ** 2 + (map_.gs[map_.row_of(i)] - 0.4) ** 2
              for i in a.example_ids]
        assert d2 == sorted(d2)


class TestRegionRelevance:
    def _three_region_setup(self):
        # three tight clusters, one run each removing its cluster
        n_per = 5
        tm = np.concatenate([np.full(n_per, 0.2), np.full(n_per, 0.5), np.full(n_per, 0.9)])
        gs = np.concatenate([np.full(n_per, 0.2), np.full(n_per, 0.1), np.full(n_per, 0.1)])
        n = 3 * n_per
        map_ = MemorisationMap(
            ids=np.arange(n), tm=tm, gs=gs, cm=np.maximum(0, tm - gs),
            n_train=np.ones(n, dtype=np.int32), n_heldout=np.ones(n, dtype=np.int32),
        )
        coords = [GridCoordinate(0.2, 0.2), GridCoordinate(0.5, 0.1), GridCoordinate(0.9, 0.1)]
        sets = [
            RemovalSet(coords[k], list(range(k * n_per, (k + 1) * n_per)), n_per, 100)
            for k in range(3)
        ]
        perf = [
            PerformanceRecord("r0", coords[0], 0, bleu_dev=20.0, mean_logprob=-1.0, hallucination_ratio=0.1),
            PerformanceRecord("r1", coords[1], 0, bleu_dev=10.0, mean_logprob=-2.0, hallucination_ratio=0.3),
            PerformanceRecord("r2", coords[2], 0, bleu_dev=30.0, mean_logprob=-0.5, hallucination_ratio=0.05),
            PerformanceRecord("r2b", coords[2], 1, bleu_dev=28.0, mean_logprob=-0.7, hallucination_ratio=0.15),
        ]
        return map_, sets, perf, coords

    def test_matches_bruteforce_oracle(self):
        map_, sets, perf, coords = self._three_region_setup()
        result = region_relevance(map_, sets, perf, min_region=1)
        # brute force: per example, mean over runs containing it; then region means
        for k, coord in enumerate(coords):
            runs = [p for p in perf if p.coordinate == coord]
            for metric in ("bleu_dev", "mean_logprob", "hallucination_ratio"):
                expected = float(np.mean([p.value(metric) for p in runs]))
                assert result.region_scores[coord][metric] == pytest.approx(expected)
        # removal of region 1 hurt BLEU most -> most relevant
        assert result.most_relevant["bleu_dev"][0] == coords[1]
        assert result.least_relevant["bleu_dev"][0] == coords[2]
        assert result.most_relevant["hallucination_ratio"][0] == coords[1]

    def test_min_region_excludes(self):
        map_, sets, perf, coords = self._three_region_setup()
        result = region_relevance(map_, sets, perf, min_region=2000)
        assert result.region_scores == {}

    def test_single_run_ordering(self):
        map_, sets, perf, coords = self._three_region_setup()
        result = region_relevance(map_, sets, [perf[0]], min_region=1)
        assert result.most_relevant["bleu_dev"][0] == coords[0]

    def test_unmatched_performance_record_errors(self):
        map_, sets, perf, coords = self._three_region_setup()
        rogue = PerformanceRecord("x", GridCoordinate(0.3, 0.3), 0, 1.0, -1.0, 0.0)
        with pytest.raises(CartographyError, match="no removal manifest"):
            region_relevance(map_, sets, [rogue], min_region=1)

    def test_never_removed_counted(self):
        map_, sets, perf, coords = self._three_region_setup()
        result = region_relevance(map_, sets[:2], perf[:2], min_region=1)
        assert result.never_removed_count == 5

    def test_baseline_is_mean_over_all_runs(self):
        map_, sets, perf, _ = self._three_region_setup()
        result = region_relevance(map_, sets, perf, min_region=1)
        assert result.baselines["bleu_dev"] == pytest.approx(np.mean([20, 10, 30, 28]))


class TestSpecialisedSample:
    def test_whole_map_behaves_like_random_sampling(self):
        map_ = make_map(100, with_features=True)
        counts = map_.features[:, 0]
        result = specialised_sample(map_, (0, 1, 0, 1), token_budget=int(counts.sum()), seed=0)
        assert set(result.example_ids) == set(map_.ids.tolist())

    def test_empty_region_warns(self):
        map_ = make_map(50, with_features=True)
        with pytest.warns(UserWarning, match="too sparse"):
            result = specialised_sample(map_, (2.0, 3.0, 2.0, 3.0), token_budget=10, seed=0)
        assert result.example_ids == [] and not result.met_budget

    def test_budget_within_one_sentence(self):
        map_ = make_map(500, with_features=True)
        counts = map_.features[:, 0].astype(int)
        budget = 300
        result = specialised_sample(map_, (0, 1, 0, 1), token_budget=budget, seed=3)
        total = result.total_source_tokens
        last = counts[map_.row_of(result.example_ids[-1])]
        assert total >= budget and total - last < budget

    def test_deterministic_given_seed(self):
        map_ = make_map(200, with_features=True)
        a = specialised_sample(map_, (0.2, 0.9, 0.0, 0.6), 150, seed=9)
        b = specialised_sample(map_, (0.2, 0.9, 0.0, 0.6), 150, seed=9)
        assert a.example_ids == b.example_ids

    def test_bounds_respected(self):
        map_ = make_map(300, with_features=True)
        bounds = (0.4, 0.8, 0.1, 0.5)
        result = specialised_sample(map_, bounds, 100, seed=1)
        for eid in result.example_ids:
            row = map_.row_of(eid)
            assert bounds[0] <= map_.tm[row] <= bounds[1]
            assert bounds[2] <= map_.gs[row] <= bounds[3]

    def test_malformed_bounds(self):
        map_ = make_map(10, with_features=True)
        with pytest.raises(CartographyError, match="bounds"):
            specialised_sample(map_, (0.9, 0.1, 0, 1), 10, seed=0)


class TestCorrelationTable:
    def test_feature_equal_to_metric(self):
        map_ = make_map(100, with_features=True)
        map_.features[:, 0] = map_.tm
        map_.features[:, 1] = -map_.tm
        fm, ff = correlation_table(map_)
        assert fm[0, 0] == pytest.approx(1.0)
        assert fm[1, 0] == pytest.approx(-1.0)

    def test_matches_rank_then_pearson_oracle(self):
        map_ = make_map(100, with_features=True)
        fm, ff = correlation_table(map_)
        for f in range(5):
            ranks_f = stats.rankdata(map_.features[:, f])
            for m, vec in enumerate((map_.tm, map_.gs, map_.cm)):
                oracle = stats.pearsonr(ranks_f, stats.rankdata(vec))[0]
                assert abs(fm[f, m] - oracle) <= 1e-12

    def test_monotone_transform_invariance(self):
        map_ = make_map(80, with_features=True)
        fm_before, _ = correlation_table(map_)
        map_.features[:, 3] = map_.features[:, 3] ** 3
        fm_after, _ = correlation_table(map_)
        np.testing.assert_allclose(fm_before[3], fm_after[3], atol=1e-12)

    def test_constant_column_null(self):
        map_ = make_map(50, with_features=True)
        map_.features[:, 2] = 7.0
        fm, ff = correlation_table(map_)
        assert np.isnan(fm[2]).all()

    def test_too_few_examples(self):
        map_ = make_map(2, with_features=True)
        with pytest.raises(CartographyError):
            correlation_table(map_)


class TestCompareMaps:
    def test_self_comparison(self):
        map_ = make_map(60)
        assert compare_maps(map_, map_, "cm") == pytest.approx(1.0)

    def test_shuffled_copy_near_zero(self):
        map_ = make_map(10_000, seed=4)
        r = np.random.default_rng(0)
        perm = r.permutation(len(map_))
        shuffled = MemorisationMap(
            ids=map_.ids, tm=map_.tm[perm], gs=map_.gs[perm], cm=map_.cm[perm],
            n_train=map_.n_train, n_heldout=map_.n_heldout,
        )
        assert abs(compare_maps(map_, shuffled, "cm")) < 0.1

    def test_explicit_join(self):
        map_ = make_map(50)
        r = compare_maps(map_, map_, "tm", join=[1, 2, 3, 4])
        assert r == pytest.approx(1.0)

    def test_empty_join_errors(self):
        map_ = make_map(10)
        with pytest.raises(CartographyError, match=">= 3"):
            compare_maps(map_, map_, "cm", join=[])


class TestTrigramUniqueness:
    def _map_at(self, coords_points):
        n = len(coords_points)
        tm = np.array([p[0] for p in coords_points])
        gs = np.array([p[1] for p in coords_points])
        return MemorisationMap(
            ids=np.arange(n), tm=tm, gs=gs, cm=np.maximum(0, tm - gs),
            n_train=np.ones(n, dtype=np.int32), n_heldout=np.ones(n, dtype=np.int32),
        )

    def test_counting_oracle(self):
        map_ = self._map_at([(0.1, 0.1), (0.1, 0.1)])
        ratios = trigram_uniqueness(map_, [["a", "b", "c", "d"], ["a", "b", "c", "e"]])
        assert ratios[GridCoordinate(0.1, 0.1)] == pytest.approx(3 / 4)

    def test_all_distinct(self):
        map_ = self._map_at([(0.5, 0.2)])
        ratios = trigram_uniqueness(map_, [["a", "b", "c", "d"]])
        assert ratios[GridCoordinate(0.5, 0.2)] == 1.0

    def test_duplicated_sentences_halve(self):
        map_ = self._map_at([(0.9, 0.3), (0.9, 0.3)])
        ratios = trigram_uniqueness(map_, [["a", "b", "c"], ["a", "b", "c"]])
        assert ratios[GridCoordinate(0.9, 0.3)] == pytest.approx(0.5)

    def test_short_sentences_give_null(self):
        map_ = self._map_at([(0.3, 0.3)])
        ratios = trigram_uniqueness(map_, [["a", "b"]])
        assert ratios[GridCoordinate(0.3, 0.3)] is None


class TestProbabilityBuckets:
    def test_identity_zero_deltas(self):
        base = rng.uniform(0, 1, 500)
        deltas = probability_buckets(base, base)
        assert all(d == pytest.approx(0.0) for d in deltas if d is not None)

    def test_constant_shift(self):
        base = rng.uniform(0.1, 0.9, 500)
        deltas = probability_buckets(base, base - 0.05)
        assert all(d == pytest.approx(-0.05) for d in deltas if d is not None)

    def test_matches_direct_grouping_oracle(self):
        base = rng.uniform(0, 1, 1000)
        cond = np.clip(base + rng.normal(0, 0.1, 1000), 0, 1)
        deltas = probability_buckets(base, cond, n_buckets=10)
        for b in range(10):
            members = (np.minimum((base * 10).astype(int), 9)) == b
            if members.any():
                assert deltas[b] == pytest.approx(float(np.mean(cond[members] - base[members])))
            else:
                assert deltas[b] is None

    def test_empty_bucket_null(self):
        deltas = probability_buckets([0.05, 0.95], [0.05, 0.95], n_buckets=10)
        assert deltas[5] is None


class TestCentroidsAndTrace:
    def test_single_example_centroid(self):
        map_ = make_map(10)
        out = group_centroids(map_, {3: ["word-for-word"]})
        tm, gs = out["word-for-word"]["centroid"]
        assert tm == pytest.approx(map_.tm[3]) and gs == pytest.approx(map_.gs[3])

    def test_two_example_mean(self):
        map_ = make_map(10)
        map_.tm[1], map_.gs[1] = 0.2, 0.1
        map_.tm[2], map_.gs[2] = 0.4, 0.3
        out = group_centroids(map_, {1: ["paraphrase"], 2: ["paraphrase"]})
        assert out["paraphrase"]["centroid"] == (pytest.approx(0.3), pytest.approx(0.2))

    def test_multilabel_contributes_to_all(self):
        map_ = make_map(10)
        out = group_centroids(map_, {1: ["a", "b"], 2: ["a"]})
        assert out["a"]["count"] == 2 and out["b"]["count"] == 1

    def test_unknown_ids_error(self):
        map_ = make_map(5)
        with pytest.raises(CartographyError, match="unknown example ids.*99"):
            group_centroids(map_, {99: ["x"]})

    def test_histogram_bins(self):
        map_ = make_map(40)
        out = group_centroids(map_, {i: ["all"] for i in range(40)})
        assert len(out["all"]["tm_hist"]) == 20
        assert sum(out["all"]["tm_hist"]) == 40

    def test_trace_single_and_pooled(self):
        map_ = make_map(30)
        single = trace_cm_of_examples(map_, [7])
        assert single["mean"] == pytest.approx(map_.cm[7]) and single["sd"] == 0.0
        all_ids = map_.ids.tolist()
        pooled = trace_cm_of_examples(map_, all_ids)
        assert pooled["mean"] == pytest.approx(float(np.mean(map_.cm)))
        half_a = trace_cm_of_examples(map_, all_ids[:15])
        half_b = trace_cm_of_examples(map_, all_ids[15:])
        recombined = (half_a["mean"] * 15 + half_b["mean"] * 15) / 30
        assert recombined == pytest.approx(pooled["mean"])

    def test_trace_empty_errors(self):
        with pytest.raises(CartographyError):
            trace_cm_of_examples(make_map(5), [])


class TestManifestIO:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "m.txt"
        write_manifest(path, {"kind": "removal", "coordinate": "0.5,0.3"}, [3, 1, 4])
        meta, ids = read_manifest(path)
        assert meta["kind"] == "removal" and ids == [3, 1, 4]

    def test_tamper_detected(self, tmp_path):
        path = tmp_path / "m.txt"
        write_manifest(path, {"kind": "removal"}, [1, 2])
        text = path.read_text().replace("\n1\n", "\n7\n")
        path.write_text(text)
        with pytest.raises(CartographyError, match="hash mismatch"):
            read_manifest(path)

    def test_performance_records_roundtrip(self, tmp_path):
        path = tmp_path / "perf.tsv"
        records = [
            PerformanceRecord("run-a", GridCoordinate(0.5, 0.2), 0, 21.5, -1.25, 0.125),
            PerformanceRecord("run-b", GridCoordinate(1.0, 1.0), 2, 19.0, -1.5, 0.0),
        ]
        write_performance_records(path, records)
        assert read_performance_records(path) == records
