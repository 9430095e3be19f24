import numpy as np
import pytest
from fastapi.testclient import TestClient

from conftest import make_map
from memomap.corpus import SentencePair
from memomap.server import create_app


@pytest.fixture(scope="module")
def client():
    map_ = make_map(200, seed=6, with_features=True)
    pairs = [
        SentencePair(i, f"source sentence {i} with words", f"target sentence {i}")
        for i in range(200)
    ]
    app = create_app(map_, pairs=pairs)
    return TestClient(app), map_


class TestMeta:
    def test_counts_and_means(self, client):
        c, map_ = client
        meta = c.get("/api/map/meta").json()
        assert meta["n"] == 200
        assert meta["n_valid"] == int(map_.valid_mask.sum())
        assert meta["variant"] == "ll" and meta["k"] == 8
        assert meta["tm_mean"] == pytest.approx(float(np.mean(map_.tm[map_.valid_mask])))


class TestPoints:
    def test_sample_size_and_determinism(self, client):
        c, _ = client
        q = "/api/map/points?sample=50&seed=7"
        a = c.get(q)
        b = c.get(q)
        assert a.content == b.content  # byte-identical for identical (query, seed)
        points = a.json()["points"]
        assert len(points) == 50

    def test_bounds_filtering(self, client):
        c, _ = client
        data = c.get("/api/map/points?min_tm=0.5&max_tm=1&min_gs=0&max_gs=0.3&sample=1000").json()
        for p in data["points"]:
            assert 0.5 <= p["tm"] <= 1.0 and 0 <= p["gs"] <= 0.3

    def test_malformed_bounds_422(self, client):
        c, _ = client
        assert c.get("/api/map/points?min_tm=0.9&max_tm=0.1").status_code == 422
        assert c.get("/api/map/points?min_tm=abc").status_code == 422


class TestExample:
    def test_known_id(self, client):
        c, map_ = client
        data = c.get("/api/example/3").json()
        assert data["id"] == 3
        assert data["source"].startswith("source sentence 3")
        assert len(data["features"]) == 28

    def test_unknown_id_404(self, client):
        c, _ = client
        r = c.get("/api/example/99999")
        assert r.status_code == 404
        assert r.json()["detail"]["code"] == "unknown_id"


class TestRegionStats:
    def test_full_map_equals_meta(self, client):
        c, _ = client
        meta = c.get("/api/map/meta").json()
        stats = c.get("/api/region/stats?min_tm=0&max_tm=1&min_gs=0&max_gs=1").json()
        assert stats["count"] == meta["n_valid"]
        assert stats["tm_mean"] == pytest.approx(meta["tm_mean"])
        assert stats["cm_mean"] == pytest.approx(meta["cm_mean"])
        assert len(stats["cm_histogram"]) == 20

    def test_empty_region(self, client):
        c, _ = client
        stats = c.get("/api/region/stats?min_tm=0.99999&max_tm=1&min_gs=0.99998&max_gs=0.99999").json()
        assert stats["count"] == 0 and stats["tm_mean"] is None


class TestSelection:
    def test_selection_roundtrip_and_containment(self, client):
        c, map_ = client
        body = {"min_tm": 0.2, "max_tm": 0.9, "min_gs": 0.0, "max_gs": 0.5,
                "token_budget": 100, "seed": 11}
        created = c.post("/api/selection", json=body).json()
        assert created["count"] > 0
        ids = c.get(f"/api/selection/{created['manifest_id']}/ids").json()["example_ids"]
        for eid in ids:
            row = map_.row_of(eid)
            assert 0.2 <= map_.tm[row] <= 0.9
            assert 0.0 <= map_.gs[row] <= 0.5

    def test_idempotent_by_seed(self, client):
        c, _ = client
        body = {"min_tm": 0, "max_tm": 1, "min_gs": 0, "max_gs": 1,
                "token_budget": 50, "seed": 3}
        a = c.post("/api/selection", json=body).json()
        b = c.post("/api/selection", json=body).json()
        assert a["manifest_id"] == b["manifest_id"]
        ids_a = c.get(f"/api/selection/{a['manifest_id']}/ids").json()["example_ids"]
        ids_b = c.get(f"/api/selection/{b['manifest_id']}/ids").json()["example_ids"]
        assert ids_a == ids_b

    def test_export_line_aligned(self, client):
        c, _ = client
        body = {"min_tm": 0, "max_tm": 1, "min_gs": 0, "max_gs": 1,
                "token_budget": 60, "seed": 4}
        created = c.post("/api/selection", json=body).json()
        ids = c.get(f"/api/selection/{created['manifest_id']}/ids").json()["example_ids"]
        export = c.get(f"/api/selection/{created['manifest_id']}/export").text
        lines = export.rstrip("\n").split("\n")
        assert len(lines) == len(ids)
        for eid, line in zip(ids, lines):
            src, trg = line.split("\t")
            assert src == f"source sentence {eid} with words"

    def test_unknown_selection_404(self, client):
        c, _ = client
        assert c.get("/api/selection/ffffffffffffffff/ids").status_code == 404

    def test_malformed_selection_422(self, client):
        c, _ = client
        body = {"min_tm": 0.9, "max_tm": 0.1, "min_gs": 0, "max_gs": 1,
                "token_budget": 10, "seed": 0}
        assert c.post("/api/selection", json=body).status_code == 422


class TestCorrelations:
    def test_shape(self, client):
        c, _ = client
        data = c.get("/api/correlations").json()
        assert len(data["feature_names"]) == 28
        assert len(data["feature_metric"]) == 28
        assert len(data["feature_metric"][0]) == 3
        assert len(data["feature_feature"]) == 28
