import numpy as np
import pytest

from conftest import make_map
from memomap.artifact import ArtifactError, read_map_artifact, write_map_artifact
from memomap.cartography import MemorisationMap
from memomap.features import N_FEATURES
from memomap.signals import SIGNAL_NAMES


def _nine_digit(map_):
    """Round float payloads to the artifact's 9-significant-digit precision."""
    for name in ("tm", "gs", "cm"):
        arr = getattr(map_, name)
        setattr(map_, name, np.array([float(f"{v:.9g}") for v in arr]))
    if map_.features is not None:
        map_.features = np.vectorize(lambda v: float(f"{v:.9g}"))(map_.features)
    return map_


class TestRoundTrip:
    def test_field_for_field(self, tmp_path):
        map_ = _nine_digit(make_map(100, with_features=True))
        map_.flags[3] = "clamped"
        map_.tm[7] = np.nan
        map_.gs[7] = np.nan
        map_.cm[7] = np.nan
        path = tmp_path / "map.tsv"
        write_map_artifact(map_, path)
        loaded = read_map_artifact(path)
        np.testing.assert_array_equal(loaded.ids, map_.ids)
        np.testing.assert_allclose(loaded.tm, map_.tm, rtol=0, atol=0)
        np.testing.assert_allclose(loaded.gs, map_.gs, rtol=0, atol=0)
        np.testing.assert_allclose(loaded.cm, map_.cm, rtol=0, atol=0)
        np.testing.assert_allclose(loaded.features, map_.features, rtol=0, atol=0)
        assert loaded.flags == map_.flags
        assert loaded.variant == map_.variant and loaded.k == map_.k
        assert loaded.signals is None

    def test_rewrite_is_byte_identical(self, tmp_path):
        map_ = make_map(50, with_features=True)
        a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
        write_map_artifact(map_, a)
        write_map_artifact(read_map_artifact(a), b)
        assert a.read_bytes() == b.read_bytes()

    def test_no_features_block(self, tmp_path):
        map_ = make_map(10)
        path = tmp_path / "m.tsv"
        write_map_artifact(map_, path)
        loaded = read_map_artifact(path)
        assert loaded.features is None and loaded.signals is None

    def test_gzip_variant(self, tmp_path):
        map_ = _nine_digit(make_map(30, with_features=True))
        path = tmp_path / "map.tsv.gz"
        write_map_artifact(map_, path)
        assert path.read_bytes()[:2] == b"\x1f\x8b"  # gzip magic
        loaded = read_map_artifact(path)
        np.testing.assert_allclose(loaded.tm, map_.tm, rtol=0, atol=0)
        np.testing.assert_allclose(loaded.features, map_.features, rtol=0, atol=0)

    def test_signals_block(self, tmp_path):
        map_ = make_map(10)
        map_.signals = np.random.default_rng(0).uniform(size=(10, len(SIGNAL_NAMES)))
        map_.signals = np.vectorize(lambda v: float(f"{v:.9g}"))(map_.signals)
        path = tmp_path / "m.tsv"
        write_map_artifact(map_, path)
        np.testing.assert_allclose(read_map_artifact(path).signals, map_.signals, atol=0)


class TestValidation:
    def _write(self, tmp_path):
        path = tmp_path / "map.tsv"
        write_map_artifact(make_map(20, with_features=True), path)
        return path

    def test_checksum_tamper(self, tmp_path):
        path = self._write(tmp_path)
        lines = path.read_text().splitlines()
        row = lines[10].split("\t")
        row[1] = "0.123456789"
        lines[10] = "\t".join(row)
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(ArtifactError, match="checksum mismatch"):
            read_map_artifact(path)

    def test_truncated_file(self, tmp_path):
        path = self._write(tmp_path)
        lines = path.read_text().splitlines()
        path.write_text("\n".join(lines[:15]) + "\n")
        with pytest.raises(ArtifactError, match="missing checksum|row count"):
            read_map_artifact(path)

    def test_version_mismatch(self, tmp_path):
        path = self._write(tmp_path)
        text = path.read_text().replace("#memomap map v1", "#memomap map v9", 1)
        path.write_text(text)
        with pytest.raises(ArtifactError, match="version"):
            read_map_artifact(path)

    def test_reordered_columns_rejected(self, tmp_path):
        path = self._write(tmp_path)
        text = path.read_text().replace("id\ttm\tgs", "id\tgs\ttm", 1)
        path.write_text(text)
        with pytest.raises(ArtifactError, match="column mismatch|checksum"):
            read_map_artifact(path)

    def test_no_partial_file_on_failure(self, tmp_path):
        bad = make_map(5)
        bad.tm = np.array([0.1])  # inconsistent lengths blow up mid-write
        target = tmp_path / "out.tsv"
        with pytest.raises(Exception):
            write_map_artifact(bad, target)
        assert not target.exists()
        assert list(tmp_path.iterdir()) == []


def test_million_row_streaming(tmp_path):
    # bounded memory: build columns directly, no per-row python objects;
    # a 1/256 value grid is exact at the artifact's 9-digit precision
    n = 1_000_000
    rng = np.random.default_rng(0)
    tm = rng.integers(0, 257, n) / 256.0
    gs = np.floor(tm * 256 * rng.uniform(0, 1, n)) / 256.0
    map_ = MemorisationMap(
        ids=np.arange(n, dtype=np.int64),
        tm=tm,
        gs=gs,
        cm=np.maximum(0.0, tm - gs),
        n_train=np.full(n, 4, dtype=np.int32),
        n_heldout=np.full(n, 4, dtype=np.int32),
        variant="ll",
        k=8,
        corpus_hash="big",
    )
    path = tmp_path / "big.tsv"
    checksum = write_map_artifact(map_, path)
    assert len(checksum) == 64
    loaded = read_map_artifact(path)
    assert len(loaded) == n
    np.testing.assert_allclose(loaded.tm, map_.tm, rtol=0, atol=0)
    np.testing.assert_allclose(loaded.gs, map_.gs, rtol=0, atol=0)
    np.testing.assert_allclose(loaded.cm, map_.cm, rtol=0, atol=0)
