"""Map artifact persistence: a TSV with fixed columns, a header, and a
trailing checksum, written atomically and streamed in bounded memory.

Floats are written at 9 significant digits; empty cells are nulls. Reading
back a written artifact and re-writing it reproduces the file byte for byte.
"""

from __future__ import annotations

import gzip
import hashlib
import math
import os
from pathlib import Path

import numpy as np

from .cartography import MemorisationMap
from .features import FEATURE_NAMES
from .signals import SIGNAL_NAMES

__all__ = ["ArtifactError", "write_map_artifact", "read_map_artifact", "MAP_COLUMNS"]

FORMAT_LINE = "#memomap map v1"
BASE_COLUMNS = ("id", "tm", "gs", "cm", "n_train", "n_heldout", "flags")
MAP_COLUMNS = BASE_COLUMNS + FEATURE_NAMES + SIGNAL_NAMES


class ArtifactError(ValueError):
    pass


def _fmt(x: float) -> str:
    if math.isnan(x):
        return ""
    return format(x, ".9g")


def _open_text(path: Path, mode: str, compress: bool):
    # compression is a flag (the .gz suffix), not a format change: the
    # checksum always covers the uncompressed text
    if compress:
        return gzip.open(path, mode + "t", encoding="utf-8", newline="\n")
    return open(path, mode, encoding="utf-8", newline="\n")


def _rows(map_: MemorisationMap):
    has_features = map_.features is not None
    has_signals = map_.signals is not None
    for row in range(len(map_)):
        cells = [
            str(int(map_.ids[row])),
            _fmt(map_.tm[row]),
            _fmt(map_.gs[row]),
            _fmt(map_.cm[row]),
            str(int(map_.n_train[row])),
            str(int(map_.n_heldout[row])),
            map_.flags[row],
        ]
        if has_features:
            cells.extend(_fmt(v) for v in map_.features[row])
        else:
            cells.extend([""] * len(FEATURE_NAMES))
        if has_signals:
            cells.extend(_fmt(v) for v in map_.signals[row])
        else:
            cells.extend([""] * len(SIGNAL_NAMES))
        yield "\t".join(cells)


def write_map_artifact(map_: MemorisationMap, path: str | Path) -> str:
    """Stream the map to ``path`` (temp file + rename); returns the checksum.

    No partial file remains on failure.
    """
    path = Path(path)
    tmp = path.with_name(path.name + f".tmp.{os.getpid()}")
    digest = hashlib.sha256()
    try:
        with _open_text(tmp, "w", compress=path.suffix == ".gz") as f:

            def emit(line: str):
                data = line + "\n"
                digest.update(data.encode("utf-8"))
                f.write(data)

            emit(FORMAT_LINE)
            emit(f"#corpus_hash={map_.corpus_hash}")
            emit(f"#config_hash={map_.config_hash}")
            emit(f"#variant={map_.variant}")
            emit(f"#k={map_.k}")
            emit(f"#n={len(map_)}")
            emit(f"#features={int(map_.features is not None)}")
            emit(f"#signals={int(map_.signals is not None)}")
            emit("#columns=" + "\t".join(MAP_COLUMNS))
            for row in _rows(map_):
                emit(row)
            checksum = digest.hexdigest()
            f.write(f"#sha256={checksum}\n")
        os.replace(tmp, path)
    except BaseException:
        tmp.unlink(missing_ok=True)
        raise
    return checksum


def _parse_float(cell: str) -> float:
    return float(cell) if cell else math.nan


def read_map_artifact(path: str | Path) -> MemorisationMap:
    """Parse and validate an artifact; version, column order, row count, and
    checksum failures are each named."""
    path = Path(path)
    digest = hashlib.sha256()
    n = None
    meta: dict[str, str] = {}
    arrays_ready = False
    row = 0
    checksum_seen = False

    ids = tm = gs = cm = n_train = n_heldout = features = signals = None
    flags: list[str] = []
    n_feat, n_sig = len(FEATURE_NAMES), len(SIGNAL_NAMES)

    with _open_text(path, "r", compress=path.suffix == ".gz") as f:
        first = f.readline()
        if first.rstrip("\n") != FORMAT_LINE:
            raise ArtifactError(
                f"{path}: format/version mismatch (expected {FORMAT_LINE!r}, "
                f"got {first.strip()!r})"
            )
        digest.update(first.encode("utf-8"))
        for line in f:
            if line.startswith("#sha256="):
                checksum_seen = True
                if line.rstrip("\n").split("=", 1)[1] != digest.hexdigest():
                    raise ArtifactError(f"{path}: checksum mismatch (file corrupted or tampered)")
                break
            digest.update(line.encode("utf-8"))
            line = line.rstrip("\n")
            if line.startswith("#"):
                key, _, value = line[1:].partition("=")
                if key == "columns":
                    if value != "\t".join(MAP_COLUMNS):
                        raise ArtifactError(
                            f"{path}: column mismatch; artifact columns differ from "
                            f"the fixed layout (reordered or missing columns)"
                        )
                meta[key] = value
                continue
            if not arrays_ready:
                for req in ("n", "columns", "variant", "k", "corpus_hash", "features", "signals"):
                    if req not in meta:
                        raise ArtifactError(f"{path}: header incomplete, missing #{req}")
                n = int(meta["n"])
                ids = np.empty(n, dtype=np.int64)
                tm = np.empty(n)
                gs = np.empty(n)
                cm = np.empty(n)
                n_train = np.empty(n, dtype=np.int32)
                n_heldout = np.empty(n, dtype=np.int32)
                features = np.empty((n, n_feat)) if meta["features"] == "1" else None
                signals = np.empty((n, n_sig)) if meta["signals"] == "1" else None
                arrays_ready = True
            cells = line.split("\t")
            if len(cells) != len(MAP_COLUMNS):
                raise ArtifactError(
                    f"{path}: row {row} has {len(cells)} cells, expected {len(MAP_COLUMNS)}"
                )
            if row >= n:
                raise ArtifactError(f"{path}: more rows than header n={n}")
            ids[row] = int(cells[0])
            tm[row] = _parse_float(cells[1])
            gs[row] = _parse_float(cells[2])
            cm[row] = _parse_float(cells[3])
            n_train[row] = int(cells[4])
            n_heldout[row] = int(cells[5])
            flags.append(cells[6])
            if features is not None:
                for c in range(n_feat):
                    features[row, c] = _parse_float(cells[7 + c])
            if signals is not None:
                for c in range(n_sig):
                    signals[row, c] = _parse_float(cells[7 + n_feat + c])
            row += 1

    if not checksum_seen:
        raise ArtifactError(f"{path}: missing checksum line (file truncated?)")
    if not arrays_ready or row != n:
        raise ArtifactError(f"{path}: row count {row} differs from header n={n}")
    return MemorisationMap(
        ids=ids,
        tm=tm,
        gs=gs,
        cm=cm,
        n_train=n_train,
        n_heldout=n_heldout,
        variant=meta["variant"],
        k=int(meta["k"]),
        corpus_hash=meta["corpus_hash"],
        features=features,
        signals=signals,
        flags=flags,
        config_hash=meta.get("config_hash", ""),
    )
