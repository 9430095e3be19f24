"""Read-only HTTP API over a map artifact, backing the explorer UI.

The service never mutates the map; selection manifests are content-addressed
by (bounds, budget, seed, map hash), so POSTing the same selection twice
returns the same manifest id, and identical queries return identical bytes.
"""

from __future__ import annotations

import hashlib
import math
from pathlib import Path

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.responses import PlainTextResponse
from pydantic import BaseModel

from .cartography import (
    MemorisationMap,
    correlation_table,
    specialised_sample,
    write_manifest,
)
from .corpus import SentencePair
from .features import FEATURE_NAMES
from .signals import SIGNAL_NAMES

__all__ = ["create_app"]


def _clean(x: float) -> float | None:
    return None if (x is None or math.isnan(x)) else float(x)


class SelectionRequest(BaseModel):
    min_tm: float
    max_tm: float
    min_gs: float
    max_gs: float
    token_budget: int
    seed: int


def _check_bounds(min_tm, max_tm, min_gs, max_gs):
    for v in (min_tm, max_tm, min_gs, max_gs):
        if not math.isfinite(v):
            raise HTTPException(422, detail={"code": "malformed_bounds", "message": "non-finite bound"})
    if min_tm > max_tm or min_gs > max_gs:
        raise HTTPException(
            422, detail={"code": "malformed_bounds", "message": "min bound exceeds max bound"}
        )


def create_app(
    map_: MemorisationMap,
    pairs: list[SentencePair] | None = None,
    manifest_dir: str | Path | None = None,
) -> FastAPI:
    """Build the API over an immutable map snapshot.

    ``pairs`` enables the example-text and export endpoints; selection
    manifests are kept in memory and mirrored to ``manifest_dir`` if given.
    """
    app = FastAPI(title="memomap", version="1")
    valid = map_.valid_mask
    map_hash = hashlib.sha256(
        (map_.corpus_hash + map_.variant + str(len(map_))).encode()
    ).hexdigest()[:16]
    pair_by_id = {p.id: p for p in pairs} if pairs is not None else None
    src_token_counts = None
    if pairs is not None:
        src_token_counts = np.zeros(len(map_), dtype=np.int64)
        for p in pairs:
            row = int(np.searchsorted(map_.ids, p.id))
            if row < len(map_.ids) and map_.ids[row] == p.id:
                src_token_counts[row] = len(p.source.split())
    selections: dict[str, dict] = {}

    def region_mask(min_tm, max_tm, min_gs, max_gs):
        return (
            valid
            & (map_.tm >= min_tm)
            & (map_.tm <= max_tm)
            & (map_.gs >= min_gs)
            & (map_.gs <= max_gs)
        )

    @app.get("/api/map/meta")
    def meta():
        v = valid
        return {
            "n": len(map_),
            "n_valid": int(v.sum()),
            "variant": map_.variant,
            "k": map_.k,
            "corpus_hash": map_.corpus_hash,
            "map_hash": map_hash,
            "has_features": map_.features is not None,
            "has_signals": map_.signals is not None,
            "has_text": pair_by_id is not None,
            "tm_mean": _clean(np.mean(map_.tm[v])) if v.any() else None,
            "gs_mean": _clean(np.mean(map_.gs[v])) if v.any() else None,
            "cm_mean": _clean(np.mean(map_.cm[v])) if v.any() else None,
        }

    @app.get("/api/map/points")
    def points(
        min_tm: float = 0.0,
        max_tm: float = 1.0,
        min_gs: float = 0.0,
        max_gs: float = 1.0,
        sample: int = 5000,
        seed: int = 0,
    ):
        _check_bounds(min_tm, max_tm, min_gs, max_gs)
        rows = np.nonzero(region_mask(min_tm, max_tm, min_gs, max_gs))[0]
        total = int(rows.size)
        if rows.size > sample:
            rng = np.random.default_rng(seed)
            rows = np.sort(rng.choice(rows, size=sample, replace=False))
        return {
            "total_in_bounds": total,
            "sampled": int(rows.size),
            "seed": seed,
            "points": [
                {
                    "id": int(map_.ids[r]),
                    "tm": float(map_.tm[r]),
                    "gs": float(map_.gs[r]),
                    "cm": float(map_.cm[r]),
                }
                for r in rows
            ],
        }

    @app.get("/api/example/{example_id}")
    def example(example_id: int):
        row = int(np.searchsorted(map_.ids, example_id))
        if row >= len(map_.ids) or map_.ids[row] != example_id:
            raise HTTPException(404, detail={"code": "unknown_id", "id": example_id})
        out = {
            "id": example_id,
            "tm": _clean(map_.tm[row]),
            "gs": _clean(map_.gs[row]),
            "cm": _clean(map_.cm[row]),
            "n_train": int(map_.n_train[row]),
            "n_heldout": int(map_.n_heldout[row]),
            "flags": map_.flags[row],
        }
        if pair_by_id is not None and example_id in pair_by_id:
            out["source"] = pair_by_id[example_id].source
            out["target"] = pair_by_id[example_id].target
        if map_.features is not None:
            out["features"] = {
                name: _clean(map_.features[row, c]) for c, name in enumerate(FEATURE_NAMES)
            }
        if map_.signals is not None:
            out["signals"] = {
                name: _clean(map_.signals[row, c]) for c, name in enumerate(SIGNAL_NAMES)
            }
        return out

    @app.get("/api/region/stats")
    def region_stats(
        min_tm: float = 0.0,
        max_tm: float = 1.0,
        min_gs: float = 0.0,
        max_gs: float = 1.0,
        bins: int = 20,
    ):
        _check_bounds(min_tm, max_tm, min_gs, max_gs)
        mask = region_mask(min_tm, max_tm, min_gs, max_gs)
        count = int(mask.sum())
        out = {
            "count": count,
            "tm_mean": _clean(np.mean(map_.tm[mask])) if count else None,
            "gs_mean": _clean(np.mean(map_.gs[mask])) if count else None,
            "cm_mean": _clean(np.mean(map_.cm[mask])) if count else None,
            "cm_histogram": (
                np.histogram(map_.cm[mask], bins=np.linspace(0, 1, bins + 1))[0].tolist()
                if count
                else [0] * bins
            ),
        }
        if map_.features is not None and count:
            block = map_.features[mask]
            out["feature_means"] = {
                name: _clean(float(np.nanmean(block[:, c]))) if np.isfinite(block[:, c]).any() else None
                for c, name in enumerate(FEATURE_NAMES)
            }
        return out

    @app.post("/api/selection")
    def make_selection(req: SelectionRequest):
        _check_bounds(req.min_tm, req.max_tm, req.min_gs, req.max_gs)
        key = f"{req.min_tm!r},{req.max_tm!r},{req.min_gs!r},{req.max_gs!r},{req.token_budget},{req.seed},{map_hash}"
        manifest_id = hashlib.sha256(key.encode()).hexdigest()[:16]
        if manifest_id not in selections:
            bounds = (req.min_tm, req.max_tm, req.min_gs, req.max_gs)
            result = specialised_sample(
                map_, bounds, req.token_budget, req.seed, src_token_counts=src_token_counts
            )
            selections[manifest_id] = {
                "bounds": bounds,
                "token_budget": req.token_budget,
                "seed": req.seed,
                "ids": result.example_ids,
                "total_source_tokens": result.total_source_tokens,
                "met_budget": result.met_budget,
            }
            if manifest_dir is not None:
                Path(manifest_dir).mkdir(parents=True, exist_ok=True)
                write_manifest(
                    Path(manifest_dir) / f"selection.{manifest_id}.txt",
                    {
                        "kind": "selection",
                        "bounds": ",".join(repr(b) for b in bounds),
                        "token_budget": req.token_budget,
                        "seed": req.seed,
                        "map_hash": map_hash,
                    },
                    result.example_ids,
                )
        sel = selections[manifest_id]
        return {
            "manifest_id": manifest_id,
            "count": len(sel["ids"]),
            "total_source_tokens": sel["total_source_tokens"],
            "met_budget": sel["met_budget"],
        }

    def _get_selection(manifest_id: str) -> dict:
        if manifest_id not in selections:
            raise HTTPException(404, detail={"code": "unknown_selection", "id": manifest_id})
        return selections[manifest_id]

    @app.get("/api/selection/{manifest_id}/ids")
    def selection_ids(manifest_id: str):
        sel = _get_selection(manifest_id)
        return {
            "manifest_id": manifest_id,
            "bounds": list(sel["bounds"]),
            "token_budget": sel["token_budget"],
            "seed": sel["seed"],
            "example_ids": sel["ids"],
        }

    @app.get("/api/selection/{manifest_id}/export", response_class=PlainTextResponse)
    def selection_export(manifest_id: str):
        sel = _get_selection(manifest_id)
        if pair_by_id is None:
            raise HTTPException(
                404, detail={"code": "no_corpus", "message": "service started without corpus text"}
            )
        lines = [f"{pair_by_id[i].source}\t{pair_by_id[i].target}" for i in sel["ids"]]
        return "\n".join(lines) + ("\n" if lines else "")

    @app.get("/api/correlations")
    def correlations():
        if map_.features is None:
            raise HTTPException(404, detail={"code": "no_features"})
        feature_metric, feature_feature = correlation_table(map_)

        def clean_matrix(m):
            return [[_clean(v) for v in row] for row in m.tolist()]

        return {
            "feature_names": list(FEATURE_NAMES),
            "metrics": ["tm", "gs", "cm"],
            "feature_metric": clean_matrix(feature_metric),
            "feature_feature": clean_matrix(feature_feature),
        }

    return app
