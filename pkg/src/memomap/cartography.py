"""Map assembly, grid-region experiments, and the analysis statistics.

A MemorisationMap is a columnar snapshot: ids plus tm/gs/cm arrays (NaN for
examples that could not be scored), optional 28-column feature and 6-column
signal blocks, and per-row flags. All operations here are read-only over
that snapshot; experiment planning emits manifests.
"""

from __future__ import annotations

import hashlib
import math
import warnings
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Mapping, Sequence

import numpy as np
from scipy import stats

from .features import FEATURE_NAMES, N_FEATURES
from .metrics import MemorisationRecord
from .signals import SIGNAL_NAMES

__all__ = [
    "MemorisationMap",
    "GridCoordinate",
    "RemovalSet",
    "PerformanceRecord",
    "SampleResult",
    "RegionRelevance",
    "CartographyError",
    "assemble_map",
    "grid_coordinates",
    "assign_regions",
    "nearest_removal_set",
    "region_relevance",
    "specialised_sample",
    "correlation_table",
    "compare_maps",
    "trigram_uniqueness",
    "probability_buckets",
    "group_centroids",
    "trace_cm_of_examples",
    "write_manifest",
    "read_manifest",
    "write_performance_records",
    "read_performance_records",
]

METRIC_COLUMNS = ("tm", "gs", "cm")
PERFORMANCE_METRICS = ("bleu_dev", "mean_logprob", "hallucination_ratio")


class CartographyError(ValueError):
    pass


@dataclass
class MemorisationMap:
    """Columnar memorisation map; x = tm, y = gs, cm = offset from diagonal."""

    ids: np.ndarray  # (n,) int64, strictly increasing
    tm: np.ndarray  # (n,) float64, NaN where invalid
    gs: np.ndarray
    cm: np.ndarray
    n_train: np.ndarray  # (n,) int32
    n_heldout: np.ndarray
    variant: str = "ll"
    k: int = 0
    corpus_hash: str = ""
    features: np.ndarray | None = None  # (n, 28)
    signals: np.ndarray | None = None  # (n, 6)
    flags: list[str] = field(default_factory=list)  # comma-joined tokens per row
    config_hash: str = ""  # hash of the producing command's resolved config

    def __post_init__(self):
        if not self.flags:
            self.flags = [""] * len(self.ids)

    def __len__(self) -> int:
        return len(self.ids)

    @property
    def valid_mask(self) -> np.ndarray:
        return ~np.isnan(self.tm)

    def row_of(self, example_id: int) -> int:
        row = int(np.searchsorted(self.ids, example_id))
        if row >= len(self.ids) or self.ids[row] != example_id:
            raise CartographyError(f"unknown example id {example_id}")
        return row

    def metric(self, name: str) -> np.ndarray:
        if name not in METRIC_COLUMNS:
            raise CartographyError(f"unknown metric {name!r}")
        return getattr(self, name)


def assemble_map(
    records: Mapping[int, MemorisationRecord],
    invalid: Mapping[int, str],
    n_examples: int,
    variant: str = "ll",
    k: int = 0,
    corpus_hash: str = "",
    features: Sequence | None = None,
    signals: Mapping[int, object] | None = None,
) -> MemorisationMap:
    """Combine records, feature vectors, and signals into one map.

    ``features`` is a list of FeatureVector (any order); ``signals`` maps
    example id to TrainingSignals. Examples 0..n_examples-1 without a record
    must appear in ``invalid``.
    """
    ids = np.arange(n_examples, dtype=np.int64)
    tm = np.full(n_examples, np.nan)
    gs = np.full(n_examples, np.nan)
    cm = np.full(n_examples, np.nan)
    n_train = np.zeros(n_examples, dtype=np.int32)
    n_heldout = np.zeros(n_examples, dtype=np.int32)
    flag_tokens: list[list[str]] = [[] for _ in range(n_examples)]

    for example_id, rec in records.items():
        if not 0 <= example_id < n_examples:
            raise CartographyError(f"record id {example_id} outside 0..{n_examples - 1}")
        tm[example_id] = rec.tm
        gs[example_id] = rec.gs
        cm[example_id] = rec.cm
        n_train[example_id] = rec.n_train_models
        n_heldout[example_id] = rec.n_heldout_models
        if rec.clamped:
            flag_tokens[example_id].append("clamped")
    for example_id, reason in invalid.items():
        token = "invalid_train_side" if "train" in reason else "invalid_heldout_side"
        flag_tokens[example_id].append(token)
    missing = [i for i in range(n_examples) if i not in records and i not in invalid]
    if missing:
        raise CartographyError(f"examples without record or invalid reason: {missing[:10]}")

    feat_block = None
    if features is not None:
        feat_block = np.full((n_examples, N_FEATURES), np.nan)
        for fv in features:
            if not 0 <= fv.pair_id < n_examples:
                raise CartographyError(f"feature vector for unknown example id {fv.pair_id}")
            feat_block[fv.pair_id] = fv.values
            if fv.partial:
                flag_tokens[fv.pair_id].append("partial_features")
    sig_block = None
    if signals is not None:
        sig_block = np.full((n_examples, len(SIGNAL_NAMES)), np.nan)
        for example_id, sig in signals.items():
            if not 0 <= example_id < n_examples:
                raise CartographyError(f"signals for unknown example id {example_id}")
            sig_block[example_id] = sig.as_array()
            if sig.hyp_from_target:
                flag_tokens[example_id].append("hyp_from_target")

    return MemorisationMap(
        ids=ids,
        tm=tm,
        gs=gs,
        cm=cm,
        n_train=n_train,
        n_heldout=n_heldout,
        variant=variant,
        k=k,
        corpus_hash=corpus_hash,
        features=feat_block,
        signals=sig_block,
        flags=[",".join(t) for t in flag_tokens],
    )


# ---------------------------------------------------------------------------
# Grid, removal sets, region relevance
# ---------------------------------------------------------------------------


@dataclass(frozen=True, order=True)
class GridCoordinate:
    i: float  # tm axis
    j: float  # gs axis


@dataclass
class RemovalSet:
    coordinate: GridCoordinate
    example_ids: list[int]  # ordered by distance to the coordinate
    total_source_tokens: int
    budget: int


@dataclass(frozen=True)
class PerformanceRecord:
    run_id: str
    coordinate: GridCoordinate
    seed: int
    bleu_dev: float
    mean_logprob: float
    hallucination_ratio: float

    def value(self, metric: str) -> float:
        return getattr(self, metric)


def grid_coordinates(step: float = 0.1) -> list[GridCoordinate]:
    """Lattice of (i, j) with j <= i; 55 coordinates at step 0.1."""
    n = round(1.0 / step)
    if abs(n * step - 1.0) > 1e-9:
        raise CartographyError(f"step {step} does not divide 1 evenly")
    values = [round((m + 1) * step, 10) for m in range(n)]
    return [GridCoordinate(i, j) for i in values for j in values if j <= i]


def assign_regions(map_: MemorisationMap, grid: list[GridCoordinate]) -> np.ndarray:
    """Nearest-coordinate index per example (-1 for invalid examples).

    Ties go to the coordinate with smaller i, then smaller j; the grid is
    scanned in that order and only strict improvements switch.
    """
    order = sorted(range(len(grid)), key=lambda g: (grid[g].i, grid[g].j))
    best = np.full(len(map_), -1, dtype=np.int64)
    best_d2 = np.full(len(map_), np.inf)
    valid = map_.valid_mask
    for g in order:
        coord = grid[g]
        d2 = (map_.tm - coord.i) ** 2 + (map_.gs - coord.j) ** 2
        better = valid & (d2 < best_d2)
        best[better] = g
        best_d2[better] = d2[better]
    return best


def _source_token_counts(map_: MemorisationMap, src_token_counts) -> np.ndarray:
    if src_token_counts is not None:
        counts = np.asarray(src_token_counts)
        if counts.shape[0] != len(map_):
            raise CartographyError("source token counts length != map size")
        return counts.astype(np.int64)
    if map_.features is None:
        raise CartographyError("need source token counts (or a map with features)")
    return map_.features[:, FEATURE_NAMES.index("src_len_ws")].astype(np.int64)


def nearest_removal_set(
    map_: MemorisationMap,
    coordinate: GridCoordinate,
    token_budget: int = 750_000,
    src_token_counts: Sequence[int] | None = None,
) -> RemovalSet:
    """Examples nearest to a coordinate, greedily added within the budget.

    The set is maximal: iteration stops at the first example whose
    whitespace source-token count would push the total past the budget.
    Distance ties break by example id ascending.
    """
    if not map_.valid_mask.any():
        raise CartographyError("map has no valid examples")
    counts = _source_token_counts(map_, src_token_counts)
    valid = np.nonzero(map_.valid_mask)[0]
    d2 = (map_.tm[valid] - coordinate.i) ** 2 + (map_.gs[valid] - coordinate.j) ** 2
    order = valid[np.lexsort((map_.ids[valid], d2))]
    cum = np.cumsum(counts[order])
    take = int(np.searchsorted(cum, token_budget, side="right"))
    chosen = map_.ids[order[:take]].tolist()
    total = int(cum[take - 1]) if take else 0
    return RemovalSet(
        coordinate=coordinate, example_ids=chosen, total_source_tokens=total, budget=token_budget
    )


@dataclass
class RegionRelevance:
    grid: list[GridCoordinate]
    region_counts: dict[GridCoordinate, int]
    region_scores: dict[GridCoordinate, dict[str, float]]  # only regions >= min_region with data
    baselines: dict[str, float]
    most_relevant: dict[str, list[GridCoordinate]]
    least_relevant: dict[str, list[GridCoordinate]]
    excluded_small: list[GridCoordinate]
    never_removed_count: int


def region_relevance(
    map_: MemorisationMap,
    removal_sets: Iterable[RemovalSet],
    performance: Iterable[PerformanceRecord],
    min_region: int = 2000,
    grid: list[GridCoordinate] | None = None,
    top_n: int = 10,
) -> RegionRelevance:
    """Score map regions by the performance of runs that removed them.

    An example's impact per metric is the mean performance over runs whose
    removal set contains it (runs that did not train on it); region scores
    average those impacts over the examples assigned to each grid
    coordinate. Regions holding fewer than ``min_region`` examples are
    excluded. Most relevant = largest BLEU / log-prob decrease or
    hallucination increase against the all-run mean baseline.
    """
    removal_sets = list(removal_sets)
    performance = list(performance)
    if not performance:
        raise CartographyError("no performance records")
    sets_by_coord: dict[GridCoordinate, RemovalSet] = {s.coordinate: s for s in removal_sets}
    for rec in performance:
        if rec.coordinate not in sets_by_coord:
            raise CartographyError(
                f"performance record {rec.run_id} has no removal manifest "
                f"for coordinate ({rec.coordinate.i}, {rec.coordinate.j})"
            )

    n = len(map_)
    sums = {m: np.zeros(n) for m in PERFORMANCE_METRICS}
    run_counts = np.zeros(n, dtype=np.int64)
    records_by_coord: dict[GridCoordinate, list[PerformanceRecord]] = {}
    for rec in performance:
        records_by_coord.setdefault(rec.coordinate, []).append(rec)
    for coord, recs in records_by_coord.items():
        rows = np.array([map_.row_of(e) for e in sets_by_coord[coord].example_ids], dtype=np.int64)
        if rows.size == 0:
            continue
        run_counts[rows] += len(recs)
        for metric in PERFORMANCE_METRICS:
            sums[metric][rows] += sum(r.value(metric) for r in recs)

    covered = run_counts > 0
    never_removed = int((map_.valid_mask & ~covered).sum())
    impacts = {
        m: np.where(covered, sums[m] / np.maximum(run_counts, 1), np.nan)
        for m in PERFORMANCE_METRICS
    }
    baselines = {
        m: float(np.mean([r.value(m) for r in performance])) for m in PERFORMANCE_METRICS
    }

    grid = grid if grid is not None else grid_coordinates()
    assignment = assign_regions(map_, grid)
    region_counts: dict[GridCoordinate, int] = {}
    region_scores: dict[GridCoordinate, dict[str, float]] = {}
    excluded_small: list[GridCoordinate] = []
    for g, coord in enumerate(grid):
        members = assignment == g
        region_counts[coord] = int(members.sum())
        if region_counts[coord] < min_region:
            if region_counts[coord]:
                excluded_small.append(coord)
            continue
        scores = {}
        for metric in PERFORMANCE_METRICS:
            vals = impacts[metric][members & covered]
            if vals.size:
                scores[metric] = float(np.mean(vals))
        if scores:
            region_scores[coord] = scores

    most: dict[str, list[GridCoordinate]] = {}
    least: dict[str, list[GridCoordinate]] = {}
    for metric in PERFORMANCE_METRICS:
        scored = sorted(
            (c for c in region_scores if metric in region_scores[c]),
            key=lambda c: (region_scores[c][metric], c.i, c.j),
        )
        if metric == "hallucination_ratio":
            # removal runs with HIGH hallucination mark the removed region relevant
            most[metric] = list(reversed(scored[-top_n:]))
            least[metric] = scored[:top_n]
        else:
            # low BLEU / log-prob after removal marks the region relevant
            most[metric] = scored[:top_n]
            least[metric] = list(reversed(scored[-top_n:]))
    return RegionRelevance(
        grid=grid,
        region_counts=region_counts,
        region_scores=region_scores,
        baselines=baselines,
        most_relevant=most,
        least_relevant=least,
        excluded_small=excluded_small,
        never_removed_count=never_removed,
    )


# ---------------------------------------------------------------------------
# Specialised sampling
# ---------------------------------------------------------------------------


@dataclass
class SampleResult:
    example_ids: list[int]
    total_source_tokens: int
    met_budget: bool
    bounds: tuple[float, float, float, float]
    token_budget: int
    seed: int


def specialised_sample(
    map_: MemorisationMap,
    bounds: tuple[float, float, float, float],
    token_budget: int,
    seed: int,
    src_token_counts: Sequence[int] | None = None,
) -> SampleResult:
    """Uniformly sample examples whose (tm, gs) fall inside ``bounds``.

    ``bounds`` is (min_tm, max_tm, min_gs, max_gs), inclusive. Sampling
    stops once the cumulative whitespace source-token count reaches the
    budget (so the total matches it to within one sentence). A region too
    sparse to meet the budget yields a partial set with a warning.
    """
    min_tm, max_tm, min_gs, max_gs = bounds
    if min_tm > max_tm or min_gs > max_gs:
        raise CartographyError(f"malformed bounds {bounds}")
    counts = _source_token_counts(map_, src_token_counts)
    candidates = np.nonzero(
        map_.valid_mask
        & (map_.tm >= min_tm)
        & (map_.tm <= max_tm)
        & (map_.gs >= min_gs)
        & (map_.gs <= max_gs)
    )[0]
    rng = np.random.default_rng(seed)
    order = rng.permutation(candidates)
    if token_budget <= 0:
        chosen, total, met = [], 0, True
    else:
        cum = np.cumsum(counts[order])
        if cum.size == 0 or cum[-1] < token_budget:
            chosen = map_.ids[order].tolist()
            total = int(cum[-1]) if cum.size else 0
            met = False
        else:
            # include the sentence that crosses the budget: total matches the
            # reference to within one sentence
            take = int(np.searchsorted(cum, token_budget, side="left")) + 1
            chosen = map_.ids[order[:take]].tolist()
            total = int(cum[take - 1])
            met = True
    if not met:
        warnings.warn(
            f"region {bounds} too sparse: sampled {total} of {token_budget} tokens",
            stacklevel=2,
        )
    return SampleResult(
        example_ids=chosen,
        total_source_tokens=total,
        met_budget=met,
        bounds=bounds,
        token_budget=token_budget,
        seed=seed,
    )


# ---------------------------------------------------------------------------
# Statistics: correlations, map comparison, trigrams, buckets, centroids
# ---------------------------------------------------------------------------


def correlation_table(map_: MemorisationMap) -> tuple[np.ndarray, np.ndarray]:
    """Spearman rho of features against metrics (28 x 3) and among features
    (28 x 28), with average-rank tie handling.

    Computed over examples with valid metrics; null feature cells are
    excluded pairwise. Constant columns and column pairs with fewer than 3
    complete rows give NaN.
    """
    if map_.features is None:
        raise CartographyError("map has no features")
    valid = map_.valid_mask
    if valid.sum() < 3:
        raise CartographyError("need >= 3 valid examples")
    columns = [map_.features[valid, c] for c in range(N_FEATURES)]
    columns += [map_.tm[valid], map_.gs[valid], map_.cm[valid]]
    finite = [np.isfinite(col) for col in columns]

    def rho_of(a: int, b: int) -> float:
        mask = finite[a] & finite[b]
        if mask.sum() < 3:
            return math.nan
        x, y = columns[a][mask], columns[b][mask]
        if np.ptp(x) == 0 or np.ptp(y) == 0:
            return math.nan
        return float(stats.spearmanr(x, y).correlation)

    feature_metric = np.full((N_FEATURES, 3), np.nan)
    for f in range(N_FEATURES):
        for m in range(3):
            feature_metric[f, m] = rho_of(f, N_FEATURES + m)
    feature_feature = np.full((N_FEATURES, N_FEATURES), np.nan)
    for f in range(N_FEATURES):
        feature_feature[f, f] = rho_of(f, f)
        for g in range(f + 1, N_FEATURES):
            feature_feature[f, g] = feature_feature[g, f] = rho_of(f, g)
    return feature_metric, feature_feature


def compare_maps(
    map_a: MemorisationMap,
    map_b: MemorisationMap,
    metric: str = "cm",
    join: Sequence[int] | None = None,
) -> float:
    """Pearson r between one metric on the shared examples of two maps."""
    a_valid = set(map_a.ids[map_a.valid_mask].tolist())
    b_valid = set(map_b.ids[map_b.valid_mask].tolist())
    shared = sorted(a_valid & b_valid if join is None else set(join) & a_valid & b_valid)
    if len(shared) < 3:
        raise CartographyError(f"need >= 3 shared valid examples, got {len(shared)}")
    va = np.array([map_a.metric(metric)[map_a.row_of(i)] for i in shared])
    vb = np.array([map_b.metric(metric)[map_b.row_of(i)] for i in shared])
    if np.ptp(va) == 0 or np.ptp(vb) == 0:
        raise CartographyError("correlation undefined: constant metric on one map")
    return float(stats.pearsonr(va, vb)[0])


def trigram_uniqueness(
    map_: MemorisationMap,
    source_tokens: Sequence[Sequence[str]],
    grid: list[GridCoordinate] | None = None,
) -> dict[GridCoordinate, float | None]:
    """Distinct/total source trigram ratio per nearest-assigned coordinate.

    Sentences shorter than 3 tokens contribute nothing; a coordinate whose
    examples have no trigrams gets None.
    """
    if len(source_tokens) != len(map_):
        raise CartographyError("source token rows != map size")
    grid = grid if grid is not None else grid_coordinates()
    assignment = assign_regions(map_, grid)
    out: dict[GridCoordinate, float | None] = {}
    for g, coord in enumerate(grid):
        rows = np.nonzero(assignment == g)[0]
        total = 0
        distinct = set()
        for row in rows:
            toks = source_tokens[row]
            for t in range(len(toks) - 2):
                tri = (toks[t], toks[t + 1], toks[t + 2])
                distinct.add(tri)
                total += 1
        out[coord] = len(distinct) / total if total else None
    return out


def probability_buckets(
    baseline: Sequence[float], condition: Sequence[float], n_buckets: int = 10
) -> list[float | None]:
    """Mean condition-minus-baseline delta per equal-width baseline bucket.

    Tokens are bucketed on [0, 1] by their baseline mean probability; empty
    buckets give None.
    """
    base = np.asarray(baseline, dtype=np.float64)
    cond = np.asarray(condition, dtype=np.float64)
    if base.shape != cond.shape:
        raise CartographyError("baseline and condition probability arrays differ in shape")
    if base.size and (base.min() < 0 or base.max() > 1):
        raise CartographyError("baseline probabilities must lie in [0, 1]")
    idx = np.minimum((base * n_buckets).astype(np.int64), n_buckets - 1)
    out: list[float | None] = []
    for b in range(n_buckets):
        members = idx == b
        if members.any():
            out.append(float(np.mean(cond[members] - base[members])))
        else:
            out.append(None)
    return out


def group_centroids(
    map_: MemorisationMap, labels: Mapping[int, Iterable[str]], bins: int = 20
) -> dict[str, dict]:
    """Per-label (mean tm, mean gs) centroids plus axis-wise histograms.

    Multi-label examples contribute to every one of their labels. Unknown
    example ids are an error.
    """
    id_set = set(map_.ids.tolist())
    unknown = sorted(set(labels) - id_set)
    if unknown:
        raise CartographyError(f"unknown example ids in labels: {unknown[:10]}")
    by_label: dict[str, list[int]] = {}
    for example_id, label_set in labels.items():
        for label in label_set:
            by_label.setdefault(label, []).append(example_id)
    edges = np.linspace(0.0, 1.0, bins + 1)
    out: dict[str, dict] = {}
    for label in sorted(by_label):
        rows = [map_.row_of(i) for i in by_label[label]]
        tm = map_.tm[rows]
        gs = map_.gs[rows]
        keep = ~np.isnan(tm)
        tm, gs = tm[keep], gs[keep]
        if tm.size == 0:
            continue
        out[label] = {
            "count": int(tm.size),
            "centroid": (float(tm.mean()), float(gs.mean())),
            "tm_hist": np.histogram(tm, bins=edges)[0].tolist(),
            "gs_hist": np.histogram(gs, bins=edges)[0].tolist(),
        }
    return out


def trace_cm_of_examples(
    map_: MemorisationMap, example_ids: Sequence[int], bins: int = 20
) -> dict:
    """CM distribution summary (mean, population sd, histogram) over an id set."""
    if len(example_ids) == 0:
        raise CartographyError("empty example id set")
    rows = [map_.row_of(i) for i in example_ids]
    cm = map_.cm[rows]
    cm = cm[~np.isnan(cm)]
    if cm.size == 0:
        raise CartographyError("no valid examples in id set")
    edges = np.linspace(0.0, 1.0, bins + 1)
    return {
        "count": int(cm.size),
        "mean": float(cm.mean()),
        "sd": float(cm.std()),
        "histogram": np.histogram(cm, bins=edges)[0].tolist(),
    }


# ---------------------------------------------------------------------------
# Manifest and performance-record files
# ---------------------------------------------------------------------------


def write_manifest(path: str | Path, meta: Mapping[str, object], example_ids: Sequence[int]) -> str:
    """Header of key=value lines plus one id per line; returns content hash."""
    body_lines = ["#memomap manifest v1"]
    for key in sorted(meta):
        body_lines.append(f"#{key}={meta[key]}")
    body_lines.extend(str(i) for i in example_ids)
    body = "\n".join(body_lines) + "\n"
    digest = hashlib.sha256(body.encode()).hexdigest()
    Path(path).write_text(body + f"#sha256={digest}\n", encoding="utf-8")
    return digest


def read_manifest(path: str | Path) -> tuple[dict, list[int]]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or lines[0] != "#memomap manifest v1":
        raise CartographyError(f"{path}: not a manifest file")
    if not lines[-1].startswith("#sha256="):
        raise CartographyError(f"{path}: missing content hash (truncated?)")
    body = "\n".join(lines[:-1]) + "\n"
    if hashlib.sha256(body.encode()).hexdigest() != lines[-1].split("=", 1)[1]:
        raise CartographyError(f"{path}: content hash mismatch")
    meta: dict = {}
    ids: list[int] = []
    for line in lines[1:-1]:
        if line.startswith("#"):
            key, _, value = line[1:].partition("=")
            meta[key] = value
        elif line:
            ids.append(int(line))
    return meta, ids


def write_performance_records(path: str | Path, records: Iterable[PerformanceRecord]) -> None:
    lines = ["run_id\ti\tj\tseed\tbleu_dev\tmean_logprob\thallucination_ratio"]
    for r in records:
        lines.append(
            f"{r.run_id}\t{r.coordinate.i:g}\t{r.coordinate.j:g}\t{r.seed}"
            f"\t{r.bleu_dev:.9g}\t{r.mean_logprob:.9g}\t{r.hallucination_ratio:.9g}"
        )
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def read_performance_records(path: str | Path) -> list[PerformanceRecord]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("run_id\t"):
        raise CartographyError(f"{path}: missing performance-record header")
    records = []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split("\t")
        if len(parts) != 7:
            raise CartographyError(f"{path}:{lineno}: expected 7 fields, got {len(parts)}")
        records.append(
            PerformanceRecord(
                run_id=parts[0],
                coordinate=GridCoordinate(float(parts[1]), float(parts[2])),
                seed=int(parts[3]),
                bleu_dev=float(parts[4]),
                mean_logprob=float(parts[5]),
                hallucination_ratio=float(parts[6]),
            )
        )
    return records
