"""Feedforward predictor of (TM, GS, CM) from surface features and signals.

Two rectifier hidden layers of 100 units, linear 3-unit output, trained
jointly on all three metrics with Adam on mean squared error. Everything is
plain numpy so training is bit-deterministic for a fixed seed.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

__all__ = [
    "Standardizer",
    "MlpModel",
    "PredictorError",
    "prepare_training_rows",
    "train_mlp",
    "predict",
    "evaluate_predictor",
    "loss_and_gradients",
    "save_model",
    "load_model",
]

METRIC_NAMES = ("tm", "gs", "cm")
MAGIC = "MEMOMAP-MLP 1"


class PredictorError(ValueError):
    pass


@dataclass
class Standardizer:
    """Per-input z-score parameters fitted on the training rows."""

    mean: np.ndarray
    scale: np.ndarray  # zero-variance inputs keep scale 1 (pass-through)

    @classmethod
    def fit(cls, x: np.ndarray) -> "Standardizer":
        mean = x.mean(axis=0)
        scale = x.std(axis=0)
        scale = np.where(scale == 0, 1.0, scale)
        return cls(mean=mean, scale=scale)

    def transform(self, x: np.ndarray) -> np.ndarray:
        return (x - self.mean) / self.scale


@dataclass
class MlpModel:
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    input_mode: str
    standardizer: Standardizer | None
    seed: int
    corpus_hash: str = ""
    epoch_losses: list[float] = field(default_factory=list)
    null_columns: list[int] = field(default_factory=list)  # zero-filled at train time

    @property
    def layer_sizes(self) -> list[int]:
        return [self.weights[0].shape[0]] + [w.shape[1] for w in self.weights]

    @property
    def n_inputs(self) -> int:
        return self.weights[0].shape[0]


def _input_mode_for(d: int) -> str:
    if d == 28:
        return "features"
    if d == 34:
        return "features+signals"
    return f"custom:{d}"


def prepare_training_rows(x: np.ndarray, y: np.ndarray) -> tuple[np.ndarray, np.ndarray, dict]:
    """Apply the null policy ahead of training.

    Columns that are null on every row (the feature's inputs were absent
    corpus-wide, e.g. no backtranslations) are zero-filled so the input
    width stays fixed; remaining rows with null cells or null targets are
    dropped. Returns the kept rows plus a report with ``null_columns``,
    ``kept_rows`` (indices into the input), and ``dropped`` count.
    """
    x = np.array(x, dtype=np.float64, copy=True)
    y = np.asarray(y, dtype=np.float64)
    null_columns = np.nonzero(~np.isfinite(x).any(axis=0))[0].tolist()
    x[:, null_columns] = 0.0
    keep = np.isfinite(x).all(axis=1) & np.isfinite(y).all(axis=1)
    report = {
        "null_columns": null_columns,
        "kept_rows": np.nonzero(keep)[0],
        "dropped": int((~keep).sum()),
    }
    return x[keep], y[keep], report


def _forward(weights, biases, x):
    """Return (output, per-layer activations) with rectifier hidden layers."""
    activations = [x]
    h = x
    for i, (w, b) in enumerate(zip(weights, biases)):
        z = h @ w + b
        h = z if i == len(weights) - 1 else np.maximum(z, 0.0)
        activations.append(h)
    return h, activations


def loss_and_gradients(weights, biases, x, y):
    """MSE over all outputs plus analytic gradients (checked against finite
    differences in the test suite)."""
    out, acts = _forward(weights, biases, x)
    diff = out - y
    loss = float(np.mean(diff**2))
    grad_out = 2.0 * diff / diff.size
    grads_w = [np.zeros_like(w) for w in weights]
    grads_b = [np.zeros_like(b) for b in biases]
    delta = grad_out
    for layer in range(len(weights) - 1, -1, -1):
        grads_w[layer] = acts[layer].T @ delta
        grads_b[layer] = delta.sum(axis=0)
        if layer > 0:
            delta = (delta @ weights[layer].T) * (acts[layer] > 0)
    return loss, grads_w, grads_b


def _init_params(layer_sizes, rng):
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_sizes, layer_sizes[1:]):
        limit = np.sqrt(6.0 / (fan_in + fan_out))
        weights.append(rng.uniform(-limit, limit, size=(fan_in, fan_out)))
        biases.append(np.zeros(fan_out))
    return weights, biases


def train_mlp(
    inputs: np.ndarray,
    targets: np.ndarray,
    seed: int = 0,
    epochs: int = 20,
    learning_rate: float = 1e-3,
    batch_size: int | None = None,
    hidden: tuple[int, int] = (100, 100),
    standardize: bool = True,
    corpus_hash: str = "",
    betas: tuple[float, float] = (0.9, 0.999),
    eps: float = 1e-8,
    null_columns: list[int] | None = None,
) -> MlpModel:
    """Fit the joint (tm, gs, cm) regressor.

    Rows with non-finite inputs are rejected with their ids; impute or drop
    upstream. Mini-batch size defaults to min(200, n). The per-epoch
    full-dataset loss is recorded on the model.
    """
    x = np.asarray(inputs, dtype=np.float64)
    y = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or y.ndim != 2 or y.shape[1] != 3:
        raise PredictorError("inputs must be (n, d) and targets (n, 3)")
    if x.shape[0] != y.shape[0]:
        raise PredictorError("inputs and targets row counts differ")
    if x.shape[0] < 10:
        raise PredictorError(f"need at least 10 rows, got {x.shape[0]}")
    bad = np.nonzero(~np.isfinite(x).all(axis=1))[0]
    if bad.size:
        raise PredictorError(f"non-finite inputs in rows {bad[:20].tolist()}")
    if not np.isfinite(y).all() or y.min() < 0 or y.max() > 1:
        raise PredictorError("targets must be finite (tm, gs, cm) triples in [0, 1]")

    n, d = x.shape
    standardizer = Standardizer.fit(x) if standardize else None
    if standardizer is not None:
        x = standardizer.transform(x)

    rng = np.random.default_rng(seed)
    layer_sizes = [d, *hidden, 3]
    weights, biases = _init_params(layer_sizes, rng)

    b1, b2 = betas
    m_w = [np.zeros_like(w) for w in weights]
    v_w = [np.zeros_like(w) for w in weights]
    m_b = [np.zeros_like(b) for b in biases]
    v_b = [np.zeros_like(b) for b in biases]
    step = 0
    bs = batch_size if batch_size is not None else min(200, n)

    epoch_losses = []
    for _ in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, bs):
            batch = order[start : start + bs]
            _, gw, gb = loss_and_gradients(weights, biases, x[batch], y[batch])
            step += 1
            for params, grads, ms, vs in ((weights, gw, m_w, v_w), (biases, gb, m_b, v_b)):
                for i in range(len(params)):
                    ms[i] = b1 * ms[i] + (1 - b1) * grads[i]
                    vs[i] = b2 * vs[i] + (1 - b2) * grads[i] ** 2
                    m_hat = ms[i] / (1 - b1**step)
                    v_hat = vs[i] / (1 - b2**step)
                    params[i] -= learning_rate * m_hat / (np.sqrt(v_hat) + eps)
        loss, _, _ = loss_and_gradients(weights, biases, x, y)
        epoch_losses.append(loss)

    return MlpModel(
        weights=weights,
        biases=biases,
        input_mode=_input_mode_for(d),
        standardizer=standardizer,
        seed=seed,
        corpus_hash=corpus_hash,
        epoch_losses=epoch_losses,
        null_columns=list(null_columns) if null_columns else [],
    )


def predict(
    model: MlpModel, inputs: np.ndarray, recap_cm: bool = True
) -> tuple[np.ndarray, np.ndarray]:
    """Predict (tm, gs, cm) rows, clamped to [0, 1].

    With ``recap_cm`` the cm column is replaced by max(0, tm - gs) so
    downstream maps keep the metric identity. The boolean mask marks rows
    whose raw outputs were changed by clamping or re-capping.
    """
    x = np.array(inputs, dtype=np.float64, copy=True)
    single = x.ndim == 1
    if single:
        x = x[None, :]
    if x.shape[1] != model.n_inputs:
        raise PredictorError(f"input dimension {x.shape[1]} != model dimension {model.n_inputs}")
    if model.null_columns:
        x[:, model.null_columns] = 0.0  # match the train-time null policy
    if model.standardizer is not None:
        x = model.standardizer.transform(x)
    raw, _ = _forward(model.weights, model.biases, x)
    out = np.clip(raw, 0.0, 1.0)
    if recap_cm:
        out[:, 2] = np.maximum(0.0, out[:, 0] - out[:, 1])
    adjusted = np.any(out != raw, axis=1)
    if single:
        return out[0], adjusted[0]
    return out, adjusted


def evaluate_predictor(model: MlpModel, inputs: np.ndarray, targets: np.ndarray) -> dict:
    """Per-metric Pearson r and mean absolute difference.

    Supports cross-corpus evaluation: the rows may come from a different
    language pair than the model was trained on. Zero-variance targets get
    r = None with the MAE still reported.
    """
    y = np.asarray(targets, dtype=np.float64)
    if y.shape[0] < 3:
        raise PredictorError("need at least 3 evaluation rows")
    preds, _ = predict(model, inputs)
    result = {}
    for col, name in enumerate(METRIC_NAMES):
        mae = float(np.mean(np.abs(preds[:, col] - y[:, col])))
        if np.ptp(y[:, col]) == 0 or np.ptp(preds[:, col]) == 0:
            r = None
        else:
            r = float(stats.pearsonr(preds[:, col], y[:, col])[0])
        result[name] = {"r": r, "mae": mae}
    return result


def _model_arrays(model: MlpModel) -> list[tuple[str, np.ndarray]]:
    arrays = []
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        arrays.append((f"W{i}", w))
        arrays.append((f"b{i}", b))
    if model.standardizer is not None:
        arrays.append(("std_mean", model.standardizer.mean))
        arrays.append(("std_scale", model.standardizer.scale))
    return arrays


def save_model(model: MlpModel, path: str | Path) -> None:
    """Self-describing file: text header, then little-endian float64 arrays."""
    arrays = _model_arrays(model)
    header = {
        "layer_sizes": model.layer_sizes,
        "input_mode": model.input_mode,
        "seed": model.seed,
        "corpus_hash": model.corpus_hash,
        "standardize": model.standardizer is not None,
        "null_columns": model.null_columns,
        "epoch_losses": model.epoch_losses,
        "arrays": [[name, list(a.shape)] for name, a in arrays],
    }
    with open(path, "wb") as f:
        f.write(MAGIC.encode() + b"\n")
        f.write(json.dumps(header, sort_keys=True).encode() + b"\n")
        for _, a in arrays:
            f.write(np.ascontiguousarray(a, dtype="<f8").tobytes())


def load_model(path: str | Path) -> MlpModel:
    blob = Path(path).read_bytes()
    magic_end = blob.index(b"\n")
    if blob[:magic_end].decode() != MAGIC:
        raise PredictorError(f"{path}: not a {MAGIC} file")
    header_end = blob.index(b"\n", magic_end + 1)
    header = json.loads(blob[magic_end + 1 : header_end].decode())
    offset = header_end + 1
    arrays = {}
    for name, shape in header["arrays"]:
        count = int(np.prod(shape)) if shape else 1
        end = offset + count * 8
        if end > len(blob):
            raise PredictorError(f"{path}: truncated array payload at {name}")
        arrays[name] = np.frombuffer(blob[offset:end], dtype="<f8").reshape(shape).copy()
        offset = end
    if offset != len(blob):
        raise PredictorError(f"{path}: trailing bytes after arrays")
    n_layers = len(header["layer_sizes"]) - 1
    weights = [arrays[f"W{i}"] for i in range(n_layers)]
    biases = [arrays[f"b{i}"] for i in range(n_layers)]
    standardizer = (
        Standardizer(mean=arrays["std_mean"], scale=arrays["std_scale"])
        if header["standardize"]
        else None
    )
    return MlpModel(
        weights=weights,
        biases=biases,
        input_mode=header["input_mode"],
        standardizer=standardizer,
        seed=header["seed"],
        corpus_hash=header["corpus_hash"],
        epoch_losses=list(header.get("epoch_losses", [])),
        null_columns=list(header.get("null_columns", [])),
    )


def features_hash(inputs: np.ndarray) -> str:
    """Stable hash of a training matrix, stamped into saved models."""
    return hashlib.sha256(np.ascontiguousarray(inputs, dtype="<f8").tobytes()).hexdigest()
