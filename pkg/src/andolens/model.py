"""Small feedforward classifiers: the analyzed network and its baseline twin.

Everything here is deliberately plain: float64 numpy, mini-batch SGD with a
fixed learning rate, JSON checkpoints whose weights round-trip bit-exactly.
The per-subset analysis downstream needs near-exact score reconstruction, so
no reduced precision anywhere.
"""

from __future__ import annotations

import json
import logging
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .fileio import atomic_write_json, atomic_write_text

log = logging.getLogger(__name__)

CHECKPOINT_FORMAT_VERSION = 1
ACTIVATIONS = ("relu", "tanh")

# Probability clamp for the log-odds confidence score. The raw log-odds
# diverges as the predicted probability reaches 0 or 1; clamping keeps every
# masked-output table entry finite.
SCORE_EPS = 1e-7

BATCH_SIZE = 32


class CheckpointFormatError(ValueError):
    """A checkpoint file is malformed, truncated, or has the wrong version."""


@dataclass
class ModelSpec:
    """Architecture and seed of a feedforward classifier."""

    input_dim: int
    hidden_dims: tuple[int, ...]
    num_classes: int
    seed: int
    activation: str = "relu"

    def __post_init__(self) -> None:
        self.hidden_dims = tuple(int(h) for h in self.hidden_dims)
        if self.input_dim < 1:
            raise ValueError(f"input_dim must be >= 1, got {self.input_dim}")
        if self.num_classes < 2:
            raise ValueError(f"num_classes must be >= 2, got {self.num_classes}")
        if any(h < 1 for h in self.hidden_dims):
            raise ValueError(f"hidden layer widths must be >= 1, got {self.hidden_dims}")
        if self.activation not in ACTIVATIONS:
            raise ValueError(f"activation must be one of {ACTIVATIONS}, got {self.activation!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be non-negative, got {self.seed}")

    def layer_shapes(self) -> list[tuple[int, int]]:
        dims = [self.input_dim, *self.hidden_dims, self.num_classes]
        return list(zip(dims[:-1], dims[1:]))


@dataclass
class Model:
    """A classifier: spec, per-layer weight matrices and bias vectors.

    Models are treated as immutable once loaded from a checkpoint; only
    train() mutates weights, and it does so on the model it was given.
    """

    spec: ModelSpec
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    epoch: int = 0
    loss_history: list[tuple[int, float]] = field(default_factory=list)

    def __post_init__(self) -> None:
        expected = self.spec.layer_shapes()
        if len(self.weights) != len(expected) or len(self.biases) != len(expected):
            raise ValueError("layer count does not match spec")
        for layer, (w, b, shape) in enumerate(zip(self.weights, self.biases, expected)):
            if w.shape != shape or b.shape != (shape[1],):
                raise ValueError(
                    f"layer {layer}: weight shape {w.shape}/bias shape {b.shape} "
                    f"inconsistent with spec shape {shape}"
                )
        if self.epoch < 0:
            raise ValueError("epoch must be >= 0")


@dataclass
class Dataset:
    """Feature matrix plus integer class labels."""

    X: np.ndarray
    labels: np.ndarray
    role: str  # "train" or "test"

    def __post_init__(self) -> None:
        self.X = np.asarray(self.X, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.X.ndim != 2 or self.X.shape[0] == 0:
            raise ValueError("dataset must be a nonempty 2-D feature matrix")
        if self.labels.shape != (self.X.shape[0],):
            raise ValueError("labels must be a vector matching the number of rows")
        if np.any(self.labels < 0):
            raise ValueError("labels must be non-negative class indices")
        if self.role not in ("train", "test"):
            raise ValueError(f"role must be 'train' or 'test', got {self.role!r}")

    def __len__(self) -> int:
        return self.X.shape[0]


def init_model(spec: ModelSpec) -> Model:
    """Deterministically initialize a model from its spec's seed.

    Weights and biases are drawn uniformly from [-1/sqrt(fan_in), +1/sqrt(fan_in)]
    using one seeded generator, layer by layer, so equal specs give bit-identical
    models.
    """
    rng = np.random.default_rng(spec.seed)
    weights, biases = [], []
    for fan_in, fan_out in spec.layer_shapes():
        bound = 1.0 / np.sqrt(fan_in)
        weights.append(rng.uniform(-bound, bound, size=(fan_in, fan_out)))
        biases.append(rng.uniform(-bound, bound, size=fan_out))
    return Model(spec=spec, weights=weights, biases=biases, epoch=0)


def forward_logits(model: Model, X: np.ndarray) -> np.ndarray:
    """Class logits for a batch of inputs, shape (m, num_classes)."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.spec.input_dim:
        raise ValueError(
            f"input has {X.shape[-1] if X.ndim else 0} features, "
            f"model expects {model.spec.input_dim}"
        )
    h = X
    last = len(model.weights) - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if layer == last else _activate(z, model.spec.activation)
    return h


def _activate(z: np.ndarray, activation: str) -> np.ndarray:
    return np.maximum(z, 0.0) if activation == "relu" else np.tanh(z)


def _softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def predict_proba(model: Model, x: np.ndarray) -> np.ndarray:
    """Softmax class probabilities for a single input vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.shape != (model.spec.input_dim,):
        raise ValueError(f"expected input of shape ({model.spec.input_dim},), got {x.shape}")
    return _softmax(forward_logits(model, x[None, :]))[0]


def score(model: Model, x: np.ndarray, label: int) -> float:
    """Log-odds confidence for the given class: log(p / (1 - p)).

    p is the softmax probability of `label`, clamped to
    [SCORE_EPS, 1 - SCORE_EPS] so the score stays finite.
    """
    return float(score_batch(model, np.asarray(x, dtype=np.float64)[None, :], label)[0])


def score_batch(model: Model, X: np.ndarray, label: int) -> np.ndarray:
    """Vectorized log-odds score for many inputs against one class label."""
    if not 0 <= label < model.spec.num_classes:
        raise ValueError(f"label {label} out of range for {model.spec.num_classes} classes")
    p = _softmax(forward_logits(model, X))[:, label]
    p = np.clip(p, SCORE_EPS, 1.0 - SCORE_EPS)
    return np.log(p) - np.log1p(-p)


def cross_entropy(model: Model, data: Dataset) -> float:
    """Mean cross-entropy of the model on a dataset (natural log)."""
    if np.any(data.labels >= model.spec.num_classes):
        raise ValueError("dataset contains labels outside the model's class range")
    logits = forward_logits(model, data.X)
    shifted = logits - logits.max(axis=1, keepdims=True)
    log_norm = np.log(np.exp(shifted).sum(axis=1))
    rows = np.arange(len(data))
    return float(np.mean(log_norm - shifted[rows, data.labels]))


def train(
    model: Model,
    data: Dataset,
    epochs: int,
    lr: float = 0.05,
    checkpoint_every: int = 10,
    out_dir: str | Path | None = None,
) -> list[Path]:
    """Train in place by mini-batch SGD on cross-entropy; write checkpoints.

    Checkpoints go to out_dir at epoch 0, every `checkpoint_every` epochs, and
    at the final epoch. Shuffling is driven by a generator derived from the
    model seed, so identical (spec, data, hyperparameters) reproduce identical
    checkpoints. Returns checkpoint paths in epoch order (empty if out_dir is
    None).

    Raises FloatingPointError if the training loss goes non-finite.
    """
    if data.role != "train":
        raise ValueError(f"training requires a dataset with role='train', got {data.role!r}")
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if lr <= 0:
        raise ValueError("lr must be positive")
    if checkpoint_every < 1:
        raise ValueError("checkpoint_every must be >= 1")
    if np.any(data.labels >= model.spec.num_classes):
        raise ValueError("dataset labels exceed the model's class count")
    if data.X.shape[1] != model.spec.input_dim:
        raise ValueError("dataset feature count does not match model input_dim")

    rng = np.random.default_rng([model.spec.seed, 1])
    start = model.epoch
    final = start + epochs
    paths: list[Path] = []

    def _log_loss(epoch: int) -> None:
        loss = cross_entropy(model, data)
        if not np.isfinite(loss):
            raise FloatingPointError(f"non-finite training loss at epoch {epoch}")
        model.loss_history.append((epoch, loss))

    def _maybe_checkpoint(epoch: int) -> None:
        if out_dir is None:
            return
        if epoch == start or epoch == final or epoch % checkpoint_every == 0:
            path = Path(out_dir) / f"ckpt_{epoch:05d}.json"
            save_checkpoint(model, path)
            paths.append(path)

    _log_loss(start)
    _maybe_checkpoint(start)
    m = len(data)
    for epoch in range(start + 1, final + 1):
        order = rng.permutation(m)
        for lo in range(0, m, BATCH_SIZE):
            idx = order[lo : lo + BATCH_SIZE]
            _sgd_step(model, data.X[idx], data.labels[idx], lr)
        model.epoch = epoch
        _log_loss(epoch)
        _maybe_checkpoint(epoch)
    return paths


def _sgd_step(model: Model, X: np.ndarray, y: np.ndarray, lr: float) -> None:
    acts = [X]
    h = X
    last = len(model.weights) - 1
    for layer, (w, b) in enumerate(zip(model.weights, model.biases)):
        z = h @ w + b
        h = z if layer == last else _activate(z, model.spec.activation)
        acts.append(h)

    probs = _softmax(acts[-1])
    probs[np.arange(len(y)), y] -= 1.0
    delta = probs / len(y)
    for layer in range(last, -1, -1):
        grad_w = acts[layer].T @ delta
        grad_b = delta.sum(axis=0)
        if layer > 0:
            delta = delta @ model.weights[layer].T
            if model.spec.activation == "relu":
                delta *= acts[layer] > 0
            else:
                delta *= 1.0 - acts[layer] ** 2
        model.weights[layer] -= lr * grad_w
        model.biases[layer] -= lr * grad_b


def save_checkpoint(model: Model, path: str | Path) -> Path:
    """Serialize a model to a single JSON document (atomic write)."""
    doc = {
        "format_version": CHECKPOINT_FORMAT_VERSION,
        "spec": {
            "input_dim": model.spec.input_dim,
            "hidden_dims": list(model.spec.hidden_dims),
            "num_classes": model.spec.num_classes,
            "seed": model.spec.seed,
            "activation": model.spec.activation,
        },
        "epoch": model.epoch,
        "loss_history": [[e, loss] for e, loss in model.loss_history],
        "weights": [
            {"W": w.tolist(), "b": b.tolist()}
            for w, b in zip(model.weights, model.biases)
        ],
    }
    return atomic_write_json(path, doc, indent=None)


def load_checkpoint(path: str | Path) -> Model:
    """Load a checkpoint; round-trips save_checkpoint output bit-exactly."""
    try:
        doc = json.loads(Path(path).read_text(encoding="utf-8"))
    except (json.JSONDecodeError, UnicodeDecodeError) as exc:
        raise CheckpointFormatError(f"{path}: not a valid checkpoint JSON ({exc})") from exc
    except OSError as exc:
        raise CheckpointFormatError(f"{path}: cannot read checkpoint ({exc})") from exc
    if not isinstance(doc, dict):
        raise CheckpointFormatError(f"{path}: checkpoint must be a JSON object")
    version = doc.get("format_version")
    if version != CHECKPOINT_FORMAT_VERSION:
        raise CheckpointFormatError(
            f"{path}: unsupported format_version {version!r} "
            f"(expected {CHECKPOINT_FORMAT_VERSION})"
        )
    try:
        spec = ModelSpec(
            input_dim=int(doc["spec"]["input_dim"]),
            hidden_dims=tuple(doc["spec"]["hidden_dims"]),
            num_classes=int(doc["spec"]["num_classes"]),
            seed=int(doc["spec"]["seed"]),
            activation=str(doc["spec"]["activation"]),
        )
        weights = [np.asarray(layer["W"], dtype=np.float64) for layer in doc["weights"]]
        biases = [np.asarray(layer["b"], dtype=np.float64) for layer in doc["weights"]]
        model = Model(
            spec=spec,
            weights=weights,
            biases=biases,
            epoch=int(doc["epoch"]),
            loss_history=[(int(e), float(l)) for e, l in doc["loss_history"]],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise CheckpointFormatError(f"{path}: malformed checkpoint ({exc})") from exc
    return model


def save_dataset_csv(data: Dataset, path: str | Path) -> Path:
    """Write a dataset as CSV: feature columns f0..f{n-1} plus a label column."""
    n = data.X.shape[1]
    lines = [",".join([f"f{i}" for i in range(n)] + ["label"])]
    for row, label in zip(data.X, data.labels):
        lines.append(",".join([repr(float(v)) for v in row] + [str(int(label))]))
    return atomic_write_text(path, "\n".join(lines) + "\n")


def load_dataset_csv(path: str | Path, role: str) -> Dataset:
    """Read a dataset written by save_dataset_csv."""
    text = Path(path).read_text(encoding="utf-8")
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if len(lines) < 2:
        raise ValueError(f"{path}: dataset file has no sample rows")
    header = lines[0].split(",")
    if header[-1] != "label":
        raise ValueError(f"{path}: last CSV column must be 'label', got {header[-1]!r}")
    rows, labels = [], []
    for ln in lines[1:]:
        cells = ln.split(",")
        if len(cells) != len(header):
            raise ValueError(f"{path}: row has {len(cells)} cells, header has {len(header)}")
        rows.append([float(c) for c in cells[:-1]])
        labels.append(int(cells[-1]))
    return Dataset(X=np.asarray(rows), labels=np.asarray(labels), role=role)
