"""Minimal dense neural core on float64 numpy arrays.

MLP forward/backward, the two pretraining losses, SGD-momentum and AdamW
with decoupled weight decay, a schedule-driven training loop, and a
central-finite-difference gradient checker.  Models are parameter dicts
(name -> ndarray), shared with the transformer encoder in ``vit``.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable, Iterable, Sequence

import numpy as np

from .errors import NumericError, ValidationError
from .schedules import ScheduleConfig, lr_at_step
from .seeding import rng_for

CHECKPOINT_MAGIC = b"AMDL"

LabelSets = Sequence[Iterable[int]]


# ----------------------------------------------------------------------
# MLP model
# ----------------------------------------------------------------------

@dataclass
class MlpModel:
    """Fully-connected net; ReLU hidden layers, linear output."""

    layer_dims: list[int]
    weights: list[np.ndarray]
    biases: list[np.ndarray]
    activation: str = "relu"

    @classmethod
    def init(cls, layer_dims: Sequence[int], seed: int = 0, activation: str = "relu") -> "MlpModel":
        """Fan-in-scaled uniform weights, zero biases."""
        if len(layer_dims) < 2:
            raise ValidationError("need at least input and output dims")
        weights, biases = [], []
        for i, (d_in, d_out) in enumerate(zip(layer_dims[:-1], layer_dims[1:])):
            bound = 1.0 / np.sqrt(d_in)
            weights.append(rng_for(seed, 10, i).uniform(-bound, bound, size=(d_in, d_out)))
            biases.append(np.zeros(d_out))
        return cls(list(layer_dims), weights, biases, activation)

    def parameters(self) -> dict[str, np.ndarray]:
        params: dict[str, np.ndarray] = {}
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            params[f"layers.{i}.w"] = w
            params[f"layers.{i}.b"] = b
        return params

    def set_parameters(self, params: dict[str, np.ndarray]) -> None:
        for i in range(len(self.weights)):
            self.weights[i] = params[f"layers.{i}.w"]
            self.biases[i] = params[f"layers.{i}.b"]

    def param_count(self) -> int:
        return sum(w.size + b.size for w, b in zip(self.weights, self.biases))

    def copy(self) -> "MlpModel":
        return MlpModel(
            list(self.layer_dims),
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            self.activation,
        )


def _check_batch(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    x = np.asarray(batch, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.layer_dims[0]:
        raise ValidationError(
            f"batch shape {x.shape} incompatible with input dim {model.layer_dims[0]}"
        )
    return x


def mlp_forward(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """Logits for a (batch, input_dim) array."""
    x = _check_batch(model, batch)
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        x = x @ w + b
        if i < last and model.activation == "relu":
            x = np.maximum(x, 0.0)
    return x


def mlp_embed(model: MlpModel, batch: np.ndarray) -> np.ndarray:
    """Activations of the last hidden layer (the input itself for 1-layer nets)."""
    x = _check_batch(model, batch)
    for i, (w, b) in enumerate(zip(model.weights[:-1], model.biases[:-1])):
        x = x @ w + b
        if model.activation == "relu":
            x = np.maximum(x, 0.0)
    return x


def _mlp_forward_cached(model: MlpModel, x: np.ndarray) -> tuple[np.ndarray, list[np.ndarray]]:
    inputs = []
    last = len(model.weights) - 1
    for i, (w, b) in enumerate(zip(model.weights, model.biases)):
        inputs.append(x)
        x = x @ w + b
        if i < last and model.activation == "relu":
            x = np.maximum(x, 0.0)
    return x, inputs


def _mlp_backward(
    model: MlpModel, inputs: list[np.ndarray], dlogits: np.ndarray
) -> dict[str, np.ndarray]:
    grads: dict[str, np.ndarray] = {}
    delta = dlogits
    last = len(model.weights) - 1
    for i in range(last, -1, -1):
        x = inputs[i]
        if i < last and model.activation == "relu":
            # inputs[i+1] is the post-ReLU activation feeding layer i+1
            delta = delta * (inputs[i + 1] > 0.0)
        grads[f"layers.{i}.w"] = x.T @ delta
        grads[f"layers.{i}.b"] = delta.sum(axis=0)
        if i > 0:
            delta = delta @ model.weights[i].T
    return grads


# ----------------------------------------------------------------------
# Losses
# ----------------------------------------------------------------------

def _target_matrix(positives: LabelSets, n_classes: int, uniform: bool) -> np.ndarray:
    t = np.zeros((len(positives), n_classes))
    for i, pos in enumerate(positives):
        pos = list(pos)
        if not pos and uniform:
            raise ValidationError(f"row {i} has no positive labels")
        for lab in pos:
            if not 0 <= lab < n_classes:
                raise ValidationError(f"label {lab} outside [0, {n_classes})")
            t[i, lab] = 1.0 / len(pos) if uniform else 1.0
    return t


def multi_label_softmax_loss(
    logits: np.ndarray, positives: LabelSets
) -> tuple[float, np.ndarray]:
    """Cross entropy against a uniform distribution over each row's positives.

    Returns (mean loss, d loss / d logits).
    """
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != len(positives):
        raise ValidationError("logits must be (batch, classes) matching positives")
    b, k = z.shape
    target = _target_matrix(positives, k, uniform=True)
    m = z.max(axis=1, keepdims=True)
    lse = m + np.log(np.exp(z - m).sum(axis=1, keepdims=True))
    logp = z - lse
    loss = float(-(target * logp).sum() / b)
    grad = (np.exp(logp) - target) / b
    return loss, grad


def sigmoid_bce_loss(logits: np.ndarray, positives: LabelSets) -> tuple[float, np.ndarray]:
    """Per-class sigmoid binary cross entropy, averaged over rows and classes."""
    z = np.asarray(logits, dtype=np.float64)
    if z.ndim != 2 or z.shape[0] != len(positives):
        raise ValidationError("logits must be (batch, classes) matching positives")
    b, k = z.shape
    y = _target_matrix(positives, k, uniform=False)
    # stable: max(z,0) - z*y + log1p(exp(-|z|))
    loss = float((np.maximum(z, 0.0) - z * y + np.log1p(np.exp(-np.abs(z)))).sum() / (b * k))
    sig = 0.5 * (1.0 + np.tanh(0.5 * z))
    grad = (sig - y) / (b * k)
    return loss, grad


LOSSES: dict[str, Callable[[np.ndarray, LabelSets], tuple[float, np.ndarray]]] = {
    "softmax": multi_label_softmax_loss,
    "bce": sigmoid_bce_loss,
}


# ----------------------------------------------------------------------
# Optimizers
# ----------------------------------------------------------------------

@dataclass
class OptimizerConfig:
    kind: str = "adamw"  # adamw | sgd
    lr: float = 1e-3
    momentum: float = 0.9
    betas: tuple[float, float] = (0.9, 0.999)
    eps: float = 1e-8
    weight_decay: float = 0.0

    def __post_init__(self) -> None:
        if self.kind not in ("adamw", "sgd"):
            raise ValidationError(f"unknown optimizer kind: {self.kind}")


class OptimizerState:
    """Step counter plus per-parameter moment buffers."""

    def __init__(self, config: OptimizerConfig, params: dict[str, np.ndarray]) -> None:
        self.config = config
        self.step = 0
        if config.kind == "sgd":
            self.velocity = {k: np.zeros_like(v) for k, v in params.items()}
        else:
            self.m = {k: np.zeros_like(v) for k, v in params.items()}
            self.v = {k: np.zeros_like(v) for k, v in params.items()}


def optimizer_step(
    state: OptimizerState,
    params: dict[str, np.ndarray],
    grads: dict[str, np.ndarray],
    lr: float | None = None,
) -> dict[str, np.ndarray]:
    """One in-place update; ``lr`` overrides the config base rate (schedules)."""
    cfg = state.config
    rate = cfg.lr if lr is None else lr
    for name, g in grads.items():
        if not np.all(np.isfinite(g)):
            raise NumericError(f"non-finite gradient for {name}")
    state.step += 1
    if cfg.kind == "sgd":
        mu = cfg.momentum
        for name, p in params.items():
            g = grads[name]
            v = state.velocity[name]
            v *= mu
            v += g
            if cfg.weight_decay:
                p -= rate * cfg.weight_decay * p
            p -= rate * v
    else:
        b1, b2 = cfg.betas
        t = state.step
        c1 = 1.0 - b1**t
        c2 = 1.0 - b2**t
        for name, p in params.items():
            g = grads[name]
            m = state.m[name]
            v = state.v[name]
            m *= b1
            m += (1.0 - b1) * g
            v *= b2
            v += (1.0 - b2) * g * g
            if cfg.weight_decay:
                p -= rate * cfg.weight_decay * p
            p -= rate * (m / c1) / (np.sqrt(v / c2) + cfg.eps)
    return params


# ----------------------------------------------------------------------
# Training loop
# ----------------------------------------------------------------------

@dataclass
class TrainHistory:
    steps: list[int] = field(default_factory=list)
    lrs: list[float] = field(default_factory=list)
    losses: list[float] = field(default_factory=list)

    def append(self, step: int, lr: float, loss: float) -> None:
        self.steps.append(step)
        self.lrs.append(lr)
        self.losses.append(loss)


def iterate_batches(
    n: int, batch_size: int, total_steps: int, seed: int
) -> Iterable[np.ndarray]:
    """Seed-determined batch index stream: per-epoch permutations, in order."""
    step = 0
    epoch = 0
    while step < total_steps:
        order = rng_for(seed, 20, epoch).permutation(n)
        for lo in range(0, n, batch_size):
            if step >= total_steps:
                return
            yield order[lo : lo + batch_size]
            step += 1
        epoch += 1


def train_classifier(
    model: MlpModel,
    features: np.ndarray,
    label_sets: LabelSets,
    loss_kind: str = "softmax",
    optimizer: OptimizerConfig | None = None,
    schedule: ScheduleConfig | None = None,
    batch_size: int = 32,
    seed: int = 0,
) -> tuple[MlpModel, TrainHistory]:
    """Mini-batch training of an MLP on (vector, label-set) data.

    Runs for ``schedule.total_steps`` steps; deterministic given the seed.
    """
    x = np.asarray(features, dtype=np.float64)
    if x.shape[0] != len(label_sets):
        raise ValidationError("features and label sets disagree in length")
    if x.shape[0] == 0:
        raise ValidationError("dataset is empty")
    optimizer = optimizer or OptimizerConfig()
    schedule = schedule or ScheduleConfig(kind="constant", total_steps=100, base_lr=optimizer.lr)
    loss_fn = LOSSES[loss_kind]

    model = model.copy()
    params = model.parameters()
    state = OptimizerState(optimizer, params)
    history = TrainHistory()
    label_sets = [frozenset(s) for s in label_sets]

    for step, batch_idx in enumerate(
        iterate_batches(x.shape[0], batch_size, schedule.total_steps, seed)
    ):
        xb = x[batch_idx]
        yb = [label_sets[i] for i in batch_idx]
        logits, caches = _mlp_forward_cached(model, xb)
        loss, dlogits = loss_fn(logits, yb)
        if not np.isfinite(loss):
            raise NumericError(f"non-finite loss at step {step}")
        grads = _mlp_backward(model, caches, dlogits)
        lr = lr_at_step(schedule, step)
        optimizer_step(state, params, grads, lr=lr)
        history.append(step, lr, loss)
    return model, history


def top1_accuracy(logits: np.ndarray, label_sets: LabelSets) -> float:
    """Fraction of rows whose argmax logit is one of the row's labels."""
    pred = np.argmax(logits, axis=1)
    hits = sum(1 for p, labs in zip(pred, label_sets) if p in labs)
    return hits / len(label_sets) if len(label_sets) else 0.0


# ----------------------------------------------------------------------
# Gradient checking
# ----------------------------------------------------------------------

def grad_check(
    loss_fn: Callable[[dict[str, np.ndarray]], tuple[float, dict[str, np.ndarray]]],
    params: dict[str, np.ndarray],
    epsilon: float = 1e-5,
    max_coords: int = 512,
    seed: int = 0,
    value_fn: Callable[[dict[str, np.ndarray]], float] | None = None,
) -> float:
    """Max relative error between analytic and central-difference gradients.

    Samples at most ``max_coords`` coordinates per tensor to bound runtime.
    ``value_fn``, when given, is a cheaper loss-only evaluation used for the
    two-sided perturbations.
    """
    if epsilon <= 0:
        raise ValidationError("epsilon must be positive")
    if value_fn is None:
        value_fn = lambda p: loss_fn(p)[0]
    _, analytic = loss_fn(params)
    worst = 0.0
    for t_idx, (name, p) in enumerate(sorted(params.items())):
        flat = p.reshape(-1)
        n = flat.size
        if n <= max_coords:
            coords = np.arange(n)
        else:
            coords = rng_for(seed, 30, t_idx).choice(n, size=max_coords, replace=False)
        ga = analytic[name].reshape(-1)
        for c in coords:
            orig = flat[c]
            flat[c] = orig + epsilon
            up, _ = loss_fn(params)
            flat[c] = orig - epsilon
            down, _ = loss_fn(params)
            flat[c] = orig
            numeric = (up - down) / (2.0 * epsilon)
            denom = max(1e-12, abs(ga[c]) + abs(numeric))
            worst = max(worst, abs(ga[c] - numeric) / denom)
    return worst


# ----------------------------------------------------------------------
# Checkpoints
# ----------------------------------------------------------------------

def save_checkpoint(
    path: str | Path, kind: str, meta: dict, params: dict[str, np.ndarray]
) -> None:
    """Write magic + JSON header + float64 tensors in declaration order."""
    names = list(params.keys())
    header = {
        "kind": kind,
        "meta": meta,
        "params": [{"name": n, "shape": list(params[n].shape)} for n in names],
        "dtype": "<f8",
    }
    blob = json.dumps(header, sort_keys=True).encode("utf-8")
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<II", 1, len(blob)))
        f.write(blob)
        for n in names:
            f.write(np.ascontiguousarray(params[n], dtype="<f8").tobytes())


def load_checkpoint(path: str | Path) -> tuple[str, dict, dict[str, np.ndarray]]:
    with open(path, "rb") as f:
        magic = f.read(4)
        if magic != CHECKPOINT_MAGIC:
            raise ValidationError(f"{path}: bad checkpoint magic {magic!r}")
        version, hlen = struct.unpack("<II", f.read(8))
        if version != 1:
            raise ValidationError(f"{path}: unsupported checkpoint version {version}")
        header = json.loads(f.read(hlen).decode("utf-8"))
        params: dict[str, np.ndarray] = {}
        for entry in header["params"]:
            shape = tuple(entry["shape"])
            count = int(np.prod(shape)) if shape else 1
            data = np.frombuffer(f.read(8 * count), dtype="<f8")
            if data.size != count:
                raise ValidationError(f"{path}: truncated tensor {entry['name']}")
            params[entry["name"]] = data.reshape(shape).astype(np.float64)
    return header["kind"], header["meta"], params


def mlp_from_checkpoint(meta: dict, params: dict[str, np.ndarray]) -> MlpModel:
    dims = list(meta["layer_dims"])
    model = MlpModel.init(dims, seed=0, activation=meta.get("activation", "relu"))
    model.set_parameters({k: v.copy() for k, v in params.items()})
    return model
