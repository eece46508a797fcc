"""Feed-forward sigmoid network trained by per-sample backpropagation.

Default topology is 15 inputs, hidden layers of 15 and 7 units, and 7
outputs (one per expression).  Training minimizes ``0.5 * ||y - t||^2``
against one-hot targets with plain online gradient descent.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np
from scipy.special import expit

LABELS = ("surprise", "neutral", "sad", "disgust", "fear", "happy", "angry")
LAYER_DIMS = (15, 15, 7, 7)
MAGIC = "facexpr-mlp 1"


class ModelFormatError(ValueError):
    pass


class ModelVersionError(ModelFormatError):
    pass


class ModelShapeError(ModelFormatError):
    pass


class ModelValueError(ModelFormatError):
    pass


def sigmoid(z):
    return expit(z)


@dataclass(frozen=True, eq=False)
class MlpModel:
    weights: tuple   # per layer, shape (fan_out, fan_in)
    biases: tuple    # per layer, shape (fan_out,)
    input_mean: np.ndarray
    input_scale: np.ndarray
    labels: tuple = LABELS

    def __post_init__(self):
        ws = tuple(np.array(w, dtype=float) for w in self.weights)
        bs = tuple(np.array(b, dtype=float) for b in self.biases)
        if len(ws) != len(bs) or not ws:
            raise ModelShapeError("need one bias vector per weight matrix")
        for i, (w, b) in enumerate(zip(ws, bs)):
            if w.ndim != 2 or b.shape != (w.shape[0],):
                raise ModelShapeError(f"layer {i + 1}: weights {w.shape} vs bias {b.shape}")
            if i and w.shape[1] != ws[i - 1].shape[0]:
                raise ModelShapeError(f"layer {i + 1} expects {w.shape[1]} inputs, "
                                      f"previous layer gives {ws[i - 1].shape[0]}")
        mean = np.array(self.input_mean, dtype=float)
        scale = np.array(self.input_scale, dtype=float)
        if mean.shape != (ws[0].shape[1],) or scale.shape != mean.shape:
            raise ModelShapeError("input scaling does not match the input layer")
        if len(self.labels) != ws[-1].shape[0]:
            raise ModelShapeError(f"{len(self.labels)} labels for {ws[-1].shape[0]} outputs")
        arrays = ws + bs + (mean, scale)
        if not all(np.all(np.isfinite(a)) for a in arrays) or np.any(scale == 0):
            raise ModelValueError("model values must be finite, scales non-zero")
        for a in arrays:
            a.setflags(write=False)
        object.__setattr__(self, "weights", ws)
        object.__setattr__(self, "biases", bs)
        object.__setattr__(self, "input_mean", mean)
        object.__setattr__(self, "input_scale", scale)
        object.__setattr__(self, "labels", tuple(self.labels))

    @property
    def layer_dims(self) -> tuple:
        return (self.weights[0].shape[1],) + tuple(w.shape[0] for w in self.weights)

    def __eq__(self, other):
        if not isinstance(other, MlpModel):
            return NotImplemented
        mine = self.weights + self.biases + (self.input_mean, self.input_scale)
        theirs = other.weights + other.biases + (other.input_mean, other.input_scale)
        return (self.labels == other.labels and len(mine) == len(theirs)
                and all(a.shape == b.shape and np.array_equal(a, b) for a, b in zip(mine, theirs)))


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 0.5
    max_epochs: int = 10000
    goal_mse: float = 0.001
    seed: int = 0
    shuffle: bool = True
    momentum: float = 0.0
    target_smoothing: float = 0.0   # 0.1 gives 0.9/0.1 targets
    standardize: bool = True        # fit per-input mean/std on the training set

    def __post_init__(self):
        # 0 is allowed as a dry run that only measures the error
        if not self.learning_rate >= 0:
            raise ValueError("learning_rate must be >= 0")
        if self.max_epochs < 1:
            raise ValueError("max_epochs must be >= 1")
        if not self.goal_mse >= 0:
            raise ValueError("goal_mse must be >= 0")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must lie in [0, 1)")
        if not 0 <= self.target_smoothing < 0.5:
            raise ValueError("target_smoothing must lie in [0, 0.5)")


@dataclass(frozen=True)
class LabeledSample:
    features: object   # FeatureVector or 15 numbers
    label: str

    def x(self) -> np.ndarray:
        f = self.features
        return f.to_array() if hasattr(f, "to_array") else np.asarray(f, dtype=float)


def init_model(seed: int = 0, layer_dims=LAYER_DIMS, labels=LABELS) -> MlpModel:
    rng = np.random.default_rng(seed)
    weights, biases = [], []
    for fan_in, fan_out in zip(layer_dims[:-1], layer_dims[1:]):
        weights.append(rng.uniform(-0.5, 0.5, (fan_out, fan_in)))
        biases.append(rng.uniform(-0.5, 0.5, fan_out))
    n_in = layer_dims[0]
    return MlpModel(tuple(weights), tuple(biases), np.zeros(n_in), np.ones(n_in), labels)


def _input(model: MlpModel, x) -> np.ndarray:
    x = x.to_array() if hasattr(x, "to_array") else np.asarray(x, dtype=float)
    if x.shape != (model.layer_dims[0],):
        raise ValueError(f"expected {model.layer_dims[0]} inputs, got shape {x.shape}")
    if not np.all(np.isfinite(x)):
        raise ValueError("input contains non-finite values")
    return x


def forward(model: MlpModel, x) -> tuple[list[np.ndarray], np.ndarray]:
    """All layer activations (input first, after scaling) and the output."""
    a = (_input(model, x) - model.input_mean) / model.input_scale
    activations = [a]
    for w, b in zip(model.weights, model.biases):
        a = sigmoid(w @ a + b)
        activations.append(a)
    return activations, a


def target_vector(model: MlpModel, label: str, smoothing: float = 0.0) -> np.ndarray:
    try:
        k = model.labels.index(label)
    except ValueError:
        raise ValueError(f"unknown label {label!r}") from None
    t = np.full(len(model.labels), smoothing)
    t[k] = 1.0 - smoothing
    return t


def gradients(model: MlpModel, x, target) -> tuple[list, list, float]:
    """Squared error of one sample and its gradients w.r.t. weights and biases."""
    acts, y = forward(model, x)
    err = y - target
    loss = 0.5 * float(err @ err)
    delta = err * y * (1 - y)
    grad_w = [None] * len(model.weights)
    grad_b = [None] * len(model.weights)
    for layer in range(len(model.weights) - 1, -1, -1):
        grad_w[layer] = np.outer(delta, acts[layer])
        grad_b[layer] = delta
        if layer:
            a = acts[layer]
            delta = (model.weights[layer].T @ delta) * a * (1 - a)
    return grad_w, grad_b, loss


def _epoch(model, data, config, epoch, velocity):
    n = len(data)
    if config.shuffle:
        order = np.random.default_rng(config.seed + epoch).permutation(n)
    else:
        order = np.arange(n)
    ws = [w.copy() for w in model.weights]
    bs = [b.copy() for b in model.biases]
    work = model
    lr, mu = config.learning_rate, config.momentum
    total = 0.0
    for i in order:
        sample = data[i]
        t = target_vector(model, sample.label, config.target_smoothing)
        gw, gb, loss = gradients(work, sample.x(), t)
        total += loss
        for k in range(len(ws)):
            velocity[0][k] = mu * velocity[0][k] - lr * gw[k]
            velocity[1][k] = mu * velocity[1][k] - lr * gb[k]
            ws[k] += velocity[0][k]
            bs[k] += velocity[1][k]
        work = _unchecked(model, ws, bs)
    return MlpModel(tuple(ws), tuple(bs), model.input_mean, model.input_scale, model.labels), total / n


def _unchecked(model, ws, bs):
    # skips validation and freezing inside the hot loop
    m = object.__new__(MlpModel)
    object.__setattr__(m, "weights", tuple(ws))
    object.__setattr__(m, "biases", tuple(bs))
    object.__setattr__(m, "input_mean", model.input_mean)
    object.__setattr__(m, "input_scale", model.input_scale)
    object.__setattr__(m, "labels", model.labels)
    return m


def _zero_velocity(model):
    return ([np.zeros_like(w) for w in model.weights], [np.zeros_like(b) for b in model.biases])


def backprop_epoch(model: MlpModel, data: list, config: TrainConfig = TrainConfig(),
                   epoch: int = 0) -> tuple[MlpModel, float]:
    """One pass of online gradient descent; returns the model and epoch MSE.

    The MSE is the mean per-sample error, each measured just before that
    sample's update.
    """
    if not data:
        raise ValueError("training data is empty")
    return _epoch(model, data, config, epoch, _zero_velocity(model))


def fit_input_scaling(model: MlpModel, data: list) -> MlpModel:
    xs = np.array([s.x() for s in data])
    mean = xs.mean(axis=0)
    std = xs.std(axis=0)
    std[std == 0] = 1.0
    return replace(model, input_mean=mean, input_scale=std)


def train(model: MlpModel, data: list, config: TrainConfig = TrainConfig()) -> tuple[MlpModel, list]:
    if not data:
        raise ValueError("training data is empty")
    if config.standardize:
        model = fit_input_scaling(model, data)
    velocity = _zero_velocity(model)
    history = []
    for epoch in range(config.max_epochs):
        model, mse = _epoch(model, data, config, epoch, velocity)
        history.append(mse)
        if mse <= config.goal_mse:
            break
    return model, history


def decide(scores, labels=LABELS) -> str:
    """Label of the highest score; ties go to the earlier label."""
    return labels[int(np.argmax(scores))]


def predict(model: MlpModel, x) -> tuple[str, np.ndarray]:
    _, scores = forward(model, x)
    return decide(scores, model.labels), scores


# -- persistence --------------------------------------------------------------

def _fmt(values) -> str:
    return " ".join(format(float(v), ".17g") for v in np.ravel(values))


def save_model(model: MlpModel) -> bytes:
    lines = [MAGIC,
             "dims " + " ".join(str(d) for d in model.layer_dims),
             "labels " + " ".join(model.labels),
             "input_mean " + _fmt(model.input_mean),
             "input_scale " + _fmt(model.input_scale)]
    for k, (w, b) in enumerate(zip(model.weights, model.biases), start=1):
        lines.extend(f"W{k} {_fmt(row)}" for row in w)
        lines.append(f"b{k} {_fmt(b)}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def _floats(line: str, tag: str, count: int, lineno: int) -> np.ndarray:
    parts = line.split()
    if not parts or parts[0] != tag:
        raise ModelShapeError(f"line {lineno}: expected {tag!r} record")
    if len(parts) - 1 != count:
        raise ModelShapeError(f"line {lineno}: {tag} has {len(parts) - 1} values, expected {count}")
    try:
        values = np.array([float(p) for p in parts[1:]])
    except ValueError as exc:
        raise ModelValueError(f"line {lineno}: {exc}") from None
    if not np.all(np.isfinite(values)):
        raise ModelValueError(f"line {lineno}: non-finite value")
    return values


def load_model(data: bytes) -> MlpModel:
    lines = data.decode("utf-8").splitlines()
    if not lines or lines[0].strip() != MAGIC:
        raise ModelVersionError(f"not a {MAGIC!r} model file")

    def line(i):
        if i >= len(lines):
            raise ModelShapeError(f"file truncated at line {i + 1}")
        return lines[i]

    head = line(1).split()
    if not head or head[0] != "dims" or len(head) < 3 or not all(h.isdigit() for h in head[1:]):
        raise ModelShapeError("line 2: malformed dims record")
    dims = [int(h) for h in head[1:]]
    labels = line(2).split()
    if not labels or labels[0] != "labels" or len(labels) - 1 != dims[-1]:
        raise ModelShapeError("line 3: label list does not match the output layer")
    mean = _floats(line(3), "input_mean", dims[0], 4)
    scale = _floats(line(4), "input_scale", dims[0], 5)
    i = 5
    weights, biases = [], []
    for k, (fan_in, fan_out) in enumerate(zip(dims[:-1], dims[1:]), start=1):
        rows = []
        for _ in range(fan_out):
            rows.append(_floats(line(i), f"W{k}", fan_in, i + 1))
            i += 1
        weights.append(np.array(rows))
        biases.append(_floats(line(i), f"b{k}", fan_out, i + 1))
        i += 1
    if any(l.strip() for l in lines[i:]):
        raise ModelShapeError(f"line {i + 1}: unexpected trailing data")
    return MlpModel(tuple(weights), tuple(biases), mean, scale, tuple(labels[1:]))


def accuracy(model: MlpModel, data: list) -> float:
    hits = sum(predict(model, s.x())[0] == s.label for s in data)
    return hits / len(data)


def confusion_matrix(model: MlpModel, data: list) -> np.ndarray:
    """Counts with rows = true label, columns = predicted, in model label order."""
    n = len(model.labels)
    cm = np.zeros((n, n), dtype=int)
    for s in data:
        cm[model.labels.index(s.label), model.labels.index(predict(model, s.x())[0])] += 1
    return cm
