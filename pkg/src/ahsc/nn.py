"""Fully connected ReLU network with a softmax head, trained by mini-batch Adam.

Layer ``l`` maps ``a[l-1]`` (rows are samples) to ``z[l] = a[l-1] @ W[l].T + b[l]``
with ``W[l]`` of shape ``(dims[l], dims[l-1])``.
"""
import math
from dataclasses import dataclass, field

import numpy as np

from . import metrics
from .data import Dataset, batches
from .errors import DataError, LabelError, NumericError, ShapeError

LOG_FLOOR = 1e-12


@dataclass
class Model:
    weights: list
    biases: list

    def __post_init__(self):
        if len(self.weights) < 1 or len(self.weights) != len(self.biases):
            raise ShapeError("model needs L >= 1 layers with one bias per weight matrix")
        for l, (W, b) in enumerate(zip(self.weights, self.biases), start=1):
            if W.ndim != 2 or b.shape != (W.shape[0],):
                raise ShapeError(f"layer {l}: weight {W.shape} and bias {b.shape} disagree")
            if l > 1 and W.shape[1] != self.weights[l - 2].shape[0]:
                raise ShapeError(f"layer {l}: expects {W.shape[1]} inputs, previous layer has {self.weights[l - 2].shape[0]}")

    @property
    def L(self) -> int:
        return len(self.weights)

    @property
    def layer_dims(self) -> list:
        return [self.weights[0].shape[1]] + [W.shape[0] for W in self.weights]

    @property
    def n_params(self) -> int:
        return sum(W.size + b.size for W, b in zip(self.weights, self.biases))

    def copy(self) -> "Model":
        return Model([W.copy() for W in self.weights], [b.copy() for b in self.biases])

    def to_vector(self) -> np.ndarray:
        return np.concatenate([p.ravel() for W, b in zip(self.weights, self.biases) for p in (W, b)])

    def from_vector(self, vec) -> "Model":
        vec = np.asarray(vec, dtype=np.float64)
        if vec.shape != (self.n_params,):
            raise ShapeError(f"expected {self.n_params} parameters, got {vec.shape}")
        Ws, bs, i = [], [], 0
        for W, b in zip(self.weights, self.biases):
            Ws.append(vec[i : i + W.size].reshape(W.shape).copy())
            i += W.size
            bs.append(vec[i : i + b.size].copy())
            i += b.size
        return Model(Ws, bs)


@dataclass(frozen=True)
class ForwardCache:
    zs: list  # z[1..L] stored at index l-1
    activations: list  # a[0..L]; a[0] is the input batch

    @property
    def probs(self) -> np.ndarray:
        return self.activations[-1]


@dataclass(frozen=True)
class Gradients:
    dW: list
    db: list


@dataclass
class AdamState:
    m_w: list
    m_b: list
    v_w: list
    v_b: list
    step: int = 0
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8

    def copy(self) -> "AdamState":
        return AdamState(
            [a.copy() for a in self.m_w],
            [a.copy() for a in self.m_b],
            [a.copy() for a in self.v_w],
            [a.copy() for a in self.v_b],
            self.step,
            self.beta1,
            self.beta2,
            self.eps,
        )


@dataclass
class TrainHistory:
    loss: list = field(default_factory=list)
    accuracy: list = field(default_factory=list)
    stopped_early: bool = False

    @property
    def epochs(self) -> int:
        return len(self.loss)


def init_model(layer_dims, seed) -> Model:
    """He-normal weights (std ``sqrt(2 / fan_in)``), zero biases."""
    dims = [int(d) for d in layer_dims]
    if len(dims) < 2 or min(dims) < 1:
        raise ShapeError(f"need at least two positive layer sizes, got {layer_dims}")
    rng = np.random.default_rng(seed)
    Ws = [rng.standard_normal((out, fan_in)) * math.sqrt(2.0 / fan_in) for fan_in, out in zip(dims[:-1], dims[1:])]
    return Model(Ws, [np.zeros(d) for d in dims[1:]])


def softmax(z):
    e = np.exp(z - z.max(axis=1, keepdims=True))
    return e / e.sum(axis=1, keepdims=True)


def log_softmax(z):
    s = z - z.max(axis=1, keepdims=True)
    return s - np.log(np.exp(s).sum(axis=1, keepdims=True))


def forward(model: Model, X) -> ForwardCache:
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.layer_dims[0]:
        raise ShapeError(f"input shape {a.shape} does not match model input size {model.layer_dims[0]}")
    zs, acts = [], [a]
    for l, (W, b) in enumerate(zip(model.weights, model.biases), start=1):
        z = a @ W.T + b
        a = softmax(z) if l == model.L else np.maximum(z, 0.0)
        zs.append(z)
        acts.append(a)
    return ForwardCache(zs, acts)


def predict_proba(model: Model, X) -> np.ndarray:
    return forward(model, X).probs


def penultimate(model: Model, X) -> np.ndarray:
    """Activations feeding the softmax layer (``X`` itself when L == 1)."""
    a = np.asarray(X, dtype=np.float64)
    if a.ndim != 2 or a.shape[1] != model.layer_dims[0]:
        raise ShapeError(f"input shape {a.shape} does not match model input size {model.layer_dims[0]}")
    for W, b in zip(model.weights[:-1], model.biases[:-1]):
        a = np.maximum(a @ W.T + b, 0.0)
    return a


def _check_labels(y, m, k):
    y = np.asarray(y)
    if y.shape != (m,):
        raise ShapeError(f"expected {m} labels, got shape {y.shape}")
    if m and (y.min() < 0 or y.max() >= k):
        raise LabelError(f"labels must lie in [0, {k})")
    return y.astype(np.int64)


def loss_ce(probs, y) -> float:
    """Mean cross-entropy with probabilities floored at 1e-12."""
    probs = np.asarray(probs, dtype=np.float64)
    y = _check_labels(y, probs.shape[0], probs.shape[1])
    p = probs[np.arange(len(y)), y]
    return float(-np.mean(np.log(np.maximum(p, LOG_FLOOR))))


def loss_from_logits(z, y) -> float:
    """Same value as ``loss_ce(softmax(z), y)`` computed through log-softmax."""
    z = np.asarray(z, dtype=np.float64)
    y = _check_labels(y, z.shape[0], z.shape[1])
    lp = log_softmax(z)[np.arange(len(y)), y]
    return float(-np.mean(np.maximum(lp, math.log(LOG_FLOOR))))


def backward(model: Model, cache: ForwardCache, y) -> Gradients:
    if len(cache.zs) != model.L or len(cache.activations) != model.L + 1:
        raise ShapeError("cache depth does not match the model")
    for l, a in enumerate(cache.activations):
        if a.ndim != 2 or a.shape[1] != model.layer_dims[l]:
            raise ShapeError(f"cached activation {l} has shape {a.shape}, model expects width {model.layer_dims[l]}")
    probs = cache.probs
    m, k = probs.shape
    y = _check_labels(y, m, k)
    delta = probs.copy()
    delta[np.arange(m), y] -= 1.0
    delta /= m
    dW, db = [None] * model.L, [None] * model.L
    for l in range(model.L - 1, -1, -1):
        dW[l] = delta.T @ cache.activations[l]
        db[l] = delta.sum(axis=0)
        if l > 0:
            # ReLU derivative taken as 0 at the kink
            delta = (delta @ model.weights[l]) * (cache.zs[l - 1] > 0)
    return Gradients(dW, db)


def init_adam(model: Model, beta1=0.9, beta2=0.999, eps=1e-8) -> AdamState:
    zw = [np.zeros_like(W) for W in model.weights]
    zb = [np.zeros_like(b) for b in model.biases]
    return AdamState(zw, zb, [a.copy() for a in zw], [a.copy() for a in zb], 0, beta1, beta2, eps)


def _adam_update(p, g, m, v, lr, b1, b2, eps, c1, c2):
    m *= b1
    m += (1.0 - b1) * g
    v *= b2
    v += (1.0 - b2) * (g * g)
    p -= lr * (m / c1) / (np.sqrt(v / c2) + eps)


def adam_step(model: Model, grads: Gradients, state: AdamState, lr: float, inplace=False):
    """One bias-corrected Adam update. Returns ``(model, state)``.

    With ``inplace=True`` the given model and state are mutated and returned.
    """
    if lr < 0:
        raise ValueError("learning rate must be >= 0")
    if len(grads.dW) != model.L:
        raise ShapeError("gradients do not match the model depth")
    for l, (gW, gb, W, b) in enumerate(zip(grads.dW, grads.db, model.weights, model.biases), start=1):
        if gW.shape != W.shape or gb.shape != b.shape:
            raise ShapeError(f"layer {l}: gradient shapes {gW.shape}/{gb.shape} do not match parameters")
        if not (np.all(np.isfinite(gW)) and np.all(np.isfinite(gb))):
            raise NumericError("non-finite gradient", where=f"layer {l}")
    if not inplace:
        model, state = model.copy(), state.copy()
    state.step += 1
    c1 = 1.0 - state.beta1**state.step
    c2 = 1.0 - state.beta2**state.step
    for l in range(model.L):
        _adam_update(model.weights[l], grads.dW[l], state.m_w[l], state.v_w[l], lr, state.beta1, state.beta2, state.eps, c1, c2)
        _adam_update(model.biases[l], grads.db[l], state.m_b[l], state.v_b[l], lr, state.beta1, state.beta2, state.eps, c1, c2)
    return model, state


def evaluate(model: Model, data: Dataset):
    """Full-data ``(loss, accuracy)``."""
    probs = predict_proba(model, data.features)
    return loss_ce(probs, data.labels), metrics.accuracy(probs, data.labels)


def train(model: Model, data: Dataset, hp, epochs: int, early_stop_on_fit=False, seed=0):
    """Mini-batch Adam on a private copy of ``model``.

    ``hp`` only needs ``learning_rate`` and ``batch_size`` attributes. Batches
    are reshuffled every epoch from a stream keyed by ``(seed, epoch)``.
    Returns ``(trained_model, TrainHistory)``.
    """
    if epochs < 0:
        raise ValueError("epochs must be >= 0")
    if hp.batch_size < 1:
        raise ValueError("batch_size must be >= 1")
    if data.m == 0:
        raise DataError("cannot train on an empty dataset")
    work = model.copy()
    history = TrainHistory()
    if epochs == 0:
        return work, history
    state = init_adam(work)
    for epoch in range(epochs):
        for batch in batches(data, hp.batch_size, shuffle_seed=[seed, epoch]):
            cache = forward(work, batch.X)
            adam_step(work, backward(work, cache, batch.y), state, hp.learning_rate, inplace=True)
        loss, acc = evaluate(work, data)
        history.loss.append(loss)
        history.accuracy.append(acc)
        if early_stop_on_fit and acc == 1.0:
            history.stopped_early = True
            break
    return work, history


def save_model(model: Model, path):
    arrays = {}
    for l, (W, b) in enumerate(zip(model.weights, model.biases)):
        arrays[f"W{l}"] = W
        arrays[f"b{l}"] = b
    with open(path, "wb") as fh:
        np.savez(fh, **arrays)


def load_model(path) -> Model:
    with np.load(path) as npz:
        L = len([k for k in npz.files if k.startswith("W")])
        return Model([npz[f"W{l}"] for l in range(L)], [npz[f"b{l}"] for l in range(L)])
