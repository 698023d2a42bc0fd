"""QNN / HQNN models, parameter-shift gradients, MLP backprop and Adam."""

from __future__ import annotations

import json
import math
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .circuits import QnnLayout, ShapeError, build_qnn_circuit, class_probability
from .dataset import ShellDataset
from .statevector import Simulator

BCE_EPS = 1e-12
HIDDEN = 40
SHIFT = math.pi / 2
CHECKPOINT_VERSION = 1


def bce_loss(p: float, y: int) -> float:
    p = min(max(float(p), BCE_EPS), 1.0 - BCE_EPS)
    return -(y * math.log(p) + (1 - y) * math.log(1.0 - p))


def bce_grad(p: float, y: int) -> float:
    """dL/dp of :func:`bce_loss` with the same clamp."""
    p = min(max(float(p), BCE_EPS), 1.0 - BCE_EPS)
    return -y / p + (1 - y) / (1.0 - p)


def predicted_label(p: float) -> int:
    return int(p >= 0.5)


# ---------------------------------------------------------------------------
# models

@dataclass
class QnnModel:
    layout: QnnLayout
    theta: np.ndarray
    cascade: str = "descending"

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float).copy()
        if self.theta.shape != (self.layout.n_q,):
            raise ShapeError(f"theta must have {self.layout.n_q} entries")

    @classmethod
    def init(cls, n_d: int, rng=None, cascade: str = "descending") -> "QnnModel":
        rng = np.random.default_rng(rng)
        layout = QnnLayout(n_d)
        return cls(layout, rng.uniform(0.0, 2 * math.pi, layout.n_q), cascade)

    @property
    def n_w(self) -> int:
        return self.theta.size

    def circuit(self, features, theta=None):
        return build_qnn_circuit(self.layout, features,
                                 self.theta if theta is None else theta, self.cascade)

    def expectations(self, features, sim: Simulator, shots=None, theta=None) -> np.ndarray:
        return sim.expectations(self.circuit(features, theta), self.layout.measurement_qubits, shots)


@dataclass
class MlpHead:
    W1: np.ndarray  # (40, n_d)
    b1: np.ndarray  # (40,)
    W2: np.ndarray  # (1, 40)
    b2: np.ndarray  # (1,)

    def __post_init__(self):
        for name in ("W1", "b1", "W2", "b2"):
            setattr(self, name, np.asarray(getattr(self, name), dtype=float).copy())
        h, n_d = self.W1.shape
        if self.b1.shape != (h,) or self.W2.shape != (1, h) or self.b2.shape != (1,):
            raise ShapeError("inconsistent MLP head shapes")

    @classmethod
    def init(cls, n_d: int, rng=None, hidden: int = HIDDEN) -> "MlpHead":
        # uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)), the usual Linear-layer default
        rng = np.random.default_rng(rng)
        k1, k2 = 1 / math.sqrt(n_d), 1 / math.sqrt(hidden)
        return cls(rng.uniform(-k1, k1, (hidden, n_d)), rng.uniform(-k1, k1, hidden),
                   rng.uniform(-k2, k2, (1, hidden)), rng.uniform(-k2, k2, 1))

    @classmethod
    def zeros(cls, n_d: int, hidden: int = HIDDEN) -> "MlpHead":
        return cls(np.zeros((hidden, n_d)), np.zeros(hidden), np.zeros((1, hidden)), np.zeros(1))

    @property
    def size(self) -> int:
        return self.W1.size + self.b1.size + self.W2.size + self.b2.size

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])

    def with_flat(self, flat) -> "MlpHead":
        flat = np.asarray(flat, dtype=float)
        if flat.size != self.size:
            raise ShapeError(f"expected {self.size} head parameters, got {flat.size}")
        i = 0
        parts = []
        for a in (self.W1, self.b1, self.W2, self.b2):
            parts.append(flat[i:i + a.size].reshape(a.shape))
            i += a.size
        return MlpHead(*parts)


def _sigmoid(x: float) -> float:
    if x >= 0:
        return 1.0 / (1.0 + math.exp(-x))
    e = math.exp(x)
    return e / (1.0 + e)


def mlp_forward(head: MlpHead, q_out, return_cache: bool = False):
    q = np.asarray(q_out, dtype=float)
    pre = head.W1 @ q + head.b1
    hid = np.maximum(pre, 0.0)
    p = _sigmoid(float(head.W2[0] @ hid + head.b2[0]))
    if return_cache:
        return p, (q, pre, hid, p)
    return p


@dataclass
class MlpGrads:
    W1: np.ndarray
    b1: np.ndarray
    W2: np.ndarray
    b2: np.ndarray
    q_out: np.ndarray

    def flat(self) -> np.ndarray:
        return np.concatenate([self.W1.ravel(), self.b1, self.W2.ravel(), self.b2])


def mlp_backward(head: MlpHead, q_out, upstream: float, cache=None) -> MlpGrads:
    """Reverse-mode gradients of the head given dL/dp."""
    if cache is None:
        _, cache = mlp_forward(head, q_out, return_cache=True)
    q, pre, hid, p = cache
    d_logit = upstream * p * (1.0 - p)
    d_W2 = d_logit * hid[None, :]
    d_b2 = np.array([d_logit])
    d_hid = d_logit * head.W2[0]
    d_pre = np.where(pre > 0, d_hid, 0.0)
    d_W1 = np.outer(d_pre, q)
    d_b1 = d_pre
    d_q = head.W1.T @ d_pre
    return MlpGrads(d_W1, d_b1, d_W2, d_b2, d_q)


# ---------------------------------------------------------------------------
# gradients

def parameter_shift_grad(model: QnnModel, features, shots: int | None = None,
                         simulator: Simulator | None = None) -> np.ndarray:
    """Jacobian d<Z_k>/d theta_j, shape (n_d, n_q).

    Runs exactly two circuits per parameter; every readout qubit is taken
    from each shifted run.
    """
    sim = simulator or Simulator()
    jac = np.empty((model.layout.n_d, model.n_w))
    for j in range(model.n_w):
        plus = model.theta.copy()
        plus[j] += SHIFT
        minus = model.theta.copy()
        minus[j] -= SHIFT
        jac[:, j] = (model.expectations(features, sim, shots, plus)
                     - model.expectations(features, sim, shots, minus)) / 2.0
    return jac


def qnn_sample_grad(model: QnnModel, features, y: int, shots: int | None = None,
                    simulator: Simulator | None = None):
    """(loss, p, dL/dtheta) for one sample: one forward run plus 2*n_w shifted runs."""
    sim = simulator or Simulator()
    z = model.expectations(features, sim, shots)
    p = class_probability(z)
    jac = parameter_shift_grad(model, features, shots, sim)
    dz = bce_grad(p, y) / (2.0 * model.layout.n_d)
    return bce_loss(p, y), p, dz * jac.sum(axis=0)


def hybrid_grad(model: QnnModel, head: MlpHead, features, y: int, shots: int | None = None,
                simulator: Simulator | None = None):
    """(loss, p, gradient) with the gradient laid out as [theta, W1, b1, W2, b2]."""
    sim = simulator or Simulator()
    z = model.expectations(features, sim, shots)
    p, cache = mlp_forward(head, z, return_cache=True)
    grads = mlp_backward(head, z, bce_grad(p, y), cache)
    jac = parameter_shift_grad(model, features, shots, sim)
    d_theta = grads.q_out @ jac
    return bce_loss(p, y), p, np.concatenate([d_theta, grads.flat()])


# ---------------------------------------------------------------------------
# optimizer

@dataclass
class AdamState:
    lr: float = 0.3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    m: np.ndarray | None = None
    v: np.ndarray | None = None
    t: int = 0


def adam_step(state: AdamState, params, grads) -> np.ndarray:
    params = np.asarray(params, dtype=float)
    grads = np.asarray(grads, dtype=float)
    if params.shape != grads.shape:
        raise ShapeError(f"params {params.shape} vs grads {grads.shape}")
    if state.m is None:
        state.m = np.zeros_like(params)
        state.v = np.zeros_like(params)
    elif state.m.shape != params.shape:
        raise ShapeError("optimizer moments do not match parameter shape")
    state.t += 1
    state.m = state.beta1 * state.m + (1 - state.beta1) * grads
    state.v = state.beta2 * state.v + (1 - state.beta2) * grads * grads
    m_hat = state.m / (1 - state.beta1**state.t)
    v_hat = state.v / (1 - state.beta2**state.t)
    return params - state.lr * m_hat / (np.sqrt(v_hat) + state.eps)


# ---------------------------------------------------------------------------
# training loop

@dataclass
class TrainConfig:
    epochs: int = 10
    shots: int | None = None
    batch_size: int = 1
    rng_seed: int | None = None
    threads: int = 1
    lr: float = 0.3
    precision: str = "double"

    def __post_init__(self):
        if self.epochs < 1:
            raise ValueError("epochs must be >= 1")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.shots is not None and self.shots < 1:
            raise ValueError("shots must be >= 1")


@dataclass
class EpochStats:
    epoch: int
    loss: float
    accuracy: float
    seconds_per_sample: float


@dataclass
class TrainResult:
    model: QnnModel
    head: MlpHead | None
    optimizer: AdamState
    history: list[EpochStats] = field(default_factory=list)


def predict(model: QnnModel, head: MlpHead | None, features, sim: Simulator,
            shots: int | None = None) -> float:
    z = model.expectations(features, sim, shots)
    return class_probability(z) if head is None else mlp_forward(head, z)


def evaluate(model: QnnModel, head: MlpHead | None, dataset: ShellDataset, sim: Simulator,
             shots: int | None = None):
    """(mean BCE, accuracy) over the whole dataset at fixed parameters."""
    losses, correct = [], 0
    for x, y in zip(dataset.points, dataset.labels):
        p = predict(model, head, x, sim, shots)
        losses.append(bce_loss(p, int(y)))
        correct += predicted_label(p) == int(y)
    return math.fsum(losses) / len(losses), correct / len(losses)


def sample_gradient(model: QnnModel, head: MlpHead | None, features, y: int,
                    shots: int | None, sim: Simulator):
    if head is None:
        return qnn_sample_grad(model, features, y, shots, sim)
    return hybrid_grad(model, head, features, y, shots, sim)


def train(model: QnnModel, dataset: ShellDataset, config: TrainConfig,
          head: MlpHead | None = None, simulator: Simulator | None = None,
          optimizer: AdamState | None = None, eval_each_epoch: bool = True) -> TrainResult:
    """Per-sample (or mini-batch) Adam training.

    Each epoch visits the data in a seeded random order. The timed region
    covers circuit construction, execution, gradients and the update; the
    end-of-epoch evaluation that fills the history is not timed. With
    ``eval_each_epoch=False`` the history carries NaN loss and accuracy.
    """
    if len(dataset) == 0:
        raise ValueError("empty dataset")
    if dataset.n_d != model.layout.n_d:
        raise ShapeError(f"dataset has {dataset.n_d} features, model expects {model.layout.n_d}")
    sim = simulator or Simulator(config.precision, config.threads, config.rng_seed)
    order_rng = np.random.default_rng(config.rng_seed)
    opt = optimizer or AdamState(lr=config.lr)
    model = QnnModel(model.layout, model.theta, model.cascade)
    params = model.theta if head is None else np.concatenate([model.theta, head.flat()])
    n_q = model.n_w
    history = []

    for epoch in range(1, config.epochs + 1):
        order = order_rng.permutation(len(dataset))
        start = time.perf_counter()
        for b in range(0, len(order), config.batch_size):
            batch = order[b:b + config.batch_size]
            g = np.zeros_like(params)
            for i in batch:
                _, _, gi = sample_gradient(model, head, dataset.points[i],
                                           int(dataset.labels[i]), config.shots, sim)
                g += gi
            params = adam_step(opt, params, g / len(batch))
            model.theta = params[:n_q].copy()
            if head is not None:
                head = head.with_flat(params[n_q:])
        per_sample = (time.perf_counter() - start) / len(dataset)
        loss, acc = (evaluate(model, head, dataset, sim, config.shots) if eval_each_epoch
                     else (math.nan, math.nan))
        history.append(EpochStats(epoch, loss, acc, per_sample))

    return TrainResult(model, head, opt, history)


# ---------------------------------------------------------------------------
# checkpoints

def save_checkpoint(path, model: QnnModel, head: MlpHead | None = None,
                    optimizer: AdamState | None = None) -> None:
    def arr(a):
        return None if a is None else np.asarray(a).tolist()

    doc = {
        "version": CHECKPOINT_VERSION,
        "layout": {"n_d": model.layout.n_d, "n_q": model.layout.n_q, "cascade": model.cascade},
        "theta": arr(model.theta),
        "head": None if head is None else {
            "W1": arr(head.W1), "b1": arr(head.b1), "W2": arr(head.W2), "b2": arr(head.b2)},
        "optimizer": None if optimizer is None else {
            "lr": optimizer.lr, "beta1": optimizer.beta1, "beta2": optimizer.beta2,
            "eps": optimizer.eps, "t": optimizer.t, "m": arr(optimizer.m), "v": arr(optimizer.v)},
    }
    Path(path).write_text(json.dumps(doc, indent=2))


def load_checkpoint(path):
    """Return (model, head or None, optimizer or None)."""
    doc = json.loads(Path(path).read_text())
    if doc.get("version") != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {doc.get('version')!r}")
    lay = doc["layout"]
    model = QnnModel(QnnLayout(lay["n_d"]), doc["theta"], lay.get("cascade", "descending"))
    head = MlpHead(**doc["head"]) if doc["head"] else None
    opt = None
    if doc["optimizer"]:
        o = dict(doc["optimizer"])
        for k in ("m", "v"):
            o[k] = None if o[k] is None else np.asarray(o[k], dtype=float)
        opt = AdamState(**o)
    return model, head, opt
