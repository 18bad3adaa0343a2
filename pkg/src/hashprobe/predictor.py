"""Feed-forward entry-relevance predictor trained by backpropagation.

Architecture is fixed at input -> two ReLU hidden layers of the same width
as the input -> softmax output of width 2^d.  Everything runs in float64 so
gradient checks are tight and seeded runs reproduce bit-for-bit.
"""

import struct
from dataclasses import dataclass, field

import numpy as np

from .errors import FormatError, TrainingDivergedError

LOG_EPS = 1e-12  # clamp inside log so off-support targets stay finite

MODEL_MAGIC = b"HPNN"
MODEL_VERSION = 1


@dataclass
class PredictorModel:
    """Weights of the 3-layer MLP; w maps inputs on the right (z = x @ w.T + b)."""

    w1: np.ndarray
    b1: np.ndarray
    w2: np.ndarray
    b2: np.ndarray
    w3: np.ndarray
    b3: np.ndarray
    d: int

    @property
    def feature_dim(self) -> int:
        return self.w1.shape[1]

    @property
    def n_outputs(self) -> int:
        return 1 << self.d

    def params(self) -> list[np.ndarray]:
        return [self.w1, self.b1, self.w2, self.b2, self.w3, self.b3]

    def copy(self) -> "PredictorModel":
        return PredictorModel(*(p.copy() for p in self.params()), d=self.d)


def init_model(feature_dim: int, d: int, seed: int) -> PredictorModel:
    """Glorot-uniform weights from a seeded generator, zero biases."""
    if feature_dim < 1 or d < 1:
        raise ValueError("feature_dim and d must be positive")
    rng = np.random.default_rng(seed)

    def glorot(n_out, n_in):
        bound = np.sqrt(6.0 / (n_in + n_out))
        return rng.uniform(-bound, bound, size=(n_out, n_in))

    f, out = feature_dim, 1 << d
    return PredictorModel(
        w1=glorot(f, f), b1=np.zeros(f),
        w2=glorot(f, f), b2=np.zeros(f),
        w3=glorot(out, f), b3=np.zeros(out),
        d=d,
    )


@dataclass(frozen=True)
class TrainConfig:
    learning_rate: float = 1e-3
    batch_size: int = 64
    epochs: int = 100
    optimizer: str = "adam"  # "adam" or "sgd-momentum"
    momentum: float = 0.9
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    shuffle: bool = True

    def __post_init__(self):
        if self.learning_rate < 0:
            raise ValueError("learning_rate must be >= 0")
        if self.batch_size < 1 or self.epochs < 1:
            raise ValueError("batch_size and epochs must be >= 1")
        if self.optimizer not in ("adam", "sgd-momentum"):
            raise ValueError(f"unknown optimizer {self.optimizer!r}")
        if not 0 <= self.momentum < 1:
            raise ValueError("momentum must be in [0, 1)")
        if not (0 <= self.beta1 < 1 and 0 <= self.beta2 < 1):
            raise ValueError("adam betas must be in [0, 1)")


def _softmax(z: np.ndarray) -> np.ndarray:
    shifted = z - z.max(axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=-1, keepdims=True)


def _forward_cache(model: PredictorModel, x: np.ndarray):
    z1 = x @ model.w1.T + model.b1
    a1 = np.maximum(z1, 0.0)
    z2 = a1 @ model.w2.T + model.b2
    a2 = np.maximum(z2, 0.0)
    z3 = a2 @ model.w3.T + model.b3
    return z1, a1, z2, a2, _softmax(z3)


def forward(model: PredictorModel, x: np.ndarray) -> np.ndarray:
    """Predicted entry-relevance distribution for one feature vector."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 1 or x.size != model.feature_dim:
        raise ValueError(
            f"expected a {model.feature_dim}-dim feature vector, got shape {x.shape}"
        )
    if not np.isfinite(x).all():
        raise ValueError("feature vector contains non-finite values")
    return _forward_cache(model, x[None, :])[-1][0]


def forward_batch(model: PredictorModel, x: np.ndarray) -> np.ndarray:
    """(n, 2^d) predictions for an (n, F) feature matrix."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 2 or x.shape[1] != model.feature_dim:
        raise ValueError(f"expected (n, {model.feature_dim}) features, got {x.shape}")
    return _forward_cache(model, x)[-1]


def loss(pred: np.ndarray, target: np.ndarray) -> float:
    """Cross-entropy -sum(target * log(pred + eps))."""
    pred = np.asarray(pred, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    if pred.shape != target.shape:
        raise ValueError(f"shape mismatch: {pred.shape} vs {target.shape}")
    return float(-(target * np.log(pred + LOG_EPS)).sum())


def _gradients(model: PredictorModel, x: np.ndarray, t: np.ndarray):
    """Per-sample cross-entropy losses and the summed parameter gradients."""
    z1, a1, z2, a2, p = _forward_cache(model, x)
    sample_losses = -(t * np.log(p + LOG_EPS)).sum(axis=1)

    dz3 = p - t  # d(sum CE)/dz3 for softmax + cross-entropy
    dw3 = dz3.T @ a2
    db3 = dz3.sum(axis=0)
    dz2 = (dz3 @ model.w3) * (z2 > 0)
    dw2 = dz2.T @ a1
    db2 = dz2.sum(axis=0)
    dz1 = (dz2 @ model.w2) * (z1 > 0)
    dw1 = dz1.T @ x
    db1 = dz1.sum(axis=0)
    return sample_losses, [dw1, db1, dw2, db2, dw3, db3]


def train(
    model: PredictorModel,
    features: np.ndarray,
    targets: np.ndarray,
    cfg: TrainConfig,
) -> list[float]:
    """Mini-batch training, updating the model in place.

    features is (n, F) and targets is (n, 2^d) with rows summing to 1.
    Returns the epoch-mean loss trace (cfg.epochs entries).  Raises
    TrainingDivergedError when a non-finite loss or gradient appears.
    """
    x = np.asarray(features, dtype=np.float64)
    t = np.asarray(targets, dtype=np.float64)
    if x.ndim != 2 or t.ndim != 2 or x.shape[0] != t.shape[0] or x.shape[0] == 0:
        raise ValueError("features/targets must be non-empty matrices with equal rows")
    if x.shape[1] != model.feature_dim or t.shape[1] != model.n_outputs:
        raise ValueError(
            f"expected features (n, {model.feature_dim}) and targets "
            f"(n, {model.n_outputs}), got {x.shape} and {t.shape}"
        )
    if not (np.isfinite(x).all() and np.isfinite(t).all()):
        raise ValueError("training data contains non-finite values")

    n = x.shape[0]
    params = model.params()
    velocity = [np.zeros_like(p) for p in params]
    adam_m = [np.zeros_like(p) for p in params]
    adam_v = [np.zeros_like(p) for p in params]
    step = 0
    rng = np.random.default_rng(cfg.seed)

    trace = []
    epoch_losses = np.empty(n, dtype=np.float64)
    for epoch in range(cfg.epochs):
        order = rng.permutation(n) if cfg.shuffle else np.arange(n)
        for bi, start in enumerate(range(0, n, cfg.batch_size)):
            batch = order[start : start + cfg.batch_size]
            sample_losses, grads = _gradients(model, x[batch], t[batch])
            if not np.isfinite(sample_losses).all() or not all(
                np.isfinite(g).all() for g in grads
            ):
                raise TrainingDivergedError(
                    f"non-finite loss or gradient at epoch {epoch}, batch {bi}"
                )
            # scatter to sample-id slots so the epoch mean is summed in a
            # fixed order and does not wobble with the shuffle permutation
            epoch_losses[batch] = sample_losses
            step += 1
            scale = 1.0 / batch.size  # gradients of the batch-mean loss
            if cfg.optimizer == "adam":
                b1c = 1.0 - cfg.beta1 ** step
                b2c = 1.0 - cfg.beta2 ** step
                for p, g, m, v in zip(params, grads, adam_m, adam_v):
                    g = g * scale
                    m *= cfg.beta1
                    m += (1.0 - cfg.beta1) * g
                    v *= cfg.beta2
                    v += (1.0 - cfg.beta2) * g * g
                    p -= cfg.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + cfg.eps)
            else:
                for p, g, vel in zip(params, grads, velocity):
                    vel *= cfg.momentum
                    vel -= cfg.learning_rate * g * scale
                    p += vel
        trace.append(float(epoch_losses.sum()) / n)
    return trace


def gradient_check(
    model: PredictorModel, x: np.ndarray, target: np.ndarray, step: float = 1e-5
) -> float:
    """Max relative error between backprop and central finite differences."""
    x = np.asarray(x, dtype=np.float64)[None, :]
    t = np.asarray(target, dtype=np.float64)[None, :]
    _, grads = _gradients(model, x, t)

    worst = 0.0
    for p, g in zip(model.params(), grads):
        flat = p.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + step
            up = -(t * np.log(_forward_cache(model, x)[-1] + LOG_EPS)).sum()
            flat[i] = orig - step
            down = -(t * np.log(_forward_cache(model, x)[-1] + LOG_EPS)).sum()
            flat[i] = orig
            numeric = (up - down) / (2.0 * step)
            analytic = g.reshape(-1)[i]
            rel = abs(analytic - numeric) / max(abs(analytic) + abs(numeric), 1e-6)
            worst = max(worst, rel)
    return worst


def min_preactivation_gap(model: PredictorModel, x: np.ndarray) -> float:
    """Smallest |pre-activation| over both hidden layers (ReLU kink margin)."""
    z1, _, z2, _, _ = _forward_cache(model, np.asarray(x, dtype=np.float64)[None, :])
    return float(min(np.abs(z1).min(), np.abs(z2).min()))


def save_model(path, model: PredictorModel) -> None:
    """Write magic, version, F, d, then w1,b1,w2,b2,w3,b3 as float64 LE."""
    with open(path, "wb") as fh:
        fh.write(MODEL_MAGIC)
        fh.write(struct.pack("<III", MODEL_VERSION, model.feature_dim, model.d))
        for p in model.params():
            fh.write(np.ascontiguousarray(p, dtype="<f8").tobytes())


def load_model(path) -> PredictorModel:
    with open(path, "rb") as fh:
        head = fh.read(16)
        if len(head) < 16 or head[:4] != MODEL_MAGIC:
            raise FormatError(f"{path}: bad or truncated model header")
        version, f, d = struct.unpack("<III", head[4:])
        if version != MODEL_VERSION:
            raise FormatError(f"{path}: unsupported model version {version}")
        if f < 1 or not 1 <= d <= 24:
            raise FormatError(f"{path}: invalid dimensions F={f}, d={d}")
        out = 1 << d
        shapes = [(f, f), (f,), (f, f), (f,), (out, f), (out,)]
        body = fh.read()
        expected = 8 * sum(int(np.prod(s)) for s in shapes)
        if len(body) != expected:
            raise FormatError(
                f"{path}: model body is {len(body)} bytes, expected {expected} "
                f"(offset 16)"
            )
        arrays = []
        offset = 0
        for shape in shapes:
            count = int(np.prod(shape))
            arrays.append(
                np.frombuffer(body, dtype="<f8", count=count, offset=offset)
                .reshape(shape)
                .astype(np.float64)
            )
            offset += 8 * count
        return PredictorModel(*arrays, d=d)
