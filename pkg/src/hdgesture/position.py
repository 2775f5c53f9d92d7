"""Linear limb-position classifier on 3-axis accelerometer features.

One-vs-rest linear SVMs trained in the primal by mini-batch hinge-loss
subgradient descent. Features are standardized during training and the
scaling is folded back into the weights, so the stored model is just a
``P x 3`` weight matrix and ``P`` biases applied to raw accelerometer values.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Hashable, Sequence

import numpy as np

from .errors import ContractViolation


@dataclass(frozen=True)
class PositionConfig:
    epochs: int = 100
    reg: float = 1e-3
    lr: float = 0.1
    lr_decay: float = 0.01
    batch_size: int = 64
    seed: int = 0


@dataclass
class LinearPositionModel:
    weights: np.ndarray
    biases: np.ndarray
    position_ids: list = field(default_factory=list)

    def __post_init__(self):
        # float32 so a model read back from disk scores identically
        self.weights = np.asarray(self.weights, dtype=np.float32).reshape(-1, 3)
        self.biases = np.asarray(self.biases, dtype=np.float32).reshape(-1)
        if not self.weights.shape[0] == self.biases.shape[0] == len(self.position_ids):
            raise ContractViolation("weights, biases and position ids disagree in length")
        if not (np.isfinite(self.weights).all() and np.isfinite(self.biases).all()):
            raise ContractViolation("position model parameters must be finite")

    def scores(self, accel) -> np.ndarray:
        accel = np.asarray(accel, dtype=np.float64)
        return accel @ self.weights.astype(np.float64).T + self.biases.astype(np.float64)

    def predict_index(self, accel) -> np.ndarray:
        """Row indices of the winning position; ties go to the lowest index."""
        return np.argmax(np.atleast_2d(self.scores(accel)), axis=1)

    def predict(self, accel) -> np.ndarray:
        return np.asarray(self.position_ids)[self.predict_index(accel)]


def train_position(accel, labels: Sequence[Hashable],
                   config: PositionConfig = PositionConfig()) -> LinearPositionModel:
    """Fit one-vs-rest linear SVMs.

    Args:
      accel: ``(n, 3)`` accelerometer features.
      labels: position label per row.
      config: optimization settings. The learning rate at epoch ``t`` is
        ``lr / (1 + lr_decay * t)``; the shuffle order comes from ``seed``.
    """
    X = np.asarray(accel, dtype=np.float64).reshape(-1, 3)
    labels = np.asarray(labels)
    if X.shape[0] != labels.shape[0]:
        raise ContractViolation("one label per sample required")
    ids = sorted(set(labels.tolist()))
    if len(ids) < 2:
        raise ContractViolation("position classifier needs at least two distinct labels")
    index = {p: i for i, p in enumerate(ids)}
    y = np.array([index[p] for p in labels.tolist()])
    P = len(ids)

    mu = X.mean(axis=0)
    sd = X.std(axis=0)
    sd[sd == 0] = 1.0
    Z = (X - mu) / sd
    Y = np.where(y[:, None] == np.arange(P)[None, :], 1.0, -1.0)

    W = np.zeros((P, 3))
    b = np.zeros(P)
    rng = np.random.default_rng(config.seed)
    n = Z.shape[0]
    for epoch in range(config.epochs):
        lr = config.lr / (1.0 + config.lr_decay * epoch)
        order = rng.permutation(n)
        for start in range(0, n, config.batch_size):
            idx = order[start : start + config.batch_size]
            z, t = Z[idx], Y[idx]
            active = t * (z @ W.T + b) < 1.0
            coef = active * t
            W -= lr * (config.reg * W - coef.T @ z / len(idx))
            b -= lr * (-coef.sum(axis=0) / len(idx))

    W_raw = W / sd
    return LinearPositionModel(W_raw, b - W_raw @ mu, ids)


def predict_position(model: LinearPositionModel, accel):
    """Label of the highest-scoring position for one triple (or each row)."""
    accel = np.asarray(accel, dtype=np.float64)
    out = model.predict(accel)
    return out[0].item() if accel.ndim == 1 else out


def stored_vector_bits(n_vectors: int, n_features: int = 3, bits: int = 32) -> int:
    """Footprint of ``n_vectors`` stored feature vectors (support-vector convention)."""
    return int(n_vectors) * int(n_features) * int(bits)


def parameter_bits(model: LinearPositionModel | None = None, convention: str = "support-vectors",
                   n_vectors: int = 50) -> int:
    """Parameter memory of a position classifier in bits.

    ``"support-vectors"`` counts ``n_vectors`` stored 3-feature float32
    vectors (50 by default, giving 4,800 bits). ``"primal"`` counts the
    float32 weights and biases this implementation actually stores.
    """
    if convention == "support-vectors":
        return stored_vector_bits(n_vectors)
    if convention == "primal":
        if model is None:
            raise ContractViolation("primal convention needs a model")
        return (model.weights.size + model.biases.size) * 32
    raise ContractViolation(f"unknown footprint convention {convention!r}")
