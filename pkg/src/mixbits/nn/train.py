"""Mini-batch SGD training with fake-quantized weights and regularizers."""

from dataclasses import dataclass

import numpy as np

from .. import rng as rng_mod
from ..errors import ConfigError, DatasetError, TrainingDivergedError
from .data import Dataset
from .network import NetworkSpec, Weights, backward, copy_weights, forward_full


@dataclass
class TrainConfig:
    learning_rate: float = 0.05
    epochs: int = 5
    batch_size: int = 32
    lambda_q: float = 0.0
    lambda_wd: float = 0.0
    sinreq_bits: int | None = None  # uniform grid resolution when no assignment drives it
    seed: int = 0

    def __post_init__(self):
        if self.learning_rate <= 0:
            raise ConfigError("learning_rate must be > 0")
        if self.batch_size < 1:
            raise ConfigError("batch_size must be >= 1")
        if self.epochs < 0:
            raise ConfigError("epochs must be >= 0")
        if self.lambda_q < 0 or self.lambda_wd < 0:
            raise ConfigError("regularizer strengths must be >= 0")


def weight_decay_loss(w: np.ndarray, lambda_wd: float) -> float:
    """0.5 * lambda * sum(w^2)."""
    return 0.5 * lambda_wd * float(np.sum(np.square(w)))


def sinreq_loss(w: np.ndarray, qbits: int, lambda_q: float) -> float:
    """Periodic penalty 0.5 * lambda * sum(sin^2(pi*w/delta)), delta = 2^-qbits.

    Zero exactly when every weight is an integer multiple of the grid
    step delta, so minima coincide with the quantization levels.
    """
    if qbits < 1:
        raise ConfigError("qbits must be >= 1")
    delta = 2.0 ** (-qbits)
    return 0.5 * lambda_q * float(np.sum(np.square(np.sin(np.pi * w / delta))))


def sinreq_grad(w: np.ndarray, qbits: int, lambda_q: float) -> np.ndarray:
    delta = 2.0 ** (-qbits)
    return lambda_q * (np.pi / (2.0 * delta)) * np.sin(2.0 * np.pi * w / delta)


def cross_entropy(logits: np.ndarray, labels: np.ndarray) -> tuple[float, np.ndarray]:
    """Mean softmax cross-entropy and its gradient w.r.t. the logits."""
    n = logits.shape[0]
    shifted = logits - logits.max(axis=1, keepdims=True)
    logsumexp = np.log(np.sum(np.exp(shifted), axis=1))
    loss = float(np.mean(logsumexp - shifted[np.arange(n), labels]))
    probs = np.exp(shifted - logsumexp[:, None])
    probs[np.arange(n), labels] -= 1.0
    return loss, probs / n


def _sinreq_bits_per_layer(spec: NetworkSpec, cfg: TrainConfig, assignment) -> list[int] | None:
    if cfg.lambda_q == 0.0:
        return None
    if assignment is not None:
        return [int(k) for k in assignment]
    if cfg.sinreq_bits is None:
        raise ConfigError("lambda_q > 0 needs an assignment or explicit sinreq_bits")
    return [cfg.sinreq_bits] * spec.n_layers


def train(
    spec: NetworkSpec,
    weights: Weights,
    data: Dataset,
    cfg: TrainConfig,
    assignment=None,
) -> tuple[Weights, list[float]]:
    """SGD on cross-entropy plus weight decay and the periodic regularizer.

    Returns updated weights (the input list is not mutated) and the mean
    total loss per epoch. Deterministic given cfg.seed.
    """
    if data.split != "train":
        raise DatasetError(f"training data must have split 'train', got {data.split!r}")
    weights = copy_weights(weights)
    qbits = _sinreq_bits_per_layer(spec, cfg, assignment)
    shuffle_rng = rng_mod.stream(cfg.seed, "train/shuffle")
    n = len(data)
    curve: list[float] = []
    for epoch in range(cfg.epochs):
        order = shuffle_rng.permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            xb, yb = data.inputs[idx], data.labels[idx]
            logits, caches = forward_full(weights, spec, xb, assignment)
            loss, dlogits = cross_entropy(logits, yb)
            grads = backward(weights, spec, caches, dlogits, assignment)
            for li, (params, grad) in enumerate(zip(weights, grads)):
                reg = 0.0
                if cfg.lambda_wd > 0.0:
                    reg += weight_decay_loss(params.w, cfg.lambda_wd)
                    grad.w += cfg.lambda_wd * params.w
                if qbits is not None:
                    reg += sinreq_loss(params.w, qbits[li], cfg.lambda_q)
                    grad.w += sinreq_grad(params.w, qbits[li], cfg.lambda_q)
                loss += reg
                params.w -= cfg.learning_rate * grad.w
                params.b -= cfg.learning_rate * grad.b
            if not np.isfinite(loss):
                raise TrainingDivergedError(epoch)
            epoch_loss += loss * len(idx)
        curve.append(epoch_loss / n)
    return weights, curve


def evaluate_accuracy(spec: NetworkSpec, weights: Weights, data: Dataset, assignment=None) -> float:
    """Fraction of argmax-correct predictions (logit ties pick the lowest class)."""
    if len(data) == 0:
        raise DatasetError("cannot evaluate on an empty dataset")
    correct = 0
    for start in range(0, len(data), 512):
        xb = data.inputs[start : start + 512]
        yb = data.labels[start : start + 512]
        logits, _ = forward_full(weights, spec, xb, assignment)
        correct += int(np.sum(np.argmax(logits, axis=1) == yb))
    return correct / len(data)


def finetune_and_estimate(
    spec: NetworkSpec,
    weights: Weights,
    assignment,
    train_data: Dataset,
    val_data: Dataset,
    cfg: TrainConfig,
    short_epochs: int,
) -> tuple[float, Weights]:
    """Short quantized retrain followed by a validation-accuracy estimate.

    short_epochs == 0 evaluates the quantized network as-is. The caller's
    weights are never mutated; the (possibly retrained) copy is returned
    so an episode can keep finetuning incrementally.
    """
    if short_epochs < 0:
        raise ConfigError("short_epochs must be >= 0")
    if short_epochs == 0:
        return evaluate_accuracy(spec, weights, val_data, assignment), copy_weights(weights)
    run_cfg = TrainConfig(
        learning_rate=cfg.learning_rate,
        epochs=short_epochs,
        batch_size=cfg.batch_size,
        lambda_q=cfg.lambda_q,
        lambda_wd=cfg.lambda_wd,
        sinreq_bits=cfg.sinreq_bits,
        seed=cfg.seed,
    )
    tuned, _ = train(spec, weights, train_data, run_cfg, assignment)
    return evaluate_accuracy(spec, tuned, val_data, assignment), tuned
