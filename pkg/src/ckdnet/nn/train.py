"""Mini-batch training with Adam and a per-epoch history."""
from __future__ import annotations

import csv
import logging
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConfigError, DataError
from . import functional as F
from .optim import DEFAULT_BETA1, DEFAULT_BETA2, DEFAULT_EPSILON, DEFAULT_LR, adam_step

log = logging.getLogger(__name__)


@dataclass
class TrainConfig:
    epochs: int = 20
    batch_size: int = 42
    learning_rate: float = DEFAULT_LR
    beta1: float = DEFAULT_BETA1
    beta2: float = DEFAULT_BETA2
    epsilon: float = DEFAULT_EPSILON
    seed: int = 42

    def __post_init__(self):
        if self.epochs < 1 or self.batch_size < 1:
            raise ConfigError("epochs and batch_size must be >= 1")


@dataclass
class TrainHistory:
    train_loss: list = field(default_factory=list)
    train_acc: list = field(default_factory=list)
    val_loss: list = field(default_factory=list)
    val_acc: list = field(default_factory=list)

    def __len__(self):
        return len(self.train_loss)

    def rows(self):
        for i in range(len(self)):
            yield i + 1, self.train_loss[i], self.train_acc[i], self.val_loss[i], self.val_acc[i]

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["epoch", "train_loss", "train_acc", "val_loss", "val_acc"])
            for epoch, tl, ta, vl, va in self.rows():
                writer.writerow([epoch, repr(tl), repr(ta), repr(vl), repr(va)])


def epoch_order(n: int, seed: int, epoch: int) -> np.ndarray:
    """Shuffle order for one epoch; each epoch draws from its own sub-seed."""
    return np.random.default_rng([seed, epoch]).permutation(n)


def train_step(model, images, labels, config: TrainConfig):
    """One forward/backward/Adam update on a batch. Returns (loss, n_correct)."""
    logits, caches = model.forward(images, keep_cache=True)
    probs = F.softmax(logits)
    loss, grad = F.sparse_ce_loss(probs, labels)
    _, grads = model.backward(caches, grad)
    for param, g, state in zip(model.params(), grads, model.adam_states):
        adam_step(param, g, state, config.learning_rate, config.beta1, config.beta2,
                  config.epsilon)
    return loss, int(np.sum(np.argmax(probs, axis=1) == labels))


def evaluate(model, images, labels, batch_size: int = 256):
    """Mean loss and accuracy without touching the model."""
    n = len(labels)
    if n == 0:
        return float("nan"), float("nan")
    total, correct = 0.0, 0
    for start in range(0, n, batch_size):
        logits, _ = model.forward(images[start:start + batch_size])
        probs = F.softmax(logits)
        y = labels[start:start + batch_size]
        loss, _ = F.sparse_ce_loss(probs, y)
        total += loss * len(y)
        correct += int(np.sum(np.argmax(probs, axis=1) == y))
    return total / n, correct / n


def fit(model, train, val, config: TrainConfig | None = None) -> TrainHistory:
    """Train ``model`` in place on ``train`` and monitor ``val`` after every epoch.

    Training loss/accuracy are the sample-weighted means over the epoch's
    batches, as seen during the epoch.
    """
    config = config or TrainConfig()
    n = len(train.labels)
    if n == 0:
        raise DataError("training set is empty")
    images = train.images.astype(model.dtype, copy=False)
    labels = np.asarray(train.labels)
    history = TrainHistory()
    for epoch in range(config.epochs):
        order = epoch_order(n, config.seed, epoch)
        total, correct = 0.0, 0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            loss, hits = train_step(model, images[idx], labels[idx], config)
            total += loss * len(idx)
            correct += hits
        history.train_loss.append(total / n)
        history.train_acc.append(correct / n)
        if val is not None and len(val.labels):
            vl, va = evaluate(model, val.images, np.asarray(val.labels))
        else:
            vl, va = float("nan"), float("nan")
        history.val_loss.append(vl)
        history.val_acc.append(va)
        log.info("epoch %d/%d loss=%.4f acc=%.4f val_loss=%.4f val_acc=%.4f", epoch + 1,
                 config.epochs, history.train_loss[-1], history.train_acc[-1], vl, va)
    return history
