"""Mini-batch trainer: AdamW with decoupled weight decay, step LR decay,
early stopping on validation MAE, and best-epoch parameter snapshots.

The optimizer is written out by hand so its arithmetic is pinned:

    m <- b1 m + (1 - b1) g          mhat = m / (1 - b1^t)
    v <- b2 v + (1 - b2) g^2        vhat = v / (1 - b2^t)
    p <- p - lr (mhat / (sqrt(vhat) + eps) + wd p)

Weight decay multiplies the parameter directly (decoupled), so a step
with zero gradient shrinks p by exactly (1 - lr * wd).  Frozen tensors
(model-variant surgery) are skipped entirely: no moments, no decay.
"""

import copy
from dataclasses import dataclass, field

import numpy as np

from . import features, net
from .errors import Diverged, EmptyInput
from .seeding import substream

ADAM_BETA1 = 0.9
ADAM_BETA2 = 0.999
ADAM_EPS = 1e-8


@dataclass(frozen=True)
class TrainConfig:
    """Optimization schedule and target handling.

    The defaults suit datasets of a few thousand samples (batch 256 at
    that scale gives several optimizer steps per epoch).  On a few
    hundred samples, shrink the batch and stretch lr_decay_every so the
    schedule still delivers enough well-fed steps before the learning
    rate floors out.

    target_transform "power" trains against Yeo-Johnson-mapped,
    standardized targets (exponent fitted on the training fold) and maps
    predictions back; "none" trains in raw percent.
    """

    learning_rate: float = 0.005
    weight_decay: float = 1e-5
    lr_decay: float = 0.8
    lr_decay_every: int = 2
    batch_size: int = 256
    epochs: int = 80
    patience: int = 10
    target_transform: str = "none"

    def __post_init__(self):
        if self.learning_rate <= 0 or self.batch_size < 1 or self.epochs < 1:
            raise ValueError("learning_rate, batch_size and epochs must be positive")
        if self.lr_decay <= 0 or self.lr_decay > 1 or self.lr_decay_every < 1:
            raise ValueError("lr_decay must be in (0, 1] with a positive period")
        if self.patience < 0 or self.weight_decay < 0:
            raise ValueError("patience and weight_decay must be non-negative")
        if self.target_transform not in features.TARGET_TRANSFORMS:
            raise ValueError(f"target_transform must be one of "
                             f"{features.TARGET_TRANSFORMS}, "
                             f"got {self.target_transform!r}")


@dataclass
class TrainReport:
    """What happened during one fit: per-epoch curves and the best epoch."""

    train_loss: list = field(default_factory=list)
    val_mae: list = field(default_factory=list)
    best_epoch: int = -1
    best_val_mae: float = float("inf")
    epochs_run: int = 0
    stopped_early: bool = False


def adamw_init(params, frozen=frozenset()):
    """Zeroed first/second moments for every trainable tensor."""
    keys = [k for k in sorted(params) if k not in frozen]
    return {
        "t": 0,
        "m": {k: np.zeros_like(params[k]) for k in keys},
        "v": {k: np.zeros_like(params[k]) for k in keys},
    }


def adamw_step(params, grads, opt, lr, weight_decay):
    """One in-place AdamW update over the tensors tracked by opt."""
    opt["t"] += 1
    t = opt["t"]
    c1 = 1.0 - ADAM_BETA1 ** t
    c2 = 1.0 - ADAM_BETA2 ** t
    for key, m in opt["m"].items():
        g = grads[key]
        v = opt["v"][key]
        m *= ADAM_BETA1
        m += (1.0 - ADAM_BETA1) * g
        v *= ADAM_BETA2
        v += (1.0 - ADAM_BETA2) * g * g
        step = (m / c1) / (np.sqrt(v / c2) + ADAM_EPS)
        params[key] -= lr * (step + weight_decay * params[key])


def _epoch_lr(base, decay, every, epoch):
    return base * decay ** (epoch // every)


def evaluate_mae(params, state, loc, rss, target):
    """Mean absolute error in eval mode (running batch-norm stats)."""
    pred, _, _ = net.forward(params, state, loc, rss, training=False)
    return float(np.mean(np.abs(pred - np.asarray(target, dtype=np.float64))))


def train(params, state, train_data, val_data, config, seed, frozen=frozenset()):
    """Fit in place and return (params, state, report) at the best epoch.

    train_data / val_data are (loc, rss, target) triples of already
    scaled arrays.  Shuffling is drawn from substream(seed, "shuffle",
    epoch) so a rerun with the same seed reproduces the fit exactly.
    Early stopping counts epochs since the best validation MAE and quits
    once the count exceeds config.patience; the returned tensors are
    deep copies taken at that best epoch, never the post-best ones.
    """
    loc, rss, target = (np.asarray(a, dtype=np.float64) for a in train_data)
    n = loc.shape[0]
    if n == 0:
        raise EmptyInput("no training samples")
    target = target.reshape(n)

    opt = adamw_init(params, frozen)
    report = TrainReport()
    best = (copy.deepcopy(params), copy.deepcopy(state))
    bad_epochs = 0

    for epoch in range(config.epochs):
        lr = _epoch_lr(config.learning_rate, config.lr_decay,
                       config.lr_decay_every, epoch)
        order = substream(seed, "shuffle", epoch).permutation(n)
        epoch_loss = 0.0
        for start in range(0, n, config.batch_size):
            idx = order[start:start + config.batch_size]
            batch_loss, grads, state = net.loss_and_grads(
                params, state, loc[idx], rss[idx], target[idx])
            if not np.isfinite(batch_loss):
                raise Diverged(f"non-finite loss at epoch {epoch}")
            adamw_step(params, grads, opt, lr, config.weight_decay)
            epoch_loss += batch_loss * len(idx)
        report.train_loss.append(epoch_loss / n)

        val = evaluate_mae(params, state, *val_data)
        if not np.isfinite(val):
            raise Diverged(f"non-finite validation MAE at epoch {epoch}")
        report.val_mae.append(val)
        report.epochs_run = epoch + 1

        if val < report.best_val_mae:
            report.best_val_mae = val
            report.best_epoch = epoch
            best = (copy.deepcopy(params), copy.deepcopy(state))
            bad_epochs = 0
        else:
            bad_epochs += 1
            if bad_epochs > config.patience:
                report.stopped_early = True
                break

    params, state = best
    return params, state, report
