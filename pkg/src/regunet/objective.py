"""Binary cross-entropy and the L1/L2 weight penalties.

The L2 regularized loss is ``(alpha / 2) * sum(W**2) + L`` while the L1 one
is ``alpha * sum(|W|) + L``; the factor of one half appears only in the L2
form.
"""
from dataclasses import dataclass

import numpy as np

from . import kernels
from .errors import ConfigError, DataError, ShapeError
from .tensor import shape_str

CLIP = 1e-7
MODES = ("none", "l1", "l2")


@dataclass(frozen=True)
class RegularizationConfig:
    mode: str = "none"
    alpha: float = 0.01

    def __post_init__(self):
        if self.mode not in MODES:
            raise ConfigError("regularization mode must be one of %s, got %r" % (MODES, self.mode))
        if not self.alpha >= 0:
            raise ConfigError("alpha must be non-negative, got %r" % self.alpha)


@dataclass(frozen=True)
class LossReport:
    data_loss: float
    penalty: float
    total_loss: float


def _check_pair(pred, target):
    if pred.shape != target.shape:
        raise ShapeError("prediction %s and target %s shapes differ" % (shape_str(pred), shape_str(target)))
    if not np.isin(target, (0.0, 1.0)).all():
        raise DataError("targets must be 0 or 1")
    return np.clip(pred, CLIP, 1.0 - CLIP)


def bce_per_sample(pred, target):
    p = _check_pair(pred, target)
    return -(target * np.log(p) + (1.0 - target) * np.log(1.0 - p))


def bce(pred, target):
    """Mean binary cross-entropy; predictions are clipped to [1e-7, 1 - 1e-7]."""
    return float(bce_per_sample(pred, target).mean())


def bce_grad(pred, target):
    """d(mean BCE)/d(pred), evaluated at the clipped prediction."""
    p = _check_pair(pred, target)
    return (p - target) / (p * (1.0 - p) * pred.shape[0])


def penalty(weights, cfg):
    """Unscaled penalty: sum of squares (l2) or of absolute values (l1)."""
    if cfg.mode == "l2":
        return float(sum(np.sum(w * w) for w in weights))
    if cfg.mode == "l1":
        return float(sum(np.sum(np.abs(w)) for w in weights))
    return 0.0


def penalty_term(weights, cfg):
    """The penalty as it enters the loss: alpha/2 * l2, alpha * l1."""
    if cfg.mode == "l2":
        return 0.5 * cfg.alpha * penalty(weights, cfg)
    if cfg.mode == "l1":
        return cfg.alpha * penalty(weights, cfg)
    return 0.0


def regularized_loss(data_loss, weights, cfg):
    term = penalty_term(weights, cfg)
    return LossReport(data_loss=data_loss, penalty=term, total_loss=data_loss + term)


def penalty_grad(weights, cfg):
    """Gradient of the penalty term: alpha * W (l2) or alpha * sign(W) (l1)."""
    grads = [np.zeros_like(w) for w in weights]
    if cfg.mode != "none":
        for g, w in zip(grads, weights):
            add_penalty_grad(g, w, cfg)
    return grads


def add_penalty_grad(grad, w, cfg):
    """Accumulate the penalty gradient of ``w`` into ``grad`` in place."""
    if cfg.mode == "none" or cfg.alpha == 0:
        return grad
    kernels.add_decay_grad(grad.reshape(-1), np.ascontiguousarray(w).reshape(-1), float(cfg.alpha), cfg.mode == "l1")
    return grad
