"""Adam with bias-corrected moment estimates.

Weight-decay gradients are expected to be folded into ``grads`` before
``step`` (L2-as-loss, not decoupled decay).
"""
import numpy as np

from . import kernels
from .errors import ConfigError, NonFiniteError, ShapeError


class Adam:
    def __init__(self, params, lr=0.001, beta1=0.9, beta2=0.999, eps=1e-8, names=None):
        params = list(params)
        if not params:
            raise ConfigError("Adam needs at least one parameter")
        if lr <= 0 or eps <= 0 or not (0 <= beta1 < 1) or not (0 <= beta2 < 1):
            raise ConfigError("invalid Adam hyperparameters lr=%r beta1=%r beta2=%r eps=%r" % (lr, beta1, beta2, eps))
        self.lr = lr
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = [np.zeros_like(p) for p in params]
        self.v = [np.zeros_like(p) for p in params]
        self.names = list(names) if names is not None else ["param%d" % i for i in range(len(params))]

    def step(self, params, grads):
        """Update ``params`` in place from ``grads``."""
        params, grads = list(params), list(grads)
        if len(params) != len(self.m) or len(grads) != len(self.m):
            raise ShapeError("Adam was built for %d parameters, got %d params and %d grads"
                             % (len(self.m), len(params), len(grads)))
        for name, p, g, m in zip(self.names, params, grads, self.m):
            if p.shape != m.shape or g.shape != m.shape:
                raise ShapeError("parameter %s: expected shape %s, got param %s grad %s"
                                 % (name, m.shape, p.shape, g.shape))
            if not p.flags.c_contiguous:
                raise ShapeError("parameter %s must be C-contiguous for in-place updates" % name)
            if not np.isfinite(g).all():
                raise NonFiniteError("gradient of parameter %s contains NaN or infinity" % name)
        self.t += 1
        bc1 = 1.0 - self.beta1 ** self.t
        bc2 = 1.0 - self.beta2 ** self.t
        for p, g, m, v in zip(params, grads, self.m, self.v):
            kernels.adam_update(p.reshape(-1), np.ascontiguousarray(g).reshape(-1), m.reshape(-1), v.reshape(-1),
                                self.lr, self.beta1, self.beta2, self.eps, bc1, bc2)


def adam_init(params, **hyper):
    return Adam(params, **hyper)
