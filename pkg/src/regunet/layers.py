"""Layer primitives with hand-written forward and backward passes.

Every layer caches what its backward needs during ``forward`` and drops
that cache once ``backward`` has consumed it, so a second backward without
a fresh forward raises ``CacheError``.
"""
import numpy as np

from . import kernels
from .errors import CacheError, ConfigError, ShapeError
from .tensor import check_finite, matmul, seeded_init, shape_str


def relu(x):
    return kernels.relu_forward(np.ascontiguousarray(x))


def relu_backward(grad_out, x):
    """Pass ``grad_out`` where ``x > 0``; the derivative at 0 is taken as 0."""
    return kernels.relu_backward(np.ascontiguousarray(grad_out), np.ascontiguousarray(x))


def sigmoid(x):
    # split by sign so exp never overflows
    out = np.empty_like(x)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    e = np.exp(x[~pos])
    out[~pos] = e / (1.0 + e)
    return out


def sigmoid_backward(grad_out, s):
    """``s`` is the cached forward output."""
    return grad_out * s * (1.0 - s)


class Layer:
    kind = None

    def __init__(self, name=""):
        self.name = name
        self.cache = None

    def _take_cache(self):
        if self.cache is None:
            raise CacheError("%s layer %r: backward called without a forward" % (self.kind, self.name))
        cache, self.cache = self.cache, None
        return cache

    def parameter_count(self):
        return 0

    def __repr__(self):
        return "%s(%r)" % (type(self).__name__, self.name)


class Dense(Layer):
    """Affine map ``x @ W + b`` with ``W`` of shape fan_in x fan_out."""

    kind = "dense"

    def __init__(self, fan_in, fan_out, rng=None, init="he_normal", name=""):
        super().__init__(name)
        if fan_in < 1 or fan_out < 1:
            raise ConfigError("dense dimensions must be positive, got %dx%d" % (fan_in, fan_out))
        self.W = seeded_init(fan_in, fan_out, init if rng is not None else "zeros", rng)
        self.b = np.zeros((1, fan_out))
        self.grad_W = np.zeros_like(self.W)
        self.grad_b = np.zeros_like(self.b)

    @property
    def fan_in(self):
        return self.W.shape[0]

    @property
    def fan_out(self):
        return self.W.shape[1]

    def parameter_count(self):
        return self.W.size + self.b.size

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.fan_in:
            raise ShapeError("dense %r expects %d input columns, got %s" % (self.name, self.fan_in, shape_str(x)))
        self.cache = x
        return check_finite(x @ self.W + self.b, "dense %r output" % self.name)

    def backward(self, grad_out):
        x = self._take_cache()
        if grad_out.shape != (x.shape[0], self.fan_out):
            raise ShapeError("dense %r backward expects %dx%d gradient, got %s"
                             % (self.name, x.shape[0], self.fan_out, shape_str(grad_out)))
        self.grad_W = matmul(x.T, grad_out)
        self.grad_b = grad_out.sum(axis=0, keepdims=True)
        return matmul(grad_out, self.W.T)

    def zero_grad(self):
        self.grad_W = np.zeros_like(self.W)
        self.grad_b = np.zeros_like(self.b)


class ReLU(Layer):
    kind = "relu"

    def forward(self, x):
        self.cache = np.ascontiguousarray(x)
        return relu(self.cache)

    def backward(self, grad_out):
        return relu_backward(grad_out, self._take_cache())


class Sigmoid(Layer):
    kind = "sigmoid"

    def forward(self, x):
        s = sigmoid(x)
        self.cache = s
        return s

    def backward(self, grad_out):
        return sigmoid_backward(grad_out, self._take_cache())


class BatchNorm(Layer):
    """Batch normalization without a learnable scale or shift.

    Train mode normalizes with batch statistics (population variance) and
    updates ``running = momentum * running + (1 - momentum) * batch``.
    Eval mode normalizes with the running statistics.
    """

    kind = "batchnorm"

    def __init__(self, features, momentum=0.9, eps=1e-5, name=""):
        super().__init__(name)
        if not 0.0 < momentum < 1.0:
            raise ConfigError("batchnorm momentum must lie in (0, 1), got %r" % momentum)
        if eps <= 0:
            raise ConfigError("batchnorm eps must be positive")
        self.momentum = momentum
        self.eps = eps
        self.running_mean = np.zeros((1, features))
        self.running_var = np.ones((1, features))
        self.mode = "train"

    @property
    def features(self):
        return self.running_mean.shape[1]

    def forward(self, x):
        if x.ndim != 2 or x.shape[1] != self.features:
            raise ShapeError("batchnorm %r expects %d columns, got %s" % (self.name, self.features, shape_str(x)))
        if self.mode == "eval":
            self.cache = None
            return (x - self.running_mean) / np.sqrt(self.running_var + self.eps)
        if x.shape[0] < 2:
            raise ShapeError("batchnorm %r needs at least 2 rows in train mode, got %d" % (self.name, x.shape[0]))
        xhat, mean, var, inv = kernels.batchnorm_train_forward(np.ascontiguousarray(x), self.eps)
        self.running_mean = self.momentum * self.running_mean + (1.0 - self.momentum) * mean
        self.running_var = self.momentum * self.running_var + (1.0 - self.momentum) * var
        self.cache = (xhat, inv)
        return xhat

    def backward(self, grad_out):
        xhat, inv = self._take_cache()
        if grad_out.shape != xhat.shape:
            raise ShapeError("batchnorm %r backward expects %s gradient, got %s"
                             % (self.name, shape_str(xhat), shape_str(grad_out)))
        return kernels.batchnorm_backward(np.ascontiguousarray(grad_out), xhat, inv)


class Concat(Layer):
    """Join two equal-width inputs column-wise."""

    kind = "concat"

    def forward(self, a, b):
        if a.shape[0] != b.shape[0]:
            raise ShapeError("concat %r: row counts differ (%s vs %s)" % (self.name, shape_str(a), shape_str(b)))
        if a.shape[1] != b.shape[1]:
            raise ShapeError("concat %r: inputs must have equal widths (%s vs %s)"
                             % (self.name, shape_str(a), shape_str(b)))
        self.cache = a.shape[1]
        return np.concatenate([a, b], axis=1)

    def backward(self, grad_out):
        width = self._take_cache()
        if grad_out.shape[1] != 2 * width:
            raise ShapeError("concat %r backward expects width %d, got %s" % (self.name, 2 * width, shape_str(grad_out)))
        return grad_out[:, :width].copy(), grad_out[:, width:].copy()


class ResidualAdd(Layer):
    kind = "residual_add"

    def forward(self, x, skip):
        if x.shape != skip.shape:
            raise ShapeError("residual %r: shapes differ (%s vs %s)" % (self.name, shape_str(x), shape_str(skip)))
        self.cache = True
        return x + skip

    def backward(self, grad_out):
        self._take_cache()
        return grad_out.copy(), grad_out.copy()
