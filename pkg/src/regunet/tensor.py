"""Dense float64 matrices and a portable seeded generator.

Matrices are plain 2-D C-contiguous ``numpy.float64`` arrays; the helpers
here validate shape and finiteness so callers get a clear error instead of
a silent NaN.

Random numbers come from a counter-based SplitMix64 stream: draw ``i`` of a
stream is ``mix64(key + (i + 1) * 0x9E3779B97F4A7C15)`` where ``key`` is
derived from ``(seed, stream)``. Only 64-bit integer arithmetic is involved,
so the integer stream is identical on every platform. Uniforms take the top
53 bits; normals use the Box-Muller transform on pairs of uniforms.
"""
import math

import numpy as np

from . import _kernels_py, kernels
from .errors import NonFiniteError, ShapeError

_MASK64 = (1 << 64) - 1


def shape_str(a):
    return "%dx%d" % a.shape


def as_matrix(data, name="matrix"):
    """Coerce ``data`` to a 2-D float64 array with no NaN/inf entries."""
    a = np.ascontiguousarray(data, dtype=np.float64)
    if a.ndim == 1:
        a = a.reshape(1, -1)
    if a.ndim != 2:
        raise ShapeError("%s must be 2-D, got %d dimensions" % (name, a.ndim))
    if a.shape[0] < 1 or a.shape[1] < 1:
        raise ShapeError("%s must have at least one row and column, got %s" % (name, shape_str(a)))
    check_finite(a, name)
    return a


def check_finite(a, name="result"):
    if not np.isfinite(a).all():
        raise NonFiniteError("%s contains NaN or infinity" % name)
    return a


def matmul(a, b):
    if a.shape[1] != b.shape[0]:
        raise ShapeError("cannot multiply %s by %s" % (shape_str(a), shape_str(b)))
    with np.errstate(all="ignore"):
        out = a @ b
    return check_finite(out, "matmul result")


_ELEMENTWISE = {"add": np.add, "sub": np.subtract, "mul": np.multiply}


def elementwise(a, b, op):
    if op not in _ELEMENTWISE:
        raise ValueError("unknown elementwise op %r" % op)
    if a.shape != b.shape:
        raise ShapeError("elementwise %s needs equal shapes, got %s and %s" % (op, shape_str(a), shape_str(b)))
    with np.errstate(all="ignore"):
        out = _ELEMENTWISE[op](a, b)
    return check_finite(out, "%s result" % op)


def reduce(a, kind):
    """``sum`` returns a float; ``col_mean``/``col_var`` return 1 x cols.

    ``col_var`` is the population variance (divide by n).
    """
    if kind == "sum":
        return float(a.sum())
    if kind == "col_mean":
        return a.mean(axis=0, keepdims=True)
    if kind == "col_var":
        return a.var(axis=0, keepdims=True)
    raise ValueError("unknown reduction %r" % kind)


def _mix64(z):
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


class Rng:
    """Counter-based SplitMix64 stream keyed by ``(seed, stream)``.

    Independent streams for the same seed are obtained with ``spawn``.
    """

    def __init__(self, seed, stream=0):
        if not 0 <= int(seed) <= _MASK64:
            raise ValueError("seed must fit in an unsigned 64-bit integer")
        self.seed = int(seed)
        self.stream = int(stream)
        self.key = _mix64((self.seed + _mix64(self.stream + 0x9E3779B97F4A7C15)) & _MASK64)
        self.counter = 0

    def __repr__(self):
        return "Rng(seed=%d, stream=%d, counter=%d)" % (self.seed, self.stream, self.counter)

    def spawn(self, stream):
        return Rng(self.seed, stream)

    def uniform(self, n):
        """``n`` draws from [0, 1)."""
        out = kernels.splitmix_uniform(self.key, self.counter, int(n))
        self.counter += int(n)
        return out

    def uint64(self, n):
        # shares the counter with uniform(); used for sort keys
        out = _kernels_py.splitmix_uint64(self.key, self.counter, int(n))
        self.counter += int(n)
        return out

    def normal(self, n):
        n = int(n)
        pairs = (n + 1) // 2
        u = self.uniform(2 * pairs)
        r = np.sqrt(-2.0 * np.log1p(-u[:pairs]))
        theta = 2.0 * math.pi * u[pairs:]
        z = np.concatenate([r * np.cos(theta), r * np.sin(theta)])
        return z[:n]

    def permutation(self, n):
        return np.argsort(self.uint64(n), kind="stable")


def seeded_init(rows, cols, scheme, rng):
    """Initialize a ``rows x cols`` weight matrix (rows = fan_in)."""
    if rows < 1 or cols < 1:
        raise ShapeError("init shape must be positive, got %dx%d" % (rows, cols))
    if scheme == "zeros":
        return np.zeros((rows, cols))
    if scheme == "he_normal":
        return rng.normal(rows * cols).reshape(rows, cols) * math.sqrt(2.0 / rows)
    if scheme == "xavier_uniform":
        bound = math.sqrt(6.0 / (rows + cols))
        return (rng.uniform(rows * cols).reshape(rows, cols) * 2.0 - 1.0) * bound
    raise ValueError("unknown init scheme %r" % scheme)
