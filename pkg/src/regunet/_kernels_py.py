"""Pure numpy fallback for the compiled kernels in ``_kernels.pyx``.

Operation order mirrors the compiled loops; keep the two files in step.
"""
import numpy as np

GOLDEN = np.uint64(0x9E3779B97F4A7C15)
_M1 = np.uint64(0xBF58476D1CE4E5B9)
_M2 = np.uint64(0x94D049BB133111EB)
TWO_POW_M53 = 1.0 / 9007199254740992.0


def _mix(z):
    z = (z ^ (z >> np.uint64(30))) * _M1
    z = (z ^ (z >> np.uint64(27))) * _M2
    return z ^ (z >> np.uint64(31))


def splitmix_uint64(key, counter, n):
    steps = np.arange(1, n + 1, dtype=np.uint64) + np.uint64(counter)
    return _mix(np.uint64(key) + steps * GOLDEN)


def splitmix_uniform(key, counter, n):
    z = splitmix_uint64(key, counter, n)
    return (z >> np.uint64(11)).astype(np.float64) * TWO_POW_M53


def adam_update(p, g, m, v, lr, beta1, beta2, eps, bc1, bc2):
    m *= beta1
    m += (1.0 - beta1) * g
    v *= beta2
    v += (1.0 - beta2) * g * g
    p -= lr * (m / bc1) / (np.sqrt(v / bc2) + eps)


def add_decay_grad(grad, w, alpha, l1):
    if l1:
        grad += alpha * np.sign(w)
    else:
        grad += alpha * w


def relu_forward(x):
    return np.where(x > 0, x, 0.0)


def relu_backward(grad, x):
    return np.where(x > 0, grad, 0.0)


def batchnorm_train_forward(x, eps):
    n = x.shape[0]
    mean = x.sum(axis=0) / n
    d = x - mean
    var = (d * d).sum(axis=0) / n
    inv = 1.0 / np.sqrt(var + eps)
    return d * inv, mean, var, inv


def batchnorm_backward(grad, xhat, inv):
    n = grad.shape[0]
    gsum = grad.sum(axis=0)
    gxsum = (grad * xhat).sum(axis=0)
    return (inv / n) * (n * grad - gsum - xhat * gxsum)
