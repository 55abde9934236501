"""The compiled kernels and the numpy fallback must agree."""
import os
import subprocess
import sys

import numpy as np
import pytest

from regunet import _kernels_py, kernels

backends = kernels.backends()
needs_cython = pytest.mark.skipif("cython" not in backends, reason="compiled extension not built")


@pytest.fixture
def cy():
    return backends["cython"]


@needs_cython
def test_default_backend_is_compiled():
    assert kernels.BACKEND == "cython"


def test_env_var_forces_fallback():
    env = dict(os.environ, REGUNET_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "import regunet; print(regunet.BACKEND)"],
                         env=env, capture_output=True, text=True, check=True)
    assert out.stdout.strip() == "python"


@needs_cython
def test_uniform_bit_identical(cy):
    a = cy.splitmix_uniform(0xDEADBEEF, 17, 1000)
    b = _kernels_py.splitmix_uniform(0xDEADBEEF, 17, 1000)
    assert a.tobytes() == b.tobytes()


@needs_cython
def test_adam_update_bit_identical(cy, rng):
    p0, g = rng.normal(size=5000), rng.normal(size=5000)
    states = []
    for impl in (cy, _kernels_py):
        p, m, v = p0.copy(), np.zeros(5000), np.zeros(5000)
        for t in range(1, 4):
            impl.adam_update(p, g * t, m, v, 1e-3, 0.9, 0.999, 1e-8, 1 - 0.9 ** t, 1 - 0.999 ** t)
        states.append((p, m, v))
    for x, y in zip(*states):
        assert x.tobytes() == y.tobytes()


@needs_cython
@pytest.mark.parametrize("l1", [0, 1])
def test_decay_grad_bit_identical(cy, rng, l1):
    w = rng.normal(size=300)
    w[::7] = 0.0
    g0 = rng.normal(size=300)
    a, b = g0.copy(), g0.copy()
    cy.add_decay_grad(a, w, 0.3, l1)
    _kernels_py.add_decay_grad(b, w, 0.3, l1)
    assert a.tobytes() == b.tobytes()


@needs_cython
def test_relu_bit_identical(cy, rng):
    x = rng.normal(size=(40, 30))
    x[0, :5] = 0.0
    g = rng.normal(size=(40, 30))
    assert cy.relu_forward(x).tobytes() == _kernels_py.relu_forward(x).tobytes()
    assert cy.relu_backward(g, x).tobytes() == _kernels_py.relu_backward(g, x).tobytes()


@needs_cython
def test_batchnorm_agrees(cy, rng):
    x = rng.normal(3.0, 2.0, size=(32, 17))
    g = rng.normal(size=(32, 17))
    fa, fb = cy.batchnorm_train_forward(x, 1e-5), _kernels_py.batchnorm_train_forward(x, 1e-5)
    for a, b in zip(fa, fb):
        np.testing.assert_allclose(a, b, rtol=0, atol=1e-12)
    np.testing.assert_allclose(cy.batchnorm_backward(g, fa[0], fa[3]),
                               _kernels_py.batchnorm_backward(g, fb[0], fb[3]), rtol=0, atol=1e-12)
