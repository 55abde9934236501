import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from regunet.errors import ConfigError, NonFiniteError, ShapeError
from regunet.optim import Adam, adam_init


def scalar_adam(w, grad_fn, steps, lr=1e-3, b1=0.9, b2=0.999, eps=1e-8):
    """Independent scalar re-derivation of the update rule."""
    m = v = 0.0
    path = []
    for t in range(1, steps + 1):
        g = grad_fn(w)
        m = b1 * m + (1 - b1) * g
        v = b2 * v + (1 - b2) * g * g
        w = w - lr * (m / (1 - b1 ** t)) / (math.sqrt(v / (1 - b2 ** t)) + eps)
        path.append(w)
    return path


def test_init_defaults():
    params = [np.ones((41, 512)), np.ones((1, 512))]
    opt = adam_init(params)
    assert (opt.lr, opt.beta1, opt.beta2, opt.eps, opt.t) == (0.001, 0.9, 0.999, 1e-8, 0)
    assert opt.m[0].shape == (41, 512) and opt.v[1].shape == (1, 512)
    assert not any(m.any() for m in opt.m) and not any(v.any() for v in opt.v)
    with pytest.raises(ConfigError):
        Adam([])


def test_zero_gradient_leaves_params():
    p = np.arange(6.0).reshape(2, 3)
    before = p.copy()
    opt = Adam([p])
    opt.step([p], [np.zeros_like(p)])
    np.testing.assert_array_equal(p, before)
    assert opt.t == 1


def test_first_step_hand_trace():
    w = np.zeros((1, 1))
    Adam([w]).step([w], [np.full((1, 1), 0.5)])
    # m_hat = 0.5, v_hat = 0.25 after bias correction
    assert w[0, 0] == pytest.approx(-0.001 * 0.5 / (0.5 + 1e-8), rel=1e-15)
    assert w[0, 0] == pytest.approx(-0.001, rel=1e-7)


@settings(max_examples=100)
@given(arrays(np.float64, 20, elements=st.floats(-1e3, 1e3).filter(lambda x: x != 0)))
def test_first_step_bounded_by_lr(g):
    p = np.zeros(20)
    Adam([p]).step([p], [g])
    assert np.abs(p).max() <= 0.001 * (1 + 1e-6)


def test_second_moment_non_negative(rng):
    p = rng.normal(size=50)
    opt = Adam([p])
    for _ in range(200):
        opt.step([p], [rng.normal(scale=10, size=50)])
        assert (opt.v[0] >= 0).all()
    assert opt.t == 200


def test_deterministic_trajectory(rng):
    grads = [rng.normal(size=(3, 4)) for _ in range(30)]
    runs = []
    for _ in range(2):
        p = np.ones((3, 4))
        opt = Adam([p], lr=0.01)
        for g in grads:
            opt.step([p], [g])
        runs.append(p.tobytes())
    assert runs[0] == runs[1]


def test_errors():
    p = np.zeros((2, 2))
    opt = Adam([p], names=["layer.W"])
    with pytest.raises(ShapeError):
        opt.step([p], [np.zeros((2, 3))])
    with pytest.raises(NonFiniteError, match="layer.W"):
        opt.step([p], [np.full((2, 2), np.nan)])


def test_quadratic_matches_scalar_simulation():
    w = np.full((1, 1), 5.0)
    opt = Adam([w])
    oracle = scalar_adam(5.0, lambda x: 2 * x, 2000)
    for t in range(2000):
        opt.step([w], [2 * w])
        assert w[0, 0] == pytest.approx(oracle[t], abs=1e-12)


def test_quadratic_converges_eventually():
    w = np.full((1, 1), 5.0)
    opt = Adam([w])
    for _ in range(10000):
        opt.step([w], [2 * w])
    assert abs(w[0, 0]) < 0.1


@pytest.mark.xfail(strict=True, reason="per-step movement is bounded by ~lr, so 2000 steps at lr=1e-3 "
                                       "cannot cover the distance from 5 to 0.1; the scalar simulation needs 7430")
def test_quadratic_reaches_target_within_2000_steps():
    w = np.full((1, 1), 5.0)
    opt = Adam([w])
    for _ in range(2000):
        opt.step([w], [2 * w])
    assert abs(w[0, 0]) < 0.1
