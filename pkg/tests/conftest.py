import numpy as np
import pytest


def numeric_grad(f, x, h=1e-5):
    """Central differences of scalar ``f`` w.r.t. every entry of ``x`` (mutated and restored)."""
    g = np.zeros_like(x)
    for idx in np.ndindex(x.shape):
        orig = x[idx]
        x[idx] = orig + h
        fp = f()
        x[idx] = orig - h
        fm = f()
        x[idx] = orig
        g[idx] = (fp - fm) / (2 * h)
    return g


def max_rel_error(a, b, floor=1e-6):
    return float(np.max(np.abs(a - b) / np.maximum(np.maximum(np.abs(a), np.abs(b)), floor)))


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def balanced_tiny(per_class=8, dim=41, seed=3):
    """Standardized balanced subset of a separable synthetic set, with no validation rows."""
    from regunet.data import SplitIndices, standardize, synthetic_dataset

    full = synthetic_dataset(8 * per_class, dim=dim, seed=seed)
    y = full.y.ravel()
    idx = np.sort(np.concatenate([np.flatnonzero(y == 0)[:per_class], np.flatnonzero(y == 1)[:per_class]]))
    ds = full.subset(idx)
    split = SplitIndices(np.arange(ds.n), np.array([], dtype=np.int64))
    return standardize(ds, split), split
