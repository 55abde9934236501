"""Kernel backend selection.

The compiled Cython core is used when it was built; otherwise the numpy
fallback is imported. Setting ``REGUNET_PURE_PYTHON=1`` forces the fallback.
``BACKEND`` names the active implementation (``"cython"`` or ``"python"``).
"""
import os

from . import _kernels_py

if os.environ.get("REGUNET_PURE_PYTHON", "") not in ("", "0"):
    _impl = _kernels_py
    BACKEND = "python"
else:
    try:
        from . import _kernels as _impl
        BACKEND = "cython"
    except ImportError:  # extension not built
        _impl = _kernels_py
        BACKEND = "python"

splitmix_uniform = _impl.splitmix_uniform
adam_update = _impl.adam_update
add_decay_grad = _impl.add_decay_grad
relu_forward = _impl.relu_forward
relu_backward = _impl.relu_backward
batchnorm_train_forward = _impl.batchnorm_train_forward
batchnorm_backward = _impl.batchnorm_backward


def backends():
    """Return ``{name: module}`` for every importable backend."""
    found = {"python": _kernels_py}
    try:
        from . import _kernels
        found["cython"] = _kernels
    except ImportError:
        pass
    return found
