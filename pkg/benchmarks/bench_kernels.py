"""Time the compiled and numpy kernel backends side by side.

    python benchmarks/bench_kernels.py [--repeat 20] [--epoch]

Kernel sizes match the default model: 1,750,273 parameters for the
optimizer and decay kernels, 32 x 512 activations for ReLU and batch norm.
``--epoch`` also times one training epoch per backend in a subprocess
(the backend is fixed at import time).
"""
import argparse
import os
import subprocess
import sys
import timeit

import numpy as np

from regunet.kernels import backends

N_PARAMS = 1_750_273
BATCH, WIDTH = 32, 512

EPOCH_SCRIPT = """
import time
from regunet.data import synthetic_dataset, stratified_split, standardize
from regunet.kernels import BACKEND
from regunet.models import ModelSpec, build
from regunet.training import TrainConfig, train
ds = synthetic_dataset(541, seed=0)
split = stratified_split(ds, 0.1, 0)
ds = standardize(ds, split)
model = build(ModelSpec("residual_concat"))
start = time.perf_counter()
train(model, ds, split, TrainConfig(epochs=2))
print(BACKEND, (time.perf_counter() - start) / 2)
"""


def kernel_cases(impl, rng):
    p = rng.normal(size=N_PARAMS)
    g = rng.normal(size=N_PARAMS)
    m = np.zeros(N_PARAMS)
    v = np.zeros(N_PARAMS)
    x = rng.normal(size=(BATCH, WIDTH))
    grad = rng.normal(size=(BATCH, WIDTH))
    xhat, _, _, inv = impl.batchnorm_train_forward(x, 1e-5)
    return {
        "adam_update": lambda: impl.adam_update(p, g, m, v, 1e-3, 0.9, 0.999, 1e-8, 0.1, 0.001),
        "add_decay_grad l1": lambda: impl.add_decay_grad(g, p, 1e-12, 1),
        "add_decay_grad l2": lambda: impl.add_decay_grad(g, p, 1e-12, 0),
        "relu_forward": lambda: impl.relu_forward(x),
        "relu_backward": lambda: impl.relu_backward(grad, x),
        "batchnorm_train_forward": lambda: impl.batchnorm_train_forward(x, 1e-5),
        "batchnorm_backward": lambda: impl.batchnorm_backward(grad, xhat, inv),
        "splitmix_uniform 1e6": lambda: impl.splitmix_uniform(12345, 0, 1_000_000),
    }


def best_ms(fn, repeat):
    fn()
    return 1e3 * min(timeit.repeat(fn, number=1, repeat=repeat))


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--repeat", type=int, default=20)
    parser.add_argument("--epoch", action="store_true", help="also time a full training epoch")
    args = parser.parse_args(argv)

    found = backends()
    names = [n for n in ("cython", "python") if n in found]
    if "cython" not in found:
        print("compiled backend not built; only the numpy fallback is timed", file=sys.stderr)
    results = {}
    for name in names:
        cases = kernel_cases(found[name], np.random.default_rng(0))
        results[name] = {label: best_ms(fn, args.repeat) for label, fn in cases.items()}

    header = "%-26s" % "kernel (best of %d, ms)" % args.repeat + "".join("%12s" % n for n in names)
    if len(names) == 2:
        header += "%10s" % "speedup"
    print(header)
    for label in results[names[0]]:
        row = "%-26s" % label + "".join("%12.3f" % results[n][label] for n in names)
        if len(names) == 2:
            row += "%9.1fx" % (results["python"][label] / results["cython"][label])
        print(row)

    if args.epoch:
        print()
        for name in names:
            env = dict(os.environ, REGUNET_PURE_PYTHON="1" if name == "python" else "0")
            out = subprocess.run([sys.executable, "-c", EPOCH_SCRIPT], env=env, check=True,
                                 capture_output=True, text=True).stdout.split()
            print("%-26s%12.3f s  (backend %s)" % ("training epoch, 541 rows", float(out[1]), out[0]))


if __name__ == "__main__":
    main()
