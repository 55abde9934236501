import os

from setuptools import Extension, setup

try:
    from Cython.Build import cythonize
except ImportError:  # fallback kernels are used
    cythonize = None

ext_modules = []
if cythonize is not None and not os.environ.get("REGUNET_PURE_PYTHON"):
    ext_modules = cythonize(
        [
            Extension(
                "regunet._kernels",
                ["src/regunet/_kernels.pyx"],
                # no FMA contraction: keeps results bit-identical to the numpy fallback
                extra_compile_args=["-O3", "-ffp-contract=off"],
            )
        ],
        compiler_directives={"language_level": "3"},
    )

setup(ext_modules=ext_modules)
