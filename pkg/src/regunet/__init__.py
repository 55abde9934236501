"""Regularized, concatenated and residual binary classifiers built from scratch on numpy."""
from .kernels import BACKEND

__version__ = "0.1.0"
