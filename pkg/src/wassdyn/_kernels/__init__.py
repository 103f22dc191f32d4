"""Kernel backends.

``net_simplex`` resolves to the compiled extension when the build produced
one (the .so shadows the .py on import), and to the interpreted module
otherwise.  ``load_pure()`` always loads the interpreted source, so tests and
benchmarks can compare the two implementations side by side.
"""

import importlib.util
import os

from . import net_simplex

_PURE_CACHE = None


def active_backend() -> str:
    """Name of the backend picked at import time."""
    return "compiled" if net_simplex.COMPILED else "python"


def load_active():
    return net_simplex


def load_pure():
    """Load the interpreted implementation regardless of the build."""
    global _PURE_CACHE
    if not net_simplex.COMPILED:
        return net_simplex
    if _PURE_CACHE is None:
        path = os.path.join(os.path.dirname(__file__), "net_simplex.py")
        spec = importlib.util.spec_from_file_location(
            "wassdyn._kernels._net_simplex_pure", path)
        mod = importlib.util.module_from_spec(spec)
        spec.loader.exec_module(mod)
        _PURE_CACHE = mod
    return _PURE_CACHE
