"""Kernel backend selection: numba-compiled loops with a pure-numpy fallback.

The active backend is chosen from the FLATFLOW_BACKEND environment variable
("numba" or "numpy"); default is numba when importable. `set_backend` switches
at runtime, which the benchmark uses to compare both paths in one process.
"""
from __future__ import annotations

import os

from . import _kernels_numpy

_BACKENDS = {"numpy": _kernels_numpy}

try:
    from . import _kernels_numba

    _BACKENDS["numba"] = _kernels_numba
    _HAVE_NUMBA = True
except ImportError:
    _HAVE_NUMBA = False

_active = None


def _default_name() -> str:
    name = os.environ.get("FLATFLOW_BACKEND", "").strip().lower()
    if name:
        if name not in ("numpy", "numba"):
            raise ValueError(f"FLATFLOW_BACKEND must be 'numpy' or 'numba', got {name!r}")
        if name == "numba" and not _HAVE_NUMBA:
            raise ImportError("FLATFLOW_BACKEND=numba but numba is not importable")
        return name
    return "numba" if _HAVE_NUMBA else "numpy"


def set_backend(name: str):
    """Select the kernel implementation; returns the module now active."""
    if name not in _BACKENDS:
        raise ValueError(f"unknown backend {name!r}; available: {sorted(_BACKENDS)}")
    global _active
    _active = name
    return _BACKENDS[name]


def active_backend() -> str:
    global _active
    if _active is None:
        _active = _default_name()
    return _active


def available_backends() -> list[str]:
    return sorted(_BACKENDS)


def kernels():
    """The module implementing the hot kernels for the active backend."""
    return _BACKENDS[active_backend()]
