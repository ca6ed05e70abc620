"""Kernel backend selection.

The compiled extension is used when it imports cleanly; otherwise the numpy
fallback is used. Set ``PHQNET_BACKEND=python`` to force the fallback, or
``PHQNET_BACKEND=compiled`` to make a missing extension an import error.
"""

import importlib
import os

from . import _fallback

_REQUIRED = ("conv_forward", "conv_backward", "lstm_forward", "lstm_backward")


def _load(name):
    if name == "python":
        return _fallback
    if name == "compiled":
        return importlib.import_module("phqnet.numerics._kernels")
    raise ValueError(f"unknown backend {name!r}; expected 'compiled' or 'python'")


def _select():
    forced = os.environ.get("PHQNET_BACKEND", "").strip().lower()
    if forced:
        return forced, _load(forced)
    try:
        return "compiled", _load("compiled")
    except ImportError:
        return "python", _fallback


BACKEND, kernels = _select()


def available():
    """Names of the backends importable in this environment."""
    names = ["python"]
    try:
        _load("compiled")
        names.insert(0, "compiled")
    except ImportError:
        pass
    return names


def get(name):
    """Return the kernel namespace for ``name`` without switching globally."""
    mod = _load(name)
    missing = [f for f in _REQUIRED if not hasattr(mod, f)]
    if missing:
        raise ImportError(f"backend {name!r} lacks {missing}")
    return mod


def use(name):
    """Switch the process-wide backend (tests and benchmarks)."""
    global BACKEND, kernels
    kernels = get(name)
    BACKEND = name
