"""Backend selection for the per-step hot loop.

The compiled extension ``mgaps._ckernels`` is used when it imports; otherwise,
or when ``MGAPS_PURE_PYTHON=1`` is set, the numpy implementation in
``mgaps._pykernels`` is used. Both expose ``quad_closed_loop`` and
``sens_update`` with identical signatures.
"""

from __future__ import annotations

import importlib
import os
from types import ModuleType

from mgaps import _pykernels

_compiled: ModuleType | None
try:
    _compiled = importlib.import_module("mgaps._ckernels")
except ImportError:
    _compiled = None


class BackendError(ImportError):
    pass


def available() -> list[str]:
    return ["python"] + (["cython"] if _compiled is not None else [])


def load(name: str | None = None) -> ModuleType:
    """Return the kernel module for ``name`` ("cython", "python" or default)."""
    if name is None:
        name = "python" if os.environ.get("MGAPS_PURE_PYTHON") == "1" or _compiled is None else "cython"
    if name == "python":
        return _pykernels
    if name == "cython":
        if _compiled is None:
            raise BackendError("compiled kernels not built; run `pip install -e .`")
        return _compiled
    raise BackendError(f"unknown kernel backend {name!r}")


def name_of(module: ModuleType) -> str:
    return "cython" if module is _compiled else "python"


_default = load()
BACKEND = name_of(_default)
quad_closed_loop = _default.quad_closed_loop
sens_update = _default.sens_update
