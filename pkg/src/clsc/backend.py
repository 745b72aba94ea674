"""Selects the trial kernel at import time.

``CLSC_BACKEND=python`` forces the numpy kernel, ``compiled`` demands the
extension and ``auto`` (default) uses the extension when it was built.
"""

from __future__ import annotations

import os

from . import _pykernel

try:
    from . import _kernel as _compiled
except ImportError:
    _compiled = None

HAVE_COMPILED = _compiled is not None


def get_kernel(name: str | None = None):
    name = (name or os.environ.get("CLSC_BACKEND", "auto")).lower()
    if name == "python":
        return _pykernel
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel requested but clsc._kernel is not built")
        return _compiled
    if name == "auto":
        return _compiled if _compiled is not None else _pykernel
    raise ValueError(f"unknown backend {name!r} (expected auto, compiled or python)")


def kernel_name(kernel) -> str:
    return "compiled" if kernel is _compiled and _compiled is not None else "python"
