"""Kernel backend selection.

The compiled extension is preferred when present; the pure-Python module
is the drop-in fallback. ``TANGLESIM_BACKEND=pure`` (or ``compiled``)
forces a choice, which the benchmark uses to compare the two.
"""

import os

from . import pure

try:
    from . import _core
except ImportError:  # extension not built
    _core = None

_FORCED = os.environ.get("TANGLESIM_BACKEND")
if _FORCED not in (None, "", "pure", "compiled"):
    raise RuntimeError(
        f"TANGLESIM_BACKEND must be 'pure' or 'compiled', got {_FORCED!r}"
    )
if _FORCED == "compiled" and _core is None:
    raise RuntimeError(
        "TANGLESIM_BACKEND=compiled but the compiled kernels are not built"
    )


def get_kernels(backend=None):
    """Return the kernel module for ``backend`` (None = selected default)."""
    if backend is None:
        backend = backend_name()
    if backend == "pure":
        return pure
    if backend == "compiled":
        if _core is None:
            raise RuntimeError("compiled kernels are not built")
        return _core
    raise ValueError(f"unknown backend {backend!r}")


def backend_name() -> str:
    """Name of the backend selected at import time."""
    if _FORCED in ("pure", "compiled"):
        return _FORCED
    return "compiled" if _core is not None else "pure"


def available_backends() -> tuple[str, ...]:
    return ("compiled", "pure") if _core is not None else ("pure",)
