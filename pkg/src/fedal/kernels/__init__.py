"""Kernel backend selection.

The dense forward/backward/Adam kernels exist twice: a compiled Cython
extension (``_speedups``) and a NumPy reference (``reference``). The
compiled one is preferred when present; ``FEDAL_KERNELS=python`` or
``FEDAL_KERNELS=compiled`` in the environment forces a choice. Both
backends share the flat weight layout documented in ``reference``.
"""

import os

from . import reference
from .reference import PROB_FLOOR, layer_views, n_weights

_requested = os.environ.get("FEDAL_KERNELS", "").strip().lower()
if _requested not in ("", "compiled", "python"):
    raise ImportError(f"FEDAL_KERNELS must be 'compiled' or 'python', got {_requested!r}")

_impl = None
if _requested != "python":
    try:
        from . import _speedups as _impl
    except ImportError:
        if _requested == "compiled":
            raise ImportError("FEDAL_KERNELS=compiled but the extension is not built")
if _impl is None:
    _impl = reference

BACKEND = "python" if _impl is reference else "compiled"

forward_probs = _impl.forward_probs
loss_and_grad = _impl.loss_and_grad
adam_step = _impl.adam_step


def get_backend(name):
    """Return the kernel module for 'python' or 'compiled' (benchmarks)."""
    if name == "python":
        return reference
    if name == "compiled":
        from . import _speedups
        return _speedups
    raise ValueError(f"unknown backend {name!r}")
