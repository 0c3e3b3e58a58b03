"""Gating hot-loop kernels: compiled core with a pure NumPy fallback.

The compiled module (built from _native.pyx) is preferred; selection happens
once at import time. Set IPI_PURE_KERNELS=1 to force the fallback, e.g. for
benchmarking or debugging. `IMPLEMENTATION` reports which one is active.
"""

import os

from . import _pure

REASON_UNCHANGED = _pure.REASON_UNCHANGED
REASON_PASS_THROUGH = _pure.REASON_PASS_THROUGH
REASON_SUPPRESSED = _pure.REASON_SUPPRESSED
REASON_FORCED = _pure.REASON_FORCED

if os.environ.get("IPI_PURE_KERNELS"):
    _impl = _pure
else:
    try:
        from . import _native as _impl  # type: ignore[no-redef]
    except ImportError:
        _impl = _pure

IMPLEMENTATION = "pure" if _impl is _pure else "native"

max_pool_delta = _impl.max_pool_delta
gate_series = _impl.gate_series
sweep_grid = _impl.sweep_grid

__all__ = [
    "IMPLEMENTATION",
    "REASON_UNCHANGED",
    "REASON_PASS_THROUGH",
    "REASON_SUPPRESSED",
    "REASON_FORCED",
    "max_pool_delta",
    "gate_series",
    "sweep_grid",
]
