"""Numba switch shared by the hot kernels.

Kernels are compiled with ``numba.njit`` unless ``MINVSET_DISABLE_JIT`` is set
to a truthy value, or numba cannot be imported.  In that case every dispatcher
in :mod:`minvset._kernels` routes to its vectorised numpy twin.  The flag is
read once, at import time.

``MINVSET_THREADS`` caps the number of workers used by either path.
"""

from __future__ import annotations

import os

_TRUTHY = {"1", "true", "yes", "on"}

DISABLE_JIT = os.environ.get("MINVSET_DISABLE_JIT", "").strip().lower() in _TRUTHY

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency
    numba = None

if numba is not None and "NUMBA_THREADING_LAYER" not in os.environ:
    # the TBB shipped with some distributions is too old and numba warns on every
    # first parallel launch; OpenMP or the built-in workqueue are always fine here
    numba.config.THREADING_LAYER = "omp"

USE_NUMBA = numba is not None and not DISABLE_JIT
BACKEND = "numba" if USE_NUMBA else "numpy"


def njit(*args, **kwargs):
    """``numba.njit`` when the JIT is enabled, otherwise a no-op decorator."""
    if USE_NUMBA:
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda func: func


if USE_NUMBA:
    prange = numba.prange
else:
    prange = range


def thread_count() -> int:
    """Worker cap from ``MINVSET_THREADS`` (default: all cores)."""
    raw = os.environ.get("MINVSET_THREADS", "").strip()
    if raw:
        try:
            value = int(raw)
        except ValueError:
            value = 0
        if value >= 1:
            return value
    return os.cpu_count() or 1


def apply_thread_cap() -> int:
    """Push the worker cap into numba's thread pool; return the effective count."""
    want = thread_count()
    if USE_NUMBA:
        have = numba.config.NUMBA_NUM_THREADS
        want = max(1, min(want, have))
        numba.set_num_threads(want)
    return want
