"""Numba switch.

Hot kernels are decorated with :func:`jit`.  Setting ``IGCX_DISABLE_NUMBA=1``
(or running without numba installed) leaves them as plain Python and routes
the vectorizable kernels to their numpy implementations instead.
"""

from __future__ import annotations

import os
import warnings

_FLAG = os.environ.get("IGCX_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("1", "true", "yes", "on")


def jit(func):
    """``numba.njit`` when acceleration is on, identity otherwise."""
    if not USE_NUMBA:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name() -> str:
    return f"numba {numba.__version__}" if USE_NUMBA else "numpy"


def thread_cap() -> int | None:
    """Parse ``IGCX_THREADS``; ``None`` when unset."""
    raw = os.environ.get("IGCX_THREADS")
    if raw is None or raw.strip() == "":
        return None
    try:
        n = int(raw)
    except ValueError:
        raise ValueError(f"IGCX_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise ValueError(f"IGCX_THREADS must be a positive integer, got {raw!r}")
    if USE_NUMBA:
        # numba probes every threading layer here and warns about an old system TBB
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", numba.NumbaWarning)
            numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))
    return n
