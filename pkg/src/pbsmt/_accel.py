"""Optional numba acceleration.

Set ``PBSMT_DISABLE_JIT=1`` to run every kernel through its pure-numpy
fallback instead. The flag is read once at import time.
"""
import os

_FLAG = os.environ.get("PBSMT_DISABLE_JIT", "").strip().lower()

try:
    import numba

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None
    HAVE_NUMBA = False

JIT_ENABLED = HAVE_NUMBA and _FLAG not in ("1", "true", "yes", "on")


def njit(func=None, **kwargs):
    """``numba.njit`` when available, otherwise the identity decorator."""
    kwargs.setdefault("cache", True)
    kwargs.setdefault("nogil", True)

    def wrap(f):
        if not HAVE_NUMBA:
            return f
        return numba.njit(**kwargs)(f)

    if func is not None:
        return wrap(func)
    return wrap


def resolve_threads(threads=None):
    """Thread count from the explicit value, then ``PBSMT_THREADS``, then 1.

    The kernels are serial; threads parallelize decoding across sentences.
    """
    if threads is None or threads == 0:
        env = os.environ.get("PBSMT_THREADS", "").strip()
        threads = int(env) if env else 1
    return max(1, int(threads))
