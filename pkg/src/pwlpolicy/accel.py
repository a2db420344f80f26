"""Execution-path switch between numba-compiled and plain NumPy kernels.

Hot kernels elsewhere in the package are written in numba-compatible NumPy and
decorated with :func:`maybe_njit`.  When numba is importable and the
``PWLPOLICY_DISABLE_NUMBA`` environment variable is unset, the decorator
compiles them; otherwise the identical source runs as ordinary vectorized
NumPy.  Results are deterministic within either path (same inputs, same
bits on rerun), but bit-equality is not promised *across* the two paths
because summation orders differ between BLAS and compiled loops.
"""

import os

ENV_FLAG = "PWLPOLICY_DISABLE_NUMBA"


def _disabled_by_env() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


try:
    if _disabled_by_env():
        raise ImportError("numba disabled via " + ENV_FLAG)
    from numba import njit as _njit

    NUMBA_ENABLED = True
except ImportError:
    _njit = None
    NUMBA_ENABLED = False


def maybe_njit(func=None, **options):
    """Compile ``func`` with numba when the accelerated path is active.

    On the fallback path the function is returned unchanged, so the same
    source serves both as a compiled kernel and as plain NumPy.
    """

    def wrap(f):
        if NUMBA_ENABLED:
            options.setdefault("cache", True)
            return _njit(**options)(f)
        return f

    if func is not None:
        return wrap(func)
    return wrap
