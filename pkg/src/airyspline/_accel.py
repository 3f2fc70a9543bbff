"""Numba switch.

Hot kernels are compiled with numba unless ``AIRYSPLINE_DISABLE_NUMBA`` is set
to a truthy value or numba cannot be imported, in which case the vectorised
numpy implementations are used instead.
"""
import os
import warnings

ENV_FLAG = "AIRYSPLINE_DISABLE_NUMBA"

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    HAVE_NUMBA = False

    def njit(*args, **kw):
        if args and callable(args[0]):
            return args[0]
        return lambda f: f


def _flag_set() -> bool:
    return os.environ.get(ENV_FLAG, "").strip().lower() in {"1", "true", "yes", "on"}


USE_NUMBA = HAVE_NUMBA and not _flag_set()

if not HAVE_NUMBA and not _flag_set():  # pragma: no cover
    warnings.warn("numba is not installed - falling back to numpy kernels")

__all__ = ["ENV_FLAG", "HAVE_NUMBA", "USE_NUMBA", "njit"]
