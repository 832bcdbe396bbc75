"""Backend selection for the compiled kernels.

Set ``CDMAICA_NUMBA=0`` in the environment before import to force the
pure-numpy code path. Numba is also skipped silently when it cannot be
imported.
"""

import os

_FLAG = os.environ.get("CDMAICA_NUMBA", "1").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

USE_NUMBA = numba is not None and _FLAG not in ("0", "false", "no", "off")


def njit(func):
    """Compile ``func`` with numba when available, otherwise return it as is.

    The returned object is always callable; callers that need the numpy
    fallback should dispatch on :data:`USE_NUMBA` instead of relying on this
    wrapper, since the loop-style kernel bodies are slow when interpreted.
    """
    if numba is None:
        return func
    return numba.njit(cache=True, nogil=True)(func)


def backend_name():
    return "numba" if USE_NUMBA else "numpy"
