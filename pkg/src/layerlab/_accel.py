"""Backend selection for the time-stepping kernels.

The hot loops are compiled with ``numba.njit`` unless the environment variable
``LAYERLAB_BACKEND`` is set to ``numpy`` (or numba cannot be imported), in which
case the same march functions run as plain Python on top of vectorised numpy
helpers. The flag is read once, at import time.
"""

import os

_requested = os.environ.get("LAYERLAB_BACKEND", "numba").strip().lower()
if _requested not in ("numba", "numpy"):
    raise ImportError(f"LAYERLAB_BACKEND must be 'numba' or 'numpy', got {_requested!r}")

if _requested == "numba":
    try:
        import numba
    except ImportError:  # pragma: no cover - numba is a declared dependency
        numba = None
else:
    numba = None

USE_NUMBA = numba is not None
BACKEND = "numba" if USE_NUMBA else "numpy"


def jit(func):
    """Compile ``func`` in nopython mode when numba is active, else return it unchanged."""
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True)(func)
    return func
