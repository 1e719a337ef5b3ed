"""Backend selection for the compiled kernels.

Set ``MULTISRM_DISABLE_NUMBA=1`` to run every kernel as plain Python over
numpy arrays. The fallback is also used when numba is not importable.
"""
import os

_FLAG = os.environ.get("MULTISRM_DISABLE_NUMBA", "").strip().lower()

try:
    import numba
except ImportError:  # pragma: no cover - numba is a hard dependency in practice
    numba = None

USE_NUMBA = numba is not None and _FLAG not in {"1", "true", "yes", "on"}
BACKEND = "numba" if USE_NUMBA else "python"


def njit(fn):
    # fastmath stays off so both backends produce bit-identical floats
    if USE_NUMBA:
        return numba.njit(cache=True, nogil=True, error_model="numpy")(fn)
    return fn
