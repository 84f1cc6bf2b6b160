"""Optional numba acceleration.

Set ``NLSVAR_DISABLE_NUMBA=1`` to force the pure numpy code paths.
"""

from __future__ import annotations

import os

_disabled = os.environ.get("NLSVAR_DISABLE_NUMBA", "").strip().lower() not in ("", "0", "false", "no")

try:
    if _disabled:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    numba = None
    HAVE_NUMBA = False


def njit(fn):
    """Compile ``fn`` with numba when available, else return it unchanged."""
    if HAVE_NUMBA:
        return numba.njit(cache=True)(fn)
    return fn


def backend() -> str:
    return "numba" if HAVE_NUMBA else "numpy"
