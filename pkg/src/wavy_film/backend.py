"""Kernel backend selection.

The hot numeric cores in kernels.py are written once as plain array
functions and compiled with numba when it is available.  The environment
variable WAVY_FILM_NUMBA overrides the choice:

    WAVY_FILM_NUMBA=0   force the pure-numpy path
    WAVY_FILM_NUMBA=1   require numba (ImportError if missing)
    unset / auto        use numba when importable

benchmarks/bench_kernels.py compares the two paths.
"""

import os

try:
    from numba import njit as _njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is a hard dependency, but stay usable
    HAVE_NUMBA = False

_flag = os.environ.get("WAVY_FILM_NUMBA", "auto").strip().lower()
if _flag in ("0", "off", "no", "false"):
    USE_NUMBA = False
elif _flag in ("1", "on", "yes", "true"):
    if not HAVE_NUMBA:
        raise ImportError("WAVY_FILM_NUMBA=1 but numba is not importable")
    USE_NUMBA = True
else:
    USE_NUMBA = HAVE_NUMBA

BACKEND = "numba" if USE_NUMBA else "numpy"


def maybe_jit(fn):
    """Return fn compiled with numba when the numba backend is active."""
    if USE_NUMBA:
        return _njit(cache=True)(fn)
    return fn
