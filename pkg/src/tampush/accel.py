"""Optional numba acceleration for the hot numeric kernels.

Every kernel decorated with :func:`jit` has a pure numpy/Python fallback:
the very same function body, just not compiled.  Set ``TAMPUSH_NUMBA=0``
in the environment to select the fallback path (useful for debugging and
for the kernel benchmark in ``benchmarks/``).
"""

import os

_flag = os.environ.get("TAMPUSH_NUMBA", "1").strip().lower()
NUMBA_ENABLED = _flag not in ("0", "false", "off", "no")

if NUMBA_ENABLED:
    from numba import njit as _njit

    def jit(func):
        return _njit(cache=True)(func)

else:

    def jit(func):
        return func
