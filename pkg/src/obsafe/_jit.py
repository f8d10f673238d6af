"""Optional numba acceleration for the hot numeric kernels.

Every kernel in this package is plain numpy code that also runs un-jitted.
Set ``OBSAFE_JIT=0`` (or ``false``/``off``/``no``) before import to force the
pure-numpy path; the default is to JIT whenever numba imports cleanly.
``benchmarks/compare_backends.py`` times the two paths against each other.
"""
import os


def _jit_wanted() -> bool:
    flag = os.environ.get("OBSAFE_JIT", "1").strip().lower()
    return flag not in ("0", "false", "off", "no")


NUMBA_ENABLED = False
if _jit_wanted():
    try:
        from numba import njit as _njit

        NUMBA_ENABLED = True
    except ImportError:  # pragma: no cover - numba is a declared dependency
        NUMBA_ENABLED = False


if NUMBA_ENABLED:

    def maybe_njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        if func is None:
            return _njit(**kwargs)
        return _njit(**kwargs)(func)

else:

    def maybe_njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func
