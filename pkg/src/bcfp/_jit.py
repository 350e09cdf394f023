"""Switch between numba-compiled kernels and the pure-numpy fallbacks.

Set ``BCFP_NO_JIT=1`` in the environment before import to force the numpy path.
"""
import os

_FLAG = os.environ.get("BCFP_NO_JIT", "").strip().lower()
DISABLED = _FLAG in {"1", "true", "yes", "on"}

try:
    import numba
except ImportError:  # pragma: no cover - numba is a declared dependency
    numba = None

HAVE_NUMBA = numba is not None
JIT_ENABLED = HAVE_NUMBA and not DISABLED


def njit(*args, **kwargs):
    """``numba.njit`` when numba is importable, identity decorator otherwise.

    Compilation stays available even with ``BCFP_NO_JIT`` set so the benchmark
    and the equivalence tests can call both paths side by side.
    """
    if HAVE_NUMBA:
        kwargs.setdefault("cache", True)
        return numba.njit(*args, **kwargs)
    if len(args) == 1 and callable(args[0]) and not kwargs:
        return args[0]
    return lambda f: f
