"""JIT switch for the hot kernels.

Set ``SPINEMC_DISABLE_JIT=1`` before import to run every kernel as plain
Python/numpy.  Both paths produce bit-identical random streams: the 64-bit
mixer is written twice, once on ``np.uint64`` (wrapping arithmetic under
numba) and once on masked Python ints.
"""

import os

import numpy as np

DISABLE_JIT = os.environ.get("SPINEMC_DISABLE_JIT", "0").lower() not in ("", "0", "false", "no")

MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_M1 = 0xBF58476D1CE4E5B9
_M2 = 0x94D049BB133111EB

try:
    if DISABLE_JIT:
        raise ImportError
    import numba

    HAVE_NUMBA = True
except ImportError:
    HAVE_NUMBA = False

USE_JIT = HAVE_NUMBA and not DISABLE_JIT


def _mix64_py(z):
    # splitmix64 finalizer on Python ints
    z = (int(z) + _GOLDEN) & MASK64
    z = ((z ^ (z >> 30)) * _M1) & MASK64
    z = ((z ^ (z >> 27)) * _M2) & MASK64
    return z ^ (z >> 31)


def _u64_py(x):
    return int(x) & MASK64


if USE_JIT:
    def njit(func=None, **kwargs):
        kwargs.setdefault("cache", True)
        kwargs.setdefault("nogil", True)
        if func is None:
            return lambda f: numba.njit(**kwargs)(f)
        return numba.njit(**kwargs)(func)

    _G = np.uint64(_GOLDEN)
    _C1 = np.uint64(_M1)
    _C2 = np.uint64(_M2)
    _S30 = np.uint64(30)
    _S27 = np.uint64(27)
    _S31 = np.uint64(31)

    @numba.njit(cache=True, nogil=True)
    def mix64(z):
        z = z + _G
        z = (z ^ (z >> _S30)) * _C1
        z = (z ^ (z >> _S27)) * _C2
        return z ^ (z >> _S31)

    @numba.njit(cache=True, nogil=True)
    def u64(x):
        return np.uint64(x)

    @numba.njit(cache=True, nogil=True)
    def top53(z):
        return np.int64(z >> np.uint64(11))

else:
    def njit(func=None, **kwargs):
        if func is None:
            return lambda f: f
        return func

    mix64 = _mix64_py
    u64 = _u64_py

    def top53(z):
        return int(z) >> 11
