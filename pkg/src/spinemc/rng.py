"""Counter-based random streams.

Every random number is a pure function of ``(key, counter)``.  A tree's root
key is derived from ``(seed, replicate, salt)``; child keys are derived from
the parent key and the child index, so each Ulam-Harris label owns an
independent stream and the construction order never matters.

The ``*_k`` functions are kernel-side (JIT-compiled when available); the
:class:`Stream` class is the pure-Python twin used outside kernels.  Both
return identical bits.
"""

import math

from ._jit import MASK64, _mix64_py, mix64, njit, top53, u64

INV53 = 1.0 / 9007199254740992.0
TWO_PI = 2.0 * math.pi
_CHILD_TAG = 0x5851F42D4C957F2D
_SALT_TAG = 0x2545F4914F6CDD1D


def stream_key(seed, replicate=0, salt=0):
    """Root key for replicate ``replicate`` of a run seeded with ``seed``."""
    h = _mix64_py((int(seed) & MASK64) ^ 0x243F6A8885A308D3)
    h = _mix64_py(h ^ (int(replicate) & MASK64))
    if salt:
        h = _mix64_py(h ^ _mix64_py((int(salt) & MASK64) ^ _SALT_TAG))
    return h


def child_key_py(key, j):
    return _mix64_py(int(key) ^ _mix64_py((int(j) + _CHILD_TAG) & MASK64))


def salted_py(key, salt):
    if not salt:
        return int(key)
    return _mix64_py(int(key) ^ _mix64_py((int(salt) & MASK64) ^ _SALT_TAG))


def derive_seed(seed, name):
    """Independent 64-bit seed for a named sub-experiment."""
    import hashlib

    digest = hashlib.blake2b(name.encode(), digest_size=8).digest()
    return _mix64_py((int(seed) & MASK64) ^ int.from_bytes(digest, "little"))


@njit
def child_key_k(key, j):
    return mix64(key ^ mix64(u64(j + _CHILD_TAG)))


@njit
def salted_k(key, salt):
    if salt == 0:
        return key
    return mix64(key ^ mix64(u64(salt ^ _SALT_TAG)))


@njit
def uniform_k(key, counter):
    """Uniform on the open interval (0, 1)."""
    return (top53(mix64(key ^ mix64(u64(counter)))) + 0.5) * INV53


@njit
def exp1_k(key, counter):
    return -math.log(uniform_k(key, counter))


@njit
def normal_k(key, counter):
    # Box-Muller, consumes counters (counter, counter + 1)
    u1 = uniform_k(key, counter)
    u2 = uniform_k(key, counter + 1)
    return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)


class Stream:
    """Sequential view of one counter-based stream (pure Python)."""

    def __init__(self, key, counter=0):
        self.key = int(key) & MASK64
        self.counter = counter

    @classmethod
    def for_replicate(cls, seed, replicate=0, salt=0):
        return cls(stream_key(seed, replicate, salt))

    def child(self, j):
        return Stream(child_key_py(self.key, j))

    def uniform(self):
        z = _mix64_py(self.key ^ _mix64_py(self.counter))
        self.counter += 1
        return ((z >> 11) + 0.5) * INV53

    def exponential(self, rate=1.0):
        return -math.log(self.uniform()) / rate

    def normal(self):
        u1 = self.uniform()
        u2 = self.uniform()
        return math.sqrt(-2.0 * math.log(u1)) * math.cos(TWO_PI * u2)

    def integer(self, n):
        """Uniform on {0, ..., n-1}."""
        return min(int(self.uniform() * n), n - 1)

    def categorical(self, cum):
        u = self.uniform()
        for k, c in enumerate(cum):
            if u < c:
                return k
        return len(cum) - 1
