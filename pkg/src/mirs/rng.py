"""Hierarchical, order-independent random streams.

Every stream is a Philox counter-based generator whose 128-bit key is a
BLAKE2b hash of ``(master_seed, path)``.  Two keys that differ anywhere in
the path therefore get unrelated Philox keys, and the draws of one stream
never depend on which other streams were used before it.
"""

from __future__ import annotations

import hashlib
import struct
from dataclasses import dataclass
from enum import IntEnum

import numpy as np

from .errors import ConfigurationError

DEFAULT_SEED = 20240101
MAX_PATH_LEN = 8
_COMPONENT_LIMIT = 2**32


class Purpose(IntEnum):
    """Tags that keep substreams for different jobs apart."""

    POPULATION = 0
    SAMPLES = 1
    MISSINGNESS = 2
    PLAN = 3
    IMPUTE = 4
    REUSE = 5
    NOISE = 6
    ESTIMATE = 7


@dataclass(frozen=True)
class StreamKey:
    master_seed: int
    path: tuple[int, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "path", tuple(int(p) for p in self.path))

    def child(self, *parts: int) -> StreamKey:
        return StreamKey(self.master_seed, self.path + tuple(int(p) for p in parts))


def _validate(key: StreamKey) -> None:
    if not 0 <= key.master_seed < 2**64:
        raise ConfigurationError(f"master seed {key.master_seed} is not a 64-bit unsigned integer")
    if len(key.path) > MAX_PATH_LEN:
        raise ConfigurationError(f"stream path has {len(key.path)} components, at most {MAX_PATH_LEN} allowed")
    for p in key.path:
        if not 0 <= p < _COMPONENT_LIMIT:
            raise ConfigurationError(f"stream path component {p} outside [0, 2**32)")


def philox_key(key: StreamKey) -> np.ndarray:
    """The 128-bit Philox key (two uint64 words) for ``key``."""
    _validate(key)
    payload = struct.pack(f"<QB{len(key.path)}I", key.master_seed, len(key.path), *key.path)
    digest = hashlib.blake2b(payload, digest_size=16, person=b"mirs-stream").digest()
    return np.frombuffer(digest, dtype=np.uint64).copy()


class RandomStream:
    """Uniform, normal and Bernoulli draws from one keyed stream."""

    def __init__(self, generator: np.random.Generator):
        self.generator = generator

    def uniform(self, size=None, out=None):
        if out is not None:
            return self.generator.random(out=out)
        return self.generator.random(size)

    def normal(self, size=None, out=None):
        if out is not None:
            return self.generator.standard_normal(out=out)
        return self.generator.standard_normal(size)

    def bernoulli(self, p, size=None) -> np.ndarray:
        """1 where a uniform draw falls below ``p``, else 0 (int8)."""
        p = np.asarray(p, dtype=float)
        if size is None:
            size = p.shape
        return (self.generator.random(size) < p).astype(np.int8)

    def integers(self, low, high=None, size=None):
        return self.generator.integers(low, high, size=size)

    def permutation(self, n: int) -> np.ndarray:
        return self.generator.permutation(n)


def _state(pkey: np.ndarray) -> dict:
    zeros = np.zeros(4, dtype=np.uint64)
    return {
        "bit_generator": "Philox",
        "state": {"counter": zeros, "key": pkey},
        "buffer": zeros,
        "buffer_pos": 4,
        "has_uint32": 0,
        "uinteger": 0,
    }


def derive_stream(key: StreamKey) -> RandomStream:
    """A fresh stream that is a deterministic function of ``key``."""
    return RandomStream(np.random.Generator(np.random.Philox(key=philox_key(key))))


class StreamCursor:
    """One reusable bit generator that can be repositioned onto any key.

    ``cursor.seek(key)`` yields exactly the draws of ``derive_stream(key)``
    without paying for a new generator object.  Used in loops that open
    thousands of short substreams.
    """

    def __init__(self):
        self._bitgen = np.random.Philox(key=np.zeros(2, dtype=np.uint64))
        self._stream = RandomStream(np.random.Generator(self._bitgen))

    def seek(self, key: StreamKey) -> RandomStream:
        self._bitgen.state = _state(philox_key(key))
        return self._stream


def sample_bivariate_normal(stream: RandomStream, rho: float, size=None):
    """Standard bivariate normal pairs with correlation ``rho``.

    Cholesky of [[1, rho], [rho, 1]] applied to two independent normals.
    Returns ``(x1, x2)``; scalars when ``size`` is None.
    """
    if not -1.0 < rho < 1.0:
        raise ConfigurationError(f"correlation {rho} must lie strictly inside (-1, 1)")
    shape = (2,) if size is None else (2, size)
    z = stream.normal(shape)
    x1 = z[0]
    x2 = rho * z[0] + np.sqrt(1.0 - rho * rho) * z[1]
    if size is None:
        return float(x1), float(x2)
    return x1, x2
