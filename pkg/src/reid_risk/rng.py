"""Counter-based, label-keyed random streams.

Every random quantity in the package is a pure function of a 64-bit master
seed and a structured label such as ``("trial", 17)`` or ``("topic", user,
site, epoch)``. Nothing depends on call order, so results are identical no
matter how work is split across threads.

Two flavours are provided:

* :func:`stream` returns a :class:`numpy.random.Generator` backed by Philox
  (itself counter-based) whose 128-bit key is derived from the label.
* :func:`hash_uniform` evaluates a splitmix64 avalanche directly on integer
  arrays, giving one uniform double per element. This is the vectorised path
  used for per-(user, site, epoch) draws.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from typing import Union

import numpy as np

LabelPart = Union[int, str, np.integer]

_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB


def splitmix64(x: int) -> int:
    """Scalar splitmix64 finalizer (Steele, Lea & Flood constants)."""
    x = (x + _GOLDEN) & _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


def _mix_array(x: np.ndarray) -> np.ndarray:
    # uint64 arithmetic wraps modulo 2**64, which is what splitmix64 needs.
    with np.errstate(over="ignore"):
        x = x + np.uint64(_GOLDEN)
        x = (x ^ (x >> np.uint64(30))) * np.uint64(_MIX1)
        x = (x ^ (x >> np.uint64(27))) * np.uint64(_MIX2)
    return x ^ (x >> np.uint64(31))


def _part_to_int(part: LabelPart) -> int:
    if isinstance(part, str):
        digest = hashlib.blake2b(part.encode("utf-8"), digest_size=8).digest()
        return int.from_bytes(digest, "little")
    if isinstance(part, (bool, np.bool_)):
        raise TypeError("label parts must be int or str, not bool")
    return int(part) & _MASK64


def label_key(master_seed: int, *label: LabelPart) -> int:
    """Fold a label into a 64-bit key. Stable across platforms and runs."""
    h = splitmix64(int(master_seed) & _MASK64)
    for part in label:
        h = splitmix64(h ^ _part_to_int(part))
    return h


def stream(master_seed: int, *label: LabelPart) -> np.random.Generator:
    """Return an independent generator for ``(master_seed, label)``.

    The same arguments always return a generator producing the same
    sequence.
    """
    lo = label_key(master_seed, *label)
    hi = splitmix64(lo ^ 0xD1B54A32D192ED03)
    return np.random.Generator(np.random.Philox(key=(hi << 64) | lo))


def hash_uint64(master_seed: int, *parts) -> np.ndarray:
    """Vectorised label hash.

    ``parts`` may mix strings, Python ints and integer arrays; arrays are
    broadcast against each other and the result has the broadcast shape.
    """
    h = np.asarray(splitmix64(int(master_seed) & _MASK64), dtype=np.uint64)
    for part in parts:
        if isinstance(part, (str, int, np.integer)):
            value = np.uint64(_part_to_int(part))
        else:
            value = np.asarray(part).astype(np.int64).view(np.uint64)
        h = _mix_array(h ^ value)
    return h


def hash_uniform(master_seed: int, *parts) -> np.ndarray:
    """Uniform doubles in [0, 1) from :func:`hash_uint64` (53-bit mantissa)."""
    h = hash_uint64(master_seed, *parts)
    return (h >> np.uint64(11)).astype(np.float64) * (1.0 / (1 << 53))


@dataclass(frozen=True)
class SeedSpec:
    """A master seed plus helpers to derive labelled streams from it."""

    master_seed: int

    def __post_init__(self):
        if not 0 <= int(self.master_seed) <= _MASK64:
            raise ValueError("master_seed must fit in an unsigned 64-bit integer")

    def stream(self, *label: LabelPart) -> np.random.Generator:
        return stream(self.master_seed, *label)

    def uniform(self, *parts) -> np.ndarray:
        return hash_uniform(self.master_seed, *parts)

    def child(self, *label: LabelPart) -> "SeedSpec":
        """A derived seed, e.g. one per experiment inside a sweep."""
        return SeedSpec(label_key(self.master_seed, *label))


def as_seed(seed) -> SeedSpec:
    if isinstance(seed, SeedSpec):
        return seed
    return SeedSpec(int(seed))
