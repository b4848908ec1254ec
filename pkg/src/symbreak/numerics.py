"""Deterministic random streams and small dense linear algebra helpers.

Vectors are 1-D ``numpy`` arrays (``float64`` for the real field,
``complex128`` for the complex field) and matrices are 2-D arrays of the
same dtypes.  Everything downstream assumes 64-bit precision; no mixed
precision anywhere.

Randomness is counter-based so that a ``(seed, stream_id)`` pair yields the
same sequence on every platform, every run, regardless of how the draws are
chunked across calls.  The core generator is the splitmix64 sequence
(https://prng.di.unimi.it/splitmix64.c): output ``i`` is a finalizer hash of
``key + (i + 1) * GOLDEN`` so a stream can be replayed from any position.
Gaussian variates use the basic Box-Muller transform on top of it, which
keeps the mapping from uniforms to normals explicit and portable.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import ContractViolation, ensure

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_STREAM_SALT = 0x5DEECE66D

# Registry of stream ids, one per independent consumer of randomness.
# Distinct ids keep e.g. the sensing matrix draws independent of the sample
# draws even though both derive from one experiment seed.
STREAM_SENSING = 1
STREAM_SAMPLES = 2
STREAM_SPLIT = 3
STREAM_INIT = 4
STREAM_SHUFFLE = 5


def _mix64(x: int) -> int:
    """splitmix64 finalizer on a plain Python int (mod 2**64)."""
    x &= _MASK64
    x = ((x ^ (x >> 30)) * _MIX1) & _MASK64
    x = ((x ^ (x >> 27)) * _MIX2) & _MASK64
    return x ^ (x >> 31)


class RngStream:
    """A replayable random stream identified by ``(seed, stream_id)``.

    Two independently constructed streams with the same ``(seed,
    stream_id)`` produce bit-identical sequences; distinct stream ids give
    statistically independent sequences.  A stream is single-owner: it keeps
    a draw counter and must not be shared across threads.
    """

    def __init__(self, seed: int, stream_id: int = 0):
        ensure(0 <= seed <= _MASK64, "seed must be an unsigned 64-bit integer")
        ensure(0 <= stream_id <= _MASK64, "stream_id must be an unsigned 64-bit integer")
        self.seed = seed
        self.stream_id = stream_id
        self._key = _mix64(_mix64(seed) ^ _mix64((stream_id + _STREAM_SALT) & _MASK64))
        self._pos = 0

    @property
    def position(self) -> int:
        """Number of raw 64-bit words drawn so far."""
        return self._pos

    def raw(self, count: int) -> np.ndarray:
        """Next *count* raw uint64 words (advances the counter)."""
        ensure(count >= 0, "count must be nonnegative")
        idx = np.arange(self._pos + 1, self._pos + count + 1, dtype=np.uint64)
        state = np.uint64(self._key) + idx * np.uint64(_GOLDEN)
        state = (state ^ (state >> np.uint64(30))) * np.uint64(_MIX1)
        state = (state ^ (state >> np.uint64(27))) * np.uint64(_MIX2)
        state ^= state >> np.uint64(31)
        self._pos += count
        return state

    def uniform(self, count: int) -> np.ndarray:
        """*count* iid uniforms in [0, 1) with 53-bit resolution."""
        return (self.raw(count) >> np.uint64(11)) * 2.0**-53

    def spawn(self, stream_offset: int) -> "RngStream":
        """A fresh stream with the same seed and a shifted stream id."""
        return RngStream(self.seed, (self.stream_id + stream_offset) & _MASK64)


def gaussian(rng: RngStream, count: int) -> np.ndarray:
    """*count* iid standard normal draws via the Box-Muller transform.

    Consumes uniforms in pairs ``(u1, u2)`` with ``u1`` shifted into
    ``(0, 1]`` so the log never sees zero; an odd *count* still consumes a
    whole pair so the stream position stays aligned with the draw index.
    """
    ensure(count > 0, "count must be positive")
    pairs = (count + 1) // 2
    raw = rng.raw(2 * pairs)
    u1 = ((raw[0::2] >> np.uint64(11)) + np.uint64(1)) * 2.0**-53
    u2 = (raw[1::2] >> np.uint64(11)) * 2.0**-53
    radius = np.sqrt(-2.0 * np.log(u1))
    angle = (2.0 * math.pi) * u2
    out = np.empty(2 * pairs)
    out[0::2] = radius * np.cos(angle)
    out[1::2] = radius * np.sin(angle)
    return out[:count]


def sample_unit_ball(rng: RngStream, dim: int) -> np.ndarray:
    """One point uniform in the closed unit ball of R^dim.

    Direction is a normalized Gaussian vector, radius is U**(1/dim); the
    output norm never exceeds 1 by construction.
    """
    ensure(dim >= 1, "dim must be at least 1")
    direction = gaussian(rng, dim)
    norm = float(np.linalg.norm(direction))
    while norm == 0.0:  # probability ~2**-53 per coordinate pair
        direction = gaussian(rng, dim)
        norm = float(np.linalg.norm(direction))
    radius = float(rng.uniform(1)[0]) ** (1.0 / dim)
    return direction * (radius / norm)


def unit_ball_batch(rng: RngStream, count: int, dim: int) -> np.ndarray:
    """*count* iid uniform points in the unit ball of R^dim, shape (count, dim)."""
    ensure(count >= 1, "count must be at least 1")
    ensure(dim >= 1, "dim must be at least 1")
    directions = gaussian(rng, count * dim).reshape(count, dim)
    norms = np.linalg.norm(directions, axis=1)
    for i in np.flatnonzero(norms == 0.0):
        fresh = gaussian(rng, dim)
        while not np.linalg.norm(fresh) > 0.0:
            fresh = gaussian(rng, dim)
        directions[i] = fresh
        norms[i] = np.linalg.norm(fresh)
    radii = rng.uniform(count) ** (1.0 / dim)
    return directions * (radii / norms)[:, None]


def permutation(rng: RngStream, count: int) -> np.ndarray:
    """A uniformly random permutation of range(count) via Fisher-Yates."""
    ensure(count >= 1, "count must be at least 1")
    idx = np.arange(count)
    if count > 1:
        u = rng.uniform(count - 1)
        for t, i in enumerate(range(count - 1, 0, -1)):
            j = int(u[t] * (i + 1))
            idx[i], idx[j] = idx[j], idx[i]
    return idx


def _is_complex(a: np.ndarray) -> bool:
    return np.issubdtype(a.dtype, np.complexfloating)


def matvec(A: np.ndarray, x: np.ndarray) -> np.ndarray:
    """Matrix-vector product with explicit shape and field checks."""
    ensure(A.ndim == 2, "A must be a matrix")
    ensure(x.ndim == 1, "x must be a vector")
    if A.shape[1] != x.shape[0]:
        raise ContractViolation(
            f"dimension mismatch: matrix has {A.shape[1]} columns, vector has {x.shape[0]} entries"
        )
    if _is_complex(A) != _is_complex(x):
        raise ContractViolation("field mismatch: matrix and vector must both be real or both complex")
    return A @ x


def phase_shift(x: np.ndarray, theta: float) -> np.ndarray:
    """Rotate a complex vector by the global phase e^(i*theta).

    Computed as (re*cos - im*sin) + i(re*sin + im*cos) with full-precision
    trig; no small-angle shortcuts.
    """
    c, s = math.cos(theta), math.sin(theta)
    return (x.real * c - x.imag * s) + 1j * (x.real * s + x.imag * c)


def complex_to_real_pair(z: np.ndarray) -> np.ndarray:
    """Concatenate a complex vector into [re; im] of twice the length."""
    return np.concatenate([np.ascontiguousarray(z.real), np.ascontiguousarray(z.imag)])


def real_pair_to_complex(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`complex_to_real_pair`."""
    ensure(v.shape[-1] % 2 == 0, "real-pair vector must have even length")
    half = v.shape[-1] // 2
    return v[..., :half] + 1j * v[..., half:]
