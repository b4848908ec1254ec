"""Dataset generation, canonicalization, splitting, and serialization.

A dataset binds a sensing matrix to a collection of (x, y) samples with
y = |Ax|^2.  Inputs are drawn uniformly from the unit ball (the complex
field draws from the ball of R^(2n) and reads the first n coordinates as
real parts, the rest as imaginary parts; the ball is rotation invariant so
the assignment does not affect the distribution).

Binary file format ("GPRD", version 1, little-endian throughout):

    magic         4 bytes  b"GPRD"
    version       u32      1
    field         u8       0 = real, 1 = complex
    n             u32
    m             u32
    count         u64
    seed          u64
    canonicalized u8       0 or 1
    A             m*n f64 row-major (complex: re plane then im plane)
    samples       count records, each: x then y
                  x: n f64 (complex: n re-f64 then n im-f64)
                  y: m f64

Chosen over text formats so round trips are bit-exact.  A CSV export
exists for inspection only.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, replace
from pathlib import Path

import numpy as np

from .errors import (
    AllocationError,
    BadMagicError,
    NonFiniteDataError,
    TruncatedPayloadError,
    VersionMismatchError,
    ensure,
)
from .forward_model import Field, SensingMatrix, forward_batch, make_sensing
from .numerics import STREAM_SAMPLES, STREAM_SPLIT, RngStream, permutation, unit_ball_batch
from .symmetry import canonicalize

_MAGIC = b"GPRD"
_VERSION = 1
_HEADER = struct.Struct("<4sIBIIQQB")

TEST_FRACTION_PCT = 20
VAL_FRACTION_PCT = 10


@dataclass(frozen=True)
class Dataset:
    """A sensing matrix with its (x, y) samples.

    ``xs`` has shape (count, n) (complex128 for the complex field) and
    ``ys`` has shape (count, m); row i of each is one sample.  When
    ``canonicalized`` is set, every x is the representative of its orbit.
    Treat all arrays as immutable.
    """

    sensing: SensingMatrix
    xs: np.ndarray
    ys: np.ndarray
    canonicalized: bool
    seed: int

    @property
    def count(self) -> int:
        return self.xs.shape[0]

    @property
    def field(self) -> Field:
        return self.sensing.field


@dataclass(frozen=True)
class Split:
    """Disjoint train/validation/test index sets covering a dataset.

    Sizes: test gets 20% of the total, validation 10% of the remaining 80%
    (both floored), train the rest.
    """

    train_idx: np.ndarray
    val_idx: np.ndarray
    test_idx: np.ndarray


def generate(field: Field, n: int, m: int, count: int, seed: int) -> Dataset:
    """Generate *count* unit-ball samples and their measurements.

    Deterministic given the seed: the sensing matrix and the sample draws
    come from separate fixed streams derived from it.
    """
    ensure(count >= 1, "count must be at least 1")
    sensing = make_sensing(field, n, m, seed)
    rng = RngStream(seed, STREAM_SAMPLES)
    try:
        if field is Field.REAL:
            xs = unit_ball_batch(rng, count, n)
        else:
            planes = unit_ball_batch(rng, count, 2 * n)
            xs = planes[:, :n] + 1j * planes[:, n:]
        ys = forward_batch(sensing, xs)
    except MemoryError as exc:
        raise AllocationError(f"cannot allocate {count} samples with n={n}, m={m}") from exc
    return Dataset(sensing=sensing, xs=xs, ys=ys, canonicalized=False, seed=seed)


def _canonicalized_rows(xs: np.ndarray, indices: np.ndarray) -> np.ndarray:
    out = xs.copy()
    for i in indices:
        out[i] = canonicalize(xs[i]).x_canon
    return out


def apply_symmetry_breaking(d: Dataset) -> Dataset:
    """Replace every x by its orbit representative; measurements unchanged."""
    ensure(not d.canonicalized, "dataset is already canonicalized")
    xs = _canonicalized_rows(d.xs, np.arange(d.count))
    return replace(d, xs=xs, canonicalized=True)


def canonicalize_subset(d: Dataset, indices: np.ndarray) -> Dataset:
    """Canonicalize only the given rows (e.g. train+val, leaving test raw).

    The result does not claim the ``canonicalized`` flag since coverage is
    partial.
    """
    ensure(not d.canonicalized, "dataset is already canonicalized")
    xs = _canonicalized_rows(d.xs, np.asarray(indices))
    return replace(d, xs=xs, canonicalized=False)


def split(d: Dataset, seed: int) -> Split:
    """Randomly partition sample indices into train/val/test.

    A Fisher-Yates shuffle on a dedicated stream drives the partition, so
    the split is independent of the generation randomness; each index list
    is returned sorted.
    """
    ensure(d.count >= 10, "need at least 10 samples to split")
    perm = permutation(RngStream(seed, STREAM_SPLIT), d.count)
    n_test = d.count * TEST_FRACTION_PCT // 100
    remaining = d.count - n_test
    n_val = remaining * VAL_FRACTION_PCT // 100
    test = np.sort(perm[:n_test])
    val = np.sort(perm[n_test : n_test + n_val])
    train = np.sort(perm[n_test + n_val :])
    return Split(train_idx=train, val_idx=val, test_idx=test)


def save(d: Dataset, path) -> None:
    """Write the dataset in the GPRD binary format."""
    path = Path(path)
    header = _HEADER.pack(
        _MAGIC,
        _VERSION,
        d.field.code,
        d.sensing.n,
        d.sensing.m,
        d.count,
        d.seed,
        1 if d.canonicalized else 0,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        A = d.sensing.A
        if d.field is Field.REAL:
            fh.write(A.astype("<f8").tobytes())
            records = np.hstack([d.xs, d.ys])
        else:
            fh.write(A.real.astype("<f8").tobytes())
            fh.write(A.imag.astype("<f8").tobytes())
            records = np.hstack([d.xs.real, d.xs.imag, d.ys])
        fh.write(records.astype("<f8").tobytes())


def load(path) -> Dataset:
    """Read a GPRD file, validating structure and finiteness."""
    path = Path(path)
    blob = path.read_bytes()
    if len(blob) < _HEADER.size or blob[:4] != _MAGIC:
        raise BadMagicError(f"{path}: not a GPRD dataset file")
    magic, version, field_code, n, m, count, seed, canon = _HEADER.unpack_from(blob)
    if version != _VERSION:
        raise VersionMismatchError(f"{path}: GPRD version {version}, this build reads {_VERSION}")
    field = Field.from_code(field_code)
    planes = 1 if field is Field.REAL else 2
    x_width = n * planes
    a_floats = m * n * planes
    expected = _HEADER.size + 8 * (a_floats + count * (x_width + m))
    if len(blob) != expected:
        raise TruncatedPayloadError(f"{path}: expected {expected} bytes, found {len(blob)}")
    floats = np.frombuffer(blob, dtype="<f8", offset=_HEADER.size)
    if not np.isfinite(floats).all():
        raise NonFiniteDataError(f"{path}: payload contains non-finite values")
    a_flat = floats[:a_floats]
    if field is Field.REAL:
        A = a_flat.reshape(m, n).copy()
    else:
        A = a_flat[: m * n].reshape(m, n) + 1j * a_flat[m * n :].reshape(m, n)
    records = floats[a_floats:].reshape(count, x_width + m)
    if field is Field.REAL:
        xs = records[:, :n].copy()
    else:
        xs = records[:, :n] + 1j * records[:, n : 2 * n]
    ys = records[:, x_width:].copy()
    sensing = SensingMatrix(field=field, m=m, n=n, A=A, seed=seed)
    return Dataset(sensing=sensing, xs=xs, ys=ys, canonicalized=bool(canon), seed=seed)


def export_csv(d: Dataset, path) -> None:
    """Lossy-tolerant CSV export of the samples, for inspection only.

    Header: x_0..x_{n-1}[,xi_0..xi_{n-1}],y_0..y_{m-1} where xi columns are
    the imaginary parts (complex field only).
    """
    n, m = d.sensing.n, d.sensing.m
    columns = [f"x_{j}" for j in range(n)]
    if d.field is Field.COMPLEX:
        columns += [f"xi_{j}" for j in range(n)]
        table = np.hstack([d.xs.real, d.xs.imag, d.ys])
    else:
        table = np.hstack([d.xs, d.ys])
    columns += [f"y_{j}" for j in range(m)]
    np.savetxt(path, table, fmt="%.17g", delimiter=",", header=",".join(columns), comments="")
