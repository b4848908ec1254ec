"""Gaussian phase-retrieval forward maps y = |Ax|^2 for both fields.

The measurement is invariant to a global sign flip of x in the real case
and to a global phase shift in the complex case; everything in this package
exists to deal with that.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import ContractViolation, ensure
from .numerics import STREAM_SENSING, RngStream, gaussian, _is_complex


class Field(enum.Enum):
    """Scalar field of the signal being recovered."""

    REAL = "real"
    COMPLEX = "complex"

    @property
    def code(self) -> int:
        """Single-byte tag used by the binary file formats."""
        return 0 if self is Field.REAL else 1

    @classmethod
    def from_code(cls, code: int) -> "Field":
        if code == 0:
            return cls.REAL
        if code == 1:
            return cls.COMPLEX
        raise ContractViolation(f"unknown field code {code}")

    @classmethod
    def parse(cls, name: str) -> "Field":
        try:
            return cls(name.lower())
        except ValueError:
            raise ContractViolation(f"unknown field {name!r}; expected 'real' or 'complex'") from None


@dataclass(frozen=True)
class SensingMatrix:
    """The measurement operator A with its field tag and provenance seed.

    Entries are iid standard normal in the real case and iid CN(0, 1)
    (independent N(0, 1/2) real and imaginary parts) in the complex case.
    Rebuilding with the same (field, m, n, seed) reproduces A bit-exactly.
    """

    field: Field
    m: int
    n: int
    A: np.ndarray
    seed: int

    def __post_init__(self):
        ensure(self.m >= 1 and self.n >= 1, "m and n must be at least 1")
        ensure(self.A.shape == (self.m, self.n), "A must have shape (m, n)")
        ensure(_is_complex(self.A) == (self.field is Field.COMPLEX), "A dtype must match field tag")


def make_sensing(field: Field, n: int, m: int, seed: int) -> SensingMatrix:
    """Draw a fresh m-by-n Gaussian sensing matrix from a dedicated stream.

    The stream id is fixed (``STREAM_SENSING``) so the matrix is a pure
    function of (field, m, n, seed), independent of any other randomness
    derived from the same seed.
    """
    ensure(n >= 1 and m >= 1, "n and m must be at least 1")
    rng = RngStream(seed, STREAM_SENSING)
    if field is Field.REAL:
        A = gaussian(rng, m * n).reshape(m, n)
    else:
        draws = gaussian(rng, 2 * m * n) * np.sqrt(0.5)
        A = draws[: m * n].reshape(m, n) + 1j * draws[m * n :].reshape(m, n)
    return SensingMatrix(field=field, m=m, n=n, A=A, seed=seed)


def _check_input(s: SensingMatrix, x: np.ndarray, rows: bool) -> None:
    dim = x.shape[-1]
    if dim != s.n:
        raise ContractViolation(f"input has {dim} entries, sensing matrix expects {s.n}")
    want_complex = s.field is Field.COMPLEX
    if _is_complex(x) != want_complex:
        raise ContractViolation(f"input field does not match sensing matrix field {s.field.value}")
    ensure(x.ndim == (2 if rows else 1), "input has wrong rank")


def forward(s: SensingMatrix, x: np.ndarray) -> np.ndarray:
    """Measure one signal: y_j = |<a_j, x>|^2, elementwise, always >= 0.

    The squared modulus is computed as re^2 + im^2 (no square root), so the
    real-field sign symmetry forward(S, -x) == forward(S, x) holds bit-exactly.
    """
    _check_input(s, x, rows=False)
    z = s.A @ x
    if s.field is Field.REAL:
        return z * z
    return z.real * z.real + z.imag * z.imag


def forward_batch(s: SensingMatrix, xs: np.ndarray) -> np.ndarray:
    """Measure a (count, n) batch of signals; returns (count, m)."""
    _check_input(s, xs, rows=True)
    z = xs @ s.A.T
    if s.field is Field.REAL:
        return z * z
    return z.real * z.real + z.imag * z.imag
