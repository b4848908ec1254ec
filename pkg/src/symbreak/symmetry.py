"""Canonicalization operators that break the forward model's symmetries.

Every input is mapped to a single designated representative of its symmetry
orbit before training:

* real field: the orbit of x is {x, -x}; the representative has its last
  nonzero coordinate positive.  Scanning from the last coordinate extends
  the rule deterministically to inputs whose final coordinates are exactly
  zero (a measure-zero set under any continuous sampling distribution).
* complex field: the orbit of x is {e^(i*theta) x}; the representative has
  its first nonzero coordinate real and strictly positive.  Scanning from
  the first coordinate extends the rule to inputs with leading zeros.

The scan directions differ on purpose: each matches the coordinate
hyperplane chosen as the boundary set for its field.  The zero vector is a
fixed point of both maps and is flagged as a boundary case.

Canonicalization commutes with the measurement: the representative produces
the same y as the original input, which is what makes it legal to apply as
a training-data preprocessing step.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ensure
from .numerics import _is_complex

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class CanonResult:
    """A canonicalized vector plus the transform that produced it.

    ``transform`` is the multiplier applied to the input: the sign (+1.0 or
    -1.0) for real vectors, the phase angle theta in [0, 2*pi) for complex
    vectors (apply as ``numerics.phase_shift(x, theta)``).  ``was_boundary``
    is set when the tie-break recursion had to skip exactly-zero coordinates
    (or the input was the zero vector).
    """

    x_canon: np.ndarray
    transform: float
    was_boundary: bool


def canonicalize_real(x: np.ndarray) -> CanonResult:
    """Map a real vector to the representative of its sign orbit.

    Let k be the largest index with x_k != 0.  The output is x when
    x_k > 0 and -x when x_k < 0; the zero vector is returned unchanged.
    """
    ensure(x.ndim == 1 and x.size >= 1, "input must be a nonempty vector")
    ensure(not _is_complex(x), "canonicalize_real expects a real vector")
    nonzero = np.flatnonzero(x)
    if nonzero.size == 0:
        return CanonResult(x.copy(), 1.0, True)
    k = int(nonzero[-1])
    boundary = k != x.size - 1
    if x[k] > 0:
        return CanonResult(x.copy(), 1.0, boundary)
    return CanonResult(-x, -1.0, boundary)


def canonicalize_complex(x: np.ndarray) -> CanonResult:
    """Map a complex vector to the representative of its phase orbit.

    Let k be the smallest index with x_k != 0.  The output is
    e^(i*theta) x with theta = -arg(x_k) reduced to [0, 2*pi), making
    coordinate k real and strictly positive; the zero vector is returned
    unchanged.  The rotation is applied as multiplication by the normalized
    conjugate of x_k (the same phasor, better conditioned than re-deriving
    it from theta), and coordinate k is set to |x_k| exactly.
    """
    ensure(x.ndim == 1 and x.size >= 1, "input must be a nonempty vector")
    ensure(_is_complex(x), "canonicalize_complex expects a complex vector")
    nonzero = np.flatnonzero(x)
    if nonzero.size == 0:
        return CanonResult(x.copy(), 0.0, True)
    k = int(nonzero[0])
    boundary = k != 0
    pivot = x[k]
    if pivot.imag == 0.0 and pivot.real > 0.0:
        return CanonResult(x.copy(), 0.0, boundary)
    magnitude = abs(pivot)
    phasor = pivot.conjugate() / magnitude
    theta = math.atan2(phasor.imag, phasor.real)
    if theta < 0.0:
        theta += TWO_PI
    out = x * phasor
    out[k] = magnitude
    return CanonResult(out, theta, boundary)


def is_representative(x: np.ndarray) -> bool:
    """True iff *x* is already in canonical form for its field.

    Real: last nonzero coordinate positive.  Complex: first nonzero
    coordinate exactly real and strictly positive.  The zero vector is its
    own orbit, hence trivially representative.
    """
    ensure(x.ndim == 1 and x.size >= 1, "input must be a nonempty vector")
    nonzero = np.flatnonzero(x)
    if nonzero.size == 0:
        return True
    if _is_complex(x):
        pivot = x[int(nonzero[0])]
        return pivot.imag == 0.0 and pivot.real > 0.0
    return bool(x[int(nonzero[-1])] > 0)


def canonicalize(x: np.ndarray) -> CanonResult:
    """Field-dispatching wrapper over the two canonicalizers."""
    if _is_complex(x):
        return canonicalize_complex(x)
    return canonicalize_real(x)
