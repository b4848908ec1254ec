import math

import numpy as np
import pytest

from symbreak.forward_model import Field, forward, make_sensing
from symbreak.numerics import RngStream, phase_shift, unit_ball_batch
from symbreak.symmetry import (
    canonicalize,
    canonicalize_complex,
    canonicalize_real,
    is_representative,
)

SEED0 = 31415
N_RANDOM = 10_000


@pytest.fixture(scope="module")
def real_vectors():
    return unit_ball_batch(RngStream(SEED0, 0), N_RANDOM, 5)


@pytest.fixture(scope="module")
def complex_vectors():
    planes = unit_ball_batch(RngStream(SEED0, 1), N_RANDOM, 10)
    return planes[:, :5] + 1j * planes[:, 5:]


# --- spec examples -----------------------------------------------------------

def test_real_examples():
    r = canonicalize_real(np.array([1.0, 2.0, 3.0]))
    assert r.x_canon.tolist() == [1.0, 2.0, 3.0] and r.transform == 1.0 and not r.was_boundary

    r = canonicalize_real(np.array([1.0, 2.0, -3.0]))
    assert r.x_canon.tolist() == [-1.0, -2.0, 3.0] and r.transform == -1.0 and not r.was_boundary

    r = canonicalize_real(np.array([-2.0, 0.0]))
    assert r.x_canon.tolist() == [2.0, 0.0] and r.transform == -1.0 and r.was_boundary


def test_complex_examples():
    r = canonicalize_complex(np.array([1j, 1.0 + 0j]))
    assert np.abs(r.x_canon - np.array([1.0, -1j])).max() <= 1e-15
    assert abs(r.transform - 1.5 * math.pi) <= 1e-15
    assert not r.was_boundary

    r = canonicalize_complex(np.array([3.0 + 0j, 5j]))
    assert (r.x_canon == np.array([3.0 + 0j, 5j])).all() and r.transform == 0.0

    r = canonicalize_complex(np.array([0j, 2j]))
    assert np.abs(r.x_canon - np.array([0.0, 2.0])).max() <= 1e-15
    assert abs(r.transform - 1.5 * math.pi) <= 1e-15
    assert r.was_boundary


def test_zero_vector_fixed_point():
    r = canonicalize_real(np.zeros(3))
    assert r.x_canon.tolist() == [0.0, 0.0, 0.0] and r.was_boundary
    c = canonicalize_complex(np.zeros(3, dtype=complex))
    assert (c.x_canon == 0).all() and c.transform == 0.0 and c.was_boundary


def test_is_representative_examples():
    assert is_representative(np.array([1.0, 2.0, 3.0]))
    assert not is_representative(np.array([1.0, 2.0, -3.0]))
    assert is_representative(np.array([0j, 2.0 + 0j]))
    assert not is_representative(np.array([0j, 2j]))
    assert is_representative(np.zeros(4))


# --- property suites ---------------------------------------------------------

def test_idempotence(real_vectors, complex_vectors):
    for x in real_vectors:
        again = canonicalize_real(canonicalize_real(x).x_canon)
        assert again.transform == 1.0
    for z in complex_vectors:
        again = canonicalize_complex(canonicalize_complex(z).x_canon)
        assert again.transform == 0.0


def test_orbit_invariance_real(real_vectors):
    for x in real_vectors:
        assert (canonicalize_real(x).x_canon == canonicalize_real(-x).x_canon).all()


def test_orbit_invariance_complex(complex_vectors):
    thetas = RngStream(SEED0, 2).uniform(len(complex_vectors)) * 2.0 * math.pi
    for z, theta in zip(complex_vectors, thetas):
        a = canonicalize_complex(z).x_canon
        b = canonicalize_complex(phase_shift(z, float(theta))).x_canon
        assert np.linalg.norm(a - b) <= 1e-9 * np.linalg.norm(z)


def test_representativeness(real_vectors, complex_vectors):
    for x in real_vectors:
        assert is_representative(canonicalize_real(x).x_canon)
    for z in complex_vectors:
        assert is_representative(canonicalize_complex(z).x_canon)
    crafted = [
        np.array([0.0, 0.0, -1.0]),
        np.array([-1.0, 0.0, 0.0]),
        np.array([0.0, -2.0, 0.0]),
        np.zeros(2),
    ]
    for x in crafted:
        assert is_representative(canonicalize_real(x).x_canon)
    crafted_c = [
        np.array([0j, 0j, -1j]),
        np.array([0j, -1.0 + 1j, 2j]),
        np.array([-1j, 0j, 0j]),
        np.zeros(2, dtype=complex),
    ]
    for z in crafted_c:
        assert is_representative(canonicalize_complex(z).x_canon)


def test_smallestness_real(real_vectors):
    canon = np.array([canonicalize_real(x).x_canon for x in real_vectors])
    a, b = canon[: N_RANDOM // 2], canon[N_RANDOM // 2 :]
    d_same = np.linalg.norm(a - b, axis=1)
    d_flip = np.linalg.norm(a + b, axis=1)
    assert (np.minimum(d_same, d_flip) > 1e-9).all()


def test_smallestness_complex(complex_vectors):
    canon = np.array([canonicalize_complex(z).x_canon for z in complex_vectors])
    a, b = canon[: N_RANDOM // 2], canon[N_RANDOM // 2 :]
    grid = np.linspace(0.0, 2.0 * math.pi, 10_000, endpoint=False)
    cos_g, sin_g = np.cos(grid), np.sin(grid)
    norms = (np.abs(a) ** 2).sum(axis=1) + (np.abs(b) ** 2).sum(axis=1)
    inner = (a * b.conj()).sum(axis=1)
    for c, re, im in zip(norms, inner.real, inner.imag):
        # ||e^(i t) u - v||^2 = c - 2 Re(e^(i t) <u, v>)
        best = c - 2.0 * (re * cos_g - im * sin_g).max()
        assert math.sqrt(max(best, 0.0)) > 1e-9


def test_forward_consistency(real_vectors, complex_vectors):
    s_real = make_sensing(Field.REAL, 5, 20, seed=SEED0)
    for x in real_vectors:
        base = forward(s_real, x)
        canon = forward(s_real, canonicalize_real(x).x_canon)
        assert np.abs(canon - base).max() <= 1e-10 * max(np.abs(base).max(), 1e-300)
    s_cplx = make_sensing(Field.COMPLEX, 5, 20, seed=SEED0)
    for z in complex_vectors:
        base = forward(s_cplx, z)
        canon = forward(s_cplx, canonicalize_complex(z).x_canon)
        assert np.abs(canon - base).max() <= 1e-10 * max(np.abs(base).max(), 1e-300)


def test_transform_reapplication(real_vectors, complex_vectors):
    for x in real_vectors[:1000]:
        r = canonicalize_real(x)
        assert (r.transform * x == r.x_canon).all()
    for z in complex_vectors[:1000]:
        r = canonicalize_complex(z)
        rebuilt = phase_shift(z, r.transform)
        assert np.linalg.norm(rebuilt - r.x_canon) <= 1e-12 * max(np.linalg.norm(z), 1e-300)


def test_dispatching_wrapper(real_vectors, complex_vectors):
    assert canonicalize(real_vectors[0]).x_canon.dtype.kind == "f"
    assert canonicalize(complex_vectors[0]).x_canon.dtype.kind == "c"
