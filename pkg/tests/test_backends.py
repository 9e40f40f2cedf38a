"""The compiled extension and the numpy fallback must agree to round-off."""

import numpy as np
import pytest

from moyal._backend import available_backends, backend_name, get_backend

needs_ext = pytest.mark.skipif(
    "cython" not in available_backends(), reason="compiled extension not built"
)


def test_backend_reported():
    assert backend_name() in ("cython", "python")


def test_get_backend_unknown():
    with pytest.raises(ValueError):
        get_backend("fortran")


@needs_ext
@pytest.mark.parametrize("gamma", [0.0, 1e-320, 0.3 - 0.7j, 2.5, 4.0j, -1.1 + 1.1j])
def test_displacement_matrix_agreement(gamma):
    py = get_backend("python").displacement_matrix(gamma, 96)
    cy = get_backend("cython").displacement_matrix(gamma, 96)
    assert np.abs(py - cy).max() < 1e-13


@needs_ext
def test_displacement_batch_agreement(rng):
    gammas = rng.standard_normal(40) + 1j * rng.standard_normal(40)
    gammas[7] = 0.0
    py = get_backend("python").displacement_batch(gammas, 48)
    cy = get_backend("cython").displacement_batch(gammas, 48)
    assert np.abs(py - cy).max() < 1e-13


@needs_ext
def test_batch_matches_single():
    # batch and single builds vectorize differently; agreement is to round-off
    for be in available_backends():
        mod = get_backend(be)
        gammas = np.array([0.4 - 0.2j, 1.5j])
        batch = mod.displacement_batch(gammas, 32)
        for i, g in enumerate(gammas):
            assert np.abs(batch[i] - mod.displacement_matrix(g, 32)).max() < 1e-15


@needs_ext
def test_star_quadrature_agreement(rng):
    n = 19 * 19
    xs = np.linspace(-3, 3, 19)
    q = np.repeat(xs, 19)
    p = np.tile(xs, 19)
    faw = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.exp(-(q**2 + p**2) / 2)
    fbw = (rng.standard_normal(n) + 1j * rng.standard_normal(n)) * np.exp(-(q**2 + p**2) / 2)
    oq, op = q[::7], p[::7]
    py = get_backend("python").star_phase_quadrature(faw, q, p, fbw, q, p, oq, op, 64)
    cy = get_backend("cython").star_phase_quadrature(faw, q, p, fbw, q, p, oq, op, 64)
    assert np.abs(py - cy).max() < 1e-12 * np.abs(py).max()


@needs_ext
def test_star_quadrature_empty_outputs():
    empty = np.array([])
    one = np.array([1.0 + 0j])
    z = np.array([0.0])
    for be in available_backends():
        out = get_backend(be).star_phase_quadrature(one, z, z, one, z, z, empty, empty)
        assert out.shape == (0,)
