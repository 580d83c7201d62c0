import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from optwannier.errors import NotSolvable
from optwannier.services.lattice import TWO_PI, Lattice, TorusGrid, kappa_derivs_to_cartesian
from optwannier.services.spectral import (LineSeries, curl, dft2, divergence, hodge_decompose,
                                          idft2, laplacian, periodic_derivative, poisson_solve_torus,
                                          solenoidal_field, spectral_derivative, trapezoid_mean)

SQUARE = Lattice.from_direct((1.0, 0.0), (0.0, 1.0))
OBLIQUE = Lattice.from_direct((np.sqrt(3) / 2, 0.5), (np.sqrt(3) / 2, -0.5))


def _mesh(n):
    return TorusGrid(n).mesh()


def test_dft_single_mode():
    n = 8
    k1, k2 = _mesh(n)
    coeffs = dft2(np.exp(1j * TWO_PI * (2 * k1 - 3 * k2)))
    expected = np.zeros((n, n), dtype=complex)
    expected[2 + n // 2, -3 + n // 2] = 1.0
    assert np.allclose(coeffs, expected)


def test_dft_inverse(rng):
    f = rng.normal(size=(10, 10, 3)) + 1j * rng.normal(size=(10, 10, 3))
    assert np.allclose(idft2(dft2(f)), f)


@settings(deadline=None, max_examples=25)
@given(st.integers(-5, 5), st.integers(-5, 5), st.sampled_from([1, 2]))
def test_derivative_of_mode(m1, m2, axis):
    n = 12
    k1, k2 = _mesh(n)
    f = np.exp(1j * TWO_PI * (m1 * k1 + m2 * k2))
    factor = m1 if axis == 1 else m2
    assert np.allclose(spectral_derivative(f, axis), 1j * TWO_PI * factor * f, atol=1e-9)


def test_derivative_of_real_field_is_real():
    k1, k2 = _mesh(16)
    f = np.cos(TWO_PI * 3 * k1) * np.sin(TWO_PI * k2)
    d = spectral_derivative(f, 1)
    assert np.isrealobj(d)
    assert np.allclose(d, -TWO_PI * 3 * np.sin(TWO_PI * 3 * k1) * np.sin(TWO_PI * k2))


def test_laplacian_of_mode():
    k1, k2 = _mesh(16)
    f = np.cos(TWO_PI * (k1 + 2 * k2))
    r = OBLIQUE.a1 + 2 * OBLIQUE.a2
    assert np.allclose(laplacian(f, OBLIQUE), -np.dot(r, r) * f)


def test_trapezoid_mean_is_spectrally_exact():
    # mean of e^{cos 2πκ} over a period is I0(1)
    kappa = TorusGrid(16).nodes
    f = np.exp(np.cos(TWO_PI * kappa))[:, None] * np.ones(16)[None, :]
    assert float(trapezoid_mean(f)) == pytest.approx(1.2660658777520082, abs=1e-14)


def test_poisson_solves_mode():
    k1, k2 = _mesh(16)
    psi = np.sin(TWO_PI * (k1 - k2)) + 0.5 * np.cos(TWO_PI * 3 * k2)
    g = -laplacian(psi, OBLIQUE)
    assert np.allclose(poisson_solve_torus(g, OBLIQUE), psi)


def test_poisson_rejects_nonzero_mean():
    with pytest.raises(NotSolvable) as e:
        poisson_solve_torus(np.ones((8, 8)), SQUARE)
    assert e.value.mean == pytest.approx(1.0)


def test_hodge_reconstructs_field():
    n = 16
    k1, k2 = _mesh(n)
    fx = np.sin(TWO_PI * k1) + 0.3 * np.cos(TWO_PI * (k1 + k2)) + 0.2
    fy = np.cos(TWO_PI * 2 * k2) - 0.4 * np.sin(TWO_PI * k1) - 0.1
    psi, f_pot, hx, hy = hodge_decompose(fx, fy, OBLIQUE)
    gx = spectral_derivative(psi, 1)
    gy = spectral_derivative(psi, 2)
    dpx, dpy = kappa_derivs_to_cartesian(OBLIQUE, gx, gy)
    sx, sy = solenoidal_field(f_pot, OBLIQUE)
    assert np.allclose(-dpx + sx + hx, fx)
    assert np.allclose(-dpy + sy + hy, fy)
    assert hx == pytest.approx(0.2)
    assert hy == pytest.approx(-0.1)


def test_solenoidal_field_is_divergence_free():
    k1, k2 = _mesh(16)
    f_pot = np.sin(TWO_PI * k1) * np.cos(TWO_PI * 2 * k2)
    sx, sy = solenoidal_field(f_pot, OBLIQUE)
    assert np.max(np.abs(divergence(sx, sy, OBLIQUE))) < 1e-10
    assert np.allclose(curl(sx, sy, OBLIQUE), -laplacian(f_pot, OBLIQUE))


def test_periodic_derivative_1d():
    kappa = TorusGrid(20).nodes
    f = np.exp(1j * TWO_PI * 3 * kappa)
    assert np.allclose(periodic_derivative(f), 1j * TWO_PI * 3 * f)


def test_line_series_along_rows():
    n = 12
    k1, k2 = _mesh(n)
    f = np.cos(TWO_PI * (k1 + 2 * k2)) + np.sin(TWO_PI * 3 * k2)
    fixed = np.array([-4, 1, 5])
    series = LineSeries(f, 1, fixed)
    s = 0.123
    expected = np.cos(TWO_PI * (s + 2 * fixed / n)) + np.sin(TWO_PI * 3 * fixed / n)
    assert np.allclose(series(s), expected)


def test_line_series_along_columns():
    n = 12
    k1, k2 = _mesh(n)
    f = np.sin(TWO_PI * (k1 - 2 * k2))
    fixed = np.array([-6, 0, 3])
    series = LineSeries(f, 2, fixed)
    s = 0.2371
    assert np.allclose(series(s), np.sin(TWO_PI * (fixed / n - 2 * s)))


def test_dft_matches_naive_sum(rng):
    n = 16
    f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    j = TorusGrid(n).indices
    m = np.arange(-n // 2, n // 2)
    kernel = np.exp(-2j * np.pi * np.outer(m, j) / n)
    naive = kernel @ f @ kernel.T / n ** 2
    assert np.allclose(dft2(f), naive, atol=1e-12)


def test_dft_parseval(rng):
    n = 16
    f = rng.normal(size=(n, n, 2)) + 1j * rng.normal(size=(n, n, 2))
    assert np.sum(np.abs(dft2(f)) ** 2) == pytest.approx(np.sum(np.abs(f) ** 2) / n ** 2, rel=1e-10)


@settings(deadline=None, max_examples=20)
@given(st.integers(-7, 7), st.integers(-7, 7))
def test_circular_shift_commutes(s1, s2):
    n = 16
    rng = np.random.default_rng(7)
    f = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    shifted = np.roll(f, (s1, s2), axis=(0, 1))
    for axis in (1, 2):
        assert np.allclose(spectral_derivative(shifted, axis), np.roll(spectral_derivative(f, axis), (s1, s2),
                                                                       axis=(0, 1)), atol=1e-9)
    m = np.arange(-n // 2, n // 2)
    phase = np.exp(-2j * np.pi * np.add.outer(m * s1, m * s2) / n)
    assert np.allclose(dft2(shifted), dft2(f) * phase, atol=1e-12)
