import numpy as np
import pytest

from optwannier.errors import ShapeMismatch, WindowTooLarge
from optwannier.models import BlochCoefficients, SheetAssignment
from optwannier.schemas import RunConfig
from optwannier.services.lattice import Lattice
from optwannier.services.pipeline import execute
from optwannier.services.wannier import (axis_decay_rates, bloch_fourier_coefficients, decay_rate, realness_check,
                                         sample_mass, wannier_samples, window_mass)

SQUARE = Lattice.from_direct((1.0, 0.0), (0.0, 1.0))


def _sparse(n, dim, entries):
    data = np.zeros((n, n, dim), dtype=complex)
    for (m1, m2, i), value in entries.items():
        data[m1 + n // 2, m2 + n // 2, i] = value
    return BlochCoefficients(data=data)


def test_coefficient_lookup_outside_range():
    coeffs = _sparse(8, 2, {(0, 0, 1): 1.0})
    assert np.allclose(coeffs[0, 0], [0.0, 1.0])
    assert np.allclose(coeffs[4, 0], 0.0)
    assert coeffs.mass == pytest.approx(1.0)


def test_single_orbital_mass():
    coeffs = _sparse(8, 1, {(0, 0, 0): 1.0})
    x, y, values = wannier_samples(coeffs, SQUARE, sigma=0.3, window=2, resolution=12)
    assert sample_mass(x, y, values) == pytest.approx(1.0, abs=1e-6)


def test_separated_orbitals_add_mass():
    coeffs = _sparse(8, 1, {(0, 0, 0): 0.6, (1, 0, 0): 0.8})
    x, y, values = wannier_samples(coeffs, SQUARE, sigma=0.1, window=2, resolution=20)
    assert sample_mass(x, y, values) == pytest.approx(1.0, abs=1e-6)
    # the R = a1 term sits at -a1
    peak = np.unravel_index(np.argmax(np.abs(values)), values.shape)
    assert x[peak[0]] == pytest.approx(-1.0, abs=0.05)


def test_window_too_large():
    with pytest.raises(WindowTooLarge):
        wannier_samples(_sparse(8, 1, {(0, 0, 0): 1.0}), SQUARE, sigma=0.3, window=5)


def test_window_mass_counts_inner_block():
    coeffs = _sparse(16, 1, {(0, 0, 0): 0.6, (5, 0, 0): 0.8})
    assert window_mass(coeffs, 2) == pytest.approx(0.36)
    assert window_mass(coeffs, 5) == pytest.approx(1.0)


def test_decay_rate_of_exponential():
    n = 16
    m = np.arange(-n // 2, n // 2)
    data = np.exp(-0.7 * np.abs(m))[:, None, None] * np.exp(-0.7 * np.abs(m))[None, :, None]
    coeffs = BlochCoefficients(data=data.astype(complex))
    r1, r2 = axis_decay_rates(coeffs)
    assert r1 == pytest.approx(-0.7)
    assert r2 == pytest.approx(-0.7)
    assert decay_rate(coeffs, SQUARE) < 0


def test_too_few_points_gives_no_slope():
    assert axis_decay_rates(_sparse(8, 1, {(0, 0, 0): 1.0})) == (None, None)


def test_time_reversal_gives_real_coefficients(square3_run):
    assert realness_check(square3_run.coeffs) < 1e-8
    assert square3_run.report.max_imag < 1e-8


def test_complex_start_vector_breaks_realness():
    run = execute(RunConfig(model='haldane-trivial', n=16, initial_phase=0.7))
    assert run.report.max_imag > 1e-2


def test_coefficients_are_localized(square3_run, haldane_run):
    for run in (square3_run, haldane_run):
        assert run.report.window_mass > 0.99
        assert run.report.decay_rate < 0
        assert run.coeffs.mass == pytest.approx(1.0, abs=1e-10)


def test_obstructed_coefficients_decay_slowly_along_one_axis(chern_run):
    r1, r2 = chern_run.report.axis_decay
    assert r1 is not None and r2 is not None
    assert abs(r1) > 2 * abs(r2)


@pytest.mark.slow
def test_obstructed_decay_asymmetry_at_n100():
    r1, r2 = execute(RunConfig(model='haldane-chern', n=100, threads=2)).report.axis_decay
    assert r1 < 0
    assert abs(r1) >= 4 * abs(r2)


def test_constant_sheet_has_one_coefficient():
    vectors = np.ones((8, 8, 2), dtype=complex) / np.sqrt(2)
    coeffs = bloch_fourier_coefficients(SheetAssignment(energies=np.zeros((8, 8)), vectors=vectors,
                                                        chern=0, chern_residual=0.0))
    assert np.allclose(coeffs[0, 0], vectors[0, 0])
    assert coeffs.mass == pytest.approx(1.0)
    assert window_mass(coeffs, 0) == pytest.approx(1.0)


def test_orbital_offset_moves_the_peak():
    coeffs = _sparse(8, 2, {(0, 0, 1): 1.0})
    x, y, values = wannier_samples(coeffs, SQUARE, sigma=0.1, offsets=[[0.0, 0.0], [0.5, 0.25]],
                                   window=1, resolution=20)
    peak = np.unravel_index(np.argmax(np.abs(values)), values.shape)
    assert x[peak[0]] == pytest.approx(0.5, abs=0.05)
    assert y[peak[1]] == pytest.approx(0.25, abs=0.05)
    with pytest.raises(ShapeMismatch):
        wannier_samples(coeffs, SQUARE, sigma=0.1, offsets=[[0.5, 0.25]], window=1)
