import json

import numpy as np
import pytest

from optwannier.errors import HermiticityViolation, InvalidConfig, NearDegenerate, ParseError, UnknownModel
from optwannier.services.hamiltonian import (HoppingTerm, TightBindingModel, band_energies, builtin_model,
                                             check_band_gap, check_time_reversal, constant_model, evaluate_dh,
                                             evaluate_h, parse_model_file, serialize_model, with_band)
from optwannier.services.lattice import TWO_PI, Lattice


def test_square3_is_hermitian_everywhere(square3, rng):
    kappa = rng.uniform(-0.5, 0.5, size=(20, 2))
    h = evaluate_h(square3, kappa[:, 0], kappa[:, 1])
    assert h.shape == (20, 3, 3)
    assert np.allclose(h, np.conj(np.swapaxes(h, -1, -2)))


def test_square3_matches_closed_form(square3):
    # H_pd(k) = -t_pd e^{ikx/√2} 2i sin(kx/√2) for the first p orbital
    kappa1, kappa2 = 0.13, -0.31
    k = kappa1 * square3.lat.b1 + kappa2 * square3.lat.b2
    theta = k[0] / np.sqrt(2)
    h = evaluate_h(square3, kappa1, kappa2)
    assert h[0, 2] == pytest.approx(-2.0 * np.exp(1j * theta) * 2j * np.sin(theta))
    assert h[0, 0].real == pytest.approx(-2.0 - 0.5 * (np.cos(TWO_PI * kappa1) + np.cos(TWO_PI * kappa2)))
    assert h[2, 2].real == pytest.approx(1.0 + 0.2 * (np.cos(TWO_PI * kappa1) + np.cos(TWO_PI * kappa2)))


def test_haldane_periodic_in_kappa(haldane_chern):
    h0 = evaluate_h(haldane_chern, 0.2, -0.1)
    h1 = evaluate_h(haldane_chern, 1.2, -1.1)
    assert np.allclose(h0, h1)


def test_derivative_matches_finite_difference(haldane_chern):
    eps = 1e-6
    for axis in (1, 2):
        shift = (eps, 0.0) if axis == 1 else (0.0, eps)
        fd = (evaluate_h(haldane_chern, 0.1 + shift[0], 0.3 + shift[1])
              - evaluate_h(haldane_chern, 0.1 - shift[0], 0.3 - shift[1])) / (2 * eps)
        assert np.allclose(evaluate_dh(haldane_chern, 0.1, 0.3, axis), fd, atol=1e-6)


def test_derivative_rejects_axis(square3):
    with pytest.raises(InvalidConfig):
        evaluate_dh(square3, 0.0, 0.0, 3)


def test_time_reversal_flags(square3, haldane_trivial, haldane_chern):
    assert check_time_reversal(square3)
    assert check_time_reversal(haldane_trivial)
    assert not check_time_reversal(haldane_chern)


def test_unpaired_hopping_is_rejected():
    lat = Lattice.from_direct((1.0, 0.0), (0.0, 1.0))
    with pytest.raises(HermiticityViolation):
        TightBindingModel(lat=lat, dim=1, terms=(HoppingTerm(1, 0, np.array([[1.0]])),), band=0)


def test_band_out_of_range():
    with pytest.raises(InvalidConfig):
        constant_model([[1.0]], band=1)


def test_band_energies_gap(square3):
    energies, gap = band_energies(square3, 8)
    assert energies.shape == (8, 8, 3)
    assert np.all(np.diff(energies, axis=-1) >= 0)
    assert gap > 0.1


def test_gap_check_detects_touching():
    m = constant_model(np.diag([1.0, 1.0, 2.0]), band=1)
    with pytest.raises(NearDegenerate) as e:
        check_band_gap(m, 8)
    assert e.value.node is not None


def test_builtin_unknown():
    with pytest.raises(UnknownModel):
        builtin_model('kagome')


def test_with_band(square3):
    lower = with_band(square3, 0)
    assert lower.band == 0
    assert np.allclose(evaluate_h(lower, 0.1, 0.2), evaluate_h(square3, 0.1, 0.2))


def test_model_file_roundtrip(haldane_chern):
    again = parse_model_file(serialize_model(haldane_chern))
    assert again.dim == 2
    assert again.band == 1
    assert np.allclose(evaluate_h(again, 0.27, -0.4), evaluate_h(haldane_chern, 0.27, -0.4))


def test_model_file_errors():
    with pytest.raises(ParseError):
        parse_model_file('{not json')
    doc = {'a1': [1, 0], 'a2': [0, 1], 'dim': 2, 'band': 2, 'terms': [{'m1': 0, 'm2': 0, 're': [[0, 0], [0, 0]]}]}
    with pytest.raises(ParseError):
        parse_model_file(json.dumps(doc))


def test_model_file_hermiticity_error():
    doc = {'a1': [1, 0], 'a2': [0, 1], 'dim': 1, 'band': 0, 'terms': [{'m1': 1, 'm2': 0, 're': [[1.0]]}]}
    with pytest.raises(HermiticityViolation):
        parse_model_file(json.dumps(doc))


def test_real_hoppings_match_time_reversal(square3, haldane_trivial, haldane_chern):
    real = constant_model([[1.0, 0.5], [0.5, -1.0]])
    complex_ = constant_model([[1.0, 0.5j], [-0.5j, -1.0]])
    assert real.has_real_hoppings and check_time_reversal(real)
    assert not complex_.has_real_hoppings and not check_time_reversal(complex_)
    for m in (square3, haldane_trivial, haldane_chern):
        assert m.has_real_hoppings == check_time_reversal(m)
