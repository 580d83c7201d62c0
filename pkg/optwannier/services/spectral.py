"""Spectral calculus on the torus grid.

Fields are sampled at κ = j h, j = -n/2 .. n/2 - 1, stored at index j + n/2 on
the first two array axes. Fourier coefficients use the same symmetric index
range, ĝ_m at index m + n/2, with mode m standing for e^{ik·R}, R = m1 a1 + m2 a2.
"""
import logging
from typing import Optional, Tuple

import numpy as np
import scipy.fft

from optwannier.errors import NotSolvable
from optwannier.services.lattice import TWO_PI, Lattice, kappa_derivs_to_cartesian

logger = logging.getLogger(__name__)

SOLVABILITY_TOL = 1e-8
GRID_AXES = (0, 1)

# scipy.fft worker count; set from the pipeline's thread setting
_workers: Optional[int] = None


def set_workers(workers: Optional[int]) -> None:
    global _workers
    _workers = workers


def frequencies(n: int) -> np.ndarray:
    return np.arange(-n // 2, n // 2)


def _sign(n: int) -> np.ndarray:
    # (-1)^m moves the origin of the sample index from j = 0 to j = -n/2
    return np.where(frequencies(n) % 2, -1.0, 1.0)


def _expand(v: np.ndarray, axis: int, ndim: int) -> np.ndarray:
    shape = [1] * ndim
    shape[axis] = v.shape[0]
    return v.reshape(shape)


def dft2(f: np.ndarray) -> np.ndarray:
    """ĝ_m = n^-2 Σ_j e^{-2πi m·j/n} f_j over the first two axes."""
    f = np.asarray(f)
    n = f.shape[0]
    coeffs = scipy.fft.fftshift(scipy.fft.fft2(f, axes=GRID_AXES, workers=_workers), axes=GRID_AXES)
    sign = _sign(n)
    coeffs *= _expand(sign, 0, f.ndim) * _expand(sign, 1, f.ndim)
    return coeffs / n ** 2


def idft2(coeffs: np.ndarray) -> np.ndarray:
    coeffs = np.asarray(coeffs)
    n = coeffs.shape[0]
    sign = _sign(n)
    shifted = coeffs * _expand(sign, 0, coeffs.ndim) * _expand(sign, 1, coeffs.ndim)
    return scipy.fft.ifft2(scipy.fft.ifftshift(shifted, axes=GRID_AXES), axes=GRID_AXES,
                           workers=_workers) * n ** 2


def _restore(result: np.ndarray, like: np.ndarray) -> np.ndarray:
    # real input keeps a real output; the Nyquist mode only contributes its real part
    return result.real if np.isrealobj(like) else result


def spectral_derivative(f: np.ndarray, axis: int) -> np.ndarray:
    """∂f/∂κ_axis (axis 1 or 2) by the multiplier 2πi m_axis, Nyquist row included."""
    f = np.asarray(f)
    n = f.shape[0]
    multiplier = _expand(1j * TWO_PI * frequencies(n), axis - 1, f.ndim)
    return _restore(idft2(dft2(f) * multiplier), f)


def cartesian_gradient(f: np.ndarray, lat: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    return kappa_derivs_to_cartesian(lat, spectral_derivative(f, 1), spectral_derivative(f, 2))


def divergence(fx: np.ndarray, fy: np.ndarray, lat: Lattice) -> np.ndarray:
    dfx, _ = cartesian_gradient(fx, lat)
    _, dfy = cartesian_gradient(fy, lat)
    return dfx + dfy


def curl(fx: np.ndarray, fy: np.ndarray, lat: Lattice) -> np.ndarray:
    """Scalar curl ∂fy/∂kx - ∂fx/∂ky."""
    _, dfx_dy = cartesian_gradient(fx, lat)
    dfy_dx, _ = cartesian_gradient(fy, lat)
    return dfy_dx - dfx_dy


def laplacian(f: np.ndarray, lat: Lattice) -> np.ndarray:
    f = np.asarray(f)
    return _restore(idft2(dft2(f) * -_expand_grid(mode_norms_squared(f.shape[0], lat), f.ndim)), f)


def periodic_derivative(values: np.ndarray) -> np.ndarray:
    """d/dκ of a periodic sequence sampled at κ = j h, j = -n/2 .. n/2 - 1."""
    values = np.asarray(values)
    n = values.shape[0]
    sign = _sign(n)
    coeffs = scipy.fft.fftshift(scipy.fft.fft(values)) * sign / n
    coeffs *= 1j * TWO_PI * frequencies(n)
    return _restore(scipy.fft.ifft(scipy.fft.ifftshift(coeffs * sign)) * n, values)


def trapezoid_mean(f: np.ndarray):
    """h^2 Σ f_j, the mean over the torus."""
    return np.mean(f, axis=GRID_AXES)


def mode_norms_squared(n: int, lat: Lattice) -> np.ndarray:
    m = frequencies(n)
    vectors = lat.lattice_vector(m[:, None], m[None, :])
    return np.sum(vectors ** 2, axis=-1)


def poisson_solve_torus(g: np.ndarray, lat: Lattice, tol: float = SOLVABILITY_TOL) -> np.ndarray:
    """Zero-mean ψ with Δψ = -g, solved mode by mode as ψ̂_m = ĝ_m / ‖R_m‖²."""
    g = np.asarray(g)
    mean = trapezoid_mean(g)
    if np.max(np.abs(mean)) > tol:
        raise NotSolvable(f"Poisson source has mean {np.max(np.abs(mean)):.3e}, above tolerance {tol:.1e}",
                          mean=float(np.max(np.abs(mean))))
    n = g.shape[0]
    coeffs = dft2(g)
    norms = mode_norms_squared(n, lat)
    norms[n // 2, n // 2] = 1.0
    coeffs = coeffs / _expand_grid(norms, coeffs.ndim)
    coeffs[n // 2, n // 2] = 0.0
    return _restore(idft2(coeffs), g)


def _expand_grid(grid_values: np.ndarray, ndim: int) -> np.ndarray:
    return grid_values.reshape(grid_values.shape + (1,) * (ndim - 2))


def hodge_decompose(fx: np.ndarray, fy: np.ndarray, lat: Lattice,
                    tol: float = SOLVABILITY_TOL) -> Tuple[np.ndarray, np.ndarray, float, float]:
    """Split f = -∇ψ + (∂F/∂ky, -∂F/∂kx) + (hx, hy)."""
    psi = poisson_solve_torus(divergence(fx, fy, lat), lat, tol)
    f_pot = poisson_solve_torus(curl(fx, fy, lat), lat, tol)
    hx = trapezoid_mean(fx)
    hy = trapezoid_mean(fy)
    return psi, f_pot, hx, hy


def solenoidal_field(f_pot: np.ndarray, lat: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    """(∂F/∂ky, -∂F/∂kx), the divergence-free field generated by F."""
    dfx, dfy = cartesian_gradient(f_pot, lat)
    return dfy, -dfx


class LineSeries:
    """Fourier series of a grid field restricted to lines of constant κ.

    ``axis`` is the running coordinate (1 or 2); ``fixed`` holds the grid index
    j of the other coordinate for every line. Calling the series at s returns
    the field at s on every line.
    """

    def __init__(self, f: np.ndarray, axis: int, fixed: np.ndarray):
        f = np.asarray(f)
        n = f.shape[0]
        self.real = np.isrealobj(f)
        self.m = frequencies(n)
        coeffs = dft2(f)
        fixed_kappa = np.asarray(fixed, dtype=float) / n
        other = np.exp(1j * TWO_PI * fixed_kappa[:, None] * self.m)
        if axis == 1:
            # sum over m2 at the fixed κ2 of each line
            self.coeffs = np.einsum('lb,ab->la', other, coeffs)
        else:
            self.coeffs = np.einsum('la,ab->lb', other, coeffs)

    def __call__(self, s: float) -> np.ndarray:
        values = self.coeffs @ np.exp(1j * TWO_PI * s * self.m)
        return values.real if self.real else values
