"""Bloch Fourier coefficients and real-space Wannier functions."""
import logging
from typing import Optional, Sequence, Tuple

import numpy as np

from optwannier.errors import ShapeMismatch, WindowTooLarge
from optwannier.models import BlochCoefficients, MomentReport, SheetAssignment, WannierResult
from optwannier.services.lattice import Lattice
from optwannier.services.spectral import dft2

logger = logging.getLogger(__name__)

NOISE_FLOOR = 1e-13


def bloch_fourier_coefficients(sheet: SheetAssignment) -> BlochCoefficients:
    """u_{i,R} for R = m1 a1 + m2 a2, one dft2 per vector component."""
    return BlochCoefficients(data=dft2(sheet.vectors))


def realness_check(coeffs: BlochCoefficients) -> float:
    return float(np.max(np.abs(coeffs.data.imag)))


def window_mass(coeffs: BlochCoefficients, window: int) -> float:
    """Fraction of Σ|u_{i,R}|² carried by |m1|, |m2| <= window."""
    half = coeffs.n // 2
    lo, hi = max(half - window, 0), min(half + window + 1, coeffs.n)
    inside = float(np.sum(np.abs(coeffs.data[lo:hi, lo:hi]) ** 2))
    return inside / coeffs.mass


def _fit_slope(distance: np.ndarray, magnitude: np.ndarray) -> Optional[float]:
    keep = magnitude > NOISE_FLOOR
    if np.count_nonzero(keep) < 3:
        return None
    slope, _ = np.polyfit(distance[keep], np.log(magnitude[keep]), 1)
    return float(slope)


def decay_rate(coeffs: BlochCoefficients, lat: Lattice) -> Optional[float]:
    """Slope of log max|u_{i,R}| against ‖R‖, per unit length.

    Coefficients are binned into shells one lattice spacing wide and the
    envelope of each shell is fitted; shells beyond n/2 spacings alias and are
    left out. Returns None when fewer than three shells rise above the noise.
    """
    m = coeffs.indices()
    distance = np.linalg.norm(lat.lattice_vector(m[:, None], m[None, :]), axis=-1)
    magnitude = np.max(np.abs(coeffs.data), axis=-1)
    shells = np.rint(distance / lat.min_length).astype(int)
    radii, envelope = [], []
    for shell in range(coeffs.n // 2 + 1):
        members = shells == shell
        if np.any(members):
            radii.append(shell * lat.min_length)
            envelope.append(np.max(magnitude[members]))
    return _fit_slope(np.array(radii), np.array(envelope))


def axis_decay_rates(coeffs: BlochCoefficients) -> Tuple[Optional[float], Optional[float]]:
    """Decay slopes of the coefficient envelope along m1 and along m2, per index."""
    half = coeffs.n // 2
    magnitude = np.max(np.abs(coeffs.data), axis=-1)
    rates = []
    for profile in (np.max(magnitude, axis=1), np.max(magnitude, axis=0)):
        # fold ±m together: index half + m and half - m
        steps = np.arange(half)
        folded = np.maximum(profile[half + steps], profile[half - steps])
        rates.append(_fit_slope(steps.astype(float), folded))
    return rates[0], rates[1]


def wannier_samples(coeffs: BlochCoefficients, lat: Lattice, sigma: float,
                    offsets: Optional[Sequence[Sequence[float]]] = None, window: int = 8,
                    resolution: int = 12) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """W_0(r) = Σ_i Σ_R u_{i,R} φ_i(r + R) on a rectangular window.

    φ_i is an L²-normalized isotropic Gaussian of width ``sigma`` centred at
    the intra-cell offset τ_i, so the term for R peaks at τ_i - R. Returns the
    x and y sample axes and the complex samples indexed [x, y].
    """
    half = coeffs.n // 2
    if window > half:
        raise WindowTooLarge(f"window {window} exceeds the coefficient range n/2 = {half}")
    dim = coeffs.data.shape[-1]
    tau = np.zeros((dim, 2)) if offsets is None else np.asarray(offsets, dtype=float)
    if tau.shape != (dim, 2):
        raise ShapeMismatch(f"orbital offsets have shape {tau.shape}, expected ({dim}, 2)")

    shifts = np.arange(-window, min(window, half - 1) + 1)
    m1, m2 = np.meshgrid(shifts, shifts, indexing='ij')
    translations = lat.lattice_vector(m1.ravel(), m2.ravel())
    centers = tau[None, :, :] - translations[:, None, :]
    margin = 4.0 * sigma
    step = lat.min_length / resolution
    x = np.arange(centers[..., 0].min() - margin, centers[..., 0].max() + margin + step / 2, step)
    y = np.arange(centers[..., 1].min() - margin, centers[..., 1].max() + margin + step / 2, step)
    gx, gy = np.meshgrid(x, y, indexing='ij')

    norm = 1.0 / (sigma * np.sqrt(np.pi))
    values = np.zeros(gx.shape, dtype=complex)
    for k, (a, b) in enumerate(zip(m1.ravel(), m2.ravel())):
        c = coeffs[int(a), int(b)]
        for i in range(dim):
            if abs(c[i]) < NOISE_FLOOR:
                continue
            cx, cy = centers[k, i]
            values += c[i] * norm * np.exp(-((gx - cx) ** 2 + (gy - cy) ** 2) / (2.0 * sigma ** 2))
    return x, y, values


def sample_mass(x: np.ndarray, y: np.ndarray, values: np.ndarray) -> float:
    """Riemann-sum L² mass of a sampled field."""
    dx = x[1] - x[0] if len(x) > 1 else 1.0
    dy = y[1] - y[0] if len(y) > 1 else 1.0
    return float(np.sum(np.abs(values) ** 2) * dx * dy)


def wannier_result(sheet: SheetAssignment, lat: Lattice, moments: MomentReport) -> WannierResult:
    coeffs = bloch_fourier_coefficients(sheet)
    rate = decay_rate(coeffs, lat)
    result = WannierResult(coeffs=coeffs, center=moments.center, variance=moments.variance,
                           chern=sheet.chern, max_imag=realness_check(coeffs),
                           decay_rate=rate if rate is not None else float('nan'), sheet=sheet)
    logger.debug("step 6: mass=%.12f max_imag=%.3e decay=%s", coeffs.mass, result.max_imag, rate)
    return result
