"""Berry connection, the divergence-eliminating gauge and Wannier moments."""
import logging
from dataclasses import replace

import numpy as np

from optwannier.errors import NotSolvable
from optwannier.models import ConnectionField, HodgeParts, MomentDecomposition, MomentReport, SheetAssignment
from optwannier.services.hamiltonian import TightBindingModel
from optwannier.services.lattice import Lattice, TorusGrid, kappa_derivs_to_cartesian
from optwannier.services.linalg import band_derivatives
from optwannier.services.spectral import (SOLVABILITY_TOL, cartesian_gradient, divergence,
                                          hodge_decompose, poisson_solve_torus, solenoidal_field,
                                          spectral_derivative, trapezoid_mean)

logger = logging.getLogger(__name__)


def _inner(u: np.ndarray, v: np.ndarray) -> np.ndarray:
    return np.einsum('...i,...i->...', u.conj(), v)


def berry_connection_grid(sheet: SheetAssignment, lat: Lattice) -> ConnectionField:
    """A_j = Re[i ũ† ∂ũ/∂κ_j] and its cartesian components."""
    u = sheet.vectors
    c1 = 1j * _inner(u, spectral_derivative(u, 1))
    c2 = 1j * _inner(u, spectral_derivative(u, 2))
    max_imag = float(max(np.max(np.abs(c1.imag)), np.max(np.abs(c2.imag))))
    ax, ay = kappa_derivs_to_cartesian(lat, c1.real, c2.real)
    return ConnectionField(a1=c1.real, a2=c2.real, ax=ax, ay=ay, max_imag=max_imag)


def hodge_parts(conn: ConnectionField, lat: Lattice, tol: float = SOLVABILITY_TOL) -> HodgeParts:
    psi, f_pot, hx, hy = hodge_decompose(conn.ax, conn.ay, lat, tol)
    return HodgeParts(psi=psi, f_pot=f_pot, hx=float(hx), hy=float(hy))


def divergence_potential(conn: ConnectionField, lat: Lattice, tol: float = SOLVABILITY_TOL) -> np.ndarray:
    """ψ with Δψ = -div A; the gauge e^{-iψ} then removes the divergence."""
    g = divergence(conn.ax, conn.ay, lat)
    try:
        return poisson_solve_torus(g, lat, tol)
    except NotSolvable as e:
        # the divergence of a periodic connection always has zero mean
        raise e.with_context(stage='step4')


def apply_divergence_free_gauge(sheet: SheetAssignment, psi: np.ndarray) -> SheetAssignment:
    phase = np.exp(-1j * psi)
    top = sheet.top * phase[:, 0, None] if sheet.top is not None else None
    return replace(sheet, vectors=sheet.vectors * phase[..., None], top=top, stage='optimal')


def divergence_residual(sheet: SheetAssignment, lat: Lattice, tol: float = SOLVABILITY_TOL) -> float:
    """max |ψ'| of the divergence potential recomputed on ``sheet``."""
    psi = divergence_potential(berry_connection_grid(sheet, lat), lat, tol)
    return float(np.max(np.abs(psi)))


def optimize_gauge(sheet: SheetAssignment, lat: Lattice, tol: float = SOLVABILITY_TOL) -> SheetAssignment:
    conn = berry_connection_grid(sheet, lat)
    psi = divergence_potential(conn, lat, tol)
    logger.debug("stage 3: max|psi|=%.6g", float(np.max(np.abs(psi))))
    return apply_divergence_free_gauge(sheet, psi)


def wannier_moments(sheet: SheetAssignment, lat: Lattice) -> MomentReport:
    """⟨R⟩ = mean(i ũ†∇ũ), ⟨‖R‖²⟩ = mean(‖∇ũ‖²) over the torus."""
    u = sheet.vectors
    gx, gy = cartesian_gradient(u, lat)
    cx = trapezoid_mean(1j * _inner(u, gx))
    cy = trapezoid_mean(1j * _inner(u, gy))
    second = float(trapezoid_mean(np.sum(np.abs(gx) ** 2 + np.abs(gy) ** 2, axis=-1)))
    center = (float(cx.real), float(cy.real))
    if max(abs(cx.imag), abs(cy.imag)) > 1e-10:
        logger.debug("center has imaginary part (%.3e, %.3e)", cx.imag, cy.imag)
    variance = max(second - center[0] ** 2 - center[1] ** 2, 0.0)
    return MomentReport(center=center, second=second, variance=variance)


def moment_decomposition(model: TightBindingModel, sheet: SheetAssignment, lat: Lattice,
                         tol: float = SOLVABILITY_TOL) -> MomentDecomposition:
    """⟨‖R‖²⟩ split into mean(‖∂P ũ‖²) and the ψ, F and harmonic parts of mean(‖A‖²).

    The projector part uses the perturbative derivative of the Hamiltonian,
    so it is independent of the spectral derivatives behind wannier_moments.
    """
    k1, k2 = TorusGrid(sheet.n).mesh()
    h = model.hamiltonian(k1, k2)
    u = sheet.vectors
    e = _inner(u, np.einsum('...ij,...j->...i', h, u)).real
    _, du1 = band_derivatives(h, model.derivative(k1, k2, 1), e, u, model.gap_tol)
    _, du2 = band_derivatives(h, model.derivative(k1, k2, 2), e, u, model.gap_tol)
    dux, duy = kappa_derivs_to_cartesian(lat, du1, du2)
    projector = float(trapezoid_mean(np.sum(np.abs(dux) ** 2 + np.abs(duy) ** 2, axis=-1)))

    parts = hodge_parts(berry_connection_grid(sheet, lat), lat, tol)
    gx, gy = cartesian_gradient(parts.psi, lat)
    sx, sy = solenoidal_field(parts.f_pot, lat)
    return MomentDecomposition(projector=projector,
                               gradient=float(trapezoid_mean(gx ** 2 + gy ** 2)),
                               solenoidal=float(trapezoid_mean(sx ** 2 + sy ** 2)),
                               harmonic=parts.hx ** 2 + parts.hy ** 2)
