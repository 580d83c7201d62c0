"""Curvature-first construction of the optimal gauge.

The gauge-invariant Berry curvature is computed node by node, its stream
function F prescribes a divergence-free connection, and the eigenvectors are
transported with that connection built in. Only the two harmonic phases
(h1, h2) are left to remove at the end.
"""
import logging
from dataclasses import dataclass, replace
from typing import Optional, Tuple

import numpy as np

from optwannier.errors import IntegrabilityViolation, NearDegenerate, NotSolvable
from optwannier.models import CurvatureField, MomentReport, SheetAssignment
from optwannier.services.gauge import wannier_moments
from optwannier.services.hamiltonian import TightBindingModel
from optwannier.services.lattice import (TWO_PI, Lattice, TorusGrid, cartesian_derivs_to_kappa,
                                         kappa_derivs_to_cartesian)
from optwannier.services.linalg import band_derivatives, band_eigenpairs
from optwannier.services.spectral import SOLVABILITY_TOL, poisson_solve_torus, solenoidal_field, trapezoid_mean
from optwannier.services.transport import (DEFAULT_SETTINGS, TransportSettings, initial_eigenpair,
                                           integrate_lines, pack_state)

logger = logging.getLogger(__name__)

PATH_WARN_TOL = 1e-6
PATH_FAIL_TOL = 1e-4


@dataclass(frozen=True, eq=False)
class ClosedSheet:
    """Transported vectors on the closed (n+1) x (n+1) grid, κ = -1/2 .. 1/2."""
    energies: np.ndarray
    vectors: np.ndarray
    path_error: float = 0.0

    @property
    def n(self) -> int:
        return self.energies.shape[0] - 1


@dataclass(frozen=True, eq=False)
class AltResult:
    sheet: SheetAssignment
    moments: MomentReport
    curvature: CurvatureField
    h1: float
    h2: float
    harmonic_spread: float
    path_error: float


def berry_curvature_grid(model: TightBindingModel, n: int, phase_seed: Optional[int] = None) -> CurvatureField:
    """Ω = i(∂x u)†(∂y u) - i(∂y u)†(∂x u) from per-node eigensolves.

    ``phase_seed`` multiplies every eigenvector by a random phase; Ω does not
    depend on it.
    """
    k1, k2 = TorusGrid(n).mesh()
    h = model.hamiltonian(k1, k2)
    e, u = band_eigenpairs(h, model.band)
    if phase_seed is not None:
        rng = np.random.default_rng(phase_seed)
        u = u * np.exp(1j * rng.uniform(0.0, TWO_PI, size=e.shape))[..., None]
    try:
        _, du1 = band_derivatives(h, model.derivative(k1, k2, 1), e, u, model.gap_tol)
        _, du2 = band_derivatives(h, model.derivative(k1, k2, 2), e, u, model.gap_tol)
    except NearDegenerate as err:
        i1, i2 = np.unravel_index(err.index or 0, e.shape)
        raise err.with_context(stage='alt', node=(int(i1) - n // 2, int(i2) - n // 2))
    dux, duy = kappa_derivs_to_cartesian(model.lat, du1, du2)
    omega = -2.0 * np.einsum('...i,...i->...', dux.conj(), duy).imag
    # flux counted in the (κ1, κ2) orientation so it matches the sewing-phase winding
    c1 = model.lat.orientation * TWO_PI / model.lat.v_puc * float(trapezoid_mean(omega))
    logger.debug("curvature: integral/2pi = %.12f", c1)
    return CurvatureField(omega_xy=omega, c1_integral=c1)


def curvature_potential_f(curv: CurvatureField, lat: Lattice, tol: float = SOLVABILITY_TOL) -> np.ndarray:
    """F with ΔF = -Ω; the connection (∂F/∂ky, -∂F/∂kx) then has curl Ω."""
    try:
        return poisson_solve_torus(curv.omega_xy, lat, tol)
    except NotSolvable as e:
        raise NotSolvable(f"Berry curvature integrates to Chern number {curv.c1_integral:.6f}; "
                          f"no periodic stream function exists", mean=e.mean, stage='alt')


def prescribed_connection(f_pot: np.ndarray, lat: Lattice) -> Tuple[np.ndarray, np.ndarray]:
    """(A1, A2) along b1, b2 of the divergence-free connection generated by F."""
    ax, ay = solenoidal_field(f_pot, lat)
    return cartesian_derivs_to_kappa(lat, ax, ay)


def pfaffian_transport(model: TightBindingModel, f_pot: np.ndarray, n: int,
                       settings: TransportSettings = DEFAULT_SETTINGS,
                       check_path: bool = True) -> ClosedSheet:
    """Transport along κ2 = -1/2, then up every column, with du = (parallel part) - i A_j u.

    The connection is integrable (its curl is the curvature), so the result
    does not depend on the path; ``check_path`` re-integrates a few rows in
    the transposed order to confirm it.
    """
    a1, a2 = prescribed_connection(f_pot, model.lat)
    start = initial_eigenpair(model, settings.initial_phase)
    y0 = pack_state(np.array([start.value]), start.vector[None])
    e_edge, u_edge = integrate_lines(model, y0, np.array([-n // 2]), 1, n,
                                     replace(settings, threads=1), connection_field=a1)
    columns = np.arange(-n // 2, n // 2 + 1)
    energies, vectors = integrate_lines(model, pack_state(e_edge[0], u_edge[0]), columns, 2, n,
                                        settings, connection_field=a2)

    path_error = 0.0
    if check_path:
        rows = np.array([n // 4, n // 2, 3 * n // 4])
        _, swapped = integrate_lines(model, pack_state(energies[0, rows], vectors[0, rows]),
                                     rows - n // 2, 1, n, settings, connection_field=a1)
        path_error = float(np.max(np.linalg.norm(swapped - np.transpose(vectors[:, rows], (1, 0, 2)),
                                                 axis=-1)))
        if path_error > PATH_FAIL_TOL:
            raise IntegrabilityViolation(f"path-order mismatch {path_error:.3e} exceeds {PATH_FAIL_TOL:.0e}",
                                         stage='alt')
        if path_error > PATH_WARN_TOL:
            logger.warning("path-order mismatch %.3e; the grid may be under-resolved", path_error)
    return ClosedSheet(energies=energies, vectors=vectors, path_error=path_error)


def _slice_phases(sheet: ClosedSheet) -> Tuple[np.ndarray, np.ndarray]:
    n = sheet.n
    u = sheet.vectors
    z1 = np.einsum('ki,ki->k', u[0].conj(), u[n])
    z2 = np.einsum('ki,ki->k', u[:, 0].conj(), u[:, n])
    return np.angle(z1), np.angle(z2)


def harmonic_phases(sheet: ClosedSheet) -> Tuple[float, float]:
    """Principal-branch h1 = -i log(ũ(-1/2, κ2)† ũ(1/2, κ2)) and h2 likewise, read on the κ = -1/2 slices."""
    p1, p2 = _slice_phases(sheet)
    return float(p1[0]), float(p2[0])


def harmonic_spread(sheet: ClosedSheet) -> float:
    """Largest slice-to-slice variation of h1 and h2, modulo 2π."""
    p1, p2 = _slice_phases(sheet)
    spread = [np.max(np.abs(np.angle(np.exp(1j * (p - p[0]))))) for p in (p1, p2)]
    return float(max(spread))


def harmonic_center(lat: Lattice, h1: float, h2: float) -> Tuple[float, float]:
    """(hx, hy) of a constant connection with κ-components (h1, h2); fixed modulo a lattice vector."""
    hx, hy = kappa_derivs_to_cartesian(lat, h1, h2)
    return float(hx), float(hy)


def alt_assignment(model: TightBindingModel, n: int, settings: TransportSettings = DEFAULT_SETTINGS,
                   tol: float = SOLVABILITY_TOL, check_path: bool = True,
                   curvature: Optional[CurvatureField] = None) -> AltResult:
    curv = curvature if curvature is not None else berry_curvature_grid(model, n)
    f_pot = curvature_potential_f(curv, model.lat, tol)
    closed = pfaffian_transport(model, f_pot, n, settings, check_path)
    h1, h2 = harmonic_phases(closed)
    spread = harmonic_spread(closed)

    kappa = TorusGrid(n).closed_nodes + 0.5
    gauge = np.exp(-1j * h1 * kappa)[:, None] * np.exp(-1j * h2 * kappa)[None, :]
    vectors = closed.vectors * gauge[..., None]
    sheet = SheetAssignment(energies=closed.energies[:n, :n], vectors=vectors[:n, :n], chern=0,
                            chern_residual=abs(curv.c1_integral), top=vectors[:n, n], stage='optimal')
    moments = wannier_moments(sheet, model.lat)
    logger.info("alt: h=(%.9f, %.9f) spread=%.3e path=%.3e variance=%.9f",
                h1, h2, spread, closed.path_error, moments.variance)
    return AltResult(sheet=sheet, moments=moments, curvature=curv, h1=h1, h2=h2,
                     harmonic_spread=spread, path_error=closed.path_error)
