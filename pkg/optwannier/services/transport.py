"""Parallel transport of the band eigenvector over the torus.

Stage 1 transports the start vector along the base line κ2 = -1/2 and removes
the closing phase φ1. Stage 2 transports every edge vector along its vertical
line, measures the sewing phases z(κ1), reads off the Chern number from their
winding and, when it vanishes, removes the phases φ2 = -i log z.
"""
import logging
from dataclasses import dataclass, replace
from typing import Callable, Optional, Tuple

import numpy as np
from joblib import Parallel, delayed

from optwannier.errors import AmbiguousWinding, NearDegenerate, ObstructedBranch
from optwannier.models import EdgeAssignment, EigenPair, SheetAssignment
from optwannier.services.hamiltonian import TightBindingModel, check_time_reversal
from optwannier.services.lattice import TWO_PI, TorusGrid
from optwannier.services.linalg import band_derivatives, band_eigenpairs, hermitian_eigensolve
from optwannier.services.spectral import LineSeries, periodic_derivative

logger = logging.getLogger(__name__)

WINDING_TOL = 0.1
UNIMODULAR_TOL = 1e-6


@dataclass(frozen=True)
class TransportSettings:
    richardson: bool = True
    rayleigh: bool = True
    threads: int = 1
    initial_phase: float = 0.0
    winding_tol: float = WINDING_TOL


DEFAULT_SETTINGS = TransportSettings()


# Integrator

def rk4_integrate(rhs: Callable[[float, np.ndarray], np.ndarray], y0: np.ndarray, s0: float, s1: float,
                  steps: int, stride: int = 1,
                  normalize: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> np.ndarray:
    """Classical RK4 from s0 to s1 in ``steps`` steps.

    Returns the states at every ``stride``-th node, the first axis running over
    nodes (steps // stride + 1 of them).
    """
    h = (s1 - s0) / steps
    y = np.array(y0, copy=True)
    states = [y.copy()]
    for step in range(steps):
        s = s0 + step * h
        k1 = rhs(s, y)
        k2 = rhs(s + 0.5 * h, y + 0.5 * h * k1)
        k3 = rhs(s + 0.5 * h, y + 0.5 * h * k2)
        k4 = rhs(s + h, y + h * k3)
        y = y + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        if normalize is not None:
            y = normalize(y)
        if (step + 1) % stride == 0:
            states.append(y.copy())
    return np.stack(states)


def richardson_triplet(coarse: np.ndarray, half: np.ndarray, quarter: np.ndarray) -> np.ndarray:
    """Combine runs at steps h, h/2, h/4 sampled on the coarse nodes.

    Removes the h^4 and h^5 terms of the RK4 global error.
    """
    delta1 = (16.0 * half - coarse) / 15.0
    delta2 = (16.0 * quarter - half) / 15.0
    return (32.0 * delta2 - delta1) / 31.0


def _normalize_state(y: np.ndarray) -> np.ndarray:
    # state layout: [E, u_1 .. u_d] along the last axis
    u = y[..., 1:]
    return np.concatenate([y[..., :1], u / np.linalg.norm(u, axis=-1, keepdims=True)], axis=-1)


def pack_state(energies: np.ndarray, vectors: np.ndarray) -> np.ndarray:
    return np.concatenate([np.asarray(energies, dtype=complex)[..., None], vectors], axis=-1)


def _line_rhs(model: TightBindingModel, axis: int, fixed_index: np.ndarray, n: int,
              connection: Optional[LineSeries]) -> Callable[[float, np.ndarray], np.ndarray]:
    fixed_kappa = fixed_index / n

    def rhs(s: float, y: np.ndarray) -> np.ndarray:
        running = np.full(fixed_kappa.shape, s)
        k1, k2 = (running, fixed_kappa) if axis == 1 else (fixed_kappa, running)
        e = y[:, 0].real
        u = y[:, 1:]
        try:
            de, du = band_derivatives(model.hamiltonian(k1, k2), model.derivative(k1, k2, axis),
                                      e, u, model.gap_tol)
        except NearDegenerate as err:
            j_run = int(round(s * n))
            j_fixed = int(fixed_index[err.index or 0])
            node = (j_run, j_fixed) if axis == 1 else (j_fixed, j_run)
            raise err.with_context(node=node)
        if connection is not None:
            du = du - 1j * connection(s)[:, None] * u
        return np.concatenate([de[:, None].astype(complex), du], axis=1)

    return rhs


def _integrate_chunk(model: TightBindingModel, y0: np.ndarray, fixed_index: np.ndarray, axis: int,
                     n: int, settings: TransportSettings,
                     connection_field: Optional[np.ndarray]) -> Tuple[np.ndarray, np.ndarray]:
    connection = LineSeries(connection_field, axis, fixed_index) if connection_field is not None else None
    rhs = _line_rhs(model, axis, fixed_index, n, connection)

    refinements = (1, 2, 4) if settings.richardson else (1,)
    runs = [rk4_integrate(rhs, y0, -0.5, 0.5, n * r, stride=r, normalize=_normalize_state)
            for r in refinements]
    y = _normalize_state(richardson_triplet(*runs)) if settings.richardson else runs[0]

    vectors = np.transpose(y[..., 1:], (1, 0, 2))
    energies = y[..., 0].real.T
    if settings.rayleigh:
        running = np.linspace(-0.5, 0.5, n + 1)[None, :] * np.ones((len(fixed_index), 1))
        fixed = (fixed_index / n)[:, None] * np.ones((1, n + 1))
        k1, k2 = (running, fixed) if axis == 1 else (fixed, running)
        hu = np.einsum('...ij,...j->...i', model.hamiltonian(k1, k2), vectors)
        energies = np.einsum('...i,...i->...', vectors.conj(), hu).real
    return energies, vectors


def _map_chunks(func: Callable[[np.ndarray], Tuple[np.ndarray, np.ndarray]], count: int,
                threads: int) -> Tuple[np.ndarray, np.ndarray]:
    chunks = [c for c in np.array_split(np.arange(count), max(1, min(threads, count))) if len(c)]
    if len(chunks) == 1:
        results = [func(chunks[0])]
    else:
        parallel = Parallel(n_jobs=len(chunks), prefer='threads', return_as='list')
        results = parallel(delayed(func)(chunk) for chunk in chunks)
    return (np.concatenate([r[0] for r in results], axis=0),
            np.concatenate([r[1] for r in results], axis=0))


def integrate_lines(model: TightBindingModel, y0: np.ndarray, fixed_index: np.ndarray, axis: int, n: int,
                    settings: TransportSettings = DEFAULT_SETTINGS,
                    connection_field: Optional[np.ndarray] = None) -> Tuple[np.ndarray, np.ndarray]:
    """Transport many lines of constant κ at once.

    ``y0`` holds packed (E, u) start states per line, ``fixed_index`` the grid
    index of the constant coordinate. Returns energies (L, n+1) and vectors
    (L, n+1, d) at the nodes s = -1/2 .. 1/2. A ``connection_field`` on the
    grid adds the -i A u term of the prescribed-connection transport.
    """
    fixed_index = np.asarray(fixed_index, dtype=int)

    def run(chunk: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return _integrate_chunk(model, y0[chunk], fixed_index[chunk], axis, n, settings, connection_field)

    return _map_chunks(run, len(fixed_index), settings.threads)


def transport_line(model: TightBindingModel, start: EigenPair, fixed_axis_value: int, axis: int, n: int,
                   settings: TransportSettings = DEFAULT_SETTINGS) -> Tuple[np.ndarray, np.ndarray]:
    """Transport one eigenpair across a full period of the running coordinate.

    ``fixed_axis_value`` is the grid index j of the constant coordinate.
    """
    y0 = pack_state(np.array([start.value]), np.asarray(start.vector, dtype=complex)[None])
    energies, vectors = integrate_lines(model, y0, np.array([fixed_axis_value]), axis, n,
                                        replace(settings, threads=1))
    return energies[0], vectors[0]


# Start vector

def initial_eigenpair(model: TightBindingModel, initial_phase: float = 0.0,
                      time_reversal: Optional[bool] = None) -> EigenPair:
    """Band eigenpair at κ = (-1/2, -1/2) with a deterministic phase.

    The largest-magnitude entry is rotated to the positive real axis; under
    time-reversal symmetry H is real there, so the vector becomes real.
    """
    pair = hermitian_eigensolve(model.hamiltonian(-0.5, -0.5))[model.band]
    v = pair.vector
    k = int(np.argmax(np.abs(v)))
    v = v * np.exp(-1j * np.angle(v[k]))
    if time_reversal is None:
        time_reversal = check_time_reversal(model)
    if time_reversal:
        v = v.real.astype(complex)
        v /= np.linalg.norm(v)
    if initial_phase:
        v = v * np.exp(1j * initial_phase)
    return EigenPair(value=pair.value, vector=v)


# Stage 1

def _close_edge(energies: np.ndarray, vectors: np.ndarray) -> EdgeAssignment:
    n = vectors.shape[0] - 1
    phi1 = float(np.angle(np.vdot(vectors[0], vectors[n])))
    kappa = TorusGrid(n).closed_nodes
    vectors = vectors * np.exp(-1j * phi1 * (kappa + 0.5))[:, None]
    closure = float(np.linalg.norm(vectors[0] - vectors[n]))
    return EdgeAssignment(energies=energies[:n], vectors=vectors[:n], phi1=phi1, closure=closure)


def stage1_edge(model: TightBindingModel, n: int, settings: TransportSettings = DEFAULT_SETTINGS,
                start: Optional[EigenPair] = None) -> EdgeAssignment:
    TorusGrid(n)  # validates n
    if start is None:
        start = initial_eigenpair(model, settings.initial_phase)
    energies, vectors = transport_line(model, start, -n // 2, 1, n, settings)
    edge = _close_edge(energies, vectors)
    logger.debug("stage 1: phi1=%.12f closure=%.3e", edge.phi1, edge.closure)
    return edge


# Stage 2

def winding_chern(z: np.ndarray, tol: float = WINDING_TOL) -> Tuple[int, float]:
    """Winding of the periodic unimodular sequence z around the origin."""
    z = np.asarray(z, dtype=complex)
    deviation = float(np.max(np.abs(np.abs(z) - 1.0)))
    if deviation > UNIMODULAR_TOL:
        raise AmbiguousWinding(f"sewing phases are not unimodular (max deviation {deviation:.3e})")
    n = z.shape[0]
    winding = float(np.real(np.sum(periodic_derivative(z) / z) / (n * 2j * np.pi)))
    c1 = int(np.rint(winding))
    residual = abs(winding - c1)
    if residual > tol:
        raise AmbiguousWinding(f"winding {winding:.6f} is not close to an integer; refine the grid")
    return c1, residual


def unwrap_phase(z: np.ndarray) -> np.ndarray:
    """Branch-continuous φ2 = -i log z, starting from the principal value at κ1 = -1/2."""
    z = np.asarray(z, dtype=complex)
    steps = np.angle(np.roll(z, -1) / z)
    total = float(np.sum(steps))
    if abs(total) > np.pi:
        raise ObstructedBranch(f"sewing phase winds {total / TWO_PI:.3f} times; no periodic branch exists")
    return np.angle(z[0]) + np.concatenate([[0.0], np.cumsum(steps[:-1])])


def stage2_sheet(model: TightBindingModel, edge: EdgeAssignment,
                 settings: TransportSettings = DEFAULT_SETTINGS) -> SheetAssignment:
    n = edge.n
    y0 = pack_state(edge.energies, edge.vectors)
    energies, vectors = integrate_lines(model, y0, TorusGrid(n).indices, 2, n, settings)
    z = np.einsum('li,li->l', vectors[:, 0].conj(), vectors[:, n])
    chern, residual = winding_chern(z, settings.winding_tol)
    logger.debug("stage 2: chern=%d residual=%.3e", chern, residual)
    return SheetAssignment(energies=energies[:, :n], vectors=vectors[:, :n], chern=chern,
                           chern_residual=residual, z=z, top=vectors[:, n], stage='raw')


def stage2_gauge_apply(raw: SheetAssignment, phi2: np.ndarray) -> SheetAssignment:
    """ũ = e^{-iφ2(κ1)(κ2 + 1/2)} u."""
    n = raw.n
    kappa2 = TorusGrid(n).nodes
    gauge = np.exp(-1j * phi2[:, None] * (kappa2[None, :] + 0.5))
    top = raw.top * np.exp(-1j * phi2)[:, None] if raw.top is not None else None
    return replace(raw, vectors=raw.vectors * gauge[..., None], top=top, phi2=np.asarray(phi2),
                   stage='periodic')


def parallel_transport_sheet(model: TightBindingModel, n: int,
                             settings: TransportSettings = DEFAULT_SETTINGS) -> SheetAssignment:
    """Stages 1 and 2; the sheet is left raw when the Chern number is nonzero."""
    edge = stage1_edge(model, n, settings)
    raw = stage2_sheet(model, edge, settings)
    if raw.chern != 0:
        logger.warning("topological obstruction: Chern number %d", raw.chern)
        return raw
    return stage2_gauge_apply(raw, unwrap_phase(raw.z))


# Twist transport

def _align(previous: np.ndarray, current: np.ndarray) -> np.ndarray:
    # rotate by β = -Im log(v_prev† v)
    overlap = np.einsum('...i,...i->...', previous.conj(), current)
    return current * np.exp(-1j * np.angle(overlap))[..., None]


def twist_transport(model: TightBindingModel, n: int,
                    settings: TransportSettings = DEFAULT_SETTINGS) -> SheetAssignment:
    """Discrete transport: per-node eigensolves joined by nearest-phase rotations."""
    closed = TorusGrid(n).closed_nodes
    k1, k2 = np.meshgrid(closed, closed, indexing='ij')
    energies, vectors = band_eigenpairs(model.hamiltonian(k1, k2), model.band)

    start = initial_eigenpair(model, settings.initial_phase)
    edge_vectors = vectors[:, 0].copy()
    edge_vectors[0] = _align(start.vector, edge_vectors[0])
    for j in range(1, n + 1):
        edge_vectors[j] = _align(edge_vectors[j - 1], edge_vectors[j])
    edge = _close_edge(energies[:, 0], edge_vectors)

    lines = vectors[:n].copy()
    lines[:, 0] = edge.vectors
    for j in range(1, n + 1):
        lines[:, j] = _align(lines[:, j - 1], lines[:, j])

    z = np.einsum('li,li->l', lines[:, 0].conj(), lines[:, n])
    chern, residual = winding_chern(z, settings.winding_tol)
    raw = SheetAssignment(energies=energies[:n, :n], vectors=lines[:, :n], chern=chern,
                          chern_residual=residual, z=z, top=lines[:, n], stage='raw')
    if chern != 0:
        logger.warning("topological obstruction: Chern number %d", chern)
        return raw
    return stage2_gauge_apply(raw, unwrap_phase(z))


# Accuracy metrics

def grid_eigenpairs(model: TightBindingModel, n: int) -> Tuple[np.ndarray, np.ndarray]:
    k1, k2 = TorusGrid(n).mesh()
    return band_eigenpairs(model.hamiltonian(k1, k2), model.band)


def projector_error(model: TightBindingModel, sheet: SheetAssignment) -> float:
    """max over nodes of ‖u u† - P_eig‖_F."""
    _, direct = grid_eigenpairs(model, sheet.n)
    p_sheet = np.einsum('...i,...j->...ij', sheet.vectors, sheet.vectors.conj())
    p_direct = np.einsum('...i,...j->...ij', direct, direct.conj())
    return float(np.max(np.linalg.norm(p_sheet - p_direct, axis=(-2, -1))))


def projector_distance(a: SheetAssignment, b: SheetAssignment) -> float:
    pa = np.einsum('...i,...j->...ij', a.vectors, a.vectors.conj())
    pb = np.einsum('...i,...j->...ij', b.vectors, b.vectors.conj())
    return float(np.max(np.linalg.norm(pa - pb, axis=(-2, -1))))


def eigen_residual(model: TightBindingModel, sheet: SheetAssignment) -> float:
    """max over nodes of ‖H u - E u‖ / ‖H‖."""
    k1, k2 = TorusGrid(sheet.n).mesh()
    h = model.hamiltonian(k1, k2)
    hu = np.einsum('...ij,...j->...i', h, sheet.vectors)
    residual = np.linalg.norm(hu - sheet.energies[..., None] * sheet.vectors, axis=-1)
    scale = np.maximum(np.linalg.norm(h, ord=2, axis=(-2, -1)), 1e-300)
    return float(np.max(residual / scale))


def parallel_error(a: SheetAssignment, b: SheetAssignment) -> float:
    """max over nodes of ‖ũ_a - ũ_b‖."""
    return float(np.max(np.linalg.norm(a.vectors - b.vectors, axis=-1)))


def sheet_closure(sheet: SheetAssignment) -> float:
    """Largest jump between κ2 = 1/2 and κ2 = -1/2."""
    if sheet.top is None:
        return 0.0
    return float(np.max(np.linalg.norm(sheet.top - sheet.vectors[:, 0], axis=-1)))
