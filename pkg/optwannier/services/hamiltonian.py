"""Tight-binding Hamiltonians H(k) = Σ_R T_R e^{ik·R} and the built-in models."""
import json
import logging
from dataclasses import dataclass, field, replace
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
from pydantic import ValidationError

from optwannier.errors import (HermiticityViolation, InvalidConfig, NearDegenerate,
                               ParseError, ShapeMismatch, UnknownModel)
from optwannier.schemas import HoppingTermDocument, ModelDocument
from optwannier.services.lattice import TWO_PI, Lattice, TorusGrid

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12
TRS_TOL = 1e-10
DEFAULT_GAP_TOL = 1e-8


@dataclass(frozen=True, eq=False)
class HoppingTerm:
    m1: int
    m2: int
    t: np.ndarray


@dataclass(frozen=True, eq=False)
class TightBindingModel:
    lat: Lattice
    dim: int
    terms: Tuple[HoppingTerm, ...]
    band: int
    gap_tol: float = DEFAULT_GAP_TOL
    name: str = 'custom'
    # cartesian intra-cell position of each orbital, (dim, 2); None puts all of them at the origin
    orbital_offsets: Optional[np.ndarray] = None
    _shifts: np.ndarray = field(init=False, repr=False)
    _blocks: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.band < self.dim:
            raise InvalidConfig(f"band index {self.band} out of range for a {self.dim}-band model")
        if self.orbital_offsets is not None:
            offsets = np.asarray(self.orbital_offsets, dtype=float)
            if offsets.shape != (self.dim, 2):
                raise ShapeMismatch(f"orbital offsets have shape {offsets.shape}, expected ({self.dim}, 2)")
            object.__setattr__(self, 'orbital_offsets', offsets)
        merged: Dict[Tuple[int, int], np.ndarray] = {}
        for term in self.terms:
            t = np.asarray(term.t, dtype=complex)
            if t.shape != (self.dim, self.dim):
                raise ShapeMismatch(f"hopping block at ({term.m1}, {term.m2}) has shape {t.shape}, "
                                    f"expected ({self.dim}, {self.dim})")
            key = (int(term.m1), int(term.m2))
            merged[key] = merged.get(key, 0) + t

        for (m1, m2), t in merged.items():
            partner = merged.get((-m1, -m2))
            if partner is None:
                partner = np.zeros_like(t)
            if np.max(np.abs(partner - t.conj().T), initial=0.0) > HERMITICITY_TOL * max(1.0, np.max(np.abs(t))):
                raise HermiticityViolation(
                    f"hopping block at R=({m1}, {m2}) is not matched by its conjugate transpose at "
                    f"R=({-m1}, {-m2})")

        keys = sorted(merged)
        object.__setattr__(self, '_shifts', np.array(keys, dtype=float).reshape(-1, 2))
        object.__setattr__(self, '_blocks', np.array([merged[k] for k in keys]).reshape(-1, self.dim, self.dim))

    def _phases(self, kappa1, kappa2) -> np.ndarray:
        kappa1 = np.asarray(kappa1, dtype=float)
        kappa2 = np.asarray(kappa2, dtype=float)
        arg = kappa1[..., None] * self._shifts[:, 0] + kappa2[..., None] * self._shifts[:, 1]
        return np.exp(1j * TWO_PI * arg)

    def hamiltonian(self, kappa1, kappa2) -> np.ndarray:
        """H at (κ1, κ2); broadcasts over array arguments, matrix axes last."""
        return np.tensordot(self._phases(kappa1, kappa2), self._blocks, axes=([-1], [0]))

    def derivative(self, kappa1, kappa2, axis: int) -> np.ndarray:
        """∂H/∂κ_axis for axis 1 or 2."""
        if axis not in (1, 2):
            raise InvalidConfig(f"axis must be 1 or 2, got {axis}")
        weights = 1j * TWO_PI * self._shifts[:, axis - 1]
        return np.tensordot(self._phases(kappa1, kappa2) * weights, self._blocks, axes=([-1], [0]))

    @property
    def has_real_hoppings(self) -> bool:
        return bool(np.max(np.abs(self._blocks.imag), initial=0.0) <= HERMITICITY_TOL)


def evaluate_h(m: TightBindingModel, kappa1, kappa2) -> np.ndarray:
    return m.hamiltonian(kappa1, kappa2)


def evaluate_dh(m: TightBindingModel, kappa1, kappa2, axis: int) -> np.ndarray:
    return m.derivative(kappa1, kappa2, axis)


def check_time_reversal(m: TightBindingModel, samples: int = 100, seed: int = 0) -> bool:
    """True when conj(H(k)) = H(-k) on random samples of the torus.

    Equivalent to every hopping block being real.
    """
    rng = np.random.default_rng(seed)
    kappa = rng.uniform(-0.5, 0.5, size=(samples, 2))
    h_plus = m.hamiltonian(kappa[:, 0], kappa[:, 1])
    h_minus = m.hamiltonian(-kappa[:, 0], -kappa[:, 1])
    deviation = np.linalg.norm(h_plus.conj() - h_minus, axis=(-2, -1))
    return bool(np.max(deviation) <= TRS_TOL)


def band_energies(m: TightBindingModel, n: int) -> Tuple[np.ndarray, float]:
    """All eigenvalues on the n x n grid and the minimum gap of the selected band."""
    grid = TorusGrid(n)
    k1, k2 = grid.mesh()
    energies = np.linalg.eigvalsh(m.hamiltonian(k1, k2))
    gap = _gap_field(m, energies)
    if gap is None:
        return energies, float('inf')
    return energies, float(np.min(gap))


def check_band_gap(m: TightBindingModel, n: int) -> float:
    """Raise NearDegenerate at the node where the band comes closest to a neighbour."""
    energies, min_gap = band_energies(m, n)
    if min_gap <= m.gap_tol:
        gap = _gap_field(m, energies)
        i1, i2 = np.unravel_index(np.argmin(gap), gap.shape)
        raise NearDegenerate(f"band {m.band} gap {min_gap:.3e} below gap_tol {m.gap_tol:.1e}",
                             node=(int(i1) - n // 2, int(i2) - n // 2))
    logger.debug("band %d of %s: minimum gap %.6g on %dx%d grid", m.band, m.name, min_gap, n, n)
    return min_gap


def _gap_field(m: TightBindingModel, energies: np.ndarray) -> Optional[np.ndarray]:
    gaps = []
    if m.band > 0:
        gaps.append(energies[..., m.band] - energies[..., m.band - 1])
    if m.band < m.dim - 1:
        gaps.append(energies[..., m.band + 1] - energies[..., m.band])
    return np.minimum.reduce(gaps) if gaps else None


# Built-in models

def _block(dim: int, entries: Dict[Tuple[int, int], complex]) -> np.ndarray:
    t = np.zeros((dim, dim), dtype=complex)
    for (i, j), value in entries.items():
        t[i, j] = value
    return t


def _square3(t_dd: float = 0.1, t_pd: float = 2.0, t_pp: float = -0.25,
             eps_d: float = 1.0, eps_p: float = -2.0) -> TightBindingModel:
    """Three-orbital square lattice (two p orbitals and one d orbital), top band.

    The d-p elements are rewritten with e^{iθ} 2i sin θ = e^{2iθ} - 1, which
    puts the -t_pd e^{ikx/√2} 2i sin(kx/√2) element on R = 0 and R = a1 + a2.
    """
    s = 1.0 / np.sqrt(2.0)
    lat = Lattice.from_direct((s, -s), (s, s))
    terms: List[HoppingTerm] = [
        HoppingTerm(0, 0, _block(3, {(0, 0): eps_p, (1, 1): eps_p, (2, 2): eps_d,
                                     (0, 2): t_pd, (2, 0): t_pd})),
        HoppingTerm(1, 1, _block(3, {(0, 2): -t_pd})),
        HoppingTerm(-1, -1, _block(3, {(2, 0): -t_pd})),
        HoppingTerm(0, 1, _block(3, {(1, 2): t_pd})),
        HoppingTerm(0, -1, _block(3, {(2, 1): t_pd})),
        HoppingTerm(1, 0, _block(3, {(1, 2): -t_pd})),
        HoppingTerm(-1, 0, _block(3, {(2, 1): -t_pd})),
    ]
    nearest = _block(3, {(0, 0): t_pp, (1, 1): t_pp, (2, 2): t_dd})
    for m1, m2 in ((1, 0), (-1, 0), (0, 1), (0, -1)):
        terms.append(HoppingTerm(m1, m2, nearest))
    return TightBindingModel(lat=lat, dim=3, terms=tuple(terms), band=2, name='square3')


def _haldane(t1: float = 1.0, v0: float = 0.5, t2: float = 0.0, name: str = 'haldane-trivial') -> TightBindingModel:
    """Two-site honeycomb model, top band; t2 adds the TRS-breaking σz term."""
    lat = Lattice.from_direct((np.sqrt(3.0) / 2, 0.5), (np.sqrt(3.0) / 2, -0.5))
    terms = [
        HoppingTerm(0, 0, _block(2, {(0, 0): v0, (1, 1): -v0, (0, 1): t1, (1, 0): t1})),
        HoppingTerm(-1, 0, _block(2, {(0, 1): t1})),
        HoppingTerm(1, 0, _block(2, {(1, 0): t1})),
        HoppingTerm(0, -1, _block(2, {(0, 1): t1})),
        HoppingTerm(0, 1, _block(2, {(1, 0): t1})),
    ]
    if t2:
        # sin θ = (e^{iθ} - e^{-iθ}) / 2i on θ = k·a1, -k·a2, -k·(a1 - a2)
        sigma_z = np.diag([1.0, -1.0]).astype(complex)
        for (m1, m2), sign in (((1, 0), 1.0), ((0, 1), -1.0), ((1, -1), -1.0)):
            terms.append(HoppingTerm(m1, m2, sign * t2 / 2j * sigma_z))
            terms.append(HoppingTerm(-m1, -m2, -sign * t2 / 2j * sigma_z))
    return TightBindingModel(lat=lat, dim=2, terms=tuple(terms), band=1, name=name)


BUILTIN_MODELS = {
    'square3': _square3,
    'haldane-trivial': lambda: _haldane(),
    'haldane-chern': lambda: _haldane(t2=-0.45, name='haldane-chern'),
}


def builtin_model(name: str, band: Optional[int] = None) -> TightBindingModel:
    factory = BUILTIN_MODELS.get(name)
    if factory is None:
        raise UnknownModel(f"unknown model '{name}'; choose one of {', '.join(sorted(BUILTIN_MODELS))}")
    model = factory()
    if band is not None and band != model.band:
        model = with_band(model, band)
    return model


def with_band(m: TightBindingModel, band: int) -> TightBindingModel:
    return replace(m, band=band)


def with_gap_tol(m: TightBindingModel, gap_tol: float) -> TightBindingModel:
    return m if gap_tol == m.gap_tol else replace(m, gap_tol=gap_tol)


def with_orbital_offsets(m: TightBindingModel, offsets: Sequence[Sequence[float]]) -> TightBindingModel:
    return replace(m, orbital_offsets=np.asarray(offsets, dtype=float))


def constant_model(h: Sequence[Sequence[complex]], band: int = 0, name: str = 'constant') -> TightBindingModel:
    """k-independent model on the unit square lattice."""
    t = np.asarray(h, dtype=complex)
    lat = Lattice.from_direct((1.0, 0.0), (0.0, 1.0))
    return TightBindingModel(lat=lat, dim=t.shape[0], terms=(HoppingTerm(0, 0, t),), band=band, name=name)


# Model documents

def model_from_document(doc: ModelDocument, default_gap_tol: float = DEFAULT_GAP_TOL) -> TightBindingModel:
    """Build the model; a document without ``gap_tol`` gets ``default_gap_tol``."""
    lat = Lattice.from_direct(doc.a1, doc.a2)
    terms = []
    for term in doc.terms:
        t = np.asarray(term.re, dtype=float).astype(complex)
        if term.im is not None:
            t = t + 1j * np.asarray(term.im, dtype=float)
        terms.append(HoppingTerm(term.m1, term.m2, t))
    return TightBindingModel(lat=lat, dim=doc.dim, terms=tuple(terms), band=doc.band,
                             gap_tol=doc.gap_tol if doc.gap_tol is not None else default_gap_tol,
                             name=doc.name or 'custom', orbital_offsets=doc.orbital_offsets)


def model_to_document(m: TightBindingModel) -> ModelDocument:
    terms = [HoppingTermDocument(m1=int(s[0]), m2=int(s[1]), re=t.real.tolist(), im=t.imag.tolist())
             for s, t in zip(m._shifts, m._blocks)]
    return ModelDocument(name=m.name, a1=m.lat.a1.tolist(), a2=m.lat.a2.tolist(), dim=m.dim,
                         band=m.band, gap_tol=m.gap_tol, terms=terms,
                         orbital_offsets=m.orbital_offsets.tolist() if m.orbital_offsets is not None else None)


def parse_model_file(text: str, default_gap_tol: float = DEFAULT_GAP_TOL) -> TightBindingModel:
    try:
        doc = ModelDocument.model_validate(json.loads(text))
    except json.JSONDecodeError as e:
        raise ParseError(f"model file is not valid JSON: {e}")
    except ValidationError as e:
        raise ParseError(f"invalid model document: {e}")
    return model_from_document(doc, default_gap_tol)


def serialize_model(m: TightBindingModel) -> str:
    return model_to_document(m).model_dump_json(indent=2)
