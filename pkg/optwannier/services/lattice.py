"""Direct/reciprocal lattice geometry and the (κ1, κ2) <-> (kx, ky) calculus."""
from dataclasses import dataclass
from typing import Sequence, Tuple

import numpy as np

from optwannier.errors import DegenerateLattice, InvalidConfig, ShapeMismatch

TWO_PI = 2.0 * np.pi
DEGENERACY_THRESHOLD = 1e-14


def reciprocal_from_direct(a1: Sequence[float], a2: Sequence[float]) -> Tuple[np.ndarray, np.ndarray]:
    """Return (b1, b2) with a_i . b_j = 2π δ_ij.

    Uses the closed-form 2x2 inverse-transpose.
    """
    a1 = np.asarray(a1, dtype=float)
    a2 = np.asarray(a2, dtype=float)
    if a1.shape != (2,) or a2.shape != (2,):
        raise ShapeMismatch(f"lattice vectors must be 2-vectors, got {a1.shape} and {a2.shape}")

    det = a1[0] * a2[1] - a1[1] * a2[0]
    if abs(det) <= DEGENERACY_THRESHOLD * np.linalg.norm(a1) * np.linalg.norm(a2):
        raise DegenerateLattice(f"lattice vectors {a1.tolist()} and {a2.tolist()} are linearly dependent")

    b1 = TWO_PI * np.array([a2[1], -a2[0]]) / det
    b2 = TWO_PI * np.array([-a1[1], a1[0]]) / det
    return b1, b2


@dataclass(frozen=True, eq=False)
class Lattice:
    a1: np.ndarray
    a2: np.ndarray
    b1: np.ndarray
    b2: np.ndarray
    v_puc: float

    @classmethod
    def from_direct(cls, a1: Sequence[float], a2: Sequence[float]) -> 'Lattice':
        b1, b2 = reciprocal_from_direct(a1, a2)
        a1 = np.asarray(a1, dtype=float)
        a2 = np.asarray(a2, dtype=float)
        v_puc = abs(a1[0] * a2[1] - a1[1] * a2[0])
        return cls(a1=a1, a2=a2, b1=b1, b2=b2, v_puc=float(v_puc))

    @property
    def orientation(self) -> float:
        """Sign of det(a1, a2); the κ-torus and the k-plane agree in orientation when positive."""
        return float(np.sign(self.a1[0] * self.a2[1] - self.a1[1] * self.a2[0]))

    @property
    def min_length(self) -> float:
        return float(min(np.linalg.norm(self.a1), np.linalg.norm(self.a2)))

    def lattice_vector(self, m1, m2) -> np.ndarray:
        """R = m1 a1 + m2 a2, broadcasting over array arguments."""
        m1 = np.asarray(m1, dtype=float)
        m2 = np.asarray(m2, dtype=float)
        return m1[..., None] * self.a1 + m2[..., None] * self.a2

    def to_dict(self) -> dict:
        return {'a1': self.a1.tolist(), 'a2': self.a2.tolist(),
                'b1': self.b1.tolist(), 'b2': self.b2.tolist(), 'v_puc': self.v_puc}


@dataclass(frozen=True)
class TorusGrid:
    """Equispaced nodes κ = j h, j = -n/2 .. n/2 - 1, on each axis of the torus."""
    n: int

    def __post_init__(self):
        if self.n <= 0 or self.n % 2:
            raise InvalidConfig(f"grid size must be a positive even integer, got {self.n}")

    @property
    def h(self) -> float:
        return 1.0 / self.n

    @property
    def indices(self) -> np.ndarray:
        return np.arange(-self.n // 2, self.n // 2)

    @property
    def nodes(self) -> np.ndarray:
        return self.indices * self.h

    @property
    def closed_nodes(self) -> np.ndarray:
        """Nodes including the periodic duplicate κ = 1/2."""
        return np.arange(-self.n // 2, self.n // 2 + 1) * self.h

    def mesh(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.meshgrid(self.nodes, self.nodes, indexing='ij')

    def reflect(self, field: np.ndarray) -> np.ndarray:
        """Values at -κ: stored index i maps to (n - i) mod n on both grid axes."""
        idx = (-np.arange(self.n)) % self.n
        return field[idx][:, idx]


def k_of_kappa(lat: Lattice, kappa1, kappa2) -> np.ndarray:
    kappa1 = np.asarray(kappa1, dtype=float)
    kappa2 = np.asarray(kappa2, dtype=float)
    return kappa1[..., None] * lat.b1 + kappa2[..., None] * lat.b2


def kappa_derivs_to_cartesian(lat: Lattice, d1, d2) -> Tuple[np.ndarray, np.ndarray]:
    d1 = np.asarray(d1)
    d2 = np.asarray(d2)
    if d1.shape != d2.shape:
        raise ShapeMismatch(f"derivative fields differ in shape: {d1.shape} vs {d2.shape}")
    dx = (lat.a1[0] * d1 + lat.a2[0] * d2) / TWO_PI
    dy = (lat.a1[1] * d1 + lat.a2[1] * d2) / TWO_PI
    return dx, dy


def cartesian_derivs_to_kappa(lat: Lattice, dx, dy) -> Tuple[np.ndarray, np.ndarray]:
    dx = np.asarray(dx)
    dy = np.asarray(dy)
    if dx.shape != dy.shape:
        raise ShapeMismatch(f"derivative fields differ in shape: {dx.shape} vs {dy.shape}")
    d1 = lat.b1[0] * dx + lat.b1[1] * dy
    d2 = lat.b2[0] * dx + lat.b2[1] * dy
    return d1, d2
