"""Result records passed between the services.

Arrays follow one layout everywhere: the first two axes index the torus grid
(j1 + n/2, j2 + n/2), a trailing axis indexes vector components.
"""
from dataclasses import dataclass, field, replace
from typing import Dict, Optional, Tuple

import numpy as np


@dataclass(frozen=True, eq=False)
class EigenPair:
    value: float
    vector: np.ndarray


@dataclass(frozen=True, eq=False)
class EdgeAssignment:
    """Parallel-transported eigenvectors on the base line κ2 = -1/2."""
    energies: np.ndarray
    vectors: np.ndarray
    phi1: float
    closure: float

    @property
    def n(self) -> int:
        return self.energies.shape[0]


@dataclass(frozen=True, eq=False)
class SheetAssignment:
    energies: np.ndarray
    vectors: np.ndarray
    chern: int
    chern_residual: float
    phi2: Optional[np.ndarray] = None
    z: Optional[np.ndarray] = None
    # vectors at κ2 = +1/2, kept to measure closure along the second axis
    top: Optional[np.ndarray] = None
    stage: str = 'raw'

    @property
    def n(self) -> int:
        return self.energies.shape[0]

    @property
    def dim(self) -> int:
        return self.vectors.shape[-1]

    @property
    def periodic(self) -> bool:
        return self.stage != 'raw'

    def with_vectors(self, vectors: np.ndarray, top: Optional[np.ndarray] = None,
                     stage: Optional[str] = None) -> 'SheetAssignment':
        return replace(self, vectors=vectors, top=top if top is not None else self.top,
                       stage=stage or self.stage)


@dataclass(frozen=True, eq=False)
class ConnectionField:
    a1: np.ndarray
    a2: np.ndarray
    ax: np.ndarray
    ay: np.ndarray
    max_imag: float = 0.0


@dataclass(frozen=True, eq=False)
class HodgeParts:
    psi: np.ndarray
    f_pot: np.ndarray
    hx: float
    hy: float


@dataclass(frozen=True)
class MomentReport:
    center: Tuple[float, float]
    second: float
    variance: float


@dataclass(frozen=True)
class MomentDecomposition:
    """Split of the second moment into projector and connection parts."""
    projector: float
    gradient: float
    solenoidal: float
    harmonic: float

    @property
    def second(self) -> float:
        return self.projector + self.gradient + self.solenoidal + self.harmonic


@dataclass(frozen=True, eq=False)
class CurvatureField:
    omega_xy: np.ndarray
    c1_integral: float
    max_imag: float = 0.0


@dataclass(frozen=True, eq=False)
class BlochCoefficients:
    """Fourier coefficients u_{i,R}; ``data[m1 + n/2, m2 + n/2, i]``."""
    data: np.ndarray

    @property
    def n(self) -> int:
        return self.data.shape[0]

    def __getitem__(self, key: Tuple[int, int]) -> np.ndarray:
        m1, m2 = key
        half = self.n // 2
        if not (-half <= m1 < half and -half <= m2 < half):
            return np.zeros(self.data.shape[-1], dtype=complex)
        return self.data[m1 + half, m2 + half]

    def indices(self) -> np.ndarray:
        half = self.n // 2
        return np.arange(-half, half)

    @property
    def mass(self) -> float:
        return float(np.sum(np.abs(self.data) ** 2))


@dataclass(eq=False)
class WannierResult:
    coeffs: BlochCoefficients
    center: Tuple[float, float]
    variance: float
    chern: int
    max_imag: float
    decay_rate: float
    sheet: Optional[SheetAssignment] = None
    extras: Dict[str, float] = field(default_factory=dict)
