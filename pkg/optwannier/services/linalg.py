"""Dense Hermitian eigensolves and the eigenpair-derivative kernel.

Matrices are small (n <= ~32) so every kernel is a dense O(n^3) call; the
batched variants take stacks with matrix axes last.
"""
from typing import List, Tuple

import numpy as np
import scipy.linalg

from optwannier.errors import NearDegenerate, NonHermitianInput
from optwannier.models import EigenPair

HERMITIAN_TOL = 1e-10


def _check_hermitian(h: np.ndarray) -> None:
    scale = max(1.0, float(np.linalg.norm(h)))
    if np.linalg.norm(h - h.conj().T) > HERMITIAN_TOL * scale:
        raise NonHermitianInput(f"matrix deviates from Hermitian by {np.linalg.norm(h - h.conj().T):.3e}")


def hermitian_eigensolve(h: np.ndarray) -> List[EigenPair]:
    """Eigenpairs of a Hermitian matrix in ascending order."""
    h = np.asarray(h, dtype=complex)
    _check_hermitian(h)
    values, vectors = scipy.linalg.eigh(h)
    return [EigenPair(value=float(values[j]), vector=vectors[:, j]) for j in range(len(values))]


def band_eigenpairs(h: np.ndarray, band: int) -> Tuple[np.ndarray, np.ndarray]:
    """Energies and eigenvectors of one band for a stack of Hermitian matrices."""
    values, vectors = np.linalg.eigh(h)
    return values[..., band], vectors[..., :, band]


def pseudoinverse_apply(h: np.ndarray, e: float, q: np.ndarray, gap_tol: float = 1e-8) -> np.ndarray:
    """Apply the pseudoinverse of (h - e) with its smallest singular triplet dropped."""
    result = pseudoinverse_apply_batched(np.asarray(h, dtype=complex)[None], np.array([e], dtype=float),
                                         np.asarray(q, dtype=complex)[None], gap_tol)
    return result[0]


def pseudoinverse_apply_batched(h: np.ndarray, e: np.ndarray, q: np.ndarray,
                                gap_tol: float = 1e-8) -> np.ndarray:
    dim = h.shape[-1]
    if dim == 1:
        return np.zeros_like(q)
    m = h - e[..., None, None] * np.eye(dim)
    u, s, vh = np.linalg.svd(m)
    # singular values come sorted descending; the last one belongs to the band
    second = s[..., -2]
    if np.any(second < gap_tol):
        index = int(np.argmin(second.reshape(-1)))
        raise NearDegenerate(f"second-smallest singular value {second.reshape(-1)[index]:.3e} "
                             f"below gap_tol {gap_tol:.1e}", index=index)
    coef = np.einsum('...jk,...j->...k', u[..., :, :-1].conj(), q) / s[..., :-1]
    return np.einsum('...kj,...k->...j', vh[..., :-1, :].conj(), coef)


def band_derivative(h: np.ndarray, dh: np.ndarray, pair: EigenPair,
                    gap_tol: float = 1e-8) -> Tuple[float, np.ndarray]:
    """(dE, du) of a simple eigenpair along the direction whose generator is dh.

    du is the parallel-transport derivative, orthogonal to u.
    """
    de, du = band_derivatives(np.asarray(h, dtype=complex)[None], np.asarray(dh, dtype=complex)[None],
                              np.array([pair.value]), np.asarray(pair.vector, dtype=complex)[None], gap_tol)
    return float(de[0]), du[0]


def band_derivatives(h: np.ndarray, dh: np.ndarray, e: np.ndarray, u: np.ndarray,
                     gap_tol: float = 1e-8) -> Tuple[np.ndarray, np.ndarray]:
    q = np.einsum('...ij,...j->...i', dh, u)
    de = np.einsum('...i,...i->...', u.conj(), q).real
    du = -pseudoinverse_apply_batched(h, e, q, gap_tol)
    return de, du
