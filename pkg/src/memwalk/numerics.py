"""
Dense complex linear-algebra kernel.

Every operator in the package is a small dense ``complex128`` array, so the
helpers here are thin, validated wrappers around LAPACK routines.  Tolerances
are measured in the max-abs-entry norm.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.typing import ArrayLike, NDArray

from .errors import DimensionError, PreconditionError

__all__ = [
    "HermitianEig",
    "max_abs",
    "hermitian_eig",
    "unitary_exp",
    "unitarity_residual",
    "partial_trace_coin",
    "tensor",
]

HERMITIAN_RTOL = 1e-12

ComplexMatrix = NDArray[np.complex128]


@dataclass(frozen=True)
class HermitianEig:
    """Eigenvalues (ascending) and orthonormal eigenvector columns."""

    eigenvalues: NDArray[np.float64]
    eigenvectors: ComplexMatrix

    def reconstruct(self) -> ComplexMatrix:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def max_abs(a: ArrayLike) -> float:
    a = np.asarray(a)
    return float(np.max(np.abs(a))) if a.size else 0.0


def _as_square(h: ArrayLike, name: str) -> ComplexMatrix:
    h = np.asarray(h, dtype=np.complex128)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise DimensionError(f"{name}: expected a square matrix, got shape {h.shape}")
    return h


def hermitian_eig(h: ArrayLike) -> HermitianEig:
    """
    Eigendecomposition of a Hermitian matrix.

    Raises
    ------
    DimensionError
        If ``h`` is not square.
    PreconditionError
        If ``h`` deviates from its adjoint by more than ``1e-12 * max|h|``.
    """
    h = _as_square(h, "hermitian_eig")
    dev = max_abs(h - h.conj().T)
    if dev > HERMITIAN_RTOL * max_abs(h):
        raise PreconditionError(f"hermitian_eig: matrix is not Hermitian (|H - H^dag|_max = {dev:.3e})")
    w, v = np.linalg.eigh(h)
    return HermitianEig(w, v)


def unitary_exp(h: ArrayLike, s: float = 1.0) -> ComplexMatrix:
    """Return ``exp(-i s H)`` for Hermitian ``H``, computed from its eigenbasis."""
    eig = hermitian_eig(h)
    v = eig.eigenvectors
    return (v * np.exp(-1j * s * eig.eigenvalues)) @ v.conj().T


def unitarity_residual(u: ArrayLike) -> float:
    """``max|U^dag U - I|``."""
    u = np.asarray(u)
    return max_abs(u.conj().T @ u - np.eye(u.shape[1]))


def partial_trace_coin(rho: ArrayLike) -> ComplexMatrix:
    """
    Trace out the two-level coin from a coin-first ``coin (x) walker`` matrix.

    The coin is the leading (slow) tensor factor, so the walker block for coin
    value ``c`` occupies rows/columns ``c*m .. c*m + m - 1``.
    """
    rho = _as_square(rho, "partial_trace_coin")
    n = rho.shape[0]
    if n % 2:
        raise DimensionError(f"partial_trace_coin: dimension {n} is not 2 x (walker dimension)")
    m = n // 2
    r = rho.reshape(2, m, 2, m)
    return r[0, :, 0, :] + r[1, :, 1, :]


def tensor(a: ArrayLike, b: ArrayLike) -> ComplexMatrix:
    """Kronecker product, ``(A (x) B)[i*rB + k, j*cB + l] = A[i, j] B[k, l]``."""
    return np.kron(np.asarray(a, dtype=np.complex128), np.asarray(b, dtype=np.complex128))
