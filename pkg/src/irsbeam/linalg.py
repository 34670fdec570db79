"""Dense complex-matrix primitives used throughout the solvers.

Everything here is a pure function of its inputs.  Matrices never exceed a
few hundred rows in this package, so full eigendecompositions are preferred
over iterative methods for robustness.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

from .errors import DimensionMismatchError, NotPsdError

# Relative eigenvalue cutoff for rank decisions (double-precision safe margin).
EIG_TOL = 1e-10


class HermitianEig(NamedTuple):
    """Eigendecomposition A = Q diag(w) Q^H with w real and descending."""

    eigvals: np.ndarray
    eigvecs: np.ndarray


def _as_square(a, name: str = "matrix") -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2 or a.shape[0] != a.shape[1]:
        raise DimensionMismatchError(f"{name} must be square, got shape {a.shape}")
    return a


def hermitian_eig(a) -> HermitianEig:
    """Eigendecomposition of a Hermitian matrix, eigenvalues sorted descending.

    The input is defensively symmetrized as (A + A^H)/2: products such as
    G^H U W U^H G accumulate round-off that would otherwise leak into the
    decomposition.
    """
    a = _as_square(a)
    h = 0.5 * (a + a.conj().T)
    w, q = np.linalg.eigh(h)  # ascending
    return HermitianEig(w[::-1].copy(), q[:, ::-1].copy())


def pinv_psd(a, tol: float = EIG_TOL) -> np.ndarray:
    """Moore-Penrose pseudo-inverse of a Hermitian PSD matrix.

    Eigenvalues below ``tol * lambda_max`` are treated as zero.  A genuinely
    negative eigenvalue (below ``-tol * lambda_max``) raises ``NotPsdError``.
    """
    w, q = hermitian_eig(a)
    lam_max = max(float(w[0]), 0.0)
    cutoff = tol * lam_max
    if w[-1] < -max(cutoff, tol):
        raise NotPsdError(f"matrix has negative eigenvalue {w[-1]:.3e} (lambda_max={lam_max:.3e})")
    inv = np.where(w > cutoff, 1.0, 0.0) / np.where(w > cutoff, w, 1.0)
    return (q * inv) @ q.conj().T


def max_eigenvalue(a) -> float:
    """Largest eigenvalue of a Hermitian PSD matrix (clamped at zero)."""
    w, _ = hermitian_eig(a)
    return max(float(w[0]), 0.0)


def hadamard_quadratic(b, c, theta) -> complex:
    """Evaluate theta^H (B o C^T) theta for square B, C and a vector theta.

    Equals Tr(B diag(theta) C diag(theta)^H); the Hadamard form avoids
    building the diagonal matrices.  The transpose on C is essential: the
    identity fails with B o C whenever C is not symmetric.
    """
    b = _as_square(b, "B")
    c = _as_square(c, "C")
    theta = np.asarray(theta, dtype=complex)
    m = b.shape[0]
    if c.shape[0] != m or theta.shape != (m,):
        raise DimensionMismatchError(
            f"B {b.shape}, C {c.shape} and theta {theta.shape} must share dimension"
        )
    return complex(theta.conj() @ (b * c.T) @ theta)


def hadamard_psd(b, c) -> np.ndarray:
    """Return B o C^T, Hermitian PSD whenever B and C are (Schur product theorem)."""
    b = _as_square(b, "B")
    c = _as_square(c, "C")
    if c.shape[0] != b.shape[0]:
        raise DimensionMismatchError(f"B {b.shape} and C {c.shape} must share dimension")
    m = b * c.T
    return 0.5 * (m + m.conj().T)


def solve_hermitian(a, rhs) -> np.ndarray:
    """Solve A x = rhs for Hermitian positive-definite A without forming A^{-1}."""
    a = _as_square(a)
    h = 0.5 * (a + a.conj().T)
    return np.linalg.solve(h, np.asarray(rhs, dtype=complex))


def logdet_hermitian(a) -> float:
    """log2 det(A) for Hermitian positive-definite A."""
    a = _as_square(a)
    sign, logdet = np.linalg.slogdet(0.5 * (a + a.conj().T))
    if sign.real <= 0:
        raise NotPsdError("matrix is not positive definite")
    return float(logdet / np.log(2.0))
