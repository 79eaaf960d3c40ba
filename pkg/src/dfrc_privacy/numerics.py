"""Complex dense linear algebra helpers shared by the whole package.

Matrices are plain numpy arrays throughout: a "complex matrix" is any 2-D
complex ndarray with finite entries, and a "Hermitian matrix" is one equal to
its own conjugate transpose within HERMITIAN_TOL. Nothing here knows about
antennas or particles.
"""

import numpy as np

# Relative tolerance for declaring a matrix PSD. Conic solvers hand back
# iterates whose smallest eigenvalue dips slightly below zero; anything above
# -PSD_TOL * max|eig| is treated as numerical noise and clipped.
PSD_TOL = 1e-7

HERMITIAN_TOL = 1e-9


class NotPositiveSemidefinite(Exception):
    """Matrix has an eigenvalue below the PSD tolerance."""


def conj_transpose(A):
    """Conjugate transpose of a 2-D array."""
    A = np.asarray(A)
    return A.conj().T


def _check_hermitian(A, tol=HERMITIAN_TOL):
    A = np.asarray(A)
    if A.ndim != 2 or A.shape[0] != A.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {A.shape}")
    if not np.all(np.abs(A - A.conj().T) <= tol):
        raise ValueError("matrix is not Hermitian within tolerance")
    return A


def min_eigenvalue(A):
    """Smallest eigenvalue of a Hermitian matrix, as a real scalar."""
    A = _check_hermitian(A)
    return float(np.linalg.eigvalsh(A)[0])


def psd_sqrt(A):
    """Factor F with F F^H = A for positive semidefinite A.

    Eigenvalues within -PSD_TOL * max|eig| of zero are clipped to zero, so
    mildly infeasible solver output is accepted; anything more negative raises
    NotPositiveSemidefinite. The factor is eigenvector-based (F = V sqrt(w)),
    which tolerates the rank-deficient inputs that a Cholesky factor would
    reject. Any right-unitary rotation of F is an equally valid answer; only
    F F^H is contractual.
    """
    A = _check_hermitian(A)
    w, V = np.linalg.eigh(A)
    scale = max(np.max(np.abs(w)), 1.0)
    if w[0] < -PSD_TOL * scale:
        raise NotPositiveSemidefinite(
            f"min eigenvalue {w[0]:.3e} below -{PSD_TOL:g} * {scale:.3e}")
    return V * np.sqrt(np.clip(w, 0.0, None))


def complex_to_real_embedding(A):
    """Real symmetric embedding [[Re A, -Im A], [Im A, Re A]] of a Hermitian A.

    The embedding is PSD exactly when A is, and carries A's spectrum with
    every eigenvalue doubled in multiplicity, which lets real-cone conic
    solvers handle complex PSD constraints.
    """
    A = _check_hermitian(A)
    return np.block([[A.real, -A.imag], [A.imag, A.real]])


def close_frobenius(A, B, abs_tol=1e-9, rel_tol=0.0):
    """Frobenius-norm comparison with mixed absolute/relative tolerance."""
    A = np.asarray(A)
    B = np.asarray(B)
    err = np.linalg.norm(A - B)
    return err <= max(abs_tol, rel_tol * max(np.linalg.norm(A), np.linalg.norm(B)))
