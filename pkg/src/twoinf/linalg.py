"""Dense matrix primitives: norms, truncated decompositions, subspace metrics.

Matrices are plain ``numpy.ndarray`` objects.  Every public function runs its
inputs through :func:`as_matrix`, which enforces a finite 2-D float array.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal, Optional

import numpy as np
import scipy.linalg as sla

from .errors import DimensionError, OrthonormalityError, SymmetryError

Ordering = Literal["algebraic", "magnitude"]

ORTHO_TOL = 1e-8
SYMMETRY_TOL = 1e-10
_REORTH_DRIFT = 1e-12
# Above this aspect ratio svd_r goes through the Gram matrix of the short side.
_GRAM_ASPECT = 100


def as_matrix(A, name: str = "matrix") -> np.ndarray:
    """Return ``A`` as a finite 2-D float64 array, raising on bad input."""
    M = np.asarray(A, dtype=float)
    if M.ndim == 1:
        M = M.reshape(-1, 1)
    if M.ndim != 2:
        raise DimensionError(f"{name} must be 2-D, got shape {M.shape}")
    if M.size == 0:
        raise DimensionError(f"{name} is empty")
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf entries")
    return M


# ---------------------------------------------------------------- norms

def two_inf_norm(A) -> float:
    """Largest Euclidean row norm of ``A``."""
    A = as_matrix(A)
    return float(np.sqrt(np.max(np.einsum("ij,ij->i", A, A))))


def one_inf_norm(A) -> float:
    """Largest absolute row sum of ``A``."""
    A = as_matrix(A)
    return float(np.max(np.sum(np.abs(A), axis=1)))


def spectral_norm(A) -> float:
    """Largest singular value; elongated inputs go through the small Gram matrix."""
    A = as_matrix(A)
    n, m = A.shape
    if max(n, m) >= 2 * min(n, m):
        G = A @ A.T if n < m else A.T @ A
        return float(np.sqrt(max(0.0, sla.eigvalsh(G, subset_by_index=[G.shape[0] - 1] * 2)[0])))
    return float(np.linalg.norm(A, 2))


def hollow(A) -> np.ndarray:
    """Copy of square ``A`` with its diagonal set to zero."""
    A = as_matrix(A)
    if A.shape[0] != A.shape[1]:
        raise DimensionError(f"hollow needs a square matrix, got {A.shape}")
    H = A.copy()
    np.fill_diagonal(H, 0.0)
    return H


# ------------------------------------------------------- decompositions

@dataclass(frozen=True)
class SpectralPair:
    """Rank-r leading factor of a matrix.

    Attributes
    ----------
    basis : ndarray (n, r)
        Orthonormal leading eigenvectors or left singular vectors.
    spectrum : ndarray (r,)
        Retained eigenvalues (ordered per ``ordering``) or singular values
        in descending order.
    next_value : float
        The (r+1)-th eigenvalue / singular value under the same ordering.
    co_basis : ndarray (m, r) or None
        Right singular vectors for rectangular input.
    ordering : str
        ``"algebraic"``, ``"magnitude"`` or ``"singular"``.
    """

    basis: np.ndarray
    spectrum: np.ndarray
    next_value: float
    co_basis: Optional[np.ndarray] = None
    ordering: str = "algebraic"

    @property
    def rank(self) -> int:
        return self.basis.shape[1]


def _reorthonormalize(Q: np.ndarray) -> np.ndarray:
    r = Q.shape[1]
    drift = np.linalg.norm(Q.T @ Q - np.eye(r), 2)
    if drift <= _REORTH_DRIFT:
        return Q
    Qn, R = np.linalg.qr(Q)
    # keep column directions: flip where QR negated the diagonal
    return Qn * np.sign(np.where(np.diag(R) == 0, 1.0, np.diag(R)))


def check_symmetric(Y: np.ndarray, name: str = "matrix", tol: float = SYMMETRY_TOL) -> None:
    if Y.shape[0] != Y.shape[1]:
        raise DimensionError(f"{name} must be square, got {Y.shape}")
    scale = max(1.0, float(np.max(np.abs(Y))))
    if np.max(np.abs(Y - Y.T)) > tol * scale:
        raise SymmetryError(f"{name} is not symmetric within {tol:g}")


def leading_eigs(Y, r: int, ordering: Ordering = "algebraic") -> SpectralPair:
    """Top-``r`` eigenpairs of a symmetric matrix.

    ``ordering="algebraic"`` sorts eigenvalues in decreasing value;
    ``"magnitude"`` sorts by decreasing absolute value, which is what one
    wants for indefinite matrices with large negative eigenvalues.
    """
    Y = as_matrix(Y, "Y")
    check_symmetric(Y, "Y")
    n = Y.shape[0]
    if not 1 <= r < n:
        raise DimensionError(f"need 1 <= r < n, got r={r}, n={n}")
    Y = 0.5 * (Y + Y.T)
    if ordering == "algebraic":
        w, Q = sla.eigh(Y, subset_by_index=[n - r - 1, n - 1])
        w, Q = w[::-1], Q[:, ::-1]
    elif ordering == "magnitude":
        k = r + 1
        if 2 * k >= n:
            w, Q = np.linalg.eigh(Y)
        else:
            wl, Ql = sla.eigh(Y, subset_by_index=[0, k - 1])
            wh, Qh = sla.eigh(Y, subset_by_index=[n - k, n - 1])
            w, Q = np.concatenate([wl, wh]), np.hstack([Ql, Qh])
        # stable sort so ties keep the algebraic order
        idx = np.argsort(-np.abs(w), kind="stable")
        w, Q = w[idx], Q[:, idx]
    else:
        raise ValueError(f"unknown ordering {ordering!r}")
    U = _reorthonormalize(np.ascontiguousarray(Q[:, :r]))
    return SpectralPair(U, w[:r].copy(), float(w[r]), None, ordering)


def svd_r(X, r: int) -> SpectralPair:
    """Top-``r`` singular triplets of ``X``.

    Very elongated matrices (aspect ratio >= 100) are handled through the
    Gram matrix of the short side; the leading triplets stay accurate to
    working precision, while ``next_value`` is only accurate to about
    ``sqrt(eps) * d_1`` on that path.
    """
    X = as_matrix(X, "X")
    n, m = X.shape
    if not 1 <= r < min(n, m):
        raise DimensionError(f"need 1 <= r < min(n, m), got r={r}, shape={X.shape}")
    if max(n, m) >= _GRAM_ASPECT * min(n, m):
        wide = m > n
        G = X @ X.T if wide else X.T @ X
        w, Q = np.linalg.eigh(G)
        w, Q = w[::-1][: r + 1], Q[:, ::-1][:, : r + 1]
        d = np.sqrt(np.clip(w, 0.0, None))
        S = Q[:, :r]
        other = (X.T @ S if wide else X @ S) / d[:r]
        U, V = (S, other) if wide else (other, S)
        U, V = _reorthonormalize(U), _reorthonormalize(V)
        return SpectralPair(U, d[:r].copy(), float(d[r]), V, "singular")
    U, d, Vt = np.linalg.svd(X, full_matrices=False)
    return SpectralPair(
        _reorthonormalize(np.ascontiguousarray(U[:, :r])),
        d[:r].copy(),
        float(d[r]),
        _reorthonormalize(np.ascontiguousarray(Vt[:r].T)),
        "singular",
    )


# ------------------------------------------------------ subspace metrics

def check_orthonormal(U: np.ndarray, name: str = "basis", tol: float = ORTHO_TOL) -> None:
    r = U.shape[1]
    if U.shape[0] < r:
        raise OrthonormalityError(f"{name} has more columns than rows")
    if np.max(np.abs(U.T @ U - np.eye(r))) > tol:
        raise OrthonormalityError(f"{name} columns are not orthonormal within {tol:g}")


def _pair(U, Uhat):
    U = as_matrix(U, "U")
    Uhat = as_matrix(Uhat, "Uhat")
    if U.shape != Uhat.shape:
        raise DimensionError(f"shape mismatch {U.shape} vs {Uhat.shape}")
    check_orthonormal(U, "U")
    check_orthonormal(Uhat, "Uhat")
    return U, Uhat


def procrustes_rotation(U, Uhat) -> np.ndarray:
    """Orthogonal W_U = W1 W2^T from the SVD U^T Uhat = W1 D W2^T, no input checks."""
    W1, _, W2t = np.linalg.svd(np.asarray(U).T @ np.asarray(Uhat))
    return W1 @ W2t


def procrustes_align(U, Uhat) -> np.ndarray:
    """Orthogonal r x r matrix minimising ||Uhat - U O||_F."""
    U, Uhat = _pair(U, Uhat)
    return procrustes_rotation(U, Uhat)


def sin_theta(U, Uhat, flavor: Literal["spectral", "frobenius"] = "spectral") -> float:
    """Sine of the principal angles between span(U) and span(Uhat).

    Evaluated from the projection residual ``Uhat - U U^T Uhat``, whose
    singular values are exactly the sines of the principal angles.  This
    keeps small angles accurate where ``sqrt(1 - cos^2)`` would not.
    """
    U, Uhat = _pair(U, Uhat)
    R = Uhat - U @ (U.T @ Uhat)
    if flavor == "spectral":
        return float(min(1.0, np.linalg.norm(R, 2)))
    if flavor == "frobenius":
        return float(min(np.sqrt(U.shape[1]), np.linalg.norm(R, "fro")))
    raise ValueError(f"unknown flavor {flavor!r}")


def aligned_two_inf_error(U, Uhat) -> float:
    """||Uhat - U W_U||_{2,inf} with W_U the Procrustes rotation."""
    U, Uhat = _pair(U, Uhat)
    return two_inf_norm(Uhat - U @ procrustes_rotation(U, Uhat))


def random_orthonormal(n: int, r: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-distributed n x r matrix with orthonormal columns."""
    Q, R = np.linalg.qr(rng.standard_normal((n, r)))
    return Q * np.sign(np.diag(R))
