"""Dense symmetric-matrix helpers sized for small optimization problems.

Everything routes through an explicit cyclic Jacobi eigensolver so that the
decomposition, the SPD inverse, and the SPD square root share one numerical
path and one set of failure modes.
"""

from dataclasses import dataclass

import numpy as np


class EigenSolveError(RuntimeError):
    """Jacobi sweep budget exhausted before the off-diagonal residual converged."""


class SingularMatrixError(ValueError):
    """Matrix treated as SPD has an eigenvalue at or below the singularity threshold."""


class NotPositiveSemidefiniteError(ValueError):
    """Matrix square root requested for a matrix with a materially negative eigenvalue."""


# Eigenvalues at or below this are treated as zero by the SPD routines.
SINGULARITY_THRESHOLD = 1e-12

_JACOBI_MAX_SWEEPS = 100
_JACOBI_REL_TOL = 1e-14


@dataclass(frozen=True, eq=False)
class SymMatrix:
    """Square symmetric matrix; construction symmetrizes entries as (M + M^T)/2."""

    entries: np.ndarray

    def __post_init__(self):
        m = np.array(self.entries, dtype=float)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if m.shape[0] < 1:
            raise ValueError("matrix dimension must be at least 1")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must all be finite")
        sym = 0.5 * (m + m.T)
        sym.setflags(write=False)
        object.__setattr__(self, "entries", sym)

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    @classmethod
    def identity(cls, dim: int) -> "SymMatrix":
        return cls(np.eye(dim))

    @classmethod
    def diagonal(cls, values) -> "SymMatrix":
        return cls(np.diag(np.asarray(values, dtype=float)))


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Eigenvalues in ascending order; eigenvectors[:, i] pairs with eigenvalues[i]."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    def __post_init__(self):
        vals = np.asarray(self.eigenvalues, dtype=float)
        vecs = np.asarray(self.eigenvectors, dtype=float)
        vals.setflags(write=False)
        vecs.setflags(write=False)
        object.__setattr__(self, "eigenvalues", vals)
        object.__setattr__(self, "eigenvectors", vecs)

    def reconstruct(self) -> np.ndarray:
        q = self.eigenvectors
        return (q * self.eigenvalues[None, :]) @ q.T


def _offdiagonal_norm(a: np.ndarray) -> float:
    lower = np.tril(a, -1)
    return float(np.sqrt(2.0 * np.sum(lower * lower)))


def eig_sym(matrix: SymMatrix) -> EigenDecomposition:
    """Eigendecomposition by cyclic Jacobi rotations.

    Sweeps row-cyclically until the off-diagonal Frobenius norm falls to
    1e-14 of the input's Frobenius norm, raising EigenSolveError with the
    remaining residual if 100 sweeps do not get there.
    """
    a = matrix.entries.copy()
    d = a.shape[0]
    q = np.eye(d)
    tol = _JACOBI_REL_TOL * np.linalg.norm(matrix.entries, "fro")

    sweeps = 0
    off = _offdiagonal_norm(a)
    while off > tol:
        if sweeps >= _JACOBI_MAX_SWEEPS:
            raise EigenSolveError(
                f"no convergence after {_JACOBI_MAX_SWEEPS} sweeps, "
                f"off-diagonal residual {off:.3e} exceeds tolerance {tol:.3e}"
            )
        for p in range(d - 1):
            for r in range(p + 1, d):
                apr = a[p, r]
                if apr == 0.0:
                    continue
                tau = (a[r, r] - a[p, p]) / (2.0 * apr)
                if tau >= 0.0:
                    t = 1.0 / (tau + np.sqrt(1.0 + tau * tau))
                else:
                    t = -1.0 / (-tau + np.sqrt(1.0 + tau * tau))
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c

                col_p = a[:, p].copy()
                col_r = a[:, r].copy()
                a[:, p] = c * col_p - s * col_r
                a[:, r] = s * col_p + c * col_r
                row_p = a[p, :].copy()
                row_r = a[r, :].copy()
                a[p, :] = c * row_p - s * row_r
                a[r, :] = s * row_p + c * row_r
                a[p, r] = 0.0
                a[r, p] = 0.0

                q_p = q[:, p].copy()
                q_r = q[:, r].copy()
                q[:, p] = c * q_p - s * q_r
                q[:, r] = s * q_p + c * q_r
        sweeps += 1
        off = _offdiagonal_norm(a)

    order = np.argsort(np.diag(a), kind="stable")
    return EigenDecomposition(np.diag(a)[order], q[:, order])


def inverse_spd(matrix: SymMatrix) -> SymMatrix:
    """Inverse through the eigendecomposition; rejects non-SPD inputs."""
    dec = eig_sym(matrix)
    smallest = dec.eigenvalues[0]
    if smallest <= SINGULARITY_THRESHOLD:
        raise SingularMatrixError(
            f"matrix is singular or indefinite: smallest eigenvalue {smallest:.6e} "
            f"is at or below {SINGULARITY_THRESHOLD:.0e}"
        )
    q = dec.eigenvectors
    inv = (q / dec.eigenvalues[None, :]) @ q.T
    return SymMatrix(inv)


def sqrt_spd(matrix: SymMatrix) -> SymMatrix:
    """Symmetric PSD square root; eigenvalues in [-1e-12, 0) are clamped to zero."""
    dec = eig_sym(matrix)
    smallest = dec.eigenvalues[0]
    if smallest < -SINGULARITY_THRESHOLD:
        raise NotPositiveSemidefiniteError(
            f"matrix is not positive semidefinite: eigenvalue {smallest:.6e} "
            f"is below -{SINGULARITY_THRESHOLD:.0e}"
        )
    clamped = np.clip(dec.eigenvalues, 0.0, None)
    q = dec.eigenvectors
    root = (q * np.sqrt(clamped)[None, :]) @ q.T
    return SymMatrix(root)


def min_eigenvalue(matrix: SymMatrix) -> float:
    return float(eig_sym(matrix).eigenvalues[0])
