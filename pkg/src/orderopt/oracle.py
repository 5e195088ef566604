"""Strongly convex quadratic objectives and the sign comparison oracle.

The objective is f(x) = 0.5 x^T A x + b^T x + c0 with A symmetric positive
definite. A query perturbs the objective linearly: the noisy value seen by the
oracle is f(x) + <xi, x>, whose gradient is grad f(x) + xi. The comparison
oracle returns only the sign of the noisy value difference between two points,
with ties broken to +1.
"""

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .linalg import (
    EigenDecomposition,
    SINGULARITY_THRESHOLD,
    SymMatrix,
    eig_sym,
)


class NotStronglyConvexError(ValueError):
    """Hessian must be positive definite with a safely positive smallest eigenvalue."""


@dataclass(frozen=True, eq=False)
class QuadraticProblem:
    """f(x) = 0.5 x^T A x + b^T x + c0 with SPD A.

    Derived attributes: mu (smallest Hessian eigenvalue), lip (largest),
    minimizer x* = -A^-1 b, and the Hessian eigendecomposition.
    """

    hessian: SymMatrix
    linear: np.ndarray
    constant: float = 0.0
    mu: float = field(init=False)
    lip: float = field(init=False)
    minimizer: np.ndarray = field(init=False)
    eigen: EigenDecomposition = field(init=False, repr=False)

    def __post_init__(self):
        if not isinstance(self.hessian, SymMatrix):
            object.__setattr__(self, "hessian", SymMatrix(self.hessian))
        d = self.hessian.dim
        b = np.array(self.linear, dtype=float).reshape(-1)
        if b.shape != (d,):
            raise ValueError(
                f"linear term has shape {np.shape(self.linear)}, expected ({d},)"
            )
        if not np.all(np.isfinite(b)):
            raise ValueError("linear term must be finite")
        b.setflags(write=False)
        object.__setattr__(self, "linear", b)
        object.__setattr__(self, "constant", float(self.constant))

        dec = eig_sym(self.hessian)
        mu = float(dec.eigenvalues[0])
        if mu <= SINGULARITY_THRESHOLD:
            raise NotStronglyConvexError(
                f"hessian must be positive definite: smallest eigenvalue {mu:.6e}"
            )
        object.__setattr__(self, "eigen", dec)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "lip", float(dec.eigenvalues[-1]))

        q = dec.eigenvectors
        xstar = -(q / dec.eigenvalues[None, :]) @ (q.T @ b)
        residual = np.linalg.norm(self.hessian.entries @ xstar + b)
        if residual > 1e-9:
            raise NotStronglyConvexError(
                f"minimizer solve residual {residual:.3e} exceeds 1e-9"
            )
        xstar.setflags(write=False)
        object.__setattr__(self, "minimizer", xstar)

    @property
    def dim(self) -> int:
        return self.hessian.dim

    @classmethod
    def create(cls, hessian_entries, linear=None, constant=0.0) -> "QuadraticProblem":
        h = SymMatrix(hessian_entries)
        b = np.zeros(h.dim) if linear is None else linear
        return cls(h, b, constant)


def _as_point(problem: QuadraticProblem, x, name: str) -> np.ndarray:
    arr = np.asarray(x, dtype=float)
    if arr.shape != (problem.dim,):
        raise ValueError(
            f"{name} has shape {arr.shape}, expected ({problem.dim},)"
        )
    return arr


def f_value(problem: QuadraticProblem, x) -> float:
    """Noise-free objective value."""
    arr = _as_point(problem, x, "x")
    a = problem.hessian.entries
    return float(0.5 * arr @ (a @ arr) + problem.linear @ arr + problem.constant)


def noisy_value(problem: QuadraticProblem, x, xi) -> float:
    """f(x) + <xi, x>, the value the comparison oracle actually sees."""
    arr = _as_point(problem, x, "x")
    noise = _as_point(problem, xi, "xi")
    return f_value(problem, arr) + float(noise @ arr)


def noisy_gradient(problem: QuadraticProblem, x, xi) -> np.ndarray:
    """A x + b + xi."""
    arr = _as_point(problem, x, "x")
    noise = _as_point(problem, xi, "xi")
    return problem.hessian.entries @ arr + problem.linear + noise


def compare_values(fx: float, fy: float) -> int:
    """Sign of fx - fy with sign(0) = +1."""
    return 1 if fx - fy >= 0.0 else -1


def order_oracle(problem: QuadraticProblem, x, y, xi) -> int:
    """Comparison of the noisy values at x and y under one shared draw xi."""
    return compare_values(noisy_value(problem, x, xi), noisy_value(problem, y, xi))


def order_oracle_general(f: Callable[[np.ndarray], float], x, y, xi) -> int:
    """Same comparison for an arbitrary objective callable (untested hook)."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    xi = np.asarray(xi, dtype=float)
    return compare_values(float(f(x)) + float(xi @ x), float(f(y)) + float(xi @ y))
