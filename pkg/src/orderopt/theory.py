"""Closed-form asymptotics: covariance matrices, optimal step size, identities.

All formulas are spectral functions of the Hessian H at the minimizer and of
two scalars: the dimension constant c(d) = sqrt(d) E|e_1| and the noise
constant alpha = E||xi||^-1. The linearized comparison dynamics have drift
matrix G = (c/sqrt(d)) alpha (1 - 1/d) H, and everything below is built from
it.
"""

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.integrate import quad

from .linalg import SymMatrix, eig_sym, inverse_spd, min_eigenvalue
from .oracle import QuadraticProblem
from .rand import NoiseKind, NoiseModel

_C_LOWER = 1.0 / 20.0
_C_UPPER = 1.0


class QuadratureError(RuntimeError):
    """The c(d) integral did not reach the requested absolute tolerance."""


class InfiniteAlphaError(ValueError):
    """E||xi||^-1 diverges for the requested noise model."""


class StepSizeTooSmallError(ValueError):
    """eta is at or below the stability threshold of the last-iterate formula."""

    def __init__(self, eta: float, threshold: float):
        self.eta = float(eta)
        self.threshold = float(threshold)
        super().__init__(
            f"eta = {self.eta:.12g} does not satisfy the stability condition: "
            f"eta must exceed 1/lambda_min = {self.threshold:.12g}"
        )


@lru_cache(maxsize=None)
def c_constant(d: int) -> float:
    """c(d) = sqrt(d) E|e_1| for e uniform on the unit sphere in R^d.

    The first-coordinate marginal has density proportional to
    (1 - t^2)^((d-3)/2) on [-1, 1]; substituting t = cos(theta) evaluates the
    same expectation as integrals of |cos(theta)| sin(theta)^(d-2) and
    sin(theta)^(d-2) over [0, pi], which quad handles without endpoint
    singularities for every d >= 2.
    """
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    expo = d - 2
    num, num_err = quad(
        lambda th: abs(math.cos(th)) * math.sin(th) ** expo,
        0.0, math.pi, epsabs=1e-12, epsrel=1e-12, points=[math.pi / 2.0], limit=200,
    )
    den, den_err = quad(
        lambda th: math.sin(th) ** expo,
        0.0, math.pi, epsabs=1e-12, epsrel=1e-12, limit=200,
    )
    if num_err > 1e-10 or den_err > 1e-10:
        raise QuadratureError(
            f"quadrature error estimate too large at d={d}: {num_err:.2e}, {den_err:.2e}"
        )
    return math.sqrt(d) * num / den


def alpha_of(noise: NoiseModel) -> float:
    """E||xi||^-1: 1/r on the radius-r sphere, d/((d-1) r) on the ball."""
    if noise.kind is NoiseKind.SPHERE_UNIFORM:
        return 1.0 / noise.radius
    if noise.dim < 2:
        raise InfiniteAlphaError(
            "E||xi||^-1 is infinite for the uniform ball in dimension 1"
        )
    return noise.dim / ((noise.dim - 1) * noise.radius)


@dataclass(frozen=True, eq=False)
class TheoryContext:
    """A problem together with the two scalars its asymptotics depend on."""

    problem: QuadraticProblem
    noise: NoiseModel
    c: float
    alpha: float

    def __post_init__(self):
        if self.noise.dim != self.problem.dim:
            raise ValueError(
                f"noise dimension {self.noise.dim} does not match problem "
                f"dimension {self.problem.dim}"
            )
        if not (_C_LOWER - 1e-12 <= self.c <= _C_UPPER + 1e-12):
            raise ValueError(f"c must lie in [1/20, 1], got {self.c}")
        if not (np.isfinite(self.alpha) and self.alpha > 0.0):
            raise ValueError(f"alpha must be positive and finite, got {self.alpha}")

    @property
    def dim(self) -> int:
        return self.problem.dim

    @classmethod
    def for_problem(cls, problem: QuadraticProblem, noise: NoiseModel) -> "TheoryContext":
        return cls(problem, noise, c_constant(problem.dim), alpha_of(noise))


def _drift_scalar(d: int, c: float, alpha: float) -> float:
    return (c / math.sqrt(d)) * alpha * (1.0 - 1.0 / d)


def drift_matrix_for_hessian(hessian: SymMatrix, c: float, alpha: float) -> SymMatrix:
    scalar = _drift_scalar(hessian.dim, c, alpha)
    return SymMatrix(scalar * hessian.entries)


def drift_matrix(ctx: TheoryContext) -> SymMatrix:
    """G = (c/sqrt(d)) alpha (1 - 1/d) H, the linearized comparison drift."""
    return drift_matrix_for_hessian(ctx.problem.hessian, ctx.c, ctx.alpha)


def psi_prime_zero(ctx: TheoryContext) -> SymMatrix:
    """Jacobian at zero of the direction-averaged oracle map: scalar times I."""
    d = ctx.dim
    return SymMatrix(_drift_scalar(d, ctx.c, ctx.alpha) * np.eye(d))


def chi_zero(d: int, c: float) -> SymMatrix:
    """Second moment at zero of the direction-averaged oracle map: (c^2/d^2) I."""
    d = int(d)
    if d < 2:
        raise ValueError(f"dimension must be at least 2, got {d}")
    return SymMatrix((c * c) / (d * d) * np.eye(d))


def check_hurwitz(ctx: TheoryContext) -> bool:
    """True iff every eigenvalue of the drift matrix G exceeds 1e-12."""
    return check_hurwitz_for_hessian(ctx.problem.hessian, ctx.c, ctx.alpha)


def check_hurwitz_for_hessian(hessian: SymMatrix, c: float, alpha: float) -> bool:
    return min_eigenvalue(drift_matrix_for_hessian(hessian, c, alpha)) > 1e-12


def stability_threshold(ctx: TheoryContext) -> float:
    """Smallest admissible eta for the last-iterate covariance: 1/lambda_min(A')."""
    aprime_min = 2.0 * _drift_scalar(ctx.dim, ctx.c, ctx.alpha) * ctx.problem.mu
    return 1.0 / aprime_min


def v_last_iterate(ctx: TheoryContext, eta: float) -> SymMatrix:
    """Asymptotic covariance of sqrt(K)(x_K - x*) without averaging.

    V(eta) = (eta^2/d) (2 eta (1 - 1/d) (c/sqrt(d)) alpha H - I)^-1, defined
    whenever eta exceeds the stability threshold.
    """
    d = ctx.dim
    threshold = stability_threshold(ctx)
    if not eta > threshold:
        raise StepSizeTooSmallError(eta, threshold)
    aprime = 2.0 * _drift_scalar(d, ctx.c, ctx.alpha) * ctx.problem.hessian.entries
    shifted = SymMatrix(eta * aprime - np.eye(d))
    return SymMatrix((eta * eta / d) * inverse_spd(shifted).entries)


def v_last_norm(ctx: TheoryContext, eta: float) -> float:
    """Spectral norm of v_last_iterate as a closed-form scalar.

    The matrix is a decreasing spectral function of the Hessian, so its
    largest eigenvalue sits on the smallest Hessian eigenvalue:
    g(eta) = eta^2 / (d (eta lambda_min(A') - 1)).
    """
    d = ctx.dim
    threshold = stability_threshold(ctx)
    if not eta > threshold:
        raise StepSizeTooSmallError(eta, threshold)
    return eta * eta / (d * (eta / threshold - 1.0))


def v_averaged(ctx: TheoryContext) -> SymMatrix:
    """Asymptotic covariance formula for sqrt(K)(xbar_K - x*): scale times H^-2."""
    d = ctx.dim
    scale = d / ((d - 1.0) ** 2 * ctx.alpha**2)
    hinv = inverse_spd(ctx.problem.hessian).entries
    return SymMatrix(scale * (hinv @ hinv))


def eta_opt(ctx: TheoryContext) -> float:
    """Step-size constant minimizing ||V(eta)||: d sqrt(d)/((d-1) c alpha mu)."""
    d = ctx.dim
    return d * math.sqrt(d) / ((d - 1.0) * ctx.c * ctx.alpha * ctx.problem.mu)


def covariance_gap(ctx: TheoryContext) -> np.ndarray:
    """Eigenvalues (ascending) of V(eta_opt) - V_averaged, in closed form.

    Per Hessian eigenvalue lambda_i with mu = lambda_min:
    m_i = d mu (d lambda_i^2 - 2 c^2 lambda_i mu + c^2 mu^2)
          / ((d-1)^2 alpha^2 c^2 mu^2 (2 lambda_i - mu) lambda_i^2).
    """
    d = ctx.dim
    c2 = ctx.c * ctx.c
    mu = ctx.problem.mu
    lam = ctx.problem.eigen.eigenvalues
    numer = d * mu * (d * lam**2 - 2.0 * c2 * lam * mu + c2 * mu * mu)
    denom = (d - 1.0) ** 2 * ctx.alpha**2 * c2 * mu * mu * (2.0 * lam - mu) * lam**2
    return np.sort(numer / denom)
