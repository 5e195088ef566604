"""Descent recursion driven by the comparison oracle, with running averaging.

One step at iteration k moves from x by exactly eta/k^theta along a uniformly
random unit direction, with the sign chosen by comparing the noisy objective
at x + gamma*e and x - gamma*e under a single shared noise draw:

    x_next = x - (eta/k^theta) * s * e,   s = oracle comparison in {-1, +1}

run() executes K such steps from a random initial point on the radius-R0
sphere around the minimizer and maintains the running average of the iterates
x_0 .. x_{K-1} incrementally.
"""

from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import _kernel
from .oracle import QuadraticProblem, order_oracle
from .rand import NoiseModel, RngStream, sample_noise, sample_noise_block, sample_sphere, sample_sphere_block

_CHUNK_STEPS = 65_536


class DivergenceError(RuntimeError):
    """Iterate left the finite range; carries the step index and iterate norm."""

    def __init__(self, k: int, norm: float):
        self.k = int(k)
        self.norm = float(norm)
        super().__init__(f"iterate diverged at step k={self.k}: ||x|| = {self.norm}")


@dataclass(frozen=True)
class RunConfig:
    """Parameters of one stochastic run.

    The pair (seed, run_index) keys the run's random stream, so a config is a
    complete recipe for reproducing the run bit for bit.
    """

    dim: int
    steps: int
    eta: float
    noise: NoiseModel
    theta: float = 1.0
    gamma: float = 0.1
    init_radius: float = 10.0
    burn_in: int = 0
    seed: int = 0
    run_index: int = 0

    def __post_init__(self):
        if int(self.dim) < 2:
            raise ValueError(f"dim must be at least 2, got {self.dim}")
        if int(self.steps) < 1:
            raise ValueError(f"steps must be at least 1, got {self.steps}")
        if not (np.isfinite(self.eta) and self.eta > 0.0):
            raise ValueError(f"eta must be a positive real, got {self.eta}")
        if not (0.5 < self.theta <= 1.0):
            raise ValueError(f"theta must lie in (1/2, 1], got {self.theta}")
        if not (np.isfinite(self.gamma) and self.gamma > 0.0):
            raise ValueError(f"gamma must be positive, got {self.gamma}")
        if not (np.isfinite(self.init_radius) and self.init_radius >= 0.0):
            raise ValueError(f"init_radius must be non-negative, got {self.init_radius}")
        if not 0 <= int(self.burn_in) < int(self.steps):
            raise ValueError(
                f"burn_in must lie in [0, steps), got {self.burn_in} with steps={self.steps}"
            )
        if not isinstance(self.noise, NoiseModel):
            raise ValueError("noise must be a NoiseModel")
        if self.noise.dim != int(self.dim):
            raise ValueError(
                f"noise dimension {self.noise.dim} does not match problem dimension {self.dim}"
            )

    def with_run_index(self, run_index: int) -> "RunConfig":
        return replace(self, run_index=run_index)


@dataclass(frozen=True, eq=False)
class RunResult:
    """Terminal state of one run.

    scaled_last and scaled_avg are sqrt(K)*(x_K - x*) and sqrt(K)*(xbar_K - x*),
    the quantities whose distribution the covariance formulas describe.
    """

    x_last: np.ndarray
    x_avg: np.ndarray
    steps_taken: int
    scaled_last: np.ndarray
    scaled_avg: np.ndarray
    trajectory: Optional[np.ndarray] = None

    def __post_init__(self):
        for name in ("x_last", "x_avg", "scaled_last", "scaled_avg"):
            arr = np.asarray(getattr(self, name), dtype=float)
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        if self.trajectory is not None:
            traj = np.asarray(self.trajectory, dtype=float)
            traj.setflags(write=False)
            object.__setattr__(self, "trajectory", traj)


def step_size(cfg: RunConfig, k: int) -> float:
    return cfg.eta / float(k) ** cfg.theta


def step_given(
    p: QuadraticProblem, x: np.ndarray, k: int, cfg: RunConfig, e: np.ndarray, xi: np.ndarray
) -> np.ndarray:
    """One update with the direction and noise supplied by the caller."""
    if k < 1:
        raise ValueError(f"step index must be at least 1, got {k}")
    x = np.asarray(x, dtype=float)
    if not np.all(np.isfinite(x)):
        raise DivergenceError(k, float(np.linalg.norm(x)))
    s = order_oracle(p, x + cfg.gamma * e, x - cfg.gamma * e, xi)
    return x - (step_size(cfg, k) * s) * e


def step(
    p: QuadraticProblem, x: np.ndarray, k: int, cfg: RunConfig, stream: RngStream
) -> np.ndarray:
    """One update drawing the direction and then the noise from the stream."""
    e = sample_sphere(stream, cfg.dim)
    xi = sample_noise(stream, cfg.noise)
    return step_given(p, x, k, cfg, e, xi)


def run(p: QuadraticProblem, cfg: RunConfig, store_trajectory: bool = False) -> RunResult:
    """Execute cfg.steps oracle steps and return terminal and averaged iterates.

    Stream layout (fixed): one sphere draw for the initial point, then per
    chunk of up to 65536 steps one direction block followed by one noise
    block. Randomness is pre-generated in blocks and consumed by a serial
    kernel, which keeps runs bit-reproducible for a given (seed, run_index)
    regardless of chunk boundaries relative to this layout.
    """
    if p.dim != cfg.dim:
        raise ValueError(f"problem dimension {p.dim} does not match config dim {cfg.dim}")
    stream = RngStream(cfg.seed, cfg.run_index)
    d = cfg.dim
    total = int(cfg.steps)

    x0 = p.minimizer + cfg.init_radius * sample_sphere(stream, d)
    x = x0.copy()
    xbar = x0.copy()
    if store_trajectory:
        traj = np.empty((total + 1, d))
        traj[0] = x0
    else:
        traj = np.empty((0, d))

    hess = p.hessian.entries
    lin = p.linear
    k0 = 1
    while k0 <= total:
        m = min(_CHUNK_STEPS, total - k0 + 1)
        dirs = sample_sphere_block(stream, m, d)
        noises = sample_noise_block(stream, cfg.noise, m)
        karr = np.arange(k0, k0 + m, dtype=float)
        etas = cfg.eta / karr**cfg.theta
        _kernel.run_chunk(
            hess, lin, p.constant, cfg.gamma, etas, dirs, noises,
            k0, total, int(cfg.burn_in), x, xbar, traj,
        )
        if not np.all(np.isfinite(x)):
            raise DivergenceError(k0 + m - 1, float(np.linalg.norm(x)))
        k0 += m

    root_k = np.sqrt(float(total))
    return RunResult(
        x_last=x,
        x_avg=xbar,
        steps_taken=total,
        scaled_last=root_k * (x - p.minimizer),
        scaled_avg=root_k * (xbar - p.minimizer),
        trajectory=traj if store_trajectory else None,
    )
