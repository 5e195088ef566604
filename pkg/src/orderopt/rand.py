"""Reproducible random streams and the bounded noise models.

Streams are counter-based (Philox) and keyed by the pair
(master_seed, stream_id) through a SeedSequence spawn key, so stream i of a
simulation is a pure function of that pair: runs can execute in any order, on
any worker layout, and reproduce bit-identical output.

Gaussian sampling is Box-Muller on the stream's uniforms with a fixed block
convention (documented on sample_gaussian) so every consumer sees the same
draw sequence.
"""

from dataclasses import dataclass
from enum import Enum

import numpy as np


class NoiseKind(Enum):
    SPHERE_UNIFORM = "sphere"
    BALL_UNIFORM = "ball"


@dataclass(frozen=True)
class NoiseModel:
    """Bounded perturbation distribution: uniform on the radius-r sphere or ball."""

    kind: NoiseKind
    radius: float
    dim: int

    def __post_init__(self):
        kind = self.kind
        if isinstance(kind, str):
            kind = NoiseKind(kind)
            object.__setattr__(self, "kind", kind)
        if not isinstance(kind, NoiseKind):
            raise ValueError(f"unknown noise kind: {self.kind!r}")
        radius = float(self.radius)
        if not np.isfinite(radius) or radius <= 0.0:
            raise ValueError(f"noise radius must be a positive real, got {self.radius!r}")
        object.__setattr__(self, "radius", radius)
        dim = int(self.dim)
        if dim < 2:
            raise ValueError(f"noise dimension must be at least 2, got {self.dim!r}")
        object.__setattr__(self, "dim", dim)


class RngStream:
    """Single-owner uniform stream for (master_seed, stream_id).

    Draws advance internal state; never share one stream across concurrent
    consumers. Two streams with the same key replay identically.
    """

    def __init__(self, master_seed: int, stream_id: int):
        self.master_seed = int(master_seed)
        self.stream_id = int(stream_id)
        if self.master_seed < 0:
            raise ValueError("master_seed must be non-negative")
        if self.stream_id < 0:
            raise ValueError("stream_id must be non-negative")
        seq = np.random.SeedSequence(self.master_seed, spawn_key=(self.stream_id,))
        self._gen = np.random.Generator(np.random.Philox(seq))

    def uniforms(self, count: int) -> np.ndarray:
        """count i.i.d. uniforms on [0, 1)."""
        if count < 0:
            raise ValueError("count must be non-negative")
        return self._gen.random(count)


def sample_gaussian(stream: RngStream, count: int) -> np.ndarray:
    """count i.i.d. standard normals via Box-Muller.

    Block convention: with m = ceil(count/2), one block of 2m uniforms is
    split into halves u1 = u[:m], u2 = u[m:]; pair j yields radius
    r_j = sqrt(-2 log(1 - u1_j)) and the output is the r*cos(2 pi u2) block
    followed by the r*sin(2 pi u2) block, truncated to count entries.
    log(1 - u) is evaluated as log1p(-u), finite for u in [0, 1).
    """
    if count < 1:
        raise ValueError("count must be at least 1")
    m = (count + 1) // 2
    u = stream.uniforms(2 * m)
    radius = np.sqrt(-2.0 * np.log1p(-u[:m]))
    angle = (2.0 * np.pi) * u[m:]
    out = np.empty(2 * m)
    np.multiply(radius, np.cos(angle), out=out[:m])
    np.multiply(radius, np.sin(angle), out=out[m:])
    return out[:count]


def sample_sphere_block(stream: RngStream, count: int, dim: int) -> np.ndarray:
    """(count, dim) rows uniform on the unit sphere: normalized Gaussians.

    Rows whose Gaussian vector has norm below 1e-300 are resampled.
    """
    if dim < 1:
        raise ValueError("dim must be at least 1")
    if count < 1:
        raise ValueError("count must be at least 1")
    g = sample_gaussian(stream, count * dim).reshape(count, dim)
    norms = np.sqrt(np.einsum("ij,ij->i", g, g))
    tiny = np.flatnonzero(norms < 1e-300)
    while tiny.size:
        g[tiny] = sample_gaussian(stream, tiny.size * dim).reshape(-1, dim)
        norms[tiny] = np.sqrt(np.einsum("ij,ij->i", g[tiny], g[tiny]))
        tiny = tiny[norms[tiny] < 1e-300]
    g /= norms[:, None]
    return g


def sample_sphere(stream: RngStream, dim: int) -> np.ndarray:
    """One point uniform on the unit sphere in R^dim."""
    return sample_sphere_block(stream, 1, dim)[0]


def sample_noise_block(stream: RngStream, model: NoiseModel, count: int) -> np.ndarray:
    """(count, dim) noise draws; ball sampling scales a sphere point by r*U^(1/d).

    Consumption order per row is direction first, then (ball only) one radius
    uniform for the whole block after the directions.
    """
    directions = sample_sphere_block(stream, count, model.dim)
    if model.kind is NoiseKind.SPHERE_UNIFORM:
        return model.radius * directions
    u = stream.uniforms(count)
    radii = model.radius * u ** (1.0 / model.dim)
    return radii[:, None] * directions


def sample_noise(stream: RngStream, model: NoiseModel) -> np.ndarray:
    """One draw from the noise model."""
    return sample_noise_block(stream, model, 1)[0]
