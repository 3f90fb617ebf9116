"""Homogeneous Poisson point process on the unit sphere.

Counts are exactly Poisson(4 pi nu_t) and positions exactly uniform; both
come from numpy's PCG64 generator, whose Poisson sampler switches between
inversion (small mean) and transformed rejection (large mean) while staying
distribution-exact.  Reproducibility contract: a sample is a pure function
of (nu_t, seed); replication seeds derive from a master seed through the
splitmix64 mix below, so worker scheduling can never change a stream.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

_FOUR_PI = 4.0 * math.pi
_MASK64 = (1 << 64) - 1
_GOLDEN = 0x9E3779B97F4A7C15


def derive_seed(master: int, index: int) -> int:
    """splitmix64 of master + (index+1) * golden-ratio increment.

    Distinct indices give well-separated 64-bit seeds; documented as part of
    the reproducibility contract (parallel schedules cannot change results).
    """
    x = (master + (index + 1) * _GOLDEN) & _MASK64
    x ^= x >> 30
    x = (x * 0xBF58476D1CE4E5B9) & _MASK64
    x ^= x >> 27
    x = (x * 0x94D049BB133111EB) & _MASK64
    x ^= x >> 31
    return x


@dataclass(frozen=True)
class PoissonSample:
    """One realization: intensity, seed and (N, 3) unit-vector positions."""

    nu_t: float
    seed: int
    points: np.ndarray

    @property
    def count(self) -> int:
        return self.points.shape[0]

    def export_csv(self, path) -> None:
        from .harmonics import cart_to_sph

        theta, phi = cart_to_sph(self.points)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("theta,phi\n")
            for th, ph in zip(theta, phi):
                fh.write(f"{th:.17g},{ph:.17g}\n")


def sample_poisson_field(nu_t: float, seed: int) -> PoissonSample:
    """Draw N ~ Poisson(4 pi nu_t) points i.i.d. uniform on the sphere.

    Uniformity via z = 2u - 1, phi = 2 pi v; draw order is fixed (count,
    then z, then phi) so the stream layout is part of the contract.
    """
    n, z, rng = _draw_count_and_z(nu_t, seed)
    phi = 2.0 * math.pi * rng.random(n)
    st = np.sqrt(np.maximum(0.0, 1.0 - z**2))
    points = np.column_stack([st * np.cos(phi), st * np.sin(phi), z])
    points.setflags(write=False)
    return PoissonSample(nu_t=float(nu_t), seed=int(seed), points=points)


def sample_poisson_z(nu_t: float, seed: int) -> tuple[int, np.ndarray]:
    """Count and z-coordinates only, bit-identical to the z column of
    `sample_poisson_field` for the same (nu_t, seed).

    Fast path for statistics that are functions of a single axis, such as
    the field evaluated at the pole (its kernel argument <x, z_i> is the
    z-coordinate itself); longitudes are simply never materialized.
    """
    n, z, _ = _draw_count_and_z(nu_t, seed)
    return n, z


def _draw_count_and_z(nu_t: float, seed: int):
    if nu_t < 0:
        raise ValueError(f"nu_t must be >= 0, got {nu_t}")
    rng = np.random.Generator(np.random.PCG64(seed))
    n = int(rng.poisson(_FOUR_PI * nu_t))
    z = 2.0 * rng.random(n) - 1.0
    return n, z, rng
