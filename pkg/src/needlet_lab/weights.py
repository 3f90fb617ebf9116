"""Smooth spectral bump weights b_j and banded spectral sums.

Each level j carries a C-infinity bump b_j supported on [S_{j-1}, S_{j+1}]
with b_j(S_j) = 1, built from the classic exp(-1/v) smooth step.  Adjacent
squared bumps sum to one on their overlap by construction, which yields an
exact partition of unity sum_j b_j(u)**2 = 1 on [S_1, S_{j_max}].
"""
from __future__ import annotations

import math

import numpy as np

from .scaling import ScaleSequence, snap_ceil, snap_floor

_FOUR_PI = 4.0 * math.pi


def _bump(v: np.ndarray) -> np.ndarray:
    out = np.zeros_like(v)
    pos = v > 0
    out[pos] = np.exp(-1.0 / v[pos])
    return out


def smooth_step(v) -> np.ndarray:
    """C-infinity step F with F(v)=0 for v<=0, F(v)=1 for v>=1 and
    F(v) = h(v)/(h(v)+h(1-v)), h(v)=exp(-1/v), strictly increasing between.
    F(v) + F(1-v) = 1, so overlapping bump halves sum to one exactly."""
    v = np.asarray(v, dtype=float)
    a = _bump(v)
    b = _bump(1.0 - v)
    out = np.zeros(v.shape)
    inside = (v > 0.0) & (v < 1.0)
    out[inside] = a[inside] / (a[inside] + b[inside])
    out[v >= 1.0] = 1.0
    return out


class WeightSystem:
    """Family {b_j : 1 <= j <= j_max} over a built center sequence.

    Immutable after construction; per-level integer-degree tables and kernel
    coefficient arrays are precomputed so concurrent readers never mutate.
    """

    def __init__(self, seq: ScaleSequence):
        if seq.j_max < 2:
            raise ValueError("weight system needs j_max >= 2")
        self.seq = seq
        self._lmax = {}
        self._b_table = {}  # level -> b_j(l) for l = 0..lmax_j
        self._coeffs = {}   # (level, power) -> b_j(l)**power * (2l+1)/(4 pi)
        for j in range(1, seq.j_max + 1):
            lmax = snap_floor(seq.centers[j + 1])
            ells = np.arange(lmax + 1)
            tab = self.eval_b(j, ells)
            tab.setflags(write=False)
            self._lmax[j] = lmax
            self._b_table[j] = tab

    @property
    def j_max(self) -> int:
        return self.seq.j_max

    def support(self, j: int) -> tuple[float, float, float]:
        c = self.seq.centers
        return float(c[j - 1]), float(c[j]), float(c[j + 1])

    def level_lmax(self, j: int) -> int:
        return self._lmax[j]

    def band(self, j: int) -> np.ndarray:
        return self.seq.band_multipoles(j)

    def eval_b_squared(self, j: int, u) -> np.ndarray:
        """b_j(u)**2, exactly zero outside the open support (S_{j-1}, S_{j+1}).

        The falling half is the mirrored step F((hi-u)/(hi-mid)) rather than
        1 - F((u-mid)/(hi-mid)); the two are identical in exact arithmetic and
        the mirrored form underflows gracefully near the upper endpoint.
        """
        lo, mid, hi = self.support(j)
        u = np.asarray(u, dtype=float)
        out = np.zeros(u.shape)
        rising = (u > lo) & (u <= mid)
        out[rising] = smooth_step((u[rising] - lo) / (mid - lo))
        falling = (u > mid) & (u < hi)
        out[falling] = smooth_step((hi - u[falling]) / (hi - mid))
        return out

    def eval_b(self, j: int, u) -> np.ndarray:
        return np.sqrt(self.eval_b_squared(j, u))

    def b_table(self, j: int) -> np.ndarray:
        """b_j at integer degrees 0..level_lmax(j)."""
        return self._b_table[j]

    def level_coeffs(self, j: int, power: int) -> np.ndarray:
        """b_j(l)**power * (2l+1)/(4 pi) for l = 0..level_lmax(j).

        power=2 gives the kernel coefficients, power=1 the needlet ones.
        """
        key = (j, power)
        arr = self._coeffs.get(key)
        if arr is None:
            tab = self._b_table[j]
            ells = np.arange(tab.size)
            arr = tab**power * (2.0 * ells + 1.0) / _FOUR_PI
            arr.setflags(write=False)
            self._coeffs[key] = arr
        return arr

    def spectral_sum(self, j: int, n: int, alpha: float = 0.0) -> float:
        """sum_l b_j(l)**n (2l+1)/(4 pi) (1+sqrt(l(l+1)))**(2 alpha) over the band."""
        if n not in (2, 4, 8):
            raise ValueError(f"spectral_sum power n must be 2, 4 or 8, got {n}")
        if alpha < 0:
            raise ValueError(f"alpha must be >= 0, got {alpha}")
        ells = self.band(j).astype(float)
        b = self._b_table[j][self.band(j)]
        w = (2.0 * ells + 1.0) / _FOUR_PI
        if alpha > 0:
            w = w * (1.0 + np.sqrt(ells * (ells + 1.0))) ** (2.0 * alpha)
        return float(np.sum(b**n * w))

    def sigma_j_sq(self, j: int) -> float:
        """Field normalization sigma_j**2 = spectral_sum(j, 4)."""
        return self.spectral_sum(j, 4)

    def partition_residual(self) -> float:
        """max over covered integer degrees of |sum_j b_j(l)**2 - 1|."""
        lo = snap_ceil(self.seq.centers[1])
        hi = snap_floor(self.seq.centers[self.j_max - 1])
        if lo > hi:  # no integer degree in the covered range (tiny j_max)
            return 0.0
        ells = np.arange(lo, hi + 1, dtype=float)
        total = np.zeros(ells.shape)
        for j in range(1, self.j_max + 1):
            total += self.eval_b_squared(j, ells)
        return float(np.max(np.abs(total - 1.0)))

    def cb_ratios(self) -> np.ndarray:
        """r_j = sigma_j**2 * pi / (S_j**2 eps_j); stabilizes at the bump
        constant as j grows."""
        seq = self.seq
        out = np.empty(self.j_max + 1)
        out[0] = np.nan
        for j in range(1, self.j_max + 1):
            out[j] = self.sigma_j_sq(j) * math.pi / (seq.centers[j] ** 2 * seq.shifts[j])
        return out

    def cb_estimate(self) -> float:
        """Stabilized value of cb_ratios at the top level."""
        return float(self.cb_ratios()[self.j_max])

    def diagnostics(self) -> dict:
        ratios = self.cb_ratios()
        levels = []
        for j in range(1, self.j_max + 1):
            band = self.band(j)
            levels.append(
                {
                    "j": j,
                    "band": [int(band[0]), int(band[-1])],
                    "sigma_j_sq": self.sigma_j_sq(j),
                    "cb_ratio": float(ratios[j]),
                }
            )
        return {
            "partition_residual": self.partition_residual(),
            "cb_estimate": self.cb_estimate(),
            "levels": levels,
        }


def build_weight_system(seq: ScaleSequence) -> WeightSystem:
    return WeightSystem(seq)
