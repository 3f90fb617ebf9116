"""Center sequences with flexible bandwidth.

A needlet system is driven by a strictly increasing sequence of band centers
S_0 < S_1 < ...; level j owns the spectral band [S_{j-1}, S_{j+1}].  In the
shrinking regime the relative growth eps_j = gamma(j)/j**p tends to zero, so
bands narrow relative to their centers while the localization scale
Sigma_j = eps_j * S_j still diverges.  Two constructors are supported:

* ``recursive``:   S_j = S_{j-1} * (1 + eps_j), exact dilation identity.
* ``closed_form``: S_j = s0 * exp(gamma(j) * j**(1-p) / (1-p)) for p < 1,
  and S_j = s0 * exp(gamma(j) * log j) at p = 1.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, DegenerateRegimeError

GAMMA_KINDS = ("constant", "log_power", "critical", "tabulated")
CONSTRUCTORS = ("recursive", "closed_form")

# Exponent e in the admissibility condition S_j**e <= c * nu_t; the sobolev
# context uses e = 4 * alpha.
RESOLUTION_EXPONENTS = {
    "coeff_1d": 2.0,
    "coeff_multi_raw": 4.0,
    "coeff_multi_normalized": 10.0,
    "fdd": 4.0,
}

# Relative slack when comparing float center values against integer or
# admissibility boundaries, so exact-boundary cases survive rounding drift.
_SNAP = 1e-9


def snap_floor(x: float) -> int:
    return math.floor(x + _SNAP * max(1.0, abs(x)))


def snap_ceil(x: float) -> int:
    return math.ceil(x - _SNAP * max(1.0, abs(x)))


def resolution_exponent(context: str, alpha: float | None = None) -> float:
    if context == "sobolev":
        if alpha is None or alpha <= 0:
            raise ConfigError("sobolev context needs alpha > 0")
        return 4.0 * alpha
    try:
        return RESOLUTION_EXPONENTS[context]
    except KeyError:
        raise ConfigError(
            f"unknown resolution context {context!r}; expected one of "
            f"{sorted(RESOLUTION_EXPONENTS)} or 'sobolev'"
        ) from None


@dataclass(frozen=True)
class GammaSpec:
    """Slowly varying factor gamma(j) of the shift eps_j = gamma(j)/j**p.

    Kinds:
      constant    gamma(j) = value, value > 0
      log_power   gamma(j) = (1 + log j)**value
      critical    gamma(j) = value / (1 + log j), value > 1
      tabulated   gamma(j) = table[j-1], all entries > 0

    The log offset keeps gamma strictly positive and finite at j = 1 while
    preserving the asymptotic (log j)**a and eta/log j behaviour.
    """

    kind: str
    value: float = 1.0
    table: tuple[float, ...] = ()

    def __post_init__(self):
        if self.kind not in GAMMA_KINDS:
            raise ConfigError(f"gamma kind must be one of {GAMMA_KINDS}, got {self.kind!r}")
        if self.kind == "constant" and not self.value > 0:
            raise ConfigError(f"constant gamma needs value > 0, got {self.value}")
        if self.kind == "critical" and not self.value > 1:
            raise ConfigError(f"critical gamma needs value > 1, got {self.value}")
        if self.kind == "tabulated":
            if len(self.table) == 0:
                raise ConfigError("tabulated gamma needs at least one value")
            if any(not (v > 0 and math.isfinite(v)) for v in self.table):
                raise ConfigError("tabulated gamma values must be positive and finite")

    @classmethod
    def constant(cls, c: float) -> "GammaSpec":
        return cls("constant", value=float(c))

    @classmethod
    def log_power(cls, a: float) -> "GammaSpec":
        return cls("log_power", value=float(a))

    @classmethod
    def critical(cls, eta: float) -> "GammaSpec":
        return cls("critical", value=float(eta))

    @classmethod
    def tabulated(cls, values) -> "GammaSpec":
        return cls("tabulated", table=tuple(float(v) for v in values))

    def __call__(self, j: int) -> float:
        if j < 1:
            raise ValueError(f"gamma is defined for j >= 1, got {j}")
        if self.kind == "constant":
            return self.value
        if self.kind == "log_power":
            return (1.0 + math.log(j)) ** self.value
        if self.kind == "critical":
            return self.value / (1.0 + math.log(j))
        if j > len(self.table):
            raise ConfigError(
                f"tabulated gamma has {len(self.table)} entries, needs j={j}"
            )
        return self.table[j - 1]

    def describe(self) -> dict:
        out = {"kind": self.kind}
        if self.kind == "tabulated":
            out["table"] = list(self.table)
        else:
            out["value"] = self.value
        return out


@dataclass(frozen=True)
class ScaleParams:
    """Parameters of a center sequence."""

    p: float
    gamma: GammaSpec
    s0: float = 2.0
    constructor: str = "recursive"
    j_max: int = 8

    def __post_init__(self):
        if not (0.0 < self.p <= 1.0):
            raise ConfigError(f"p must be in (0, 1], got {self.p}")
        if not self.s0 >= 1.0:
            raise ConfigError(f"s0 must be >= 1, got {self.s0}")
        if self.j_max < 2:
            raise ConfigError(f"j_max must be >= 2, got {self.j_max}")
        if self.constructor not in CONSTRUCTORS:
            raise ConfigError(
                f"constructor must be one of {CONSTRUCTORS}, got {self.constructor!r}"
            )


@dataclass(frozen=True)
class ScaleSequence:
    """Built center sequence plus derived arrays.

    centers[j]   = S_j             for j = 0 .. j_max+1
    shifts[j]    = eps_j           for j = 1 .. j_max+1  (shifts[0] is nan)
    dilations[j] = S_j / S_{j-1}   for j = 1 .. j_max+1  (dilations[0] is nan)
    loc[j]       = eps_j * S_j     for j = 1 .. j_max+1  (loc[0] is nan)

    Under the recursive constructor dilations[j] - 1 == shifts[j] exactly.
    """

    params: ScaleParams
    centers: np.ndarray
    shifts: np.ndarray
    dilations: np.ndarray
    loc: np.ndarray

    @property
    def j_max(self) -> int:
        return self.params.j_max

    def _check_level(self, j: int, top: int) -> None:
        if not 1 <= j <= top:
            raise ValueError(f"level j={j} out of range [1, {top}]")

    def shift(self, j: int) -> float:
        """eps_j = gamma(j)/j**p."""
        self._check_level(j, self.j_max + 1)
        return float(self.shifts[j])

    def dilation(self, j: int) -> float:
        """S_j / S_{j-1}, the factor carrying the band across level j."""
        self._check_level(j, self.j_max + 1)
        return float(self.dilations[j])

    def sigma_loc(self, j: int) -> float:
        """Localization scale Sigma_j = eps_j * S_j from the stored arrays."""
        self._check_level(j, self.j_max + 1)
        return float(self.loc[j])

    def sigma_loc_table(self, j: int) -> float | None:
        """Closed-form regime value of the localization scale, where one is
        defined; differs from the definitional product by factors of j in the
        p = 1 regimes.  Reported in diagnostics alongside sigma_loc."""
        self._check_level(j, self.j_max + 1)
        p, gamma = self.params.p, self.params.gamma
        if p < 1.0:
            return gamma(j) / j**p * math.exp(gamma(j) * j ** (1.0 - p) / (1.0 - p))
        if gamma.kind == "critical":
            eta = gamma.value
            return eta * (1.0 + math.log(j)) ** (eta - 1.0)
        return gamma(j) * math.exp(math.log(j) * gamma(j))

    def band_multipoles(self, j: int) -> np.ndarray:
        """Integer multipoles in [S_{j-1}, S_{j+1}].  Endpoint degrees carry
        zero weight; callers may keep or skip them."""
        self._check_level(j, self.j_max)
        lo = snap_ceil(self.centers[j - 1])
        hi = snap_floor(self.centers[j + 1])
        if lo > hi:
            raise DegenerateRegimeError(
                f"band ({self.centers[j - 1]:.6g}, {self.centers[j + 1]:.6g}) at level "
                f"j={j} contains no integer multipole; increase s0 or slow gamma down"
            )
        return np.arange(max(lo, 0), hi + 1)

    def max_resolution(
        self, nu_t: float, context: str, c: float = 1.0, alpha: float | None = None
    ) -> int:
        """Largest j <= j_max with S_j**e <= c * nu_t for the context exponent e."""
        if not nu_t > 0:
            raise ConfigError(f"nu_t must be > 0, got {nu_t}")
        if not (0.0 < c <= 1.0):
            raise ConfigError(f"slack c must be in (0, 1], got {c}")
        e = resolution_exponent(context, alpha)
        limit = c * nu_t * (1.0 + _SNAP)
        best = 0
        for j in range(1, self.j_max + 1):
            if self.centers[j] ** e <= limit:
                best = j
        if best == 0:
            raise DegenerateRegimeError(
                f"no admissible level: S_1**{e:g} = {self.centers[1] ** e:.6g} "
                f"already exceeds c*nu_t = {c * nu_t:.6g}"
            )
        return best

    def diagnostics(self) -> dict:
        """JSON-ready arrays of S_j, eps_j, h_j, Sigma_j plus regime flags."""
        top = self.j_max + 1
        return {
            "params": {
                "p": self.params.p,
                "gamma": self.params.gamma.describe(),
                "s0": self.params.s0,
                "constructor": self.params.constructor,
                "j_max": self.params.j_max,
            },
            "centers": [float(v) for v in self.centers],
            "shifts": [float(v) for v in self.shifts[1:]],
            "dilations": [float(v) for v in self.dilations[1:]],
            "loc": [float(v) for v in self.loc[1:]],
            "loc_table": [self.sigma_loc_table(j) for j in range(1, top + 1)],
            # Sigma_j -> 0 means the spatial decay scale collapses: flag it.
            "loc_degenerate": bool(self.loc[top] < self.loc[1]),
        }


def _closed_form_centers(params: ScaleParams, eps: np.ndarray) -> np.ndarray:
    p, gamma, s0 = params.p, params.gamma, params.s0
    top = params.j_max + 1
    if p == 1.0 and gamma.kind == "critical":
        raise DegenerateRegimeError(
            "closed_form with p=1 and critical gamma eta/log j gives a bounded, "
            "nearly constant center sequence; use the recursive constructor"
        )
    centers = np.empty(top + 1)
    if p < 1.0:
        centers[0] = s0
        for j in range(1, top + 1):
            centers[j] = s0 * math.exp(gamma(j) * j ** (1.0 - p) / (1.0 - p))
    else:
        # The p=1 formula vanishes at j=0; backfill S_0 so the first dilation
        # keeps the exact identity S_1 = S_0 * (1 + eps_1).
        for j in range(1, top + 1):
            centers[j] = s0 * math.exp(gamma(j) * math.log(j))
        centers[0] = centers[1] / (1.0 + eps[1])
    if np.any(np.diff(centers) <= 0):
        raise DegenerateRegimeError(
            f"closed_form centers are not strictly increasing for p={p} and "
            f"gamma kind {gamma.kind!r}; use the recursive constructor"
        )
    return centers


def build_scale_sequence(params: ScaleParams) -> ScaleSequence:
    """Build the center sequence S_0..S_{j_max+1} and derived arrays."""
    top = params.j_max + 1
    eps = np.empty(top + 1)
    eps[0] = np.nan
    for j in range(1, top + 1):
        g = params.gamma(j)
        if not (g > 0 and math.isfinite(g)):
            raise ConfigError(f"gamma({j}) = {g} is not strictly positive and finite")
        eps[j] = g / j**params.p

    if params.constructor == "recursive":
        centers = np.empty(top + 1)
        centers[0] = params.s0
        for j in range(1, top + 1):
            centers[j] = centers[j - 1] * (1.0 + eps[j])
    else:
        centers = _closed_form_centers(params, eps)

    dil = np.empty(top + 1)
    dil[0] = np.nan
    dil[1:] = centers[1:] / centers[:-1]
    loc = np.empty(top + 1)
    loc[0] = np.nan
    loc[1:] = eps[1:] * centers[1:]

    for arr in (centers, eps, dil, loc):
        arr.setflags(write=False)
    return ScaleSequence(params=params, centers=centers, shifts=eps, dilations=dil, loc=loc)
