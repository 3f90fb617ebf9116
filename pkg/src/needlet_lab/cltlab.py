"""Empirical distances to Gaussianity, bound evaluators and experiments.

Smooth-test-function distances (d2/d3) are never estimated from samples;
their bound values are computed and the ingredients they control (cumulants,
covariances) are validated instead.  All randomness flows from a single
master seed through `poisson.derive_seed`; replication r always consumes
stream derive_seed(master, r) and the bootstrap consumes
derive_seed(master, reps), so outputs are invariant to worker scheduling.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .cubature import NeedletFrame, gauss_legendre_sphere, needlet_frame, separated_subset
from .errors import ConfigError, DegenerateRegimeError
from .field import (
    CovarianceMatrix,
    NormalizationConstants,
    coefficient_sd,
    covariance,
    exact_fourth_cumulant,
    expected_functional_moments,
    functional_norm_sq,
    normalization_constants,
)
from .harmonics import legendre_series
from .poisson import derive_seed, sample_poisson_field, sample_poisson_z
from .scaling import snap_floor
from .weights import WeightSystem

_FOUR_PI = 4.0 * math.pi
_SQRT2 = math.sqrt(2.0)

#: Universal Wasserstein prefactor of the fourth-moment bound.
C_TILDE = 1.0 / math.sqrt(2.0 * math.pi) + 2.0 / 3.0

EXPERIMENT_KINDS = (
    "coeff_1d_raw",
    "coeff_1d_normalized",
    "coeff_multi_raw",
    "coeff_multi_normalized",
    "fdd_1d",
    "fdd_multi",
    "functional_l2",
    "sobolev",
)

_SCALAR_KINDS = ("coeff_1d_raw", "coeff_1d_normalized", "fdd_1d")
_VECTOR_KINDS = ("coeff_multi_raw", "coeff_multi_normalized", "fdd_multi")
_FUNCTIONAL_KINDS = ("functional_l2", "sobolev")

#: Admissibility context of each experiment kind (None: rate is j-free).
RESOLUTION_CONTEXT = {
    "coeff_1d_raw": "coeff_1d",
    "coeff_1d_normalized": "coeff_1d",
    "coeff_multi_raw": "coeff_multi_raw",
    "coeff_multi_normalized": "coeff_multi_normalized",
    "fdd_1d": "fdd",
    "fdd_multi": "fdd",
    "functional_l2": None,
    "sobolev": "sobolev",
}

PRIMARY_BOUND = {
    "coeff_1d_raw": "wasserstein",
    "coeff_1d_normalized": "wasserstein",
    "fdd_1d": "wasserstein",
    "coeff_multi_raw": "d3",
    "coeff_multi_normalized": "d3",
    "fdd_multi": "d3",
    "functional_l2": "d3_theorem",
    "sobolev": "d3_theorem",
}


# ---------------------------------------------------------------------------
# standard normal utilities
# ---------------------------------------------------------------------------

_erfc_vec = np.vectorize(math.erfc, otypes=[float])


def norm_cdf(x) -> np.ndarray:
    """Standard normal CDF via the stdlib erfc (machine precision)."""
    x = np.asarray(x, dtype=float)
    return 0.5 * _erfc_vec(-x / _SQRT2)


_ACK_A = (-3.969683028665376e01, 2.209460984245205e02, -2.759285104469687e02,
          1.383577518672690e02, -3.066479806614716e01, 2.506628277459239e00)
_ACK_B = (-5.447609879822406e01, 1.615858368580409e02, -1.556989798598866e02,
          6.680131188771972e01, -1.328068155288572e01)
_ACK_C = (-7.784894002430293e-03, -3.223964580411365e-01, -2.400758277161838e00,
          -2.549732539343734e00, 4.374664141464968e00, 2.938163982698783e00)
_ACK_D = (7.784695709041462e-03, 3.224671290700398e-01, 2.445134137142996e00,
          3.754408661907416e00)


def norm_quantile(p) -> np.ndarray:
    """Standard normal quantile: Acklam's rational approximation followed by
    one Halley step against the erfc-based CDF.  Absolute error is at machine
    precision, far inside the 1e-9 reproducibility contract."""
    p = np.asarray(p, dtype=float)
    if np.any((p <= 0.0) | (p >= 1.0)):
        raise ValueError("norm_quantile needs p strictly inside (0, 1)")
    x = np.empty(p.shape)
    lo = p < 0.02425
    hi = p > 1.0 - 0.02425
    mid = ~(lo | hi)
    if np.any(mid):
        q = p[mid] - 0.5
        r = q * q
        num = ((((_ACK_A[0] * r + _ACK_A[1]) * r + _ACK_A[2]) * r + _ACK_A[3]) * r + _ACK_A[4]) * r + _ACK_A[5]
        den = ((((_ACK_B[0] * r + _ACK_B[1]) * r + _ACK_B[2]) * r + _ACK_B[3]) * r + _ACK_B[4]) * r + 1.0
        x[mid] = q * num / den
    for mask, sign in ((lo, 1.0), (hi, -1.0)):
        if np.any(mask):
            q = np.sqrt(-2.0 * np.log(np.where(sign > 0, p[mask], 1.0 - p[mask])))
            num = ((((_ACK_C[0] * q + _ACK_C[1]) * q + _ACK_C[2]) * q + _ACK_C[3]) * q + _ACK_C[4]) * q + _ACK_C[5]
            den = (((_ACK_D[0] * q + _ACK_D[1]) * q + _ACK_D[2]) * q + _ACK_D[3]) * q + 1.0
            x[mask] = sign * num / den
    err = norm_cdf(x) - p
    u = err * math.sqrt(2.0 * math.pi) * np.exp(x**2 / 2.0)
    x -= u / (1.0 + x * u / 2.0)
    return x


# ---------------------------------------------------------------------------
# empirical statistics
# ---------------------------------------------------------------------------

def empirical_distance(samples, target_sd: float, metric: str = "wasserstein") -> float:
    """Distance of a sample to N(0, target_sd**2).

    wasserstein: mean |X_(i) - sd * q((i-1/2)/n)| against the quantile grid.
    kolmogorov:  sup deviation of the ECDF from the target CDF.
    """
    samples = np.asarray(samples, dtype=float)
    n = samples.size
    if n < 100:
        raise ValueError(f"need at least 100 samples, got {n}")
    if not target_sd > 0:
        raise ValueError(f"target_sd must be > 0, got {target_sd}")
    xs = np.sort(samples)
    if metric == "wasserstein":
        grid = norm_quantile((np.arange(1, n + 1) - 0.5) / n)
        return float(np.mean(np.abs(xs - target_sd * grid)))
    if metric == "kolmogorov":
        cdf = norm_cdf(xs / target_sd)
        i = np.arange(1, n + 1)
        return float(max(np.max(i / n - cdf), np.max(cdf - (i - 1) / n)))
    raise ValueError(f"metric must be 'wasserstein' or 'kolmogorov', got {metric!r}")


def empirical_cumulants(samples) -> tuple[float, float, float, float]:
    """Unbiased k-statistics (k1, k2, k3, k4)."""
    x = np.asarray(samples, dtype=float)
    n = x.size
    if n < 8:
        raise ValueError(f"need at least 8 samples, got {n}")
    mean = float(x.mean())
    dev = x - mean
    m2 = float(np.mean(dev**2))
    m3 = float(np.mean(dev**3))
    m4 = float(np.mean(dev**4))
    k2 = n / (n - 1) * m2
    k3 = n**2 / ((n - 1) * (n - 2)) * m3
    k4 = n**2 * ((n + 1) * m4 - 3 * (n - 1) * m2**2) / ((n - 1) * (n - 2) * (n - 3))
    return mean, k2, k3, k4


def bootstrap_se(samples, stat, n_boot: int, seed: int) -> float:
    """Standard error of a statistic over seeded with-replacement resamples."""
    x = np.asarray(samples, dtype=float)
    rng = np.random.Generator(np.random.PCG64(seed))
    vals = np.empty(n_boot)
    for b in range(n_boot):
        vals[b] = stat(x[rng.integers(0, x.size, x.size)])
    return float(vals.std(ddof=1))


# ---------------------------------------------------------------------------
# bound evaluators
# ---------------------------------------------------------------------------

def kolmogorov_factor(q: float) -> float:
    """Prefactor 11 + sqrt(3 + q) + (3 + q)**(1/4) of the Kolmogorov-branch
    fourth-moment bound, with q the kind's squared rate."""
    return 11.0 + math.sqrt(3.0 + q) + (3.0 + q) ** 0.25


def b3_factor(d: int, trace: float, m2: float = 1.0, m3: float = 1.0) -> float:
    """sqrt(2d)/4 * M2 + (2/9) sqrt(d * trace) * M3."""
    return math.sqrt(2.0 * d) / 4.0 * m2 + 2.0 / 9.0 * math.sqrt(d * trace) * m3


def b2_factor(cov: CovarianceMatrix, m1: float = 1.0, m2: float = 1.0) -> float:
    """||C^-1/2||_op / sqrt(pi) * M1 + sqrt(2 pi)/6 ||C^-1/2||_op Tr(C) * M2.

    Requires a positive definite covariance.
    """
    eigs = cov.eigenvalues()
    if eigs[0] <= 0.0:
        raise ValueError(
            f"covariance not positive definite (min eigenvalue {eigs[0]:.3e}); "
            "the d2 bound is unavailable"
        )
    inv_sqrt_op = 1.0 / math.sqrt(float(eigs[0]))
    return inv_sqrt_op / math.sqrt(math.pi) * m1 + math.sqrt(2.0 * math.pi) / 6.0 * inv_sqrt_op * cov.trace * m2


def functional_bound_theorem(nu_t: float) -> float:
    """(1/4 + 4 sqrt(pi)) * sqrt(4 pi / nu_t)."""
    return (0.25 + 4.0 * math.sqrt(math.pi)) * math.sqrt(_FOUR_PI / nu_t)


def functional_bound_general(m2: float, m4: float, hs_sq: float) -> float:
    """(1/4 + sqrt(m2)/2) * sqrt(m4 - m2^2 - 2 hs_sq), the form whose
    fourth-moment deficit reduces to exactly 4 pi / nu_t in L2."""
    deficit = m4 - m2**2 - 2.0 * hs_sq
    return (0.25 + 0.5 * math.sqrt(m2)) * math.sqrt(max(deficit, 0.0))


@dataclass(frozen=True)
class BoundContext:
    """What a bound is evaluated for; covariance is required for the
    multivariate kinds and ignored elsewhere."""

    kind: str
    j: int
    nu_t: float
    d: int = 1
    alpha: float = 0.0
    k: int | None = None
    covariance: CovarianceMatrix | None = None

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(f"unknown bound kind {self.kind!r}")
        if self.kind in _VECTOR_KINDS and self.d < 2:
            raise ConfigError(f"{self.kind} needs dimension d >= 2, got {self.d}")
        if self.kind == "sobolev" and not self.alpha > 0:
            raise ConfigError("sobolev bounds need alpha > 0")
        if not self.nu_t > 0:
            raise ConfigError("nu_t must be > 0")


def theoretical_bounds(
    ctx: BoundContext,
    ws: WeightSystem,
    consts: NormalizationConstants | None = None,
    frame: NeedletFrame | None = None,
) -> dict[str, float]:
    """All bound values for a context, keyed by metric name.

    Test-function moduli are fixed at M1 = M2 = M3 = 1, the normalization of
    the distance definitions; every estimated constant comes from
    `NormalizationConstants`.
    """
    j, nu = ctx.j, ctx.nu_t
    s_j = float(ws.seq.centers[j])
    eps_j = float(ws.seq.shifts[j])
    out: dict[str, float] = {}
    if ctx.kind in _SCALAR_KINDS:
        if consts is None:
            frame = frame if frame is not None else needlet_frame(ws, j)
            consts = normalization_constants(ws, frame, ctx.k)
        zeta4 = consts.zeta["4"]
        if ctx.kind == "coeff_1d_raw":
            out["wasserstein"] = C_TILDE * consts.sigma_bar_sq**2 * zeta4**4 / (s_j * math.sqrt(nu))
        elif ctx.kind == "coeff_1d_normalized":
            rate_sq = s_j**2 * eps_j**2 / nu
            pref = zeta4**4 / consts.zeta["2"] ** 4
            out["wasserstein"] = C_TILDE * pref * math.sqrt(rate_sq)
            out["kolmogorov"] = kolmogorov_factor(rate_sq) * pref * math.sqrt(rate_sq)
        else:  # fdd_1d
            rate_sq = s_j**4 * eps_j**2 / nu
            pref = consts.zeta["inf"]
            out["wasserstein"] = C_TILDE * pref * math.sqrt(rate_sq)
            out["kolmogorov"] = kolmogorov_factor(rate_sq) * pref * math.sqrt(rate_sq)
    elif ctx.kind in _VECTOR_KINDS:
        cov = ctx.covariance
        if cov is None:
            raise ConfigError(f"{ctx.kind} bounds need the analytic covariance")
        if ctx.kind == "fdd_multi":
            rate = math.sqrt(s_j**4 * eps_j**2 / nu)
            out["d3"] = b3_factor(ctx.d, cov.trace) * ctx.d * rate
        else:
            rate = math.sqrt(s_j**2 / nu) if ctx.kind == "coeff_multi_raw" else math.sqrt(
                s_j**6 * eps_j**2 / nu
            )
            out["d3"] = b3_factor(ctx.d, cov.trace) * rate
            if cov.min_eigenvalue() > 0.0:
                out["d2"] = b2_factor(cov) * rate
    else:
        alpha = ctx.alpha if ctx.kind == "sobolev" else 0.0
        mom = expected_functional_moments(ws, j, nu, alpha)
        if ctx.kind == "functional_l2":
            out["d3_theorem"] = functional_bound_theorem(nu)
        else:
            out["d3_theorem"] = (
                2.0 * math.sqrt(math.pi) * ws.spectral_sum(j, 4, alpha)
                / (ws.sigma_j_sq(j) * math.sqrt(nu))
            )
        out["d3_general"] = functional_bound_general(mom.m2, mom.m4, mom.hs_sq)
    return out


def theoretical_bound(
    ctx: BoundContext,
    ws: WeightSystem,
    consts: NormalizationConstants | None = None,
    frame: NeedletFrame | None = None,
) -> float:
    """The context's primary bound value (Wasserstein branch for the
    one-dimensional kinds, d3 elsewhere)."""
    return theoretical_bounds(ctx, ws, consts, frame)[PRIMARY_BOUND[ctx.kind]]


# ---------------------------------------------------------------------------
# deterministic replication machinery
# ---------------------------------------------------------------------------

def resolve_workers() -> int:
    """Worker count from the NEEDLET_LAB_THREADS environment variable,
    default 1.  Results are invariant to this value; it only trades wall
    time, and on GIL-bound small-array workloads 1 is usually fastest."""
    env = os.environ.get("NEEDLET_LAB_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"NEEDLET_LAB_THREADS must be an integer, got {env!r}") from None
    return 1


def map_replications(reps: int, fn, workers: int | None = None) -> np.ndarray:
    """Evaluate fn(r) for r = 0..reps-1 into a preallocated index-ordered
    array.  Chunks run on a thread pool; each slot is written exactly once,
    so the result does not depend on scheduling."""
    if reps < 1:
        raise ValueError("reps must be >= 1")
    workers = resolve_workers() if workers is None else max(1, workers)
    first = np.asarray(fn(0), dtype=float)
    out = np.empty((reps,) + first.shape)
    out[0] = first

    def run_range(lo: int, hi: int) -> None:
        for r in range(lo, hi):
            out[r] = fn(r)

    if workers == 1 or reps <= 2:
        run_range(1, reps)
        return out
    chunk = max(32, -(-(reps - 1) // (workers * 4)))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        futures = [
            pool.submit(run_range, lo, min(lo + chunk, reps))
            for lo in range(1, reps, chunk)
        ]
        for fut in futures:
            fut.result()
    return out


# ---------------------------------------------------------------------------
# experiments
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ExperimentConfig:
    kind: str
    j: int
    nu_t: float
    reps: int
    seed: int
    d: int = 5
    alpha: float = 1.0
    slack: float = 1.0
    delta: float | None = None
    coeff_index: int | None = None
    n_boot: int = 200

    def __post_init__(self):
        if self.kind not in EXPERIMENT_KINDS:
            raise ConfigError(
                f"unknown experiment kind {self.kind!r}; expected one of {EXPERIMENT_KINDS}"
            )
        if self.reps < 8:
            raise ConfigError(f"reps must be >= 8, got {self.reps}")
        if not self.nu_t > 0:
            raise ConfigError(f"nu_t must be > 0, got {self.nu_t}")


@dataclass
class CltReport:
    """One experiment's empirical statistics, oracle values, bounds, flags.

    Wall time is kept on the object for logs but never serialized; reports
    must be byte-identical across reruns and worker counts.
    """

    context: dict
    seed: int
    reps: int
    empirical: dict
    oracle: dict
    bounds: dict
    flags: dict
    wall_time_s: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        return {
            "context": self.context,
            "seed": self.seed,
            "reps": self.reps,
            "empirical": self.empirical,
            "oracle": self.oracle,
            "bounds": self.bounds,
            "flags": self.flags,
        }


def _admissible_level(ws: WeightSystem, cfg: ExperimentConfig) -> int | None:
    context = RESOLUTION_CONTEXT[cfg.kind]
    if context is None:
        return None
    alpha = cfg.alpha if context == "sobolev" else None
    try:
        return ws.seq.max_resolution(cfg.nu_t, context, cfg.slack, alpha)
    except DegenerateRegimeError:
        return 0


def _context_dict(cfg: ExperimentConfig, admissible: int | None, extra: dict) -> dict:
    ctx = {
        "kind": cfg.kind,
        "j": cfg.j,
        "nu_t": cfg.nu_t,
        "d": cfg.d if cfg.kind in _VECTOR_KINDS else None,
        "alpha": cfg.alpha if cfg.kind == "sobolev" else None,
        "slack": cfg.slack,
        "delta": cfg.delta,
        "coeff_index": None,
        "admissible_j_max": admissible,
    }
    ctx.update(extra)
    return ctx


def _run_scalar(ws: WeightSystem, cfg: ExperimentConfig):
    j, nu = cfg.j, cfg.nu_t
    frame = needlet_frame(ws, j)
    k = cfg.coeff_index if cfg.coeff_index is not None else frame.central_index
    consts = normalization_constants(ws, frame, k)
    if cfg.kind == "fdd_1d":
        # evaluation at the pole: the kernel argument is the z-coordinate,
        # so the z-only sampler (bit-identical stream prefix) suffices
        coeffs = ws.level_coeffs(j, 2)
        scale = math.sqrt(nu) * math.sqrt(ws.sigma_j_sq(j))
        cum4_exact = exact_fourth_cumulant(ws, j, nu, x=np.array([0.0, 0.0, 1.0]))
        target_sd = 1.0

        def stat(r: int) -> float:
            n, z = sample_poisson_z(nu, derive_seed(cfg.seed, r))
            if n == 0:
                return 0.0
            return float(legendre_series(coeffs, z).sum() / scale)

    else:
        mode = "raw" if cfg.kind == "coeff_1d_raw" else "normalized"
        cum4_exact = exact_fourth_cumulant(ws, j, nu, frame=frame, k=k, mode=mode)
        target_sd = float(coefficient_sd(frame, mode)[k])
        xi = frame.points[k]
        amp = math.sqrt(frame.weights[k])
        coeffs1 = frame.coeffs1
        denom = math.sqrt(nu) * (
            math.sqrt(frame.sigma_j_sq) if mode == "raw" else math.sqrt(frame.norms_sq[k])
        )

        def stat(r: int) -> float:
            s = sample_poisson_field(nu, derive_seed(cfg.seed, r))
            if s.count == 0:
                return 0.0
            t = np.clip(s.points @ xi, -1.0, 1.0)
            return float(amp * legendre_series(coeffs1, t).sum() / denom)

    samples = map_replications(cfg.reps, stat)
    mean, k2, k3, k4 = empirical_cumulants(samples)
    d_w = empirical_distance(samples, target_sd, "wasserstein")
    d_kol = empirical_distance(samples, target_sd, "kolmogorov")
    grid = norm_quantile((np.arange(1, cfg.reps + 1) - 0.5) / cfg.reps)
    boot_seed = derive_seed(cfg.seed, cfg.reps)
    d_w_se = bootstrap_se(
        samples,
        lambda s: float(np.mean(np.abs(np.sort(s) - target_sd * grid))),
        cfg.n_boot,
        boot_seed,
    )
    k4_se = bootstrap_se(samples, lambda s: empirical_cumulants(s)[3], cfg.n_boot, boot_seed)
    bctx = BoundContext(kind=cfg.kind, j=j, nu_t=nu, k=k)
    bounds = theoretical_bounds(bctx, ws, consts)
    primary = bounds[PRIMARY_BOUND[cfg.kind]]
    empirical = {
        "mean": mean,
        "variance": k2,
        "cum3": k3,
        "cum4": k4,
        "d_w": d_w,
        "d_w_se": d_w_se,
        "d_kol": d_kol,
        "cum4_se": k4_se,
        "target_sd": target_sd,
    }
    oracle = {
        "cum4_exact": cum4_exact,
        "var_exact": target_sd**2,
        "constants": consts.as_dict(),
    }
    flags = {
        "d_w_within_bound": bool(d_w <= primary + 3.0 * d_w_se),
        "cum4_within_4se": bool(abs(k4 - cum4_exact) <= 4.0 * k4_se),
        "mean_within_3se": bool(abs(mean) <= 3.0 * math.sqrt(k2 / cfg.reps)),
    }
    extra = {"coeff_index": None if cfg.kind == "fdd_1d" else k}
    return empirical, oracle, bounds, flags, extra


def _run_vector(ws: WeightSystem, cfg: ExperimentConfig):
    j, nu, d = cfg.j, cfg.nu_t, cfg.d
    if d < 2:
        raise ConfigError(f"{cfg.kind} needs d >= 2, got {d}")
    frame = needlet_frame(ws, j)
    delta = cfg.delta if cfg.delta is not None else ws.seq.sigma_loc(j) ** -0.5
    subset = separated_subset(frame, delta)
    if subset.size < d:
        raise DegenerateRegimeError(
            f"only {subset.size} frame points at separation {delta:.4g}; need d={d}"
        )
    indices = subset[:d]
    if cfg.kind == "fdd_multi":
        xs = frame.points[indices]
        analytic = covariance(ws, j, "field_points", points=xs)
        coeffs = ws.level_coeffs(j, 2)
        scale = math.sqrt(nu) * math.sqrt(ws.sigma_j_sq(j))
        cum4_exact = [exact_fourth_cumulant(ws, j, nu)] * d  # rotation invariant

        def stat(r: int) -> np.ndarray:
            s = sample_poisson_field(nu, derive_seed(cfg.seed, r))
            if s.count == 0:
                return np.zeros(d)
            t = np.clip(xs @ s.points.T, -1.0, 1.0)
            return legendre_series(coeffs, t).sum(axis=-1) / scale

    else:
        mode = "raw" if cfg.kind == "coeff_multi_raw" else "normalized"
        flavor = "coeff_raw" if mode == "raw" else "coeff_normalized"
        analytic = covariance(ws, j, flavor, frame=frame, indices=indices)
        cum4_exact = [
            exact_fourth_cumulant(ws, j, nu, frame=frame, k=int(k), mode=mode)
            for k in indices
        ]
        xi = frame.points[indices]
        amp = np.sqrt(frame.weights[indices])
        coeffs1 = frame.coeffs1
        denom = math.sqrt(nu) * (
            math.sqrt(frame.sigma_j_sq) * np.ones(d)
            if mode == "raw"
            else np.sqrt(frame.norms_sq[indices])
        )

        def stat(r: int) -> np.ndarray:
            s = sample_poisson_field(nu, derive_seed(cfg.seed, r))
            if s.count == 0:
                return np.zeros(d)
            t = np.clip(xi @ s.points.T, -1.0, 1.0)
            return amp * legendre_series(coeffs1, t).sum(axis=-1) / denom

    draws = map_replications(cfg.reps, stat)
    emp_cov = np.cov(draws, rowvar=False, ddof=1)
    diff = emp_cov - analytic.entries
    fro_abs = float(np.linalg.norm(diff))
    fro_rel = fro_abs / float(np.linalg.norm(analytic.entries))
    comp_cum4 = [empirical_cumulants(draws[:, i])[3] for i in range(d)]
    bctx = BoundContext(kind=cfg.kind, j=j, nu_t=nu, d=d, covariance=analytic)
    bounds = theoretical_bounds(bctx, ws)
    cov_tol = 5.0 * d / math.sqrt(cfg.reps)
    empirical = {
        "cov_error_fro": fro_abs,
        "cov_error_rel": fro_rel,
        "component_means": [float(draws[:, i].mean()) for i in range(d)],
        "component_variances": [float(draws[:, i].var(ddof=1)) for i in range(d)],
        "component_cum4": comp_cum4,
    }
    oracle = {
        "covariance": [[float(v) for v in row] for row in analytic.entries],
        "trace": analytic.trace,
        "min_eigenvalue": analytic.min_eigenvalue(),
        "cum4_exact": cum4_exact,
    }
    flags = {
        "cov_within_tolerance": bool(fro_abs < cov_tol),
        "covariance_psd": bool(analytic.min_eigenvalue() >= -1e-10),
        "cum4_exact_positive": bool(all(v > 0 for v in cum4_exact)),
    }
    extra = {"delta": delta, "indices": [int(i) for i in indices]}
    return empirical, oracle, bounds, flags, extra


def _run_functional(ws: WeightSystem, cfg: ExperimentConfig):
    j, nu = cfg.j, cfg.nu_t
    alpha = cfg.alpha if cfg.kind == "sobolev" else 0.0
    mom = expected_functional_moments(ws, j, nu, alpha)
    if cfg.kind == "functional_l2":
        rule = gauss_legendre_sphere(2 * snap_floor(ws.seq.centers[j + 1]))

        def stat(r: int) -> float:
            s = sample_poisson_field(nu, derive_seed(cfg.seed, r))
            return functional_norm_sq(ws, j, s, kind="l2", rule=rule)

    else:

        def stat(r: int) -> float:
            s = sample_poisson_field(nu, derive_seed(cfg.seed, r))
            return functional_norm_sq(ws, j, s, kind="sobolev", alpha=alpha)

    samples = map_replications(cfg.reps, stat)
    mean = float(samples.mean())
    var = float(samples.var(ddof=1))
    mean_sq = float(np.mean(samples**2))
    se_mean = math.sqrt(var / cfg.reps)
    se_sq = float(np.std(samples**2, ddof=1)) / math.sqrt(cfg.reps)
    bctx = BoundContext(kind=cfg.kind, j=j, nu_t=nu, alpha=alpha)
    bounds = theoretical_bounds(bctx, ws)
    identity_target = _FOUR_PI / nu
    residual = mom.identity_residual
    empirical = {
        "norm_sq_mean": mean,
        "norm_sq_variance": var,
        "norm_sq_mean_sq": mean_sq,
        "norm_sq_mean_se": se_mean,
        "norm_sq_mean_sq_se": se_sq,
    }
    oracle = {
        "m2": mom.m2,
        "m4": mom.m4,
        "hs_sq": mom.hs_sq,
        "identity_residual": residual,
        "four_pi_over_nu": identity_target,
    }
    flags = {
        "mean_within_3se": bool(abs(mean - mom.m2) <= 3.0 * se_mean),
        "mean_sq_within_4se": bool(abs(mean_sq - mom.m4) <= 4.0 * se_sq),
        "identity_exact": bool(
            abs(residual - identity_target) <= 1e-10 * identity_target
        ),
    }
    return empirical, oracle, bounds, flags, {}


def run_experiment(ws: WeightSystem, cfg: ExperimentConfig) -> CltReport:
    """Run one seeded experiment and assemble its report.

    An inadmissible level (per the regime tables) is recorded in the context,
    not rejected; over-threshold runs are informative.
    """
    start = time.perf_counter()
    if not 1 <= cfg.j <= ws.j_max:
        raise ConfigError(f"level j={cfg.j} outside [1, {ws.j_max}]")
    admissible = _admissible_level(ws, cfg)
    if cfg.kind in _SCALAR_KINDS:
        runner = _run_scalar
    elif cfg.kind in _VECTOR_KINDS:
        runner = _run_vector
    else:
        assert cfg.kind in _FUNCTIONAL_KINDS
        runner = _run_functional
    empirical, oracle, bounds, flags, extra = runner(ws, cfg)
    return CltReport(
        context=_context_dict(cfg, admissible, extra),
        seed=cfg.seed,
        reps=cfg.reps,
        empirical=empirical,
        oracle=oracle,
        bounds=bounds,
        flags=flags,
        wall_time_s=time.perf_counter() - start,
    )
