"""The Poisson needlet field, its coefficients and exact moment identities.

The field at level j over a Poisson sample {z_i} is

    Psi(x) = (sqrt(nu_t) sigma_j)^-1 sum_i Phi_j(x, z_i),

a first-chaos Poisson integral (the band excludes degree 0, so compensation
is a no-op in law).  That structure makes every cumulant of order >= 2 an
integral of a kernel power, which is what the exact oracles below compute
through band-exact cubature.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .cubature import CubatureRule, NeedletFrame, gauss_legendre_sphere
from .harmonics import geodesic, legendre_series
from .poisson import PoissonSample
from .scaling import snap_floor
from .weights import WeightSystem

_FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class FieldRealization:
    """Field values at evaluation points for one Poisson sample."""

    j: int
    nu_t: float
    points: np.ndarray
    values: np.ndarray
    coefficients: np.ndarray | None = None

    def export_csv(self, path) -> None:
        from .harmonics import cart_to_sph

        theta, phi = cart_to_sph(self.points)
        with open(path, "w", encoding="ascii", newline="\n") as fh:
            fh.write("point_id,theta,phi,value\n")
            for i, (th, ph, v) in enumerate(zip(theta, phi, self.values)):
                fh.write(f"{i},{th:.17g},{ph:.17g},{v:.17g}\n")


def eval_field(ws: WeightSystem, j: int, sample: PoissonSample, xs) -> np.ndarray:
    """Psi(x) at each row of xs; zero everywhere for an empty sample."""
    if sample.nu_t <= 0:
        raise ValueError("field normalization needs nu_t > 0")
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    if sample.count == 0:
        return np.zeros(xs.shape[0])
    scale = 1.0 / (math.sqrt(sample.nu_t) * math.sqrt(ws.sigma_j_sq(j)))
    t = np.clip(xs @ sample.points.T, -1.0, 1.0)
    return scale * legendre_series(ws.level_coeffs(j, 2), t).sum(axis=-1)


def realize_field(ws, j, sample, xs, frame: NeedletFrame | None = None) -> FieldRealization:
    xs = np.atleast_2d(np.asarray(xs, dtype=float))
    coeffs = coefficients(frame, sample, mode="raw") if frame is not None else None
    return FieldRealization(
        j=j, nu_t=sample.nu_t, points=xs, values=eval_field(ws, j, sample, xs),
        coefficients=coeffs,
    )


def coefficients(frame: NeedletFrame, sample: PoissonSample, mode: str = "raw") -> np.ndarray:
    """Full coefficient vector over the frame.

    raw:        beta_k = (sqrt(nu_t) sigma_j)^-1 sum_i psi_k(z_i)
    normalized: beta_k = (sqrt(nu_t) ||psi_k||_2)^-1 sum_i psi_k(z_i)
    """
    _check_mode(mode)
    if sample.nu_t <= 0:
        raise ValueError("coefficient normalization needs nu_t > 0")
    if sample.count == 0:
        return np.zeros(frame.count)
    sums = frame.psi_matrix(sample.points).sum(axis=0)
    return sums / _coeff_scale(frame, sample, mode)


def coefficient_at(frame: NeedletFrame, sample: PoissonSample, k: int, mode: str = "raw") -> float:
    """Single coefficient; fast path for replication loops."""
    _check_mode(mode)
    if sample.nu_t <= 0:
        raise ValueError("coefficient normalization needs nu_t > 0")
    if sample.count == 0:
        return 0.0
    return float(frame.psi(k, sample.points).sum() / _coeff_scale(frame, sample, mode)[k])


def _check_mode(mode: str) -> None:
    if mode not in ("raw", "normalized"):
        raise ValueError(f"mode must be 'raw' or 'normalized', got {mode!r}")


def _coeff_scale(frame: NeedletFrame, sample: PoissonSample, mode: str) -> np.ndarray:
    root_nu = math.sqrt(sample.nu_t)
    if mode == "raw":
        return np.full(frame.count, root_nu * math.sqrt(frame.sigma_j_sq))
    return root_nu * np.sqrt(frame.norms_sq)


def coefficient_sd(frame: NeedletFrame, mode: str) -> np.ndarray:
    """Analytic standard deviation of each coefficient: ||psi_k||_2 / sigma_j
    for raw mode, exactly 1 for normalized mode."""
    _check_mode(mode)
    if mode == "raw":
        return np.sqrt(frame.norms_sq / frame.sigma_j_sq)
    return np.ones(frame.count)


@dataclass(frozen=True)
class CovarianceMatrix:
    """Analytic covariance with its flavor tag."""

    entries: np.ndarray
    flavor: str

    @property
    def dimension(self) -> int:
        return self.entries.shape[0]

    @property
    def trace(self) -> float:
        return float(np.trace(self.entries))

    def eigenvalues(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.entries)

    def min_eigenvalue(self) -> float:
        return float(self.eigenvalues()[0])


def covariance(
    ws: WeightSystem,
    j: int,
    flavor: str,
    points=None,
    frame: NeedletFrame | None = None,
    indices=None,
) -> CovarianceMatrix:
    """Analytic covariance in one of three flavors.

    field_points:      Gamma(i1,i2) = sigma_j^-2 sum_l b^4(l) Z_l(<x_i1, x_i2>)
    coeff_raw:         Upsilon(k1,k2) = sigma_j^-2 sqrt(l_k1 l_k2) sum_l b^2 Z_l(<xi_k1, xi_k2>)
    coeff_normalized:  same kernel sum scaled by the per-needlet norms instead.
    """
    if flavor == "field_points":
        if points is None:
            raise ValueError("field_points covariance needs evaluation points")
        xs = np.atleast_2d(np.asarray(points, dtype=float))
        _reject_duplicates(xs)
        t = np.clip(xs @ xs.T, -1.0, 1.0)
        entries = legendre_series(ws.level_coeffs(j, 4), t) / ws.sigma_j_sq(j)
    elif flavor in ("coeff_raw", "coeff_normalized"):
        if frame is None or indices is None:
            raise ValueError("coefficient covariance needs frame and indices")
        idx = np.asarray(indices, dtype=int)
        xi = frame.points[idx]
        _reject_duplicates(xi)
        t = np.clip(xi @ xi.T, -1.0, 1.0)
        kern = legendre_series(ws.level_coeffs(j, 2), t)
        if flavor == "coeff_raw":
            lam = frame.weights[idx]
            entries = np.sqrt(np.outer(lam, lam)) * kern / ws.sigma_j_sq(j)
        else:
            lam = frame.weights[idx]
            norms = np.sqrt(frame.norms_sq[idx])
            entries = np.sqrt(np.outer(lam, lam)) * kern / np.outer(norms, norms)
    else:
        raise ValueError(f"unknown covariance flavor {flavor!r}")
    return CovarianceMatrix(entries=entries, flavor=flavor)


def _reject_duplicates(points: np.ndarray) -> None:
    d = points.shape[0]
    if d < 2:
        return
    g = geodesic(points[:, None, :], points[None, :, :])
    off = g[~np.eye(d, dtype=bool)]
    if np.any(off <= 0.0):
        raise ValueError("duplicate evaluation points make the covariance singular")


def evaluation_matrix(frame: NeedletFrame, xs) -> np.ndarray:
    """R[i, k] = psi_{j,k}(x_i)."""
    return frame.psi_matrix(xs)


def reconstruct(frame: NeedletFrame, coeffs, xs) -> np.ndarray:
    """sum_k coeffs[k] psi_{j,k}(x); with raw coefficients of a sample this
    reproduces eval_field exactly, by cubature exactness of the frame rule."""
    return frame.psi_matrix(xs) @ np.asarray(coeffs, dtype=float)


def fourth_moment_rule(ws: WeightSystem, j: int) -> CubatureRule:
    """Rule integrating fourth powers of level-j band-limited functions exactly."""
    return gauss_legendre_sphere(4 * snap_floor(ws.seq.centers[j + 1]))


def exact_fourth_cumulant(
    ws: WeightSystem,
    j: int,
    nu_t: float,
    x=None,
    frame: NeedletFrame | None = None,
    k: int | None = None,
    mode: str = "raw",
    rule: CubatureRule | None = None,
) -> float:
    """Exact cum_4 of the field at a point (default) or of one coefficient.

    field:             (nu_t sigma_j^4)^-1 integral Phi_j(x, .)^4
    coefficient raw:   (nu_t sigma_j^4)^-1 integral psi_k^4
    coefficient norm.: (nu_t ||psi_k||^4)^-1 integral psi_k^4

    First-chaos cumulants of order >= 2 are plain kernel-power integrals, so
    these are identities, not approximations.
    """
    if nu_t <= 0:
        raise ValueError("nu_t must be > 0")
    needed = 4 * snap_floor(ws.seq.centers[j + 1])
    if rule is None:
        rule = gauss_legendre_sphere(needed)
    elif rule.exact_degree < needed:
        raise ValueError(
            f"cubature degree {rule.exact_degree} below required {needed}"
        )
    sigma_sq = ws.sigma_j_sq(j)
    if frame is None:
        x = np.asarray(x if x is not None else [0.0, 0.0, 1.0], dtype=float)
        t = np.clip(rule.nodes @ x, -1.0, 1.0)
        vals = legendre_series(ws.level_coeffs(j, 2), t)
        quartic = float(rule.weights @ vals**4)
        return quartic / (nu_t * sigma_sq**2)
    _check_mode(mode)
    if k is None:
        k = frame.central_index
    vals = frame.psi(k, rule.nodes)
    quartic = float(rule.weights @ vals**4)
    denom = sigma_sq**2 if mode == "raw" else float(frame.norms_sq[k]) ** 2
    return quartic / (nu_t * denom)


def functional_norm_sq(
    ws: WeightSystem,
    j: int,
    sample: PoissonSample,
    kind: str = "l2",
    alpha: float = 0.0,
    rule: CubatureRule | None = None,
) -> float:
    """Squared functional norm of one realization.

    kind='l2' integrates Psi**2 with a rule of degree >= 2 floor(S_{j+1}).
    kind='sobolev' uses the pairwise per-degree decomposition

        E_l = b_j(l)**4 / (nu_t sigma_j^2) * sum_{i,i'} Z_l(<z_i, z_i'>)

    weighted by (1 + sqrt(l(l+1)))**(2 alpha); at alpha = 0 the two kinds
    compute the same quantity along independent routes.
    """
    if sample.nu_t <= 0:
        raise ValueError("nu_t must be > 0")
    if sample.count == 0:
        return 0.0
    if kind == "l2":
        needed = 2 * snap_floor(ws.seq.centers[j + 1])
        if rule is None:
            rule = gauss_legendre_sphere(needed)
        elif rule.exact_degree < needed:
            raise ValueError(
                f"cubature degree {rule.exact_degree} below required {needed}"
            )
        vals = eval_field(ws, j, sample, rule.nodes)
        return float(rule.weights @ vals**2)
    if kind != "sobolev":
        raise ValueError(f"kind must be 'l2' or 'sobolev', got {kind!r}")
    if alpha < 0:
        raise ValueError("alpha must be >= 0")
    band = ws.band(j)
    btab = ws.b_table(j)
    gram = np.clip(sample.points @ sample.points.T, -1.0, 1.0)
    # running recurrence keeps memory at O(N^2) instead of O(N^2 * band)
    scale = 1.0 / (sample.nu_t * ws.sigma_j_sq(j))
    p_prev = np.ones_like(gram)
    p_cur = gram
    pair_sums = np.empty(band[-1] + 1)
    pair_sums[0] = float(p_prev.sum())
    if band[-1] >= 1:
        pair_sums[1] = float(p_cur.sum())
    for ell in range(1, band[-1]):
        p_next = (2.0 * ell + 1.0) / (ell + 1.0) * gram * p_cur - ell / (ell + 1.0) * p_prev
        pair_sums[ell + 1] = float(p_next.sum())
        p_prev, p_cur = p_cur, p_next
    total = 0.0
    for ell in band:
        z_weight = (2.0 * ell + 1.0) / _FOUR_PI
        energy = btab[ell] ** 4 * scale * z_weight * pair_sums[ell]
        total += (1.0 + math.sqrt(ell * (ell + 1.0))) ** (2.0 * alpha) * energy
    return total


@dataclass(frozen=True)
class FunctionalMoments:
    """Exact functional moments: E||Psi||^2, E||Psi||^4 and the squared
    Hilbert-Schmidt norm of the covariance operator."""

    m2: float
    m4: float
    hs_sq: float

    @property
    def identity_residual(self) -> float:
        """m4 - m2^2 - 2 hs_sq, which equals 4 pi / nu_t exactly at alpha=0."""
        return self.m4 - self.m2**2 - 2.0 * self.hs_sq


def expected_functional_moments(
    ws: WeightSystem, j: int, nu_t: float, alpha: float = 0.0
) -> FunctionalMoments:
    """Closed-form moments in L2 (alpha=0) or the alpha-weighted Sobolev space.

    m2    = 4 pi ss(4, alpha) / sigma_j^2                  (= 4 pi at alpha=0)
    m4    = (4 pi/nu_t) (ss(4,alpha)/sigma_j^2)^2 + m2^2
            + (8 pi/sigma_j^4) ss(8, 2 alpha)
    hs_sq = (4 pi/sigma_j^4) ss(8, alpha)
    """
    if nu_t <= 0:
        raise ValueError("nu_t must be > 0")
    sigma_sq = ws.sigma_j_sq(j)
    ss4 = ws.spectral_sum(j, 4, alpha)
    ss8_dbl = ws.spectral_sum(j, 8, 2.0 * alpha)
    ss8 = ws.spectral_sum(j, 8, alpha)
    m2 = _FOUR_PI * ss4 / sigma_sq
    hs_sq = _FOUR_PI * ss8 / sigma_sq**2
    m4 = (_FOUR_PI / nu_t) * (ss4 / sigma_sq) ** 2 + m2**2 + 2.0 * (_FOUR_PI * ss8_dbl / sigma_sq**2)
    return FunctionalMoments(m2=m2, m4=m4, hs_sq=hs_sq)


@dataclass(frozen=True)
class NormalizationConstants:
    """Estimated constants feeding the theoretical bounds.

    zeta[q] estimates the L^q norm constant ||psi_k||_q / Sigma_j^(1-2/q);
    q=2 and q=4 come from exact cubature, q=3 from the same rule applied to
    the non-polynomial |psi|^3 (reported only), q='inf' from the center value
    psi_k(xi_k), which is the exact sup.
    """

    j: int
    k: int
    sigma_j_sq: float
    cb: float
    sigma_bar_sq: float
    zeta: dict
    norms_sq_min: float
    norms_sq_max: float

    def as_dict(self) -> dict:
        return {
            "j": self.j,
            "k": self.k,
            "sigma_j_sq": self.sigma_j_sq,
            "cb": self.cb,
            "sigma_bar_sq": self.sigma_bar_sq,
            "zeta": dict(self.zeta),
            "norms_sq_spread": [self.norms_sq_min, self.norms_sq_max],
        }


def normalization_constants(
    ws: WeightSystem, frame: NeedletFrame, k: int | None = None
) -> NormalizationConstants:
    if k is None:
        k = frame.central_index
    j = frame.j
    sig_loc = ws.seq.sigma_loc(j)
    rule = fourth_moment_rule(ws, j)
    vals = frame.psi(k, rule.nodes)
    int_abs3 = float(rule.weights @ np.abs(vals) ** 3)
    int_4 = float(rule.weights @ vals**4)
    norm2 = math.sqrt(float(frame.norms_sq[k]))
    sup = float(frame.psi(k, frame.points[k]))
    cb = ws.cb_estimate()
    zeta = {
        "2": norm2,
        "3": int_abs3 ** (1.0 / 3.0) / sig_loc ** (1.0 / 3.0),
        "4": int_4**0.25 / math.sqrt(sig_loc),
        "inf": sup / sig_loc,
    }
    return NormalizationConstants(
        j=j,
        k=k,
        sigma_j_sq=ws.sigma_j_sq(j),
        cb=cb,
        sigma_bar_sq=math.pi / cb * float(frame.norms_sq[k]),
        zeta=zeta,
        norms_sq_min=float(frame.norms_sq.min()),
        norms_sq_max=float(frame.norms_sq.max()),
    )


def export_moments_json(moments: FunctionalMoments, nu_t: float, path) -> None:
    payload = {
        "m2": moments.m2,
        "m4": moments.m4,
        "hs_sq": moments.hs_sq,
        "identity_residual": moments.identity_residual,
        "four_pi_over_nu": _FOUR_PI / nu_t,
    }
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        json.dump(payload, fh, indent=2)
        fh.write("\n")
