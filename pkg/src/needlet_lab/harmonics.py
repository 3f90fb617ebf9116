"""Legendre evaluation, band-limited kernels and great-circle geometry.

Everything is phrased through the rotation-invariant projector
Z_l(x, y) = (2l+1)/(4 pi) P_l(<x, y>), so complex spherical harmonics are
never needed.  The hot path is `legendre_series`, a single pass of the
three-term recurrence accumulating a banded coefficient sum over many
inner-product values at once.
"""
from __future__ import annotations

import math

import numpy as np

from .scaling import ScaleSequence
from .weights import WeightSystem


def sph_to_cart(theta, phi) -> np.ndarray:
    """Unit vectors from colatitude/longitude; output shape (..., 3)."""
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    st = np.sin(theta)
    return np.stack([st * np.cos(phi), st * np.sin(phi), np.cos(theta)], axis=-1)


def cart_to_sph(points) -> tuple[np.ndarray, np.ndarray]:
    p = np.asarray(points, dtype=float)
    theta = np.arccos(np.clip(p[..., 2], -1.0, 1.0))
    phi = np.mod(np.arctan2(p[..., 1], p[..., 0]), 2.0 * math.pi)
    return theta, phi


def geodesic(x, y) -> np.ndarray:
    """Great-circle distance arccos(<x, y>), inner product clamped to [-1, 1]."""
    t = np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1)
    return np.arccos(np.clip(t, -1.0, 1.0))


def legendre_series(coeffs, t) -> np.ndarray:
    """sum_l coeffs[l] * P_l(t) via the three-term recurrence, vectorized in t.

    coeffs covers degrees 0..L contiguously (zeros where a band is absent).
    """
    coeffs = np.asarray(coeffs, dtype=float)
    t = np.asarray(t, dtype=float)
    out = np.full(t.shape, coeffs[0])
    if coeffs.size == 1:
        return out
    p_prev = np.ones(t.shape)
    p_cur = t.copy()
    out += coeffs[1] * p_cur
    for ell in range(1, coeffs.size - 1):
        p_next = (2.0 * ell + 1.0) / (ell + 1.0) * t * p_cur - ell / (ell + 1.0) * p_prev
        out += coeffs[ell + 1] * p_next
        p_prev, p_cur = p_cur, p_next
    return out


def legendre_p(ell: int, t) -> np.ndarray:
    """Legendre polynomial P_ell(t) for |t| <= 1."""
    if ell < 0:
        raise ValueError(f"degree must be >= 0, got {ell}")
    t = np.asarray(t, dtype=float)
    if np.any(np.abs(t) > 1.0 + 1e-12):
        raise ValueError("legendre_p requires |t| <= 1")
    coeffs = np.zeros(ell + 1)
    coeffs[ell] = 1.0
    return legendre_series(coeffs, np.clip(t, -1.0, 1.0))


def legendre_table(lmax: int, t) -> np.ndarray:
    """P_l(t) for all l = 0..lmax, stacked along the first axis."""
    t = np.asarray(t, dtype=float)
    out = np.empty((lmax + 1,) + t.shape)
    out[0] = 1.0
    if lmax == 0:
        return out
    out[1] = t
    for ell in range(1, lmax):
        out[ell + 1] = (2.0 * ell + 1.0) / (ell + 1.0) * t * out[ell] - ell / (ell + 1.0) * out[ell - 1]
    return out


def kernel_phi(ws: WeightSystem, j: int, x, y) -> np.ndarray:
    """Band-limited kernel Phi_j(x, y) = sum_l b_j(l)**2 Z_l(<x, y>).

    x and y broadcast against each other on all but the last axis; pass
    x[:, None, :], y[None, :, :] for a full cross product.
    """
    t = np.sum(np.asarray(x, float) * np.asarray(y, float), axis=-1)
    return legendre_series(ws.level_coeffs(j, 2), np.clip(t, -1.0, 1.0))


def kernel_sup(ws: WeightSystem, j: int) -> float:
    """Phi_j(x, x), the kernel maximum (P_l(1) = 1 for every degree)."""
    return ws.spectral_sum(j, 2)


def localization_envelope(
    seq: ScaleSequence, j: int, M: int, d, mode: str, fitted_constant: float
) -> np.ndarray:
    """Decay envelope const / (1 + Sigma_j d)**M at geodesic distance d.

    mode='kernel' carries the band-area factor S_{j+1}**2 - S_{j-1}**2,
    mode='needlet' the single-needlet factor 4 * Sigma_j.  The constant is a
    fitted, reported quantity, never an assumed one.
    """
    if fitted_constant <= 0:
        raise ValueError("fitted_constant must be > 0")
    if M < 1:
        raise ValueError(f"envelope power M must be >= 1, got {M}")
    d = np.asarray(d, dtype=float)
    sig = seq.sigma_loc(j)
    if mode == "kernel":
        lead = fitted_constant * (seq.centers[j + 1] ** 2 - seq.centers[j - 1] ** 2)
    elif mode == "needlet":
        lead = 4.0 * fitted_constant * sig
    else:
        raise ValueError(f"mode must be 'kernel' or 'needlet', got {mode!r}")
    return lead / (1.0 + sig * d) ** M
