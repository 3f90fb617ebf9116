"""Exact spherical cubature and the discretized needlet frame.

The rule is a Gauss-Legendre x uniform-longitude product grid: with
n_theta = ceil((L+1)/2) nodes in cos(theta) and n_phi = L+1 longitudes it
integrates every spherical polynomial of degree <= L exactly, which is what
all the oracles in this package lean on.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DegenerateRegimeError
from .harmonics import geodesic, legendre_series
from .scaling import snap_floor
from .weights import WeightSystem

_FOUR_PI = 4.0 * math.pi


@dataclass(frozen=True)
class CubatureRule:
    """Nodes (unit vectors), positive weights summing to 4 pi, exactness degree."""

    nodes: np.ndarray
    weights: np.ndarray
    exact_degree: int

    @property
    def count(self) -> int:
        return self.nodes.shape[0]

    def export_csv(self, path) -> None:
        """Write nodes/weights as theta, phi, weight rows."""
        _export_nodes_csv(self.nodes, self.weights, path)


def _export_nodes_csv(nodes: np.ndarray, weights: np.ndarray, path) -> None:
    from .harmonics import cart_to_sph

    theta, phi = cart_to_sph(nodes)
    with open(path, "w", encoding="ascii", newline="\n") as fh:
        fh.write("theta,phi,weight\n")
        for th, ph, w in zip(theta, phi, weights):
            fh.write(f"{th:.17g},{ph:.17g},{w:.17g}\n")


def gauss_legendre_sphere(degree: int) -> CubatureRule:
    """Product rule exact for spherical polynomials up to `degree`.

    n_theta Gauss-Legendre nodes in z = cos(theta) handle the polar part
    (exact to polynomial degree 2*n_theta - 1 >= degree) and L+1 equispaced
    longitudes kill every azimuthal mode up to order `degree`.
    """
    if degree < 0:
        raise ValueError(f"degree must be >= 0, got {degree}")
    n_theta = (degree + 2) // 2
    n_phi = degree + 1
    z, w = np.polynomial.legendre.leggauss(n_theta)
    phi = 2.0 * math.pi * np.arange(n_phi) / n_phi
    st = np.sqrt(1.0 - z**2)
    # theta-major ordering: node index k = i_theta * n_phi + i_phi
    nodes = np.empty((n_theta * n_phi, 3))
    nodes[:, 0] = np.outer(st, np.cos(phi)).ravel()
    nodes[:, 1] = np.outer(st, np.sin(phi)).ravel()
    nodes[:, 2] = np.repeat(z, n_phi)
    weights = np.repeat(w * (2.0 * math.pi / n_phi), n_phi)
    nodes.setflags(write=False)
    weights.setflags(write=False)
    return CubatureRule(nodes=nodes, weights=weights, exact_degree=degree)


def integrate(rule: CubatureRule, f) -> float:
    """Apply the rule to a batch integrand f: (K, 3) node array -> (K,) values."""
    values = np.asarray(f(rule.nodes), dtype=float)
    return float(rule.weights @ values)


@dataclass(frozen=True)
class NeedletFrame:
    """Cubature points, weights and per-needlet norms at a fixed level.

    norms_sq[k] = lambda_k * sum_l b_j(l)**2 (2l+1)/(4 pi) is the squared
    L2 norm of needlet k; it varies with k under the product rule, so the
    per-k values are stored and their spread is reported.
    """

    j: int
    points: np.ndarray
    weights: np.ndarray
    exact_degree: int
    norms_sq: np.ndarray
    sigma_j_sq: float
    coeffs1: np.ndarray = field(repr=False)  # b_j(l) * (2l+1)/(4 pi)

    @property
    def count(self) -> int:
        return self.points.shape[0]

    @property
    def central_index(self) -> int:
        """Deterministic default needlet: middle of the theta-major ordering,
        which sits near the equator where the rule weights are largest."""
        return self.count // 2

    def psi(self, k: int, x) -> np.ndarray:
        """Needlet value psi_{j,k}(x) = sqrt(lambda_k) sum_l b_j(l) Z_l(<x, xi_k>)."""
        if not 0 <= k < self.count:
            raise IndexError(f"needlet index {k} out of range [0, {self.count})")
        t = np.clip(np.asarray(x, float) @ self.points[k], -1.0, 1.0)
        return math.sqrt(self.weights[k]) * legendre_series(self.coeffs1, t)

    def psi_matrix(self, xs) -> np.ndarray:
        """Evaluation matrix R[i, k] = psi_{j,k}(x_i) for xs of shape (d, 3)."""
        xs = np.atleast_2d(np.asarray(xs, dtype=float))
        t = np.clip(xs @ self.points.T, -1.0, 1.0)
        return legendre_series(self.coeffs1, t) * np.sqrt(self.weights)

    def export_csv(self, path) -> None:
        """Write frame points/weights as theta, phi, weight rows."""
        _export_nodes_csv(self.points, self.weights, path)


def needlet_frame(ws: WeightSystem, j: int) -> NeedletFrame:
    """Frame at level j over the degree 2*floor(S_{j+1}) product rule, which
    integrates products of two band-limited needlets exactly."""
    band = ws.band(j)
    if band.size == 0:  # band_multipoles already raises; defensive
        raise DegenerateRegimeError(f"empty band at level {j}")
    rule = gauss_legendre_sphere(2 * snap_floor(ws.seq.centers[j + 1]))
    norm_factor = ws.spectral_sum(j, 2)
    norms_sq = rule.weights * norm_factor
    norms_sq.setflags(write=False)
    return NeedletFrame(
        j=j,
        points=rule.nodes,
        weights=rule.weights,
        exact_degree=rule.exact_degree,
        norms_sq=norms_sq,
        sigma_j_sq=ws.sigma_j_sq(j),
        coeffs1=ws.level_coeffs(j, 1),
    )


def separated_subset(frame_or_points, delta: float) -> np.ndarray:
    """Greedy farthest-point subset with pairwise geodesic distance >= delta.

    Starts from index 0 and repeatedly adds the point farthest from the
    current selection (ties resolved to the lowest index by argmax) while its
    separation still meets delta.  Deterministic given the point ordering.
    """
    if not 0.0 < delta <= math.pi:
        raise ValueError(f"delta must be in (0, pi], got {delta}")
    points = frame_or_points.points if hasattr(frame_or_points, "points") else frame_or_points
    points = np.asarray(points, dtype=float)
    n = points.shape[0]
    selected = [0]
    min_dist = geodesic(points, points[0])
    min_dist[0] = -1.0
    while True:
        k = int(np.argmax(min_dist))
        if min_dist[k] < delta:
            break
        selected.append(k)
        min_dist = np.minimum(min_dist, geodesic(points, points[k]))
        min_dist[k] = -1.0
    return np.asarray(selected, dtype=int)
