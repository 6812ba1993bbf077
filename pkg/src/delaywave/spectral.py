"""Spectral discretization of the Dirichlet Laplacian on an interval.

The spatial operator is -d^2/dx^2 on (0, L) with homogeneous Dirichlet
boundary conditions, represented in its truncated eigenbasis

    e_k(x) = sqrt(2/L) sin(k pi x / L),   lambda_k = (k pi / L)^2.

Fields are stored as modal coefficient vectors; pointwise operations
(region masks, the power nonlinearity) happen on a uniform quadrature
grid and are projected back onto the first N modes.
"""

from __future__ import annotations

import numpy as np

__all__ = ["SpectralModel", "build_model", "validate_region"]


def validate_region(region, length):
    """Normalize a region (list of (lo, hi) intervals) and check it fits in [0, L]."""
    intervals = []
    for item in region:
        lo, hi = float(item[0]), float(item[1])
        if not (0.0 <= lo < hi <= length):
            raise ValueError(
                f"region interval ({lo}, {hi}) must satisfy 0 <= lo < hi <= L={length}"
            )
        intervals.append((lo, hi))
    return tuple(intervals)


class SpectralModel:
    """Immutable spatial problem: eigenpairs, quadrature, region masks.

    Parameters
    ----------
    length : float
        Domain length L > 0.
    modes : int
        Number of retained eigenmodes N >= 1.
    quad_points : int
        Number of quadrature nodes (endpoints included); must be >= 4*N.
    damping_region, delay_region : sequence of (lo, hi)
        Finite unions of subintervals of (0, L) carrying the frictional
        damping and the delayed feedback respectively.
    damping_coefficient : float
        Nonnegative coefficient a of the frictional damping.
    """

    def __init__(self, length, modes, quad_points, damping_region, delay_region,
                 damping_coefficient):
        if length <= 0:
            raise ValueError("domain length must be positive")
        if modes < 1:
            raise ValueError("need at least one mode")
        if quad_points < 4 * modes:
            raise ValueError(
                f"quad_points={quad_points} too small; need at least 4*N={4 * modes}"
            )
        if damping_coefficient < 0:
            raise ValueError("damping coefficient must be nonnegative")

        self.length = float(length)
        self.n_modes = int(modes)
        self.n_quad = int(quad_points)
        self.damping_coefficient = float(damping_coefficient)
        self.damping_region = validate_region(damping_region, self.length)
        self.delay_region = validate_region(delay_region, self.length)

        k = np.arange(1, self.n_modes + 1)
        self.eigenvalues = (k * np.pi / self.length) ** 2
        self.sqrt_eigenvalues = np.sqrt(self.eigenvalues)

        self.x = np.linspace(0.0, self.length, self.n_quad)
        dx = self.x[1] - self.x[0]
        w = np.full(self.n_quad, dx)
        w[0] = w[-1] = dx / 2.0
        self.weights = w

        # eigenfunction matrix: (n_quad, n_modes)
        self.basis = np.sqrt(2.0 / self.length) * np.sin(
            np.outer(self.x, k * np.pi / self.length)
        )
        # projection matrix: coeffs = proj @ grid_values
        self.proj = (self.basis * w[:, None]).T

        self.damping_mask = self._indicator(self.damping_region)
        self.delay_mask = self._indicator(self.delay_region)

    def _indicator(self, intervals):
        mask = np.zeros(self.n_quad)
        for lo, hi in intervals:
            mask[(self.x >= lo - 1e-14) & (self.x <= hi + 1e-14)] = 1.0
        return mask

    # --- transforms -------------------------------------------------

    def to_grid(self, coeffs):
        return self.basis @ coeffs

    def from_grid(self, values):
        return self.proj @ values

    # --- norms ------------------------------------------------------

    def h_norm(self, coeffs):
        """L^2(0, L) norm of the band-limited field (Parseval)."""
        return float(np.sqrt(np.dot(coeffs, coeffs)))

    def a_half_norm(self, coeffs):
        """H^1_0 seminorm: sqrt(sum lambda_k c_k^2)."""
        return float(np.sqrt(np.dot(self.eigenvalues, coeffs * coeffs)))

    def grid_norm(self, values):
        """Quadrature L^2 norm of grid values."""
        return float(np.sqrt(np.dot(self.weights, values * values)))

    def grid_norm_sq(self, values):
        return float(np.dot(self.weights, values * values))

    def state_norm(self, u, v):
        """Energy-space norm ||(u, v)|| = sqrt(||A^1/2 u||^2 + ||v||^2)."""
        return float(np.sqrt(np.dot(self.eigenvalues, u * u) + np.dot(v, v)))

    # --- region operators -------------------------------------------

    def mask_apply(self, region, coeffs):
        """Multiply by the region indicator on the grid and re-project.

        ``region`` is either "damping", "delay", or an explicit mask array.
        """
        mask = self._resolve_mask(region)
        return self.proj @ (mask * (self.basis @ coeffs))

    def _resolve_mask(self, region):
        if isinstance(region, str):
            if region == "damping":
                return self.damping_mask
            if region == "delay":
                return self.delay_mask
            raise ValueError(f"unknown region name {region!r}")
        return np.asarray(region)

    def region_measure(self, region):
        mask = self._resolve_mask(region)
        return float(np.dot(self.weights, mask))

    def norm_b(self):
        """Operator norm of the delay-region restriction/extension pair.

        The indicator construction has unit norm whenever the region is
        nonempty, zero otherwise.
        """
        return 1.0 if self.delay_region else 0.0


def build_model(length, modes, quad_points, damping_region, delay_region,
                damping_coefficient):
    """Construct a :class:`SpectralModel`; see the class for argument docs."""
    return SpectralModel(length, modes, quad_points, damping_region,
                         delay_region, damping_coefficient)
