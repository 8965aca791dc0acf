"""Angular-domain dictionaries and the wide-spacing ambiguity structure.

A spacing-d array only resolves virtual angles modulo 1/spacing, so its
dictionary grid spans one period [-1, -1 + 1/spacing) and every true angle
maps onto an ambiguity set of aliases inside (-1, 1).
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from isac_sim.array_channel import steering_vector


def dirichlet_kernel(x, count):
    """sin(count*x/2) / (count*sin(x/2)), continuously extended at x = 2k*pi."""
    x = np.asarray(x, dtype=float)
    half = x / 2.0
    den = count * np.sin(half)
    on_peak = np.isclose(np.abs(np.sin(half)), 0.0, atol=1e-12)
    safe = np.where(on_peak, 1.0, den)
    val = np.sin(count * half) / safe
    k = np.round(x / (2.0 * np.pi)).astype(int)
    peak = np.where(k * (count - 1) % 2 == 0, 1.0, -1.0)
    return np.where(on_peak, peak, val)


def correlation_profile(mu_true, alpha_grid, count, spacing):
    """|a(alpha)^H a(mu_true)| over a grid of probe angles.

    Equals the magnitude Dirichlet kernel at 2*pi*spacing*(alpha - mu), so it
    is periodic with period 1/spacing and has nulls at mu + k/(count*spacing)
    for k not divisible by count.
    """
    alpha = np.asarray(alpha_grid, dtype=float)
    return np.abs(dirichlet_kernel(2.0 * np.pi * spacing * (alpha - mu_true), count))


def ambiguity_set(mu, spacing):
    """Sorted aliases {mu + k/spacing} strictly inside (-1, 1)."""
    period = 1.0 / spacing
    k_lo = int(np.ceil((-1.0 - mu) / period))
    k_hi = int(np.floor((1.0 - mu) / period))
    vals = [mu + k * period for k in range(k_lo, k_hi + 1)]
    return np.array(sorted(v for v in vals if -1.0 < v < 1.0))


@dataclass(frozen=True)
class Dictionary:
    """Kron-structured angular dictionary for one array.

    matrix columns are upa responses on the grid, elevation index fastest:
    column (gx*g_y + gy) pairs grid_x[gx] with grid_y[gy].
    """

    matrix: np.ndarray
    grid_x: np.ndarray
    grid_y: np.ndarray
    geometry: object

    @property
    def spacing(self):
        return self.geometry.spacing

    @property
    def g_x(self):
        return self.grid_x.size

    @property
    def g_y(self):
        return self.grid_y.size


def build_dictionary(geometry, g_x, g_y=1):
    """Angular dictionary with g_x * g_y columns covering one alias period.

    Grid point g sits at -1 + g/(G*spacing); at critical sampling
    (g_x == n_x, spacing 0.5) the azimuth block is unitary.
    """
    if g_x < geometry.n_x or g_y < geometry.n_y:
        raise ValueError("dictionary smaller than the array is not allowed")
    step_x = 1.0 / (geometry.spacing * g_x)
    step_y = 1.0 / (geometry.spacing * g_y)
    grid_x = -1.0 + step_x * np.arange(g_x)
    grid_y = -1.0 + step_y * np.arange(g_y)
    ax = np.stack([steering_vector(m, geometry.n_x, geometry.spacing)
                   for m in grid_x], axis=1)
    ay = np.stack([steering_vector(m, geometry.n_y, geometry.spacing)
                   for m in grid_y], axis=1)
    return Dictionary(np.kron(ax, ay), grid_x, grid_y, geometry)


def angular_transform(h, rx_dict, tx_dict, ridge=0.0):
    """Angular-domain coefficients H_a with h ~ A_rx @ H_a @ A_tx^H.

    Unitary dictionaries invert exactly; redundant ones go through a ridge
    least-squares fit (diagnostic use only).
    """
    a_r, a_t = rx_dict.matrix, tx_dict.matrix

    def pinv_apply(a, m, side):
        n, g = a.shape
        if g == n and ridge == 0.0:
            return a.conj().T @ m if side == "left" else m @ a
        gram = a.conj().T @ a + ridge * np.eye(g)
        if side == "left":
            return np.linalg.solve(gram, a.conj().T @ m)
        return np.linalg.solve(gram.T, (m @ a).T).T

    return pinv_apply(a_t, pinv_apply(a_r, h, "left"), "right")
