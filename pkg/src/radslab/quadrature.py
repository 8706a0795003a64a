"""Gauss-Legendre / Gauss-Lobatto rules and the orthonormal cell basis.

Nodes come from Newton iterations on the Legendre recurrences with
Chebyshev-point seeds and a 1e-15 convergence tolerance, so repeated calls
are bit-stable. Rules are cached by (kind, order).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np


def legendre_table(x, n_max: int) -> np.ndarray:
    """P_0..P_n_max evaluated at x, shape (len(x), n_max+1).

    Bonnet recurrence: (j+1) P_{j+1} = (2j+1) x P_j - j P_{j-1}.
    """
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = np.zeros((x.size, n_max + 1))
    V[:, 0] = 1.0
    if n_max >= 1:
        V[:, 1] = x
    for j in range(1, n_max):
        V[:, j + 1] = ((2 * j + 1) * x * V[:, j] - j * V[:, j - 1]) / (j + 1)
    return V


def legendre_deriv_table(x, n_max: int) -> np.ndarray:
    """P'_0..P'_n_max at x via (1-x^2) P'_n = n (P_{n-1} - x P_n)."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    V = legendre_table(x, n_max)
    D = np.zeros_like(V)
    interior = np.abs(x) < 1.0
    for n in range(1, n_max + 1):
        D[interior, n] = n * (V[interior, n - 1] - x[interior] * V[interior, n]) \
            / (1.0 - x[interior] ** 2)
        # endpoint limit P'_n(+-1) = (+-1)^{n-1} n(n+1)/2
        D[~interior, n] = np.sign(x[~interior]) ** (n - 1) * n * (n + 1) / 2.0
    return D


@dataclass(frozen=True)
class QuadratureSet:
    kind: str
    order: int
    nodes: np.ndarray
    weights: np.ndarray


@lru_cache(maxsize=None)
def gauss_legendre(n: int) -> QuadratureSet:
    """n-point Gauss-Legendre rule on [-1, 1] (exact through degree 2n-1)."""
    if n < 1:
        raise ValueError("gauss_legendre requires n >= 1")
    if n == 1:
        return QuadratureSet("gauss_legendre", 1, np.zeros(1), np.full(1, 2.0))
    # Chebyshev seeds for the roots of P_n, then Newton
    k = np.arange(n)
    x = -np.cos(np.pi * (k + 0.75) / (n + 0.5))
    for _ in range(100):
        V = legendre_table(x, n)
        dP = n * (x * V[:, n] - V[:, n - 1]) / (x**2 - 1.0)
        dx = V[:, n] / dP
        x = x - dx
        if np.max(np.abs(dx)) < 1e-15:
            break
    V = legendre_table(x, n)
    dP = n * (x * V[:, n] - V[:, n - 1]) / (x**2 - 1.0)
    w = 2.0 / ((1.0 - x**2) * dP**2)
    return QuadratureSet("gauss_legendre", n, x, w)


@lru_cache(maxsize=None)
def gauss_lobatto(n: int) -> QuadratureSet:
    """n-point Gauss-Lobatto rule on [-1, 1], endpoints included.

    Interior nodes are the roots of P'_{n-1}; exact through degree 2n-3.
    """
    if n < 2:
        raise ValueError("gauss_lobatto requires n >= 2")
    if n == 2:
        x = np.array([-1.0, 1.0])
    else:
        # Chebyshev-Lobatto seeds; fixed point of x P_{n-1} - P_{n-2} = 0,
        # equivalent to P'_{n-1}(x) = 0 away from the endpoints
        x = -np.cos(np.pi * np.arange(n) / (n - 1))
        for _ in range(100):
            V = legendre_table(x, n - 1)
            dx = (x * V[:, n - 1] - V[:, n - 2]) / (n * V[:, n - 1])
            x = x - dx
            if np.max(np.abs(dx)) < 1e-15:
                break
        x[0], x[-1] = -1.0, 1.0
    V = legendre_table(x, n - 1)
    w = 2.0 / (n * (n - 1) * V[:, n - 1] ** 2)
    return QuadratureSet("gauss_lobatto", n, x, w)


def angular_quadrature(rule: str, n: int) -> QuadratureSet:
    if rule == "gauss_legendre":
        return gauss_legendre(n)
    if rule == "gauss_lobatto":
        return gauss_lobatto(n)
    raise ValueError(f"unknown angular rule {rule!r}")


def scalar_flux_from_angles(psi_values, quad: QuadratureSet):
    """phi = sum_n w_n psi^n along the leading axis of psi_values."""
    psi_values = np.asarray(psi_values, dtype=float)
    if psi_values.shape[0] != quad.weights.size:
        raise ValueError("psi_values length does not match the quadrature order")
    return np.tensordot(quad.weights, psi_values, axes=(0, 0))


# --- orthonormal Legendre basis on a cell -----------------------------------

def map_to_reference(x, cell):
    """Affine map of x in [x_L, x_R] to x' in [-1, 1]."""
    x_L, x_R = cell
    if x_R <= x_L:
        raise ValueError("cell must satisfy x_R > x_L")
    x = np.asarray(x, dtype=float)
    if np.any(x < x_L) or np.any(x > x_R):
        raise ValueError("x outside the cell")
    return (x_L + x_R - 2.0 * x) / (x_L - x_R)


def basis_eval(i: int, xprime, cell):
    """Orthonormal basis B_i(x') = sqrt(2i+1)/sqrt(dx) * P_i(x')."""
    x_L, x_R = cell
    dx = x_R - x_L
    if dx <= 0:
        raise ValueError("cell must satisfy x_R > x_L")
    xprime = np.asarray(xprime, dtype=float)
    P = legendre_table(np.atleast_1d(xprime), i)[:, i]
    out = np.sqrt(2 * i + 1) / np.sqrt(dx) * P
    return out.reshape(xprime.shape) if xprime.shape else out[0]
