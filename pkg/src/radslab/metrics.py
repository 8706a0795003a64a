"""Error and convergence diagnostics."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np


def rmse(y, yhat) -> float:
    """Root mean square error sqrt(sum |y - yhat|^2 / N)."""
    y = np.asarray(y, dtype=float)
    yhat = np.asarray(yhat, dtype=float)
    if y.size == 0 or y.shape != yhat.shape:
        raise ValueError("rmse requires equal-length nonempty inputs")
    return float(np.sqrt(np.mean(np.abs(y - yhat) ** 2)))


def coefficient_decay(u: np.ndarray, weights: np.ndarray):
    """Average coefficient magnitudes |c_j| of the expansion, per mode.

    For the scalar flux the per-cell value is the weighted angular average
    a_k = sum_n w_n u[n,k,j] / sum_n w_n; for the material energy it is the
    energy row itself. Returns (phi_cj, energy_cj), each of length M+1.
    """
    u = np.asarray(u, dtype=float)
    weights = np.asarray(weights, dtype=float)
    if u.ndim != 3 or u.shape[0] != weights.size + 1:
        raise ValueError("u must have shape (N+1, K, M+1) matching the weights")
    a_phi = np.einsum("n,nkj->kj", weights, u[:-1]) / weights.sum()
    phi_cj = np.mean(np.abs(a_phi), axis=0)
    energy_cj = np.mean(np.abs(u[-1]), axis=0)
    return phi_cj, energy_cj


def fit_geometric(orders, errors):
    """Least-squares fit of errors ~ C exp(-c1 * order) on a log-linear scale.

    Nonpositive error entries are excluded with a warning. Returns (C, c1),
    c1 > 0 for decaying data.
    """
    orders = np.asarray(orders, dtype=float)
    errors = np.asarray(errors, dtype=float)
    if orders.shape != errors.shape:
        raise ValueError("orders and errors must have equal length")
    keep = errors > 0
    if not np.all(keep):
        warnings.warn("excluding nonpositive error values from the geometric fit")
    orders, errors = orders[keep], errors[keep]
    if orders.size < 2:
        raise ValueError("geometric fit needs at least 2 positive points")
    slope, intercept = np.polyfit(orders, np.log(errors), 1)
    return float(np.exp(intercept)), float(-slope)


@dataclass
class ConvergenceRecord:
    """One M-sweep: per-order coefficient averages and optional RMSE."""

    orders: list = field(default_factory=list)
    phi_coeffs: list = field(default_factory=list)     # per order: array |c_j|
    energy_coeffs: list = field(default_factory=list)
    rmse_values: list = field(default_factory=list)    # per order: float or nan

    def append(self, order, phi_cj, energy_cj, rmse_value=np.nan):
        self.orders.append(int(order))
        self.phi_coeffs.append(np.asarray(phi_cj, dtype=float))
        self.energy_coeffs.append(np.asarray(energy_cj, dtype=float))
        self.rmse_values.append(float(rmse_value))

    def tail_magnitudes(self) -> np.ndarray:
        """|c_M| of each run: the highest retained mode."""
        return np.array([c[-1] for c in self.phi_coeffs])

    def fit(self, min_order: int = 2):
        """Geometric fit of the tail magnitudes over orders >= min_order."""
        orders = np.asarray(self.orders, dtype=float)
        tails = self.tail_magnitudes()
        keep = orders >= min_order
        return fit_geometric(orders[keep], tails[keep])
