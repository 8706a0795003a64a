"""Semi-analytic S2 reference solutions by Green's-function convolution.

The pulse response of the coupled S2 radiation/material system splits into a
ballistic pair of delta rays on the cone t = sqrt(3)|x - s| and a smooth
interior part supported inside it:

    G_phi = (sqrt3/2) e^{-t} [ t I1(z)/z * Theta(t - sqrt3|x-s|)
                               + I0(z) delta(t - sqrt3|x-s|) ]
    G_e   = (sqrt3/2) e^{-t}   I0(z)   * Theta(t - sqrt3|x-s|)

with z = sqrt(t^2 - 3(x-s)^2). This normalization makes the delta part equal
the S2 uncollided propagator and conserves the pulse exactly:
integral(G_phi + G_e) dx = 1 for all t > 0.

Benchmark values are S * G convolutions: the delta ray reduces to a line
integral along the characteristic, the smooth part to a 1D-in-time integral
of spatial Gauss panels (the integrand is analytic in s inside the cone).
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import integrate

from .bessel import i0e, i1e_over_z
from .quadrature import gauss_legendre

SQRT3 = np.sqrt(3.0)

# x rows and t columns of the published thin-problem tables
TABLE_X = (0.01, 0.1, 0.17783, 0.31623, 0.45, 0.5, 0.56234, 0.75, 1.0,
           1.33352, 1.77828, 3.16228, 5.62341, 10.0, 17.78279)
TABLE_T = (0.1, 0.31623, 1.0, 3.16228, 10.0, 31.6228, 100.0)

_GAUSS_TAIL = 7.0   # source support cutoff, exp(-7^2) ~ 5e-22


@dataclass
class GreensEvaluator:
    """Convolution engine for one source shape.

    inner_tol controls the adaptive spatial panels; abs_tol the outer
    retarded-time quadrature. Achieved error estimates accumulate in
    last_error_estimate.
    """

    source_kind: str = "square"
    x0: float = 0.5
    t0: float = 10.0
    abs_tol: float = 1e-10
    inner_tol: float = 1e-12
    last_error_estimate: float = field(default=0.0, init=False)

    def __post_init__(self):
        if self.source_kind not in ("square", "gaussian"):
            raise ValueError(f"unknown source_kind {self.source_kind!r}")

    # -- source profile --
    def _profile(self, s):
        if self.source_kind == "square":
            return (np.abs(s) <= self.x0).astype(float)
        return np.exp(-(s / self.x0) ** 2)

    def _support(self):
        if self.source_kind == "square":
            return self.x0
        return _GAUSS_TAIL * self.x0

    # -- smooth (Theta) part --
    def _inner_smooth(self, x, T, kernel):
        """integral over s of S(s) * kernel(T, x - s) inside the cone."""
        half = self._support()
        lo = max(-half, x - T / SQRT3)
        hi = min(half, x + T / SQRT3)
        if hi <= lo:
            return 0.0, 0.0
        prev = None
        for npts in (24, 48, 96, 192):
            rule = gauss_legendre(npts)
            s = 0.5 * (lo + hi) + 0.5 * (hi - lo) * rule.nodes
            vals = self._profile(s) * kernel(T, x - s)
            est = 0.5 * (hi - lo) * rule.weights @ vals
            if prev is not None and abs(est - prev) <= max(self.inner_tol,
                                                           1e-14 * abs(est)):
                return est, abs(est - prev)
            prev = est
        return est, abs(est - prev)

    def _smooth_part(self, x, t, kernel):
        inner_err = [0.0]

        def f(tp):
            val, err = self._inner_smooth(x, t - tp, kernel)
            inner_err[0] = max(inner_err[0], err)
            return val

        top = min(t, self.t0)
        cuts = [t - SQRT3 * abs(abs(x) - self.x0),
                t - SQRT3 * (abs(x) + self.x0)]
        pts = sorted({c for c in cuts if 0.0 < c < top})
        val, err = integrate.quad(f, 0.0, top, points=pts or None, limit=400,
                                  epsabs=self.abs_tol, epsrel=1e-12)
        return val, err + inner_err[0] * top

    # -- ballistic (delta) part of G_phi --
    def _delta_part(self, x, t):
        """(sqrt3/2) integral over s of S(s, t - sqrt3|x-s|) e^{-sqrt3|x-s|}."""
        half = self._support()

        def f(s):
            arg = SQRT3 * np.abs(x - s)
            emission = t - arg
            live = (emission >= 0.0) & (emission <= self.t0)
            return np.where(live, self._profile(s) * np.exp(-arg), 0.0)

        cuts = {x, x - t / SQRT3, x + t / SQRT3,
                x - (t - self.t0) / SQRT3, x + (t - self.t0) / SQRT3}
        pts = sorted({c for c in cuts if -half < c < half})
        val, err = integrate.quad(f, -half, half, points=pts or None, limit=400,
                                  epsabs=self.abs_tol, epsrel=1e-12)
        return SQRT3 / 2.0 * val, SQRT3 / 2.0 * err

    def phi(self, x: float, t: float) -> float:
        """Reference scalar flux at (x, t)."""
        if t <= 0:
            raise ValueError("t must be positive")
        if self._outside_cone(x, t):
            self.last_error_estimate = 0.0
            return 0.0

        def kernel(T, d):
            z2 = np.maximum(T * T - 3.0 * d * d, 0.0)
            z = np.sqrt(z2)
            return SQRT3 / 2.0 * T * np.exp(z - T) * i1e_over_z(z)

        smooth, err_s = self._smooth_part(x, t, kernel)
        ballistic, err_d = self._delta_part(x, t)
        self.last_error_estimate = err_s + err_d
        if self.last_error_estimate > 1e-8:
            raise RuntimeError(
                f"phi({x}, {t}) quadrature error estimate "
                f"{self.last_error_estimate:.2e} exceeds 1e-8")
        return smooth + ballistic

    def e(self, x: float, t: float) -> float:
        """Reference material energy density at (x, t)."""
        if t <= 0:
            raise ValueError("t must be positive")
        if self._outside_cone(x, t):
            self.last_error_estimate = 0.0
            return 0.0

        def kernel(T, d):
            z2 = np.maximum(T * T - 3.0 * d * d, 0.0)
            z = np.sqrt(z2)
            return SQRT3 / 2.0 * np.exp(z - T) * i0e(z)

        smooth, err_s = self._smooth_part(x, t, kernel)
        self.last_error_estimate = err_s
        if err_s > 1e-8:
            raise RuntimeError(
                f"e({x}, {t}) quadrature error estimate {err_s:.2e} exceeds 1e-8")
        return smooth

    def _outside_cone(self, x, t):
        if self.source_kind != "square":
            return False
        return t < SQRT3 * (abs(x) - self.x0)


def green_phi_regular(x: float, s: float, t: float) -> float:
    """Smooth part of the scalar-flux pulse kernel at offset x - s.

    Zero outside the cone; the value on the cone is the I1(z)/z -> 1/2 limit.
    """
    T = t
    d = x - s
    if T < SQRT3 * abs(d):
        return 0.0
    z2 = max(T * T - 3.0 * d * d, 0.0)
    z = np.sqrt(z2)
    return float(SQRT3 / 2.0 * T * np.exp(z - T) * i1e_over_z(z))


def green_e(x: float, s: float, t: float) -> float:
    """Material-energy pulse kernel at offset x - s (bounded on the cone)."""
    T = t
    d = x - s
    if T < SQRT3 * abs(d):
        return 0.0
    z2 = max(T * T - 3.0 * d * d, 0.0)
    z = np.sqrt(z2)
    return float(SQRT3 / 2.0 * np.exp(z - T) * i0e(z))


def benchmark_phi(x: float, t: float, source: str, x0: float = 0.5,
                  t0: float = 10.0) -> float:
    ev = GreensEvaluator(source_kind=source, x0=x0, t0=t0)
    return ev.phi(x, t)


def benchmark_e(x: float, t: float, source: str, x0: float = 0.5,
                t0: float = 10.0) -> float:
    ev = GreensEvaluator(source_kind=source, x0=x0, t0=t0)
    return ev.e(x, t)


def benchmark_table(source: str, which: str = "phi", x_grid=TABLE_X,
                    t_grid=TABLE_T, x0: float = 0.5, t0: float = 10.0):
    """Reference values on a (x, t) grid plus per-entry error estimates."""
    ev = GreensEvaluator(source_kind=source, x0=x0, t0=t0)
    fn = ev.phi if which == "phi" else ev.e
    vals = np.zeros((len(x_grid), len(t_grid)))
    errs = np.zeros_like(vals)
    for i, x in enumerate(x_grid):
        for j, t in enumerate(t_grid):
            vals[i, j] = fn(float(x), float(t))
            errs[i, j] = ev.last_error_estimate
    return vals, errs
