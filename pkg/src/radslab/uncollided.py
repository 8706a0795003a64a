"""Analytic and semi-analytic uncollided scalar fluxes.

The uncollided field solves the pure streaming-plus-absorption equation, so
every evaluator here is a convolution of a plane-pulse propagator with the
finite source:

  transport: phi_pl(x, t) = e^{-t}/(2t) on |x| < t
  S2:        two delta rays at x = +-t/sqrt(3), each carrying e^{-t}/2

The S2 convolutions reduce to per-ray exponential window integrals (square
source) or erf combinations (Gaussian source); both are evaluated in scaled
form so late times cannot overflow. The transport convolutions are one
dimensional integrals over the retarded time, done either adaptively
(public evaluators, reported error) or by exact piecewise antiderivatives /
composite Gauss panels (vectorized solver paths).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import integrate
from scipy.special import erf, erfcx, exp1

from .quadrature import gauss_legendre, legendre_table

SQRT3 = np.sqrt(3.0)


class QuadratureFailure(RuntimeError):
    """Adaptive quadrature did not reach the requested tolerance."""

    def __init__(self, message, achieved):
        super().__init__(f"{message} (achieved error estimate {achieved:.3e})")
        self.achieved = achieved


@dataclass(frozen=True)
class UncollidedSpec:
    model: str = "transport"          # transport | s2
    source_kind: str = "square"       # square | gaussian
    x0: float = 0.5
    t0: float = 10.0
    sigma: float | None = None        # Gaussian width in the closed form

    def __post_init__(self):
        if self.model not in ("transport", "s2"):
            raise ValueError(f"unknown model {self.model!r}")
        if self.source_kind not in ("square", "gaussian"):
            raise ValueError(f"unknown source_kind {self.source_kind!r}")
        if self.sigma is None:
            # calibrated against the brute-force convolution: the closed-form
            # width equals the e-folding width of exp(-x^2/x0^2)
            object.__setattr__(self, "sigma", self.x0)

    @property
    def front_speed(self) -> float:
        return 1.0 if self.model == "transport" else 1.0 / SQRT3


def plane_pulse_scalar(x, t: float):
    """Transport plane-pulse uncollided scalar flux: e^{-t}/(2t) on |x| < t."""
    if t <= 0:
        raise ValueError("plane_pulse_scalar requires t > 0")
    x = np.asarray(x, dtype=float)
    return np.where(np.abs(x) < t, np.exp(-t) / (2.0 * t), 0.0)


def s2_plane_pulse_scalar(x, t: float):
    """The S2 plane pulse is a pair of delta rays; it has no pointwise values.

    Use the convolution evaluators (s2_square_uncollided and
    s2_gaussian_uncollided) instead; internally they integrate the rays
    through s2_ray_windows / the erf reduction.
    """
    raise ValueError(
        "the S2 plane pulse is distributional (delta rays at x = +-t/sqrt(3)); "
        "evaluate its convolution with a source instead")


def s2_ray_positions(t: float):
    """Support points and per-ray weight of the S2 plane pulse at time t."""
    if t <= 0:
        raise ValueError("rays are defined for t > 0")
    return np.array([-t / SQRT3, t / SQRT3]), np.exp(-t) / 2.0


def s2_ray_windows(x, t: float, x0: float, t0: float):
    """Emission-time windows [lo, hi] of the two delta rays for a square source.

    A ray reaching x at time t was emitted at time tau from s = x -+ (t-tau)/sqrt3;
    the window is the set of tau in [0, min(t, t0)] with |s| <= x0. Returns
    (lo_a, hi_a, lo_b, hi_b) evaluated at |x| (the field is even).
    """
    X = np.abs(np.asarray(x, dtype=float))
    T1 = min(t, t0)
    tau_a = t - SQRT3 * (X + x0)
    tau_b = t - SQRT3 * (X - x0)
    tau_c = t - SQRT3 * (x0 - X)
    # ray from the near side of the source: only exists under the source
    inside = X <= x0
    lo_a = np.where(inside, np.minimum(np.maximum(tau_c, 0.0), T1), 0.0)
    hi_a = np.where(inside, T1, 0.0)
    # ray from the far side
    lo_b = np.maximum(tau_a, 0.0)
    hi_b = np.maximum(lo_b, np.minimum(tau_b, T1))
    return lo_a, hi_a, lo_b, hi_b


def s2_square_uncollided(x, t: float, spec: UncollidedSpec):
    """Closed-form S2 uncollided scalar flux of the square source.

    Each ray contributes (1/2) integral of e^{tau - t} over its window;
    evaluated as exp(hi - t) - exp(lo - t), which is overflow-safe at any t.
    """
    if spec.model != "s2" or spec.source_kind != "square":
        raise ValueError("spec must be s2/square")
    lo_a, hi_a, lo_b, hi_b = s2_ray_windows(x, t, spec.x0, spec.t0)
    out = 0.5 * (np.exp(hi_a - t) - np.exp(lo_a - t))
    out += 0.5 * (np.exp(hi_b - t) - np.exp(lo_b - t))
    return out


def _s2_gauss_half(x, a, b, sigma):
    """integral_a^b e^{-w} exp(-(x - w/sqrt3)^2 / sigma^2) dw, scaled erf form."""
    gam = 1.0 / (SQRT3 * sigma)
    beta = SQRT3 * x - 1.5 * sigma**2
    ca = gam * (a - beta)
    cb = gam * (b - beta)
    E = 0.75 * sigma**2 - SQRT3 * x
    pref = np.sqrt(np.pi) * SQRT3 * sigma / 2.0  # sqrt(pi) / (2 gam)
    # for ca >= 0 both erf args are >= 0 and e^E can overflow; fold the
    # exponent into erfcx, where E - c^2 = -tau - (tau - sqrt3 x)^2/(3 sigma^2) <= 0
    pos = ca >= 0.0
    ca_p = np.where(pos, ca, 0.0)
    cb_p = np.where(pos, cb, 0.0)
    scaled = (np.exp(np.minimum(E - ca_p**2, 0.0)) * erfcx(ca_p)
              - np.exp(np.minimum(E - cb_p**2, 0.0)) * erfcx(cb_p))
    direct = np.exp(np.where(pos, 0.0, E)) * (erf(cb) - erf(ca))
    return pref * np.where(pos, scaled, direct)


def s2_gaussian_uncollided(x, t: float, spec: UncollidedSpec):
    """Closed-form S2 uncollided scalar flux of the Gaussian source."""
    if spec.model != "s2" or spec.source_kind != "gaussian":
        raise ValueError("spec must be s2/gaussian")
    x = np.asarray(x, dtype=float)
    a = max(0.0, t - spec.t0)
    b = t
    # each ray carries half the pulse weight
    return 0.5 * (_s2_gauss_half(x, a, b, spec.sigma)
                  + _s2_gauss_half(-x, a, b, spec.sigma))


# --- transport convolutions ---------------------------------------------------

def _square_chord(X, w, x0):
    """Length of [-x0, x0] intersected with (X - w, X + w)."""
    return np.maximum(0.0, np.minimum(x0, X + w) - np.maximum(-x0, X - w))


def transport_uncollided(x, t: float, spec: UncollidedSpec, tol: float = 1e-10):
    """Adaptive-quadrature uncollided scalar flux for the full transport model.

    Integrates the plane pulse against the source over the retarded time,
    absolute tolerance `tol`; raises QuadratureFailure with the achieved
    estimate if the integrator cannot certify it.
    """
    if spec.model != "transport":
        raise ValueError("spec must be a transport model")
    x = np.asarray(x, dtype=float)
    scalar_in = x.ndim == 0
    xs = np.atleast_1d(x)
    out = np.empty_like(xs)
    w_lo, w_hi = max(0.0, t - spec.t0), t
    for idx, xv in enumerate(xs):
        X = abs(float(xv))
        if spec.source_kind == "square":
            if X >= spec.x0 + t:
                out[idx] = 0.0
                continue

            def f(w, X=X):
                if w <= 0.0:
                    return 1.0 if X < spec.x0 else (0.5 if X == spec.x0 else 0.0)
                return np.exp(-w) / (2.0 * w) * _square_chord(X, w, spec.x0)

            pts = [p for p in (abs(X - spec.x0), X + spec.x0) if w_lo < p < w_hi]
        else:
            def f(w, X=X):
                if w <= 0.0:
                    return np.exp(-(X / spec.x0) ** 2)
                inner = 0.5 * np.sqrt(np.pi) * spec.x0 * (
                    erf((X + w) / spec.x0) - erf((X - w) / spec.x0))
                return np.exp(-w) / (2.0 * w) * inner

            pts = [p for p in (X - 3 * spec.x0, X, X + 3 * spec.x0) if w_lo < p < w_hi]
        val, err = integrate.quad(f, w_lo, w_hi, points=sorted(set(pts)) or None,
                                  limit=400, epsabs=tol, epsrel=1e-12)
        if err > max(tol, 1e-14) * 50:
            raise QuadratureFailure(f"transport uncollided at x={xv}, t={t}", err)
        out[idx] = val
    return out[0] if scalar_in else out


def transport_square_uncollided_fast(x, t: float, spec: UncollidedSpec):
    """Exact piecewise evaluation of the transport/square convolution.

    On each linear piece of the chord function the integrand is
    (alpha + beta w) e^{-w}/(2w), whose antiderivative combines exp and the
    exponential integral E1. Vectorized over x; matches transport_uncollided
    to round-off.
    """
    X = np.abs(np.asarray(x, dtype=float))
    w_lo, w_hi = max(0.0, t - spec.t0), t
    out = np.zeros_like(X)
    if w_hi <= w_lo:
        return out
    x0 = spec.x0

    def piece(a, b, alpha, beta):
        a2 = np.maximum(a, w_lo)
        b2 = np.minimum(b, w_hi)
        live = b2 > a2
        a2 = np.where(live, a2, 1.0)
        b2 = np.where(live, b2, 1.0)
        val = 0.5 * beta * (np.exp(-a2) - np.exp(-b2))
        has_alpha = live & (alpha != 0.0) & (a2 > 0)
        aa = np.where(has_alpha, a2, 1.0)
        bb = np.where(has_alpha, b2, 1.0)
        val = val + np.where(has_alpha, 0.5 * alpha * (exp1(aa) - exp1(bb)), 0.0)
        return np.where(live, val, 0.0)

    zero = np.zeros_like(X)
    inside = X <= x0
    # fully inside the source cone: chord = 2w
    out += np.where(inside, piece(zero, x0 - X, zero, 2.0 * np.ones_like(X)), 0.0)
    # one source edge inside: chord = (x0 - X) + w
    out += piece(np.abs(x0 - X), x0 + X, x0 - X, np.ones_like(X))
    # cone covers the whole source: chord = 2 x0
    out += piece(x0 + X, np.full_like(X, np.inf), 2.0 * x0 * np.ones_like(X), zero)
    return out


# shared Gauss panels for the smooth gaussian-source retarded-time integral
_PANEL_RULE = gauss_legendre(24)


def transport_gaussian_uncollided_fast(x, t: float, spec: UncollidedSpec):
    """Composite-Gauss evaluation of the transport/gaussian convolution.

    The integrand is analytic in the retarded time (the apparent 1/w is
    removable), so a few fixed panels reach ~1e-12; vectorized over x.
    """
    X = np.abs(np.asarray(x, dtype=float))
    w_lo, w_hi = max(0.0, t - spec.t0), t
    out = np.zeros(X.shape)
    if w_hi <= w_lo:
        return out
    cuts = [w_lo]
    for step in (0.5, 2.0, 8.0, 24.0):
        c = w_lo + step
        if c < w_hi:
            cuts.append(c)
    cuts.append(w_hi)
    xi, wt = _PANEL_RULE.nodes, _PANEL_RULE.weights
    x0 = spec.x0
    Xf = X.reshape(-1)
    acc = np.zeros(Xf.size)
    for a, b in zip(cuts[:-1], cuts[1:]):
        wv = 0.5 * (a + b) + 0.5 * (b - a) * xi          # (P,)
        inner = 0.5 * np.sqrt(np.pi) * x0 * (
            erf((Xf[:, None] + wv[None, :]) / x0)
            - erf((Xf[:, None] - wv[None, :]) / x0))
        vals = np.exp(-wv)[None, :] / (2.0 * wv)[None, :] * inner
        acc += 0.5 * (b - a) * vals @ wt
    return acc.reshape(X.shape)


def uncollided_evaluator(spec: UncollidedSpec):
    """Vectorized phi_u(x, t) callable for the solver source treatment."""
    if spec.model == "s2":
        if spec.source_kind == "square":
            return lambda x, t: s2_square_uncollided(x, t, spec)
        return lambda x, t: s2_gaussian_uncollided(x, t, spec)
    if spec.source_kind == "square":
        return lambda x, t: transport_square_uncollided_fast(x, t, spec)
    return lambda x, t: transport_gaussian_uncollided_fast(x, t, spec)


def uncollided_spatial_integral(spec: UncollidedSpec, t: float) -> float:
    """Exact integral of phi_u over x at time t.

    The pulse propagators carry total weight e^{-t}, so for either model
    integral(phi_u) = Q_tot * (e^{min(t,t0)-t} - e^{-t}).
    """
    if spec.source_kind == "square":
        q_tot = 2.0 * spec.x0
    else:
        q_tot = spec.x0 * np.sqrt(np.pi)
    T1 = min(t, spec.t0)
    return q_tot * (np.exp(T1 - t) - np.exp(-t))


def project_uncollided_onto_basis(cell, t: float, spec: UncollidedSpec, M: int,
                                  breakpoints=()):
    """Per-cell moments integral(B_j phi_u dx), j = 0..M, by (2M+1)-point Gauss.

    Optional breakpoints split the cell at known kinks of phi_u before
    applying the rule on each sub-interval.
    """
    x_L, x_R = cell
    if x_R <= x_L:
        raise ValueError("cell must satisfy x_R > x_L")
    rule = gauss_legendre(2 * M + 1)
    cj = np.sqrt(2.0 * np.arange(M + 1) + 1.0)
    evaluator = uncollided_evaluator(spec)
    cuts = sorted({x_L, x_R} | {b for b in breakpoints if x_L < b < x_R})
    mom = np.zeros(M + 1)
    for a, b in zip(cuts[:-1], cuts[1:]):
        xq = 0.5 * (a + b) + 0.5 * (b - a) * rule.nodes
        phi = evaluator(xq, t)
        xi = (x_L + x_R - 2.0 * xq) / (x_L - x_R)
        B = legendre_table(xi, M) * cj / np.sqrt(x_R - x_L)
        mom += 0.5 * (b - a) * (rule.weights * phi) @ B
    return mom
