"""Moving-mesh DG semidiscrete system: assembly, integration, reconstruction.

State layout: u[n, k, j] with n = 0..N-1 the angular fluxes at the quadrature
directions, n = N the material energy density; k the cell, j the Legendre
mode (orthonormal basis on each cell). Row N is treated as an angular row
with speed 0, which makes its surface flux exactly the mesh-motion upwinding
and removes its advection term.

Semidiscrete form per angular row (standard treatment):

    dU/dt = G U - (LU)^surf + mu_n L U - U/l + (c_a/2l) H + (1/2l) Q

and for the energy row:

    dU/dt = G U - (RU)^surf + (c_a/l) (sum_n w_n U_n - H [+ Phi_u])

where L, G are the closed-form gradient / mesh-motion matrices, H the
moments of the (sign-preserving) T^4 emission, Q the source moments, and
Phi_u the uncollided-flux moments in the uncollided treatment.
"""

from __future__ import annotations

import time
from dataclasses import dataclass, field

import numpy as np
from scipy import sparse
from scipy.integrate import solve_ivp
from scipy.sparse.linalg import expm_multiply

from .mesh import Mesh, mesh_from_config
from .problem import ProblemConfig, emission_t4, source_integral, temperature_from_energy
from .quadrature import angular_quadrature, gauss_legendre, legendre_table
from .uncollided import (UncollidedSpec, uncollided_evaluator,
                         uncollided_spatial_integral)


class SolverFailure(RuntimeError):
    pass


class NonFiniteState(SolverFailure):
    def __init__(self, t, row, cell):
        super().__init__(
            f"non-finite rhs at t={t:.6g} (row {row}, cell {cell})")
        self.t, self.row, self.cell = t, row, cell


# --- cell operators ----------------------------------------------------------

def assemble_L(cell, M: int) -> np.ndarray:
    """Gradient matrix L_ij = integral(B_j dB_i/dx): 2 sqrt((2i+1)(2j+1))/dx
    for i > j with i + j odd, else 0."""
    x_L, x_R = cell
    dx = x_R - x_L
    if dx <= 0:
        raise ValueError("cell must satisfy x_R > x_L")
    i = np.arange(M + 1)
    cj = np.sqrt(2.0 * i + 1.0)
    odd_lower = (i[:, None] > i[None, :]) & ((i[:, None] + i[None, :]) % 2 == 1)
    return np.where(odd_lower, 2.0 * cj[:, None] * cj[None, :], 0.0) / dx


def assemble_G(cell, velocities, M: int) -> np.ndarray:
    """Mesh-motion matrix G_ij = integral(B_j dB_i/dt) for edge velocities
    (xdot_L, xdot_R); zero for a static cell."""
    x_L, x_R = cell
    v_L, v_R = velocities
    dx = x_R - x_L
    if dx <= 0:
        raise ValueError("cell must satisfy x_R > x_L")
    dxdt = v_R - v_L
    vsum = v_L + v_R
    i = np.arange(M + 1)
    cj = np.sqrt(2.0 * i + 1.0)
    cc = cj[:, None] * cj[None, :]
    ij = i[:, None] + i[None, :]
    odd_lower = (i[:, None] > i[None, :]) & (ij % 2 == 1)
    even_lower2 = (i[:, None] >= i[None, :] + 2) & (ij % 2 == 0)
    G = -np.where(odd_lower, cc, 0.0) * (vsum / dx) \
        - np.where(even_lower2, cc, 0.0) * (dxdt / dx)
    G[i, i] += -(i + 0.5) * (dxdt / dx)
    return G


@dataclass
class SolutionTensor:
    """Coefficients u[n, k, j]; n < N angular, n = N material energy."""

    u: np.ndarray
    t: float
    edges: np.ndarray

    @property
    def angular(self) -> np.ndarray:
        return self.u[:-1]

    @property
    def energy(self) -> np.ndarray:
        return self.u[-1]


@dataclass
class SolveResult:
    config: ProblemConfig
    snapshots: list
    stats: dict = field(default_factory=dict)


# --- the assembled system -----------------------------------------------------

class DGSystem:
    """Precomputed machinery for one ProblemConfig; provides rhs(t, y)."""

    def __init__(self, cfg: ProblemConfig, mesh: Mesh | None = None,
                 check_finite: bool = True):
        self.cfg = cfg
        self.mesh = mesh if mesh is not None else mesh_from_config(cfg)
        self.check_finite = check_finite
        quad = angular_quadrature(cfg.angular_rule, cfg.N)
        self.mu = quad.nodes
        self.w = quad.weights
        self.nrows = cfg.N + 1
        self.speeds = np.concatenate([self.mu, [0.0]])
        M = cfg.M
        self.M = M
        self.K = cfg.K
        i = np.arange(M + 1)
        self.cj = np.sqrt(2.0 * i + 1.0)
        cc = self.cj[:, None] * self.cj[None, :]
        ij = i[:, None] + i[None, :]
        self._odd_lower = np.where((i[:, None] > i[None, :]) & (ij % 2 == 1), cc, 0.0)
        self._even_lower2 = np.where((i[:, None] >= i[None, :] + 2) & (ij % 2 == 0),
                                     cc, 0.0)
        self._diag_idx = i
        self._Bp = self.cj.copy()                       # P_j(+1) scaled
        self._Bm = self.cj * (-1.0) ** i                # P_j(-1) scaled
        rule = gauss_legendre(2 * M + 1)
        self._gq_nodes = rule.nodes
        self._gq_weights = rule.weights
        self._Vq = legendre_table(rule.nodes, M) * self.cj  # (P, M+1)
        self._uncollided = None
        if cfg.treatment == "uncollided":
            if cfg.source_kind == "none":
                raise ValueError("uncollided treatment requires a source")
            model = "s2" if (cfg.N == 2 and cfg.angular_rule == "gauss_legendre") \
                else "transport"
            spec = UncollidedSpec(model=model, source_kind=cfg.source_kind,
                                  x0=cfg.x0, t0=cfg.t0)
            self._uncollided = spec
            self._phi_u = uncollided_evaluator(spec)
        self.nfev = 0

    # -- moment helpers --

    def _cell_quad_points(self, edges):
        dx = np.diff(edges)
        mid = 0.5 * (edges[:-1] + edges[1:])
        return mid[:, None] + 0.5 * dx[:, None] * self._gq_nodes[None, :]

    def _project_values(self, values, sdx):
        """Moments of pointwise values sampled at the cell quad points."""
        return 0.5 * sdx[:, None] * np.einsum(
            "p,pj,kp->kj", self._gq_weights, self._Vq, values)

    def _project_function(self, fn, t, edges, breakpoints):
        """Moments of fn(x) with cells split at the given breakpoints."""
        M, K = self.M, self.K
        dx = np.diff(edges)
        sdx = np.sqrt(dx)
        xq = self._cell_quad_points(edges)
        mom = self._project_values(fn(xq, t), sdx)
        if breakpoints:
            # redo the few straddled cells with split panels
            for k in np.unique(np.searchsorted(edges, breakpoints) - 1):
                if k < 0 or k >= K:
                    continue
                x_L, x_R = edges[k], edges[k + 1]
                cuts = sorted({x_L, x_R} | {b for b in breakpoints
                                            if x_L < b < x_R})
                if len(cuts) == 2:
                    continue
                acc = np.zeros(M + 1)
                for a, b in zip(cuts[:-1], cuts[1:]):
                    xs = 0.5 * (a + b) + 0.5 * (b - a) * self._gq_nodes
                    xi = (x_L + x_R - 2.0 * xs) / (x_L - x_R)
                    B = legendre_table(xi, M) * self.cj / sdx[k]
                    acc += 0.5 * (b - a) * (self._gq_weights * fn(xs, t)) @ B
                mom[k] = acc
        return mom

    def source_moments(self, t, edges):
        cfg = self.cfg
        if cfg.source_kind == "none" or t > cfg.t0:
            return np.zeros((self.K, self.M + 1))
        if cfg.source_kind == "square":
            fn = lambda xs, _t: (np.abs(xs) <= cfg.x0).astype(float)
            return self._project_function(fn, t, edges, (-cfg.x0, cfg.x0))
        fn = lambda xs, _t: np.exp(-(xs / cfg.x0) ** 2)
        return self._project_function(fn, t, edges, ())

    def uncollided_moments(self, t, edges):
        if t <= 0.0:
            return np.zeros((self.K, self.M + 1))
        spec = self._uncollided
        front = spec.x0 + spec.front_speed * t
        inner = abs(spec.front_speed * t - spec.x0)
        kinks = (-front, front, -inner, inner, -spec.x0, spec.x0) \
            if spec.source_kind == "square" else ()
        return self._project_function(self._phi_u, t, edges, kinks)

    # -- the semidiscrete rhs --

    def rhs(self, t, y):
        self.nfev += 1
        cfg = self.cfg
        K, M, nrows = self.K, self.M, self.nrows
        U = y.reshape(nrows, K, M + 1)
        edges, vel = self.mesh.edges_velocities(t)
        dx = np.diff(edges)
        sdx = np.sqrt(dx)
        dxdt = np.diff(vel)
        vsum = vel[:-1] + vel[1:]

        Lscale = (1.0 / dx)[None, :, None]
        LU = np.einsum("ij,nkj->nki", self._odd_lower * 2.0, U) * Lscale
        G_odd = np.einsum("ij,nkj->nki", self._odd_lower, U) * (vsum / dx)[None, :, None]
        G_even = np.einsum("ij,nkj->nki", self._even_lower2, U) * (dxdt / dx)[None, :, None]
        diag = (self._diag_idx + 0.5)[None, None, :] * (dxdt / dx)[None, :, None]
        GU = -G_odd - G_even - diag * U

        # upwinded surface fluxes; ghost values are zero (vacuum)
        psiR = np.einsum("nkj,j->nk", U, self._Bp) / sdx
        psiL = np.einsum("nkj,j->nk", U, self._Bm) / sdx
        rel = self.speeds[:, None] - vel[None, :]
        zeros = np.zeros((nrows, 1))
        from_left = np.concatenate([zeros, psiR], axis=1)
        from_right = np.concatenate([psiL, zeros], axis=1)
        edgeval = np.where(rel >= 0.0, from_left, from_right)
        flux = rel * edgeval
        surf = (flux[:, 1:, None] * (self._Bp / sdx[:, None])[None]
                - flux[:, :-1, None] * (self._Bm / sdx[:, None])[None])

        # emission moments
        e_q = np.einsum("kj,pj->kp", U[-1], self._Vq) / sdx[:, None]
        H = self._project_values(emission_t4(e_q, cfg.eos), sdx)

        il = 1.0 / cfg.l
        ca = cfg.c_a
        dU = np.empty_like(U)
        dU[:-1] = (GU[:-1] - surf[:-1]
                   + self.speeds[:-1, None, None] * LU[:-1]
                   - il * U[:-1]
                   + (0.5 * ca * il) * H[None])
        if cfg.treatment == "standard":
            if cfg.source_kind != "none":
                dU[:-1] += (0.5 * il) * self.source_moments(t, edges)[None]
            phi_extra = 0.0
        else:
            phi_extra = self.uncollided_moments(t, edges)
        phi_mom = np.einsum("n,nkj->kj", self.w, U[:-1])
        dU[-1] = GU[-1] - surf[-1] + (ca * il) * (phi_mom - H + phi_extra)

        if self.check_finite and not np.all(np.isfinite(dU)):
            bad = np.argwhere(~np.isfinite(dU))[0]
            raise NonFiniteState(t, int(bad[0]), int(bad[1]))
        return dU.ravel()

    # -- sparsity and linear probing --

    def jacobian_sparsity(self) -> sparse.csr_matrix:
        """Block pattern: per-cell self block, same-row neighbors, emission
        column block, and the angular sum in the energy row."""
        K, M, nrows = self.K, self.M, self.nrows
        nmodes = M + 1
        n = nrows * K * nmodes

        def base(nn, kk):
            return (nn * K + kk) * nmodes

        rows, cols = [], []

        def block(r0, c0):
            for a in range(nmodes):
                for b in range(nmodes):
                    rows.append(r0 + a)
                    cols.append(c0 + b)

        for nn in range(nrows):
            for kk in range(K):
                r0 = base(nn, kk)
                block(r0, base(nn, kk))
                if kk > 0:
                    block(r0, base(nn, kk - 1))
                if kk < K - 1:
                    block(r0, base(nn, kk + 1))
                if nn < nrows - 1:
                    block(r0, base(nrows - 1, kk))
                else:
                    for n2 in range(nrows - 1):
                        block(r0, base(n2, kk))
        data = np.ones(len(rows))
        return sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsr()

    def linear_operator(self, t_ref: float = 0.0):
        """Exact (A, b) with rhs = A y + b, valid when the system is linear.

        Columns are probed in groups of structurally independent unknowns
        (exact for a linear map, no differencing error).
        """
        n = self.nrows * self.K * (self.M + 1)
        pattern = self.jacobian_sparsity().tocsc()
        b = self.rhs(t_ref, np.zeros(n))
        # greedy column grouping on the sparsity pattern
        groups = []
        group_rows = []
        indptr, indices = pattern.indptr, pattern.indices
        for col in range(n):
            rows_c = indices[indptr[col]:indptr[col + 1]]
            for g, taken in zip(groups, group_rows):
                if not np.any(taken[rows_c]):
                    g.append(col)
                    taken[rows_c] = True
                    break
            else:
                taken = np.zeros(n, dtype=bool)
                taken[rows_c] = True
                groups.append([col])
                group_rows.append(taken)
        data, rows, cols = [], [], []
        for g in groups:
            probe = np.zeros(n)
            probe[g] = 1.0
            col_vals = self.rhs(t_ref, probe) - b
            for col in g:
                rows_c = indices[indptr[col]:indptr[col + 1]]
                vals = col_vals[rows_c]
                nz = vals != 0.0
                rows.extend(rows_c[nz].tolist())
                cols.extend([col] * int(nz.sum()))
                data.extend(vals[nz].tolist())
        A = sparse.coo_matrix((data, (rows, cols)), shape=(n, n)).tocsc()
        return A, b


def _is_linear_static(cfg: ProblemConfig) -> bool:
    return (cfg.eos.kind == "su_olson"
            and cfg.mesh_law in ("static_uniform", "static_lobatto")
            and cfg.treatment == "standard")


def _integrate_expm(system: DGSystem, cfg: ProblemConfig, eval_times):
    """Exact propagation u' = A u + b 1_{t<=t0} with the sparse exponential."""
    A, b = system.linear_operator(0.0)
    n = A.shape[0]
    times = sorted(eval_times)
    snapshots = {}
    # affine phase while the source is on: augment with a constant unit state
    Aaug = sparse.bmat([[A, sparse.csc_matrix(b[:, None])],
                        [None, sparse.csc_matrix((1, 1))]]).tocsc()
    y = np.zeros(n)
    t_cur = 0.0
    for t in times:
        while t_cur < t:
            t_next = min(t, cfg.t0) if t_cur < cfg.t0 else t
            dt = t_next - t_cur
            if t_cur < cfg.t0:
                yaug = np.concatenate([y, [1.0]])
                yaug = expm_multiply(Aaug * dt, yaug)
                y = yaug[:n]
            else:
                y = expm_multiply(A * dt, y)
            t_cur = t_next
        snapshots[t] = y.copy()
    return snapshots


def integrate(cfg: ProblemConfig, integrator: str = "auto",
              mesh: Mesh | None = None) -> SolveResult:
    """Run the semidiscrete system from cold (U = 0) to every eval time.

    integrator: auto | rk45 | bdf | radau | expm. auto picks the exact
    exponential propagator for linear static standard-treatment systems,
    RK45 otherwise (BDF for l << 1 nonlinear stiff runs).
    """
    system = DGSystem(cfg, mesh=mesh)
    eval_times = sorted(cfg.eval_times)
    t_end = eval_times[-1]
    wall = time.perf_counter()

    if integrator == "auto":
        if _is_linear_static(cfg):
            integrator = "expm"
        elif cfg.l < 1e-2:
            integrator = "bdf"
        else:
            integrator = "rk45"

    stats = {"integrator": integrator}
    snapshots = []
    if integrator == "expm":
        if not _is_linear_static(cfg):
            raise SolverFailure("expm propagation requires a linear static system")
        snapmap = _integrate_expm(system, cfg, eval_times)
        for t in eval_times:
            edges, _ = system.mesh.edges_velocities(t)
            snapshots.append(SolutionTensor(
                u=snapmap[t].reshape(system.nrows, cfg.K, cfg.M + 1),
                t=t, edges=edges))
        stats["nfev"] = system.nfev
    else:
        method = {"rk45": "RK45", "bdf": "BDF", "radau": "Radau"}[integrator]
        kwargs = {}
        if method in ("BDF", "Radau"):
            kwargs["jac_sparsity"] = system.jacobian_sparsity()
        n = system.nrows * cfg.K * (cfg.M + 1)
        y = np.zeros(n)
        t_cur = 0.0
        # integrate in legs split at the source shutoff and each eval time so
        # the rhs is smooth within every leg
        leg_bounds = sorted({t for t in eval_times} |
                            ({cfg.t0} if 0.0 < cfg.t0 < t_end else set()))
        nsteps = 0
        for t_leg in leg_bounds:
            sol = solve_ivp(system.rhs, (t_cur, t_leg), y, method=method,
                            rtol=cfg.rtol, atol=cfg.atol, dense_output=False,
                            **kwargs)
            if not sol.success:
                raise SolverFailure(
                    f"integrator {method} failed at t={sol.t[-1]:.6g} "
                    f"(reached from {t_cur:.6g}): {sol.message}")
            nsteps += sol.t.size - 1
            y = sol.y[:, -1]
            t_cur = t_leg
            if t_leg in eval_times:
                edges, _ = system.mesh.edges_velocities(t_leg)
                snapshots.append(SolutionTensor(
                    u=y.reshape(system.nrows, cfg.K, cfg.M + 1).copy(),
                    t=t_leg, edges=edges))
        stats["nfev"] = system.nfev
        stats["nsteps"] = nsteps
    stats["wall_time_s"] = time.perf_counter() - wall
    return SolveResult(config=cfg, snapshots=snapshots, stats=stats)


# --- reconstruction -----------------------------------------------------------

def reconstruct(snapshot: SolutionTensor, x, cfg: ProblemConfig):
    """(phi_bar, e_bar, T_bar) at positions x inside the mesh.

    Values at interior edges come from the right cell (the cell containing
    x + eps); x at the outermost edge uses the last cell. The uncollided
    flux is added to phi in the uncollided treatment.
    """
    x = np.asarray(x, dtype=float)
    scalar_in = x.ndim == 0
    xs = np.atleast_1d(x)
    edges = snapshot.edges
    if np.any(xs < edges[0]) or np.any(xs > edges[-1]):
        raise ValueError("x outside the mesh")
    K = edges.size - 1
    idx = np.clip(np.searchsorted(edges, xs, side="right") - 1, 0, K - 1)
    x_L, x_R = edges[idx], edges[idx + 1]
    xi = (x_L + x_R - 2.0 * xs) / (x_L - x_R)
    M = snapshot.u.shape[2] - 1
    cj = np.sqrt(2.0 * np.arange(M + 1) + 1.0)
    B = legendre_table(xi, M) * cj / np.sqrt(x_R - x_L)[:, None]
    vals = np.einsum("nqj,qj->nq", snapshot.u[:, idx, :], B)
    quad = angular_quadrature(cfg.angular_rule, cfg.N)
    phi = quad.weights @ vals[:-1]
    e = vals[-1]
    if cfg.treatment == "uncollided":
        model = "s2" if (cfg.N == 2 and cfg.angular_rule == "gauss_legendre") \
            else "transport"
        spec = UncollidedSpec(model=model, source_kind=cfg.source_kind,
                              x0=cfg.x0, t0=cfg.t0)
        phi = phi + uncollided_evaluator(spec)(xs, snapshot.t)
    T = temperature_from_energy(e, cfg.eos)
    if scalar_in:
        return phi[0], e[0], T[0]
    return phi, e, T


def total_energy(snapshot: SolutionTensor, cfg: ProblemConfig) -> float:
    """integral(phi_bar + e_bar) dx from the zero modes (exact for the DG
    expansion), plus the analytic uncollided integral when applicable."""
    edges = snapshot.edges
    sdx = np.sqrt(np.diff(edges))
    quad = angular_quadrature(cfg.angular_rule, cfg.N)
    phi0 = quad.weights @ snapshot.u[:-1, :, 0]
    total = float(np.sum(sdx * (phi0 + snapshot.u[-1, :, 0])))
    if cfg.treatment == "uncollided":
        model = "s2" if (cfg.N == 2 and cfg.angular_rule == "gauss_legendre") \
            else "transport"
        spec = UncollidedSpec(model=model, source_kind=cfg.source_kind,
                              x0=cfg.x0, t0=cfg.t0)
        total += uncollided_spatial_integral(spec, snapshot.t)
    return total


def expected_energy(cfg: ProblemConfig, t: float) -> float:
    """(1/l) * integral of Q over x and [0, t] (vacuum-boundary balance)."""
    return source_integral(cfg) * min(t, cfg.t0) / cfg.l


# --- snapshot serialization ---------------------------------------------------

def snapshot_csv_rows(snapshot: SolutionTensor, cfg: ProblemConfig, x_grid):
    """Rows (x, phi, e, T, T_rad) on x_grid; points beyond the mesh are zero."""
    edges = snapshot.edges
    rows = []
    for x in x_grid:
        if x < edges[0] or x > edges[-1]:
            phi, e, T = 0.0, 0.0, 0.0
        else:
            phi, e, T = reconstruct(snapshot, float(x), cfg)
        t_rad = np.sign(phi) * np.abs(phi) ** 0.25
        rows.append((float(x), float(phi), float(e), float(T), float(t_rad)))
    return rows


def write_coefficients(snapshot: SolutionTensor, cfg: ProblemConfig, path):
    """Raw dump: header `N K M t`, then (N+1)*K rows of the M+1 coefficients."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"{cfg.N} {cfg.K} {cfg.M} {snapshot.t:.17g}\n")
        for n in range(snapshot.u.shape[0]):
            for k in range(snapshot.u.shape[1]):
                fh.write(" ".join(f"{v:.17g}" for v in snapshot.u[n, k]) + "\n")


def read_coefficients(path):
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().split()
        N, K, M = int(header[0]), int(header[1]), int(header[2])
        t = float(header[3])
        u = np.loadtxt(fh).reshape(N + 1, K, M + 1)
    return u, t, N, K, M
