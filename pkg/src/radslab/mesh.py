"""Time-parameterized cell edges and velocities for the four mesh laws.

The thin-square law initializes a Gauss-Lobatto clustered grid (one half of
the edges over the source, one quarter in a thin shell on either side),
dilates it so the outermost edge rides the wavefront while the source is on,
and after shutoff applies a constant per-edge acceleration that lands every
edge on a uniform grid spanning [-x_f/2, x_f/2] at t_final.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .quadrature import gauss_lobatto


class MeshError(ValueError):
    pass


def thin_square_init(K: int, x0: float, delta_x: float) -> np.ndarray:
    """Initial edge vector: Lobatto-spaced middle half over [-x0, x0] and
    Lobatto-spaced quarters over [+-x0, +-(x0+delta_x)]."""
    if K % 4 != 0:
        raise MeshError("thin_square initialization requires K divisible by 4")
    q = K // 4
    y = gauss_lobatto(K // 2 + 1).nodes
    s = gauss_lobatto(q + 1).nodes
    edges = np.zeros(K + 1)
    edges[q:3 * q + 1] = x0 * y
    edges[:q + 1] = (s * delta_x - 2.0 * x0 - delta_x) / 2.0
    edges[3 * q:] = (s * delta_x + 2.0 * x0 + delta_x) / 2.0
    return edges


def post_source_accel(t0: float, t_final: float, x_f: float,
                      edges_t0: np.ndarray, velocities_t0: np.ndarray) -> np.ndarray:
    """Constant per-edge acceleration that carries (edges, velocities) at t0
    onto a uniform grid over [-x_f/2, x_f/2] at t_final, C0/C1 at t0."""
    if t_final <= t0:
        raise MeshError("post-source acceleration requires t_final > t0")
    K = edges_t0.size - 1
    target = np.linspace(-x_f / 2.0, x_f / 2.0, K + 1)
    return 2.0 * (velocities_t0 * (t0 - t_final) - edges_t0 + target) \
        / (t0 - t_final) ** 2


@dataclass
class Mesh:
    """Edge positions/velocities as a pure function of t for one mesh law."""

    law: str
    K: int
    x0: float = 0.5
    t0: float = 10.0
    v_wave: float = 1.0
    x_f: float = 30.0
    delta_x: float = 1e-2
    t_final: float = 1.0

    def __post_init__(self):
        if self.law in ("thin_square", "static_lobatto"):
            self._edges0 = thin_square_init(self.K, self.x0, self.delta_x)
        elif self.law == "static_uniform":
            self._edges0 = np.linspace(-self.x_f / 2.0, self.x_f / 2.0, self.K + 1)
        elif self.law == "constant_speed":
            self._edges0 = np.linspace(-self.delta_x / 2.0, self.delta_x / 2.0,
                                       self.K + 1)
        else:
            raise MeshError(f"unknown mesh law {self.law!r}")
        self._accel = None
        if self.law == "thin_square" and self.t_final > self.t0:
            e0, v0 = self._thin_square_phase1(self.t0)
            self._edges_at_t0 = e0
            self._vel_at_t0 = v0
            self._accel = post_source_accel(self.t0, self.t_final, self.x_f, e0, v0)

    # -- law implementations --

    def _thin_square_phase1(self, t):
        xK = self._edges0[-1]
        edges = self._edges0 * (1.0 + self.v_wave * t / xK)
        velocities = self._edges0 * (self.v_wave / xK)
        return edges, velocities

    def _thin_square(self, t):
        if self._accel is not None and t > self.t0:
            dt = t - self.t0
            edges = 0.5 * self._accel * dt**2 + self._vel_at_t0 * dt + self._edges_at_t0
            velocities = self._accel * dt + self._vel_at_t0
            return edges, velocities
        return self._thin_square_phase1(t)

    def _constant_speed(self, t):
        growth = (self.x_f - self.delta_x) / self.t_final
        width = self.delta_x + growth * min(t, self.t_final)
        xi = np.linspace(-0.5, 0.5, self.K + 1)
        vel = xi * growth if t <= self.t_final else np.zeros(self.K + 1)
        return xi * width, vel

    def edges_velocities(self, t: float):
        """Edge positions and velocities at time t (strictly increasing edges)."""
        if self.law == "thin_square":
            edges, velocities = self._thin_square(t)
        elif self.law in ("static_uniform", "static_lobatto"):
            edges, velocities = self._edges0, np.zeros(self.K + 1)
        else:
            edges, velocities = self._constant_speed(t)
        if np.any(np.diff(edges) <= 0):
            raise MeshError(f"cell collapse at t={t}: edges not increasing")
        return edges, velocities

    @property
    def is_static(self) -> bool:
        return self.law in ("static_uniform", "static_lobatto")


def mesh_from_config(cfg) -> Mesh:
    """Build the mesh law described by a ProblemConfig."""
    if cfg.mesh_law == "constant_speed":
        # delta_x doubles as the initial full width for this law
        delta_x = cfg.delta_x if cfg.delta_x > 0 else cfg.x_f / 10.0
    else:
        delta_x = cfg.delta_x
    return Mesh(law=cfg.mesh_law, K=cfg.K, x0=cfg.x0, t0=cfg.t0,
                v_wave=cfg.wavespeed, x_f=cfg.x_f, delta_x=delta_x,
                t_final=max(cfg.eval_times))


def write_trajectory_csv(mesh: Mesh, times, path) -> None:
    """Dump (t, x^0..x^K) rows for x-vs-t diagrams."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["t"] + [f"x{k}" for k in range(mesh.K + 1)])
        for t in times:
            edges, _ = mesh.edges_velocities(t)
            writer.writerow([f"{t:.17g}"] + [f"{e:.17g}" for e in edges])
