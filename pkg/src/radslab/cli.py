"""Command-line entry points: solve, benchmark, compare, sweep.

Exit codes: 0 success/pass, 1 tolerance failure, 2 usage error,
3 numerical failure.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import __version__
from .benchmark_s2 import TABLE_T, TABLE_X, benchmark_table
from .dg_solver import SolverFailure, integrate, reconstruct, write_coefficients
from .mesh import mesh_from_config, write_trajectory_csv
from .metrics import ConvergenceRecord, coefficient_decay
from .problem import (EquationOfState, ProblemConfig, read_config, write_config)
from .quadrature import angular_quadrature
from .tables import (BenchmarkTable, DEFAULT_TOLERANCES, compare_tables,
                     read_table_csv, write_table_csv)
from .uncollided import QuadratureFailure

THIN_TIMES = TABLE_T
THICK_TIMES = (0.3, 3.0, 30.0)
THICK_SQUARE_X = tuple(np.linspace(0.0, 1.1, 20))
THICK_GAUSS_X = tuple(np.linspace(0.0, 1.6, 20))
THICK_CV_PHI_X = tuple(np.linspace(0.0, 0.8684, 12))
THICK_CV_E_X = tuple(np.linspace(0.0, 1.4, 20))


@dataclass(frozen=True)
class ProblemPreset:
    name: str
    config: ProblemConfig
    x_grid_phi: tuple
    x_grid_e: tuple


def _thin(source, eos_kind, mesh_law, treatment, cv0=None):
    return ProblemConfig(
        sigma_a=1.0, l=1.0, x0=0.5, t0=10.0, source_kind=source,
        eos=EquationOfState(kind=eos_kind, cv0=cv0),
        N=16, angular_rule="gauss_lobatto", K=64, M=4,
        treatment=treatment, mesh_law=mesh_law, x_f=60.0, delta_x=1e-2,
        eval_times=THIN_TIMES, rtol=1e-10, atol=1e-10)


def _thick(source, eos_kind, x0, delta_x, cv0=None):
    l = 1.0 / 800.0
    return ProblemConfig(
        sigma_a=800.0, l=l, x0=x0, t0=10.0 * l, source_kind=source,
        eos=EquationOfState(kind=eos_kind, cv0=cv0),
        N=16, angular_rule="gauss_lobatto", K=64, M=3,
        treatment="standard", mesh_law="static_lobatto", x_f=2.0 * (x0 + delta_x),
        delta_x=delta_x, eval_times=THICK_TIMES, rtol=1e-8, atol=1e-8)


def build_presets():
    """The seven problem presets (thick constant-Cv square is excluded: its
    sharp nonequilibrium wave is not resolvable by this method)."""
    presets = [
        ProblemPreset("thin-square-su",
                      _thin("square", "su_olson", "thin_square", "uncollided"),
                      TABLE_X, TABLE_X),
        ProblemPreset("thin-square-cv",
                      _thin("square", "constant_cv", "thin_square", "uncollided",
                            cv0=0.03),
                      TABLE_X, TABLE_X),
        ProblemPreset("thin-gauss-su",
                      _thin("gaussian", "su_olson", "static_uniform", "uncollided"),
                      TABLE_X, TABLE_X),
        ProblemPreset("thin-gauss-cv",
                      _thin("gaussian", "constant_cv", "static_uniform",
                            "uncollided", cv0=0.03),
                      TABLE_X, TABLE_X),
        ProblemPreset("thick-square-su",
                      _thick("square", "su_olson", x0=0.5, delta_x=1.0),
                      THICK_SQUARE_X, THICK_SQUARE_X),
        ProblemPreset("thick-gauss-su",
                      _thick("gaussian", "su_olson", x0=0.375, delta_x=1.3),
                      THICK_GAUSS_X, THICK_GAUSS_X),
        ProblemPreset("thick-gauss-cv",
                      _thick("gaussian", "constant_cv", x0=0.375, delta_x=1.3,
                             cv0=0.03),
                      THICK_CV_PHI_X, THICK_CV_E_X),
    ]
    return {p.name: p for p in presets}


PRESETS = build_presets()

_INT_KEYS = {"N", "K", "M"}
_FLOAT_KEYS = {"sigma_a", "l", "x0", "t0", "c_a", "x_f", "delta_x", "rtol",
               "atol", "cv0"}
_STR_KEYS = {"source_kind", "eos", "angular_rule", "treatment", "mesh_law"}


class UsageError(Exception):
    pass


def apply_overrides(cfg: ProblemConfig, pairs) -> ProblemConfig:
    kw = {}
    for pair in pairs or ():
        if "=" not in pair:
            raise UsageError(f"override must be key=value, got {pair!r}")
        key, val = pair.split("=", 1)
        key = key.strip()
        val = val.strip()
        if key == "eval_times":
            kw[key] = tuple(float(v) for v in val.split(","))
        elif key in _INT_KEYS:
            kw[key] = int(val)
        elif key in _FLOAT_KEYS:
            kw[key] = float(val)
        elif key in _STR_KEYS:
            kw[key] = val
        else:
            raise UsageError(f"unknown override key {key!r}")
    try:
        return cfg.with_overrides(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc)) from exc


def _outdir(args, default_leaf):
    base = args.outdir or os.environ.get("RADSLAB_OUTDIR") or "radslab_out"
    path = Path(base) / default_leaf if args.outdir is None else Path(args.outdir)
    path.mkdir(parents=True, exist_ok=True)
    return path


def _config_as_dict(cfg: ProblemConfig) -> dict:
    d = {
        "sigma_a": cfg.sigma_a, "l": cfg.l, "x0": cfg.x0, "t0": cfg.t0,
        "source_kind": cfg.source_kind, "eos": cfg.eos.kind,
        "c_a": cfg.c_a, "N": cfg.N, "angular_rule": cfg.angular_rule,
        "K": cfg.K, "M": cfg.M, "treatment": cfg.treatment,
        "mesh_law": cfg.mesh_law, "x_f": cfg.x_f, "delta_x": cfg.delta_x,
        "eval_times": list(cfg.eval_times), "rtol": cfg.rtol, "atol": cfg.atol,
    }
    if cfg.eos.cv0 is not None:
        d["cv0"] = cfg.eos.cv0
    return d


def run_solve(args) -> int:
    if args.preset is not None and args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}; "
                         f"choose from {sorted(PRESETS)}")
    if args.preset is None and args.config is None:
        raise UsageError("solve needs --preset and/or --config")
    if args.config is not None:
        cfg = read_config(args.config)
        preset = PRESETS.get(args.preset) if args.preset else None
    else:
        preset = PRESETS[args.preset]
        cfg = preset.config
    if args.s2:
        cfg = cfg.with_overrides(N=2, angular_rule="gauss_legendre")
    cfg = apply_overrides(cfg, args.set)
    if preset is not None:
        x_grid_phi, x_grid_e = preset.x_grid_phi, preset.x_grid_e
    else:
        x_grid_phi = x_grid_e = TABLE_X

    leaf = args.preset or "config"
    if args.s2:
        leaf += "-s2"
    outdir = _outdir(args, f"solve-{leaf}")
    wall = time.perf_counter()
    result = integrate(cfg, integrator=args.integrator)

    outputs = []
    phi_cols = np.full((len(x_grid_phi), len(result.snapshots)), np.nan)
    e_cols = np.full((len(x_grid_e), len(result.snapshots)), np.nan)
    times = []
    for j, snap in enumerate(result.snapshots):
        times.append(snap.t)
        for grid, cols, field_idx in ((x_grid_phi, phi_cols, 0),
                                      (x_grid_e, e_cols, 1)):
            for i, x in enumerate(grid):
                if x < snap.edges[0] or x > snap.edges[-1]:
                    cols[i, j] = 0.0
                else:
                    vals = reconstruct(snap, float(x), cfg)
                    cols[i, j] = vals[field_idx]
        snap_path = outdir / f"snapshot_t{snap.t:g}.csv"
        with open(snap_path, "w", encoding="utf-8") as fh:
            fh.write("x,phi,e,T,T_rad\n")
            for x in x_grid_phi:
                if x < snap.edges[0] or x > snap.edges[-1]:
                    phi_v, e_v, T_v = 0.0, 0.0, 0.0
                else:
                    phi_v, e_v, T_v = reconstruct(snap, float(x), cfg)
                t_rad = float(np.sign(phi_v) * np.abs(phi_v) ** 0.25)
                fh.write(",".join(repr(float(v))
                                  for v in (x, phi_v, e_v, T_v, t_rad)) + "\n")
        outputs.append(snap_path.name)
        coeff_path = outdir / f"coeffs_t{snap.t:g}.txt"
        write_coefficients(snap, cfg, coeff_path)
        outputs.append(coeff_path.name)

    for field_name, grid, cols in (("phi", x_grid_phi, phi_cols),
                                   ("e", x_grid_e, e_cols)):
        table = BenchmarkTable(x=np.asarray(grid), t=np.asarray(times),
                               values=cols, provenance="generated_solver")
        path = outdir / f"{leaf}_{field_name}.csv"
        write_table_csv(table, path)
        outputs.append(path.name)

    write_config(cfg, outdir / "config_echo.cfg")
    outputs.append("config_echo.cfg")
    if args.mesh_csv:
        mesh = mesh_from_config(cfg)
        tmax = max(cfg.eval_times)
        traj_path = outdir / "mesh_trajectory.csv"
        write_trajectory_csv(mesh, np.linspace(0.0, tmax, 201), traj_path)
        outputs.append(traj_path.name)

    manifest = {
        "version": __version__,
        "preset": args.preset,
        "config": _config_as_dict(cfg),
        "integrator_stats": result.stats,
        "wall_time_s": time.perf_counter() - wall,
        "outputs": outputs,
    }
    (outdir / "manifest.json").write_text(json.dumps(manifest, indent=2),
                                          encoding="utf-8")
    print(f"solve: wrote {len(outputs) + 1} files to {outdir}")
    return 0


def run_benchmark(args) -> int:
    if args.x0 * args.sigma_a_hint > 10.0:
        raise UsageError("benchmark generation is for thin-regime parameters")
    outdir = _outdir(args, f"benchmark-{args.source}")
    x_grid = np.asarray(TABLE_X)
    if args.source == "gaussian" and args.positive_only:
        pass  # grids are already x >= 0; symmetry covers x < 0
    t_grid = np.asarray(TABLE_T)
    for which in ("phi", "e"):
        vals, errs = benchmark_table(args.source, which, x_grid, t_grid,
                                     x0=args.x0, t0=args.t0)
        table = BenchmarkTable(x=x_grid, t=t_grid, values=vals,
                               provenance="generated_s2")
        write_table_csv(table, outdir / f"benchmark_{which}.csv")
        err_table = BenchmarkTable(x=x_grid, t=t_grid, values=errs,
                                   provenance="generated_s2")
        write_table_csv(err_table, outdir / f"benchmark_{which}_err.csv")
    print(f"benchmark: wrote tables to {outdir}")
    return 0


def run_compare(args) -> int:
    result = read_table_csv(args.result)
    reference = read_table_csv(args.reference, provenance=args.provenance)
    tol = args.tol if args.tol is not None else DEFAULT_TOLERANCES[args.provenance]
    try:
        report = compare_tables(result, reference, tolerance=tol)
    except ValueError as exc:
        print(f"compare: {exc}", file=sys.stderr)
        return 2
    for col in report["per_column"]:
        print(f"t={col['t']:<10g} n={col['n']:<3d} rmse={col['rmse']:.6e} "
              f"max_abs={col['max_abs']:.6e}")
    status = "PASS" if report["passed"] else "FAIL"
    print(f"{status}: max abs error {report['max_abs']:.6e} "
          f"(tolerance {report['tolerance']:.1e}) "
          f"worst at x={report['worst_at']['x']}, t={report['worst_at']['t']}")
    return 0 if report["passed"] else 1


def _sweep_one(payload):
    cfg_dict, order, integrator = payload
    eos = EquationOfState(kind=cfg_dict.pop("eos"), cv0=cfg_dict.pop("cv0", None))
    cfg = ProblemConfig(eos=eos, **cfg_dict)
    cfg = cfg.with_overrides(M=order)
    result = integrate(cfg, integrator=integrator)
    snap = result.snapshots[-1]
    quad = angular_quadrature(cfg.angular_rule, cfg.N)
    phi_cj, e_cj = coefficient_decay(snap.u, quad.weights)
    return order, phi_cj, e_cj, snap


def run_sweep(args) -> int:
    if args.preset not in PRESETS:
        raise UsageError(f"unknown preset {args.preset!r}")
    try:
        lo, hi = (int(v) for v in args.M_range.split(".."))
    except ValueError as exc:
        raise UsageError("--M-range must look like 3..8") from exc
    if hi < lo:
        raise UsageError("--M-range upper bound below lower bound")
    cfg = PRESETS[args.preset].config
    if args.s2:
        cfg = cfg.with_overrides(N=2, angular_rule="gauss_legendre")
    cfg = apply_overrides(cfg, args.set)
    outdir = _outdir(args, f"sweep-{args.preset}")

    reference = None
    if args.reference is not None:
        reference = read_table_csv(args.reference)

    orders = list(range(lo, hi + 1))
    payloads = [(dict(_config_as_dict(cfg)), m, args.integrator) for m in orders]
    record = ConvergenceRecord()
    failures = {}
    results = []
    if args.jobs > 1:
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for payload, res in zip(payloads, pool.map(_sweep_one, payloads)):
                results.append(res)
    else:
        for payload in payloads:
            try:
                results.append(_sweep_one(payload))
            except Exception as exc:  # keep sweeping, record the failure
                failures[payload[1]] = str(exc)
                results.append(None)

    for res in results:
        if res is None:
            continue
        order, phi_cj, e_cj, snap = res
        rm = np.nan
        if reference is not None:
            cols = [j for j, t in enumerate(reference.t)
                    if abs(t - snap.t) < 1e-9]
            if cols:
                j = cols[0]
                mask = np.isfinite(reference.values[:, j])
                xs = reference.x[mask]
                vals = []
                for x in xs:
                    if snap.edges[0] <= x <= snap.edges[-1]:
                        vals.append(reconstruct(snap, float(x), cfg)[0])
                    else:
                        vals.append(0.0)
                rm = float(np.sqrt(np.mean(
                    (np.array(vals) - reference.values[mask, j]) ** 2)))
        record.append(order, phi_cj, e_cj, rm)

    max_modes = max(len(c) for c in record.phi_coeffs) if record.orders else 0
    sweep_path = outdir / "sweep.csv"
    with open(sweep_path, "w", encoding="utf-8") as fh:
        header = ["M", "rmse"] + [f"c{j}" for j in range(max_modes)] \
            + [f"e_c{j}" for j in range(max_modes)]
        fh.write(",".join(header) + "\n")
        for i, m in enumerate(record.orders):
            row = [str(m), "" if np.isnan(record.rmse_values[i])
                   else repr(record.rmse_values[i])]
            for coeffs in (record.phi_coeffs[i], record.energy_coeffs[i]):
                row.extend(repr(float(c)) for c in coeffs)
                row.extend([""] * (max_modes - len(coeffs)))
            fh.write(",".join(row) + "\n")
        if len(record.orders) >= 3:
            C, c1 = record.fit(min_order=args.fit_min_order)
            fh.write(f"# fit: C={C!r}, c1={c1!r}\n")
        for m, msg in failures.items():
            fh.write(f"# failed M={m}: {msg}\n")
    print(f"sweep: wrote {sweep_path}")
    if len(record.orders) >= 3:
        print(f"geometric fit: C={C:.4e} c1={c1:.4f}")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(
        prog="radslab",
        description="1D slab grey radiative-transfer solver and S2 benchmarks")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a problem preset")
    p_solve.add_argument("--preset", default=None)
    p_solve.add_argument("--config", default=None,
                         help="flat key=value problem file")
    p_solve.add_argument("--s2", action="store_true",
                         help="use the two-angle Gauss-Legendre system")
    p_solve.add_argument("--set", action="append", metavar="KEY=VALUE",
                         help="override a config field")
    p_solve.add_argument("--integrator", default="auto",
                         choices=("auto", "rk45", "bdf", "radau", "expm"))
    p_solve.add_argument("--outdir", default=None)
    p_solve.add_argument("--mesh-csv", action="store_true",
                         help="also dump edge trajectories")
    p_solve.set_defaults(func=run_solve)

    p_bench = sub.add_parser("benchmark", help="generate S2 reference tables")
    p_bench.add_argument("--source", required=True,
                         choices=("square", "gaussian"))
    p_bench.add_argument("--x0", type=float, default=0.5)
    p_bench.add_argument("--t0", type=float, default=10.0)
    p_bench.add_argument("--sigma-a-hint", type=float, default=1.0,
                         dest="sigma_a_hint",
                         help="guards against thick-regime misuse")
    p_bench.add_argument("--positive-only", action="store_true")
    p_bench.add_argument("--outdir", default=None)
    p_bench.set_defaults(func=run_benchmark)

    p_cmp = sub.add_parser("compare", help="RMSE report between two tables")
    p_cmp.add_argument("--result", required=True)
    p_cmp.add_argument("--reference", required=True)
    p_cmp.add_argument("--tol", type=float, default=None)
    p_cmp.add_argument("--provenance", default="published",
                       choices=("published", "generated_s2", "generated_solver"))
    p_cmp.set_defaults(func=run_compare)

    p_sweep = sub.add_parser("sweep", help="convergence sweep over M")
    p_sweep.add_argument("--preset", required=True)
    p_sweep.add_argument("--M-range", required=True, dest="M_range")
    p_sweep.add_argument("--s2", action="store_true")
    p_sweep.add_argument("--set", action="append", metavar="KEY=VALUE")
    p_sweep.add_argument("--reference", default=None,
                         help="table CSV for per-M RMSE")
    p_sweep.add_argument("--integrator", default="auto")
    p_sweep.add_argument("--jobs", type=int, default=1)
    p_sweep.add_argument("--fit-min-order", type=int, default=2)
    p_sweep.add_argument("--outdir", default=None)
    p_sweep.set_defaults(func=run_sweep)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return 2
    except (SolverFailure, QuadratureFailure, RuntimeError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3


if __name__ == "__main__":
    sys.exit(main())
