"""Command line runner: one subcommand per experiment.

    wavy-film <experiment> --config run.yaml [--out DIR] [--jobs N]

Each run writes CSV tables plus a manifest into the output directory
(--out, else $WAVY_FILM_OUT/<config stem>, else ./runs/<config stem>).
Exit codes: 0 success, 2 configuration error, 3 solver failure, 4 film
rupture.  Outputs are deterministic: the same config produces byte
-identical files.
"""

import argparse
import sys
from concurrent.futures import ProcessPoolExecutor
from typing import Optional

import numpy as np

from .analysis import (
    ClassifyOptions,
    PerturbationConfig,
    critical_reynolds,
    flat_dispersion,
    pattern_metrics,
)
from .benney import consistency_scan
from .config import EXPERIMENTS, RunConfig, load_config
from .errors import (
    ConfigError,
    FilmRuptureError,
    RegularizationPoleError,
    SolverError,
)
from .geometry import expand_geometry
from .reconstruction import (
    eddy_diagnostic,
    reconstruct_field,
    streamlines,
    surface_curve,
    to_cartesian,
)
from .runio import RunWriter, resolve_out_dir
from .solvers import TimeSeries, inject_perturbation, integrate, uniform_state
from .solvers import solve_stationary as _solve_stationary

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_SOLVER = 3
EXIT_RUPTURE = 4


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args.config)
        if config.experiment != args.command:
            raise ConfigError(
                f"config declares experiment {config.experiment!r} but the "
                f"{args.command!r} subcommand was invoked")
        out_dir = resolve_out_dir(args.out, args.config)
        writer = RunWriter(out_dir, config)
        _RUNNERS[config.experiment](config, writer, jobs=args.jobs)
        manifest = writer.finish()
        print(f"{config.experiment}: outputs in {manifest.parent}")
        return EXIT_OK
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except FilmRuptureError as exc:
        where = "" if exc.t is None else f" at t = {exc.t:.6g}"
        print(f"film rupture{where}: {exc}", file=sys.stderr)
        return EXIT_RUPTURE
    except (SolverError, RegularizationPoleError) as exc:
        print(f"solver failure: {exc}", file=sys.stderr)
        return EXIT_SOLVER


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wavy-film",
        description="Thin-film flow over wavy inclined bottoms: run experiments from a config file.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name in EXPERIMENTS:
        p = sub.add_parser(name, help=f"run a {name} experiment")
        p.add_argument("--config", required=True, help="YAML run configuration")
        p.add_argument("--out", default=None, help="output directory")
        p.add_argument("--jobs", type=int, default=1,
                       help="worker processes for sweep points")
    return parser


def _geometry(config: RunConfig):
    return expand_geometry(config.bottom, config.grid, config.params.zeta)


def _stationary_solution(config: RunConfig, geom=None):
    geom = geom if geom is not None else _geometry(config)
    s = config.solver
    return _solve_stationary(
        geom, config.params, model=config.model,
        tol=s.tol, max_iter=s.max_iter,
        constraint=s.constraint, flux_target=s.flux_target,
        continuation=s.continuation,
        continuation_start=s.continuation_start,
        continuation_step=s.continuation_step,
    )


def _write_surface_tables(writer: RunWriter, source, geom, config: RunConfig):
    curve = surface_curve(source, geom, config.params)
    state = source.state if hasattr(source, "state") else source
    writer.add_table(
        "surface.csv",
        ["X", "x_hat", "z_hat", "f"],
        [geom.grid.X, curve.points[:, 0], curve.points[:, 1], state.F],
    )
    zero = np.zeros(geom.grid.n)
    bx, bz = to_cartesian(geom.grid.X, zero, geom, config.params)
    writer.add_table("bottom.csv", ["x_hat", "z_hat"], [bx, bz])
    writer.results["is_graph"] = curve.is_graph
    writer.results["overhang_spans"] = [list(s) for s in curve.overhang_spans]


def _run_stationary(config: RunConfig, writer: RunWriter, jobs: int = 1):
    geom = _geometry(config)
    sol = _stationary_solution(config, geom)
    F = sol.state.F
    writer.add_table(
        "profile.csv",
        ["X", "F", "Q"],
        [geom.grid.X, F, np.full(geom.grid.n, sol.q_value)],
    )
    _write_surface_tables(writer, sol, geom, config)
    writer.results.update(
        q_value=sol.q_value,
        newton_iterations=sol.newton_iterations,
        residual_norm=sol.residual_norm,
        f_min=float(F.min()),
        f_max=float(F.max()),
    )


def _initial_state(config: RunConfig, geom):
    if config.options["initial"] == "uniform":
        state = uniform_state(config.grid)
    else:
        state = _stationary_solution(config, geom).state
    pert = config.options.get("perturbation")
    if pert is not None:
        state = inject_perturbation(
            state, geom, config.params, amplitude=pert["amplitude"],
            width=pert["width"], center=pert["center"],
            kind=pert["kind"], mode=pert["mode"],
        )
    return state


def _evolve_series(config: RunConfig, geom) -> TimeSeries:
    state0 = _initial_state(config, geom)
    time = config.time
    return integrate(
        state0, geom, config.params, config.model, time.t_end,
        control=time.step_control(), snapshot_times=time.snapshot_times(),
    )


def _write_series(writer: RunWriter, series: TimeSeries, geom):
    X = geom.grid.X
    n = X.size
    t_col = np.repeat(series.times, n)
    x_col = np.tile(X, len(series.times))
    writer.add_table(
        "snapshots.csv",
        ["t", "X", "F", "Q"],
        [t_col, x_col, series.thickness_matrix().ravel(),
         series.flux_matrix().ravel()],
    )
    final = series.final
    writer.add_table("final.csv", ["X", "F", "Q"], [X, final.F, final.Q])
    st = series.stats
    writer.results.update(
        t_final=float(series.times[-1]),
        n_snapshots=len(series.times),
        steps_accepted=st.accepted,
        steps_rejected=st.rejected,
        newton_failures=st.newton_failures,
        jacobian_evals=st.jacobian_evals,
        dt_final=st.dt_final,
    )


def _run_evolve(config: RunConfig, writer: RunWriter, jobs: int = 1):
    geom = _geometry(config)
    series = _evolve_series(config, geom)
    _write_series(writer, series, geom)


def _run_metrics(config: RunConfig, writer: RunWriter, jobs: int = 1):
    geom = _geometry(config)
    series = _evolve_series(config, geom)
    _write_series(writer, series, geom)
    tail = config.options["tail_snapshots"]
    if tail:
        if tail > len(series.times):
            raise ConfigError(
                f"options.tail_snapshots: only {len(series.times)} snapshots recorded")
        sub = TimeSeries(times=series.times[-tail:],
                         snapshots=series.snapshots[-tail:], stats=series.stats)
    else:
        sub = series
    m = pattern_metrics(sub, steady_tol=config.options["steady_tol"],
                        min_period_corr=config.options["min_period_corr"])
    writer.results["pattern"] = {
        "status": m.status,
        "amplitude": m.amplitude,
        "wave_count": m.wave_count,
        "speed": m.speed,
        "period": m.period,
        "diagnostics": dict(m.diagnostics),
    }


def _sweep_point(args):
    zeta, config = args
    geom = expand_geometry(config.bottom, config.grid, zeta)
    base = config.params.with_zeta(zeta)
    opts = config.options
    pert = opts.get("perturbation")
    return critical_reynolds(
        geom, base, model=config.model,
        bracket=opts["bracket"], tol=opts["tol"],
        perturbation=None if pert is None else PerturbationConfig(
            amplitude=pert["amplitude"], width=pert["width"], center=pert["center"],
            kind=pert["kind"], mode=pert["mode"]),
        options=ClassifyOptions(k_up=opts["k_up"], k_down=opts["k_down"],
                                horizon=opts["horizon"],
                                max_doublings=opts["max_doublings"]),
    )


def _run_sweep_rcrit(config: RunConfig, writer: RunWriter, jobs: int = 1):
    zetas = sorted(config.options["zeta_values"])
    tasks = [(z, config) for z in zetas]
    if jobs and jobs > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            points = list(pool.map(_sweep_point, tasks))
    else:
        points = [_sweep_point(t) for t in tasks]
    # merge in zeta order regardless of completion order
    points.sort(key=lambda pt: pt.zeta)
    writer.add_table(
        "rcrit.csv",
        ["zeta", "r_crit", "tolerance", "delta_at_crit", "bracket_lo", "bracket_hi"],
        [np.array([pt.zeta for pt in points]),
         np.array([pt.r_crit for pt in points]),
         np.array([pt.tolerance for pt in points]),
         np.array([pt.delta_at_crit for pt in points]),
         np.array([pt.bracket[0] for pt in points]),
         np.array([pt.bracket[1] for pt in points])],
    )
    writer.results["n_points"] = len(points)


def _run_reconstruct(config: RunConfig, writer: RunWriter, jobs: int = 1):
    geom = _geometry(config)
    sol = _stationary_solution(config, geom)
    opts = config.options
    fld = reconstruct_field(sol, geom, config.params, n_z=opts["n_z"],
                            dimensional=opts["dimensional"])
    nz = fld.Z.shape[1]
    x_grid = np.repeat(fld.X, nz)
    units = ({"x_hat": "mm", "z_hat": "mm", "u": "mm/s", "w": "mm/s"}
             if opts["dimensional"] else None)
    writer.add_table(
        "field.csv",
        ["X", "Z", "x_hat", "z_hat", "u", "w"],
        [x_grid, fld.Z.ravel(), fld.x_cart.ravel(), fld.z_cart.ravel(),
         fld.u.ravel(), fld.w.ravel()],
        units=units,
    )
    _write_surface_tables(writer, sol, geom, config)
    writer.results.update(q_value=sol.q_value, **eddy_diagnostic(fld))
    seeds = opts.get("streamline_seeds")
    if seeds:
        lines = streamlines(fld, seeds, step=opts["streamline_step"],
                            max_steps=opts["streamline_max_steps"])
        idx = np.concatenate([np.full(len(ln), i, dtype=float)
                              for i, ln in enumerate(lines)])
        pts = np.concatenate(lines, axis=0)
        writer.add_table("streamlines.csv", ["line", "X", "Z"],
                         [idx, pts[:, 0], pts[:, 1]])
        writer.results["n_streamlines"] = len(lines)


def _run_dispersion(config: RunConfig, writer: RunWriter, jobs: int = 1):
    opts = config.options
    k = np.linspace(opts["k_min"], opts["k_max"], opts["n_k"])
    lam = flat_dispersion(config.params, k, model=config.model)
    writer.add_table(
        "dispersion.csv",
        ["k", "growth_rate", "frequency"],
        [k, lam.real, lam.imag],
    )
    i_max = int(np.argmax(lam.real))
    writer.results.update(
        max_growth_rate=float(lam.real[i_max]),
        k_at_max=float(k[i_max]),
        unstable=bool(lam.real[i_max] > 0.0),
    )


def _run_consistency(config: RunConfig, writer: RunWriter, jobs: int = 1):
    geom = _geometry(config)
    amp = config.options["thickness_amplitude"]
    F = 1.0 + amp * np.cos(config.grid.X)
    eps = np.asarray(config.options["epsilons"], dtype=float)
    norms, slope = consistency_scan(F, geom, config.params, eps, model=config.model)
    writer.add_table("consistency.csv", ["epsilon", "residual_norm"], [eps, norms])
    writer.results.update(slope=slope)


_RUNNERS = {
    "stationary": _run_stationary,
    "evolve": _run_evolve,
    "sweep-rcrit": _run_sweep_rcrit,
    "reconstruct": _run_reconstruct,
    "dispersion": _run_dispersion,
    "consistency": _run_consistency,
    "metrics": _run_metrics,
}

assert set(_RUNNERS) == set(EXPERIMENTS)


if __name__ == "__main__":
    sys.exit(main())
