"""Command-line entry point ``svi-epp``.

Every subcommand writes CSV files (the contract) and, unless ``--no-figures``
is given, PNG figures into the output directory.  Exit codes: 0 success,
1 invalid input or usage, 2 numerical failure.
"""

from __future__ import annotations

import argparse
import csv
import math
import sys
from pathlib import Path

import numpy as np

from . import gauss
from .exit_prob import CFLError, Grid2D, QuadratureError, blowup_diagnostic, mc_exit_prob, solve_u, u_probe
from .harness import ConfigError, ExperimentConfig, load_config, run_convergence, run_jump_census
from .model import ParameterError, State
from .noise import PathSpec, generate
from .sim import simulate_coupled, write_trajectory_csv

__all__ = ["main", "build_parser"]

EXIT_OK, EXIT_INVALID, EXIT_NUMERICAL = 0, 1, 2


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    # argparse exits with status 2 on bad usage; route it to status 1 instead
    def error(self, message):
        raise UsageError(f"{self.format_usage()}{self.prog}: error: {message}")


def _common(sp: argparse.ArgumentParser) -> None:
    sp.add_argument("--config", type=Path, help="JSON file with ExperimentConfig fields")
    sp.add_argument("--output-dir", dest="output_dir")
    sp.add_argument("--c0", type=float)
    sp.add_argument("--k", type=float)
    sp.add_argument("--Y", type=float)
    sp.add_argument("--T", type=float)
    sp.add_argument("--dt", type=float)
    sp.add_argument("--eps", dest="eps_list", type=float, nargs="+")
    sp.add_argument("--n-paths", dest="n_paths", type=int)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--threads", type=int, help="worker cap (default: $SVI_EPP_THREADS or all cores)")
    sp.add_argument("--no-figures", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    ap = _Parser(prog="svi-epp", description="Elasto-plastic oscillator: eps-jump approximation experiments")
    sub = ap.add_subparsers(dest="command", parser_class=_Parser, required=True)

    sp = sub.add_parser("simulate", help="one coupled run, trajectory.csv")
    _common(sp)
    sp.add_argument("--path-index", type=int, default=0)
    sp.add_argument("--stride", type=int, default=1, help="keep every stride-th grid point")

    for name, text in (
        ("converge", "eps sweep of the sup metric and jump counts, converge.csv"),
        ("census", "jump-count distribution and the 1/u bound, census.csv"),
        ("exit-prob", "Monte Carlo survival vs PDE probe, exit_prob.csv"),
        ("blowup", "H, I, J and u divided by eps, blowup.csv"),
        ("density-check", "density factorisation and forward-equation residual"),
        ("expansions", "small-time expansions and the boundary y^3 moment"),
    ):
        _common(sub.add_parser(name, help=text))

    sp = sub.add_parser("pde", help="solve for u and write slices, u_slices.csv")
    _common(sp)
    sp.add_argument("--times", type=float, nargs="+", default=[0.0], help="forward times to dump")
    sp.add_argument("--n-y", type=int, default=161)
    sp.add_argument("--n-z", type=int, default=641)
    sp.add_argument("--n-t", type=int, help="time slabs (default: from the stability limit)")
    return ap


def _config(args) -> ExperimentConfig:
    base = load_config(args.config).to_dict() if args.config else ExperimentConfig().to_dict()
    params = dict(base["params"])
    for name in ("c0", "k", "Y"):
        v = getattr(args, name)
        if v is not None:
            params[name] = v
    base["params"] = params
    for name in ("T", "dt", "eps_list", "n_paths", "seed", "output_dir"):
        v = getattr(args, name)
        if v is not None:
            base[name] = list(v) if name == "eps_list" else v
    return ExperimentConfig.from_dict(base)


def _out(cfg: ExperimentConfig) -> Path:
    d = Path(cfg.output_dir)
    d.mkdir(parents=True, exist_ok=True)
    return d


def _writer(path: Path, header: list[str]):
    fh = path.open("w", newline="")
    w = csv.writer(fh, lineterminator="\n")
    w.writerow(header)
    return fh, w


def _f(x) -> str:
    return repr(float(x))


def cmd_simulate(cfg, args) -> int:
    out = _out(cfg)
    eps = cfg.eps_list[0]
    path = generate(PathSpec(cfg.T, cfg.dt, cfg.seed, args.path_index))
    run = simulate_coupled(State(0.0, 0.0), path, cfg.params, eps)
    write_trajectory_csv(run, out / "trajectory.csv", stride=args.stride)
    if not args.no_figures:
        from .plotting import plot_trajectory

        plot_trajectory(run, out / "trajectory.png")
    print(f"eps={eps:g} jumps={run.n_jumps} -> {out / 'trajectory.csv'}")
    return EXIT_OK


def cmd_converge(cfg, args) -> int:
    table = run_convergence(cfg, threads=args.threads)
    if not args.no_figures:
        from .plotting import plot_convergence

        plot_convergence(table.rows, _out(cfg) / "converge.png")
    for r in table.rows:
        print(f"eps={r.eps:<7g} M/eps={r.M_over_eps:.5f}+-{r.M_stderr:.5f}  eps*E[N]={r.eps_times_jumps:.5f}")
    for attr in ("M_over_eps", "eps_times_jumps"):
        d, se = table.trend(attr)
        print(f"{attr}: first - last = {d:.5f} ({d / se if se > 0 else math.inf:.1f} combined std-errors)")
    return EXIT_OK


def cmd_census(cfg, args) -> int:
    rows = run_jump_census(cfg, threads=args.threads)
    if not args.no_figures:
        from .plotting import plot_census

        plot_census(rows, _out(cfg) / "census.png")
    for r in rows:
        print(f"eps={r.eps:<7g} E[N]={r.mean_jumps:.4f}+-{r.stderr:.4f}  1/u={r.bound:.4f}  holds={r.bound_holds}")
    return EXIT_OK


def cmd_exit_prob(cfg, args) -> int:
    out = _out(cfg)
    p = cfg.params
    u = solve_u(Grid2D.for_params(p, cfg.T), p, save_times=[])
    est = mc_exit_prob(list(cfg.eps_list), cfg.T, cfg.n_paths, cfg.dt, cfg.seed, p, threads=args.threads)
    fh, w = _writer(out / "exit_prob.csv", ["eps", "T", "n_paths", "dt", "seed", "p_survive", "std_error", "u_pde", "abs_diff", "agree"])
    with fh:
        for e in est:
            up = u_probe(u, e.eps)
            diff = abs(up - e.p_survive)
            ok = diff <= max(3 * e.std_error, 1e-2)
            w.writerow([_f(e.eps), _f(e.T), e.n_paths, _f(e.dt), e.seed, _f(e.p_survive), _f(e.std_error), _f(up), _f(diff), int(ok)])
            print(f"eps={e.eps:<7g} MC={e.p_survive:.4f}+-{e.std_error:.4f}  PDE={up:.4f}  agree={ok}")
    return EXIT_OK


def cmd_pde(cfg, args) -> int:
    out = _out(cfg)
    p = cfg.params
    try:
        if args.n_t is None:
            grid = Grid2D.for_params(p, cfg.T, n_y=args.n_y, n_z=args.n_z)
        else:
            grid = Grid2D(n_y=args.n_y, n_z=args.n_z, n_t=args.n_t, T=cfg.T)
    except ValueError as e:
        raise ConfigError("grid", str(e)) from e
    times = np.asarray(args.times, dtype=float)
    if np.any((times < 0) | (times > cfg.T)):
        raise ConfigError("times", f"slice times must lie in [0, T = {cfg.T}]")
    u = solve_u(grid, p, save_times=times)
    fh, w = _writer(out / "u_slices.csv", ["t", "y", "z", "u"])
    with fh:
        for t in times:
            m = int(np.argmin(np.abs(u.t_saved - t)))
            sl = u.values[:, :, m]
            for i, yv in enumerate(u.y):
                for j, zv in enumerate(u.z):
                    w.writerow([_f(u.t_saved[m]), _f(yv), _f(zv), _f(sl[i, j])])
            if not args.no_figures:
                from .plotting import plot_u_slice

                plot_u_slice(u.y, u.z, sl, float(u.t_saved[m]), out / f"u_slice_t{u.t_saved[m]:g}.png")
    for e in cfg.eps_list:
        print(f"u(0, Y-{e:g}, 0) = {u_probe(u, e):.5f}")
    return EXIT_OK


def cmd_blowup(cfg, args) -> int:
    out = _out(cfg)
    p = cfg.params
    u = solve_u(Grid2D.for_params(p, cfg.T), p, save_times=[])
    table = blowup_diagnostic(list(cfg.eps_list), u, p)
    fh, w = _writer(out / "blowup.csv", ["eps", "H_over_eps", "I_over_eps", "J_over_eps", "u_over_eps"])
    with fh:
        for r in table.rows:
            w.writerow([_f(r.eps), _f(r.H_over_eps), _f(r.I_over_eps), _f(r.J_over_eps), _f(r.u_over_eps)])
    if not args.no_figures:
        from .plotting import plot_blowup

        plot_blowup(table.rows, out / "blowup.png")
    for r, t in zip(table.rows, table.terms):
        print(f"eps={r.eps:<7g} u/eps={r.u_over_eps:.4f} I/eps={r.I_over_eps:.4f} H/eps={r.H_over_eps:.4f} "
              f"J/eps={r.J_over_eps:.3e} closure={t.rel_error:.2%}")
    print(f"u/eps increasing={table.u_increasing} I/eps increasing={table.I_increasing} "
          f"H variation={table.H_variation:.1%} J variation={table.J_variation:.1%} passed={table.passed}")
    return EXIT_OK


def cmd_density_check(cfg, args) -> int:
    out = _out(cfg)
    p = cfg.params
    y, z, t = np.meshgrid(np.linspace(-3, 3, 10), np.linspace(-0.95 * p.Y, 0.95 * p.Y, 10), np.linspace(0.05, 1.0, 10), indexing="ij")
    fh, w = _writer(out / "density_check.csv", ["eps", "ratio_rel_error", "forward_rel_residual"])
    with fh:
        for e in cfg.eps_list:
            r1 = gauss.ratio_identity_error(e, p)
            r2 = float(np.max(np.abs(gauss.forward_residual(y, z, t, e, p, relative=True))))
            w.writerow([_f(e), _f(r1), _f(r2)])
            print(f"eps={e:<7g} ratio identity rel. error={r1:.2e}  forward residual={r2:.2e}")
    return EXIT_OK


def cmd_expansions(cfg, args) -> int:
    out = _out(cfg)
    p = cfg.params
    t_grid = np.logspace(-4, -2, 9)
    rep = gauss.expansions_check(t_grid, p)
    fh, w = _writer(out / "expansions.csv", ["name", "t", "exact", "series", "ratio"])
    with fh:
        for name, t, ex, se, ratio in rep.rows:
            w.writerow([name, _f(t), _f(ex), _f(se), _f(ratio)])
        for eta in (0.5, 1.0):
            for t in (1e-2, 1e-3, 1e-4):
                v = float(gauss.boundary_moment_y3(eta, t, p))
                lim = gauss.BOUNDARY_Y3_LIMIT
                w.writerow([f"y3_moment_eta{eta:g}", _f(t), _f(v), _f(lim), _f(v / lim)])
    if not args.no_figures:
        from .plotting import plot_expansions

        plot_expansions([(n, t, r) for n, t, _, _, r in rep.rows], out / "expansions.png")
    for name, ok in rep.passed.items():
        print(f"{name:<22} growth={rep.growth[name]:9.3f}  {'ok' if ok else 'FAIL'}")
    return EXIT_OK


_COMMANDS = {
    "simulate": cmd_simulate,
    "converge": cmd_converge,
    "census": cmd_census,
    "exit-prob": cmd_exit_prob,
    "pde": cmd_pde,
    "blowup": cmd_blowup,
    "density-check": cmd_density_check,
    "expansions": cmd_expansions,
}


def main(argv: list[str] | None = None) -> int:
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except UsageError as e:
        print(e, file=sys.stderr)
        return EXIT_INVALID
    except SystemExit as e:  # --help
        return EXIT_OK if not e.code else EXIT_INVALID
    try:
        cfg = _config(args)
        return _COMMANDS[args.command](cfg, args)
    except (ConfigError, ParameterError, OSError) as e:
        print(f"invalid input: {e}", file=sys.stderr)
        return EXIT_INVALID
    except (CFLError, QuadratureError, FloatingPointError, OverflowError, ArithmeticError) as e:
        print(f"numerical failure: {e}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
