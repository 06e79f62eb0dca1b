"""Experiment configuration and the Monte Carlo sweeps over eps.

All sweeps reuse one set of Brownian paths across the eps values (paired
design).  Batches may run on several threads; every statistic is reduced in
path order so the output does not depend on the worker count.
"""

from __future__ import annotations

import csv
import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np

from . import _kernels
from .model import OscillatorParams, ParameterError, validate_params
from .noise import PathSpec, generate_batch
from .parallel import batches, worker_count

__all__ = [
    "ConfigError",
    "ExperimentConfig",
    "ConvergenceRow",
    "ConvergenceTable",
    "CensusRow",
    "PathStats",
    "load_config",
    "simulate_stats",
    "run_convergence",
    "run_jump_census",
    "write_convergence_csv",
    "write_census_csv",
]

BATCH = 256


class ConfigError(ValueError):
    """Invalid experiment configuration; ``field`` names the offending key."""

    def __init__(self, field: str, msg: str):
        super().__init__(f"{field}: {msg}")
        self.field = field


_FIELDS = ("params", "T", "dt", "eps_list", "n_paths", "seed", "output_dir")
_PARAM_FIELDS = ("c0", "k", "Y")


@dataclass(frozen=True)
class ExperimentConfig:
    params: OscillatorParams = field(default_factory=lambda: validate_params(1.0, 1.0, 1.0))
    T: float = 4.0
    dt: float = 1e-3
    eps_list: tuple[float, ...] = (0.2, 0.1, 0.05, 0.025)
    n_paths: int = 10_000
    seed: int = 20240601
    output_dir: str = "out"

    def __post_init__(self) -> None:
        _validate(self)

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        if not isinstance(d, dict):
            raise ConfigError("<root>", "config must be a JSON object")
        unknown = sorted(set(d) - set(_FIELDS))
        if unknown:
            raise ConfigError(unknown[0], f"unknown key(s) {unknown}")
        kw = dict(d)
        if "params" in kw:
            pd = kw["params"]
            if not isinstance(pd, dict):
                raise ConfigError("params", "must be an object with c0, k, Y")
            bad = sorted(set(pd) - set(_PARAM_FIELDS))
            if bad:
                raise ConfigError(f"params.{bad[0]}", f"unknown key(s) {bad}")
            merged = {"c0": 1.0, "k": 1.0, "Y": 1.0, **pd}
            try:
                kw["params"] = validate_params(*(_number(f"params.{n}", merged[n]) for n in _PARAM_FIELDS))
            except ParameterError as e:
                raise ConfigError("params", f"{e} (requires {e.condition})") from e
        if "eps_list" in kw:
            if not isinstance(kw["eps_list"], (list, tuple)):
                raise ConfigError("eps_list", "must be a list of numbers")
            kw["eps_list"] = tuple(_number("eps_list", e) for e in kw["eps_list"])
        for name in ("T", "dt"):
            if name in kw:
                kw[name] = _number(name, kw[name])
        for name in ("n_paths", "seed"):
            if name in kw:
                v = kw[name]
                if isinstance(v, bool) or not isinstance(v, int):
                    raise ConfigError(name, f"must be an integer, got {v!r}")
        if "output_dir" in kw and not isinstance(kw["output_dir"], str):
            raise ConfigError("output_dir", "must be a string")
        return cls(**kw)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["params"] = self.params.as_dict()
        d["eps_list"] = list(self.eps_list)
        return d

    def replace(self, **changes) -> "ExperimentConfig":
        d = self.to_dict()
        d.update(changes)
        return ExperimentConfig.from_dict(d)


def _number(name: str, v) -> float:
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(name, f"must be a number, got {v!r}")
    v = float(v)
    if not math.isfinite(v):
        raise ConfigError(name, "must be finite")
    return v


def _validate(cfg: ExperimentConfig) -> None:
    if not isinstance(cfg.params, OscillatorParams):
        raise ConfigError("params", "must be OscillatorParams")
    if not cfg.T > 0:
        raise ConfigError("T", f"must be > 0, got {cfg.T}")
    if not cfg.dt > 0:
        raise ConfigError("dt", f"must be > 0, got {cfg.dt}")
    if cfg.dt > cfg.T:
        raise ConfigError("dt", "must not exceed T")
    eps = tuple(cfg.eps_list)
    if not eps:
        raise ConfigError("eps_list", "must not be empty")
    if any(not (0 < e < cfg.params.Y) for e in eps):
        raise ConfigError("eps_list", f"every eps must lie in (0, Y = {cfg.params.Y})")
    if any(b >= a for a, b in zip(eps, eps[1:])):
        raise ConfigError("eps_list", "must be strictly decreasing")
    if cfg.n_paths < 100:
        raise ConfigError("n_paths", f"must be >= 100, got {cfg.n_paths}")
    if not 0 <= cfg.seed < 2**64:
        raise ConfigError("seed", "must fit in 64 unsigned bits")
    if cfg.dt > 10.0 * min(eps) ** 2:
        raise ConfigError("dt", f"dt = {cfg.dt:g} exceeds 10 * min(eps)^2 = {10 * min(eps) ** 2:g}")


def load_config(path: str | Path) -> ExperimentConfig:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except json.JSONDecodeError as e:
        raise ConfigError("<file>", f"invalid JSON: {e}") from e
    return ExperimentConfig.from_dict(d)


@dataclass(frozen=True)
class PathStats:
    """Per-path results of the coupled runs, ``[eps index, path index]``."""

    eps: np.ndarray
    sup: np.ndarray
    jumps: np.ndarray
    margin: np.ndarray


def simulate_stats(
    cfg: ExperimentConfig,
    dt: float | None = None,
    init: tuple[float, float] = (0.0, 0.0),
    threads: int | None = None,
) -> PathStats:
    """Coupled runs for every eps on the path set ``0 .. n_paths-1`` of ``cfg.seed``."""
    p = cfg.params
    dt = cfg.dt if dt is None else dt
    n_steps = PathSpec(cfg.T, dt, cfg.seed).n_steps
    h = cfg.T / n_steps
    eps = np.array(cfg.eps_list, dtype=float)
    sup = np.empty((eps.size, cfg.n_paths))
    jumps = np.empty((eps.size, cfg.n_paths), dtype=np.int64)
    margin = np.empty((eps.size, cfg.n_paths))

    def work(rng):
        lo, hi = rng
        incs = generate_batch(cfg.T, dt, cfg.seed, range(lo, hi))
        for e_i, e in enumerate(eps):
            _kernels.coupled_stats(
                float(init[0]), float(init[1]), incs, h, p.c0, p.k, p.Y, float(e),
                sup[e_i, lo:hi], jumps[e_i, lo:hi], margin[e_i, lo:hi],
            )

    with ThreadPoolExecutor(max_workers=worker_count(threads)) as ex:
        list(ex.map(work, batches(cfg.n_paths, BATCH)))
    return PathStats(eps, sup, jumps, margin)


@dataclass(frozen=True)
class ConvergenceRow:
    eps: float
    M_over_eps: float
    M_stderr: float
    mean_jumps: float
    jumps_stderr: float
    eps_times_jumps: float

    @property
    def eps_jumps_stderr(self) -> float:
        return self.eps * self.jumps_stderr


@dataclass(frozen=True)
class ConvergenceTable:
    rows: list[ConvergenceRow]
    stats: PathStats

    def trend(self, attr: str) -> tuple[float, float]:
        """``(first - last, combined std-error)`` of ``M_over_eps`` or ``eps_times_jumps``."""
        a, b = self.rows[0], self.rows[-1]
        if attr == "M_over_eps":
            se = math.hypot(a.M_stderr, b.M_stderr)
        elif attr == "eps_times_jumps":
            se = math.hypot(a.eps_jumps_stderr, b.eps_jumps_stderr)
        else:
            raise ValueError(attr)
        return getattr(a, attr) - getattr(b, attr), se

    def decreases(self, attr: str, k: float = 2.0) -> bool:
        d, se = self.trend(attr)
        return d > k * se


def _sem(x: np.ndarray) -> float:
    return float(np.std(x, ddof=1) / math.sqrt(x.size))


def run_convergence(cfg: ExperimentConfig, threads: int | None = None, write: bool = True) -> ConvergenceTable:
    """Paired sweep of ``E[sup metric]/eps`` and ``eps E[N_T]`` over ``cfg.eps_list``."""
    stats = simulate_stats(cfg, threads=threads)
    rows = []
    for e, s, n in zip(stats.eps, stats.sup, stats.jumps):
        e = float(e)
        mj = float(n.mean())
        rows.append(ConvergenceRow(e, float(s.mean()) / e, _sem(s) / e, mj, _sem(n.astype(float)), e * mj))
    table = ConvergenceTable(rows, stats)
    if write:
        write_convergence_csv(table, Path(cfg.output_dir) / "converge.csv")
    return table


def _fmt(x: float) -> str:
    return repr(float(x))


def write_convergence_csv(table: ConvergenceTable, path: str | Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "M_over_eps", "M_stderr", "mean_jumps", "jumps_stderr", "eps_times_jumps"])
        for r in table.rows:
            w.writerow([_fmt(r.eps), _fmt(r.M_over_eps), _fmt(r.M_stderr), _fmt(r.mean_jumps),
                        _fmt(r.jumps_stderr), _fmt(r.eps_times_jumps)])
    return path


@dataclass(frozen=True)
class CensusRow:
    """Jump-count distribution at one eps and the bound ``E[N] <= 1/u``.

    ``first_jump_prob / u_probe`` is the sharper bound obtained by summing the
    geometric tail from the first jump; it is reported alongside.
    """

    eps: float
    histogram: dict[int, int]
    mean_jumps: float
    stderr: float
    first_jump_prob: float
    u_probe: float

    @property
    def bound(self) -> float:
        return 1.0 / self.u_probe if self.u_probe > 0 else math.inf

    @property
    def sharp_bound(self) -> float:
        return self.first_jump_prob / self.u_probe if self.u_probe > 0 else math.inf

    @property
    def bound_holds(self) -> bool:
        return self.mean_jumps <= self.bound + 3.0 * self.stderr


def run_jump_census(
    cfg: ExperimentConfig,
    u_values: dict[float, float] | None = None,
    threads: int | None = None,
    write: bool = True,
) -> list[CensusRow]:
    """Empirical law of ``N_T^eps`` per eps, checked against ``1/u(0, Y - eps, 0)``.

    ``u_values`` maps eps to the survival probability; when omitted it comes
    from one PDE solve on :meth:`Grid2D.for_params` with horizon ``cfg.T``.
    """
    if u_values is None:
        from .exit_prob import Grid2D, solve_u, u_probe

        u = solve_u(Grid2D.for_params(cfg.params, cfg.T), cfg.params, save_times=[])
        u_values = {e: u_probe(u, e) for e in cfg.eps_list}
    stats = simulate_stats(cfg, threads=threads)
    rows = []
    for e, n in zip(stats.eps, stats.jumps):
        vals, counts = np.unique(n, return_counts=True)
        rows.append(CensusRow(
            eps=float(e),
            histogram={int(v): int(c) for v, c in zip(vals, counts)},
            mean_jumps=float(n.mean()),
            stderr=_sem(n.astype(float)),
            first_jump_prob=float(np.mean(n > 0)),
            u_probe=float(u_values[float(e)]),
        ))
    if write:
        write_census_csv(rows, Path(cfg.output_dir) / "census.csv")
    return rows


def write_census_csv(rows: list[CensusRow], path: str | Path) -> Path:
    """Histogram rows ``eps, n, count``; summary rows carry a label in ``n``."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["eps", "n", "count"])
        for r in rows:
            for n, c in sorted(r.histogram.items()):
                w.writerow([_fmt(r.eps), n, c])
        for r in rows:
            for label, v in (
                ("mean", r.mean_jumps),
                ("stderr", r.stderr),
                ("first_jump_prob", r.first_jump_prob),
                ("u_probe", r.u_probe),
                ("bound", r.bound),
                ("sharp_bound", r.sharp_bound),
                ("bound_holds", int(r.bound_holds)),
            ):
                w.writerow([_fmt(r.eps), label, _fmt(v) if label != "bound_holds" else v])
    return path
