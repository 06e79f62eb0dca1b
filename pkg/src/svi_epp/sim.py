"""Simulation of the constrained oscillator and its eps-jump approximation.

Both processes use the same step: a semi-implicit Euler update of ``y``
followed by ``z' = clamp(z + y' dt, -Y, Y)``.  The jumped process is reset to
``(0, sigma (Y - eps))`` at the first step where it was plastic with sign
``sigma`` and its new velocity satisfies ``y sigma <= 0``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import _kernels
from .model import OscillatorParams, Regime, State, StateError
from .noise import BrownianPath

__all__ = [
    "Trajectory",
    "JumpRecord",
    "CoupledRun",
    "EnergyReport",
    "PhaseSummary",
    "step_svi",
    "simulate_baseline",
    "simulate_coupled",
    "sup_metric",
    "check_energy_inequality",
    "phase_statistics",
    "write_trajectory_csv",
]


@dataclass(frozen=True)
class Trajectory:
    """Grid values of ``(y, z)`` with regime labels (``Regime`` integer values)."""

    times: np.ndarray
    y: np.ndarray
    z: np.ndarray
    regimes: np.ndarray
    Y: float

    def __len__(self) -> int:
        return self.times.size

    @property
    def states(self) -> list[State]:
        return [State(float(a), float(b)) for a, b in zip(self.y, self.z)]


@dataclass(frozen=True)
class JumpRecord:
    """One reset of the jumped process.

    ``y_pre, z_pre`` is the state the ordinary step produced at grid index
    ``step`` before the reset (the discrete ``tau-`` values).
    """

    tau: float
    sigma: int
    index_n: int
    step: int
    y_pre: float
    z_pre: float


@dataclass(frozen=True)
class CoupledRun:
    baseline: Trajectory
    jumped: Trajectory
    jumps: tuple[JumpRecord, ...]
    eps: float
    dt: float

    @property
    def n_jumps(self) -> int:
        return len(self.jumps)


def _regimes(y: np.ndarray, z: np.ndarray, Y: float) -> np.ndarray:
    r = np.zeros(y.shape, dtype=np.int8)
    r[(z == Y) & (y > 0)] = int(Regime.PLASTIC_POSITIVE)
    r[(z == -Y) & (y < 0)] = int(Regime.PLASTIC_NEGATIVE)
    return r


def _check_init(init: State, p: OscillatorParams) -> None:
    if not (math.isfinite(init.y) and math.isfinite(init.z)):
        raise StateError(f"non-finite initial state {init}")
    if abs(init.z) > p.Y:
        raise StateError(f"|z| = {abs(init.z)!r} exceeds Y = {p.Y!r}")


def step_svi(s: State, dw: float, dt: float, p: OscillatorParams) -> State:
    """One step of the projected scheme.

    Examples
    --------
    >>> from svi_epp.model import validate_params
    >>> step_svi(State(0.5, 1.0), 0.0, 1e-3, validate_params(1, 1, 1))
    State(y=0.4985, z=1.0)
    """
    if not all(math.isfinite(v) for v in (s.y, s.z, dw, dt)):
        raise ValueError(f"non-finite input to step_svi: state={s}, dw={dw}, dt={dt}")
    if dt <= 0:
        raise ValueError("dt must be > 0")
    _check_init(s, p)
    y, z = _kernels.svi_step(float(s.y), float(s.z), float(dw), float(dt), p.c0, p.k, p.Y)
    return State(y, z)


def simulate_baseline(init: State, path: BrownianPath, p: OscillatorParams) -> Trajectory:
    _check_init(init, p)
    inc = np.ascontiguousarray(path.increments, dtype=float)
    if not np.all(np.isfinite(inc)):
        raise ValueError("path increments must be finite")
    ys, zs = _kernels.baseline_record(float(init.y), float(init.z), inc, path.dt, p.c0, p.k, p.Y)
    return Trajectory(path.times(), ys, zs, _regimes(ys, zs, p.Y), p.Y)


def simulate_coupled(init: State, path: BrownianPath, p: OscillatorParams, eps: float) -> CoupledRun:
    """Baseline and eps-jump processes on the same Brownian path.

    A start on the boundary with outward velocity begins in the plastic
    regime; the first jump waits for the first sign change of ``y``.
    """
    if not 0 < eps < p.Y:
        raise ValueError(f"eps must lie in (0, Y = {p.Y}), got {eps!r}")
    _check_init(init, p)
    inc = np.ascontiguousarray(path.increments, dtype=float)
    if not np.all(np.isfinite(inc)):
        raise ValueError("path increments must be finite")
    dt = path.dt
    yb, zb, ye, ze, idx, sig, ypre, zpre, _ = _kernels.coupled_record(
        float(init.y), float(init.z), inc, dt, p.c0, p.k, p.Y, float(eps)
    )
    t = path.times()
    jumps = tuple(
        JumpRecord(float(t[i]), int(s), n + 1, int(i), float(a), float(b))
        for n, (i, s, a, b) in enumerate(zip(idx, sig, ypre, zpre))
    )
    return CoupledRun(
        baseline=Trajectory(t, yb, zb, _regimes(yb, zb, p.Y), p.Y),
        jumped=Trajectory(t, ye, ze, _regimes(ye, ze, p.Y), p.Y),
        jumps=jumps,
        eps=float(eps),
        dt=dt,
    )


def sup_metric(run: CoupledRun, p: OscillatorParams) -> float:
    """``max_t |y - y^eps|^2 + k |z - z^eps|^2`` over the grid."""
    a, b = run.baseline, run.jumped
    return float(np.max((a.y - b.y) ** 2 + p.k * (a.z - b.z) ** 2))


@dataclass(frozen=True)
class EnergyReport:
    """Per-segment check of the discrete energy inequality.

    ``margins[n] = k eps^2 - LHS_n`` for the segment starting at jump ``n``;
    a segment fails when its margin is below ``-slack``.
    """

    margins: np.ndarray
    slack: float

    @property
    def worst_margin(self) -> float:
        return float(self.margins.min()) if self.margins.size else math.inf

    @property
    def n_violations(self) -> int:
        return int(np.sum(self.margins < -self.slack))

    @property
    def passed(self) -> bool:
        return self.n_violations == 0


def check_energy_inequality(run: CoupledRun, p: OscillatorParams, slack: float | None = None, c: float = 10.0) -> EnergyReport:
    """Discrete energy inequality between consecutive jumps.

    For the segment from jump ``n`` to jump ``n+1`` (or to the horizon)::

        |dy(end)|^2 + k |dz(end)|^2 - |y(tau_n)|^2 - k |z(tau_n) - z^eps(tau_n-)|^2
            + 2 c0 sum |dy|^2 dt  <=  k eps^2

    with ``d = baseline - jumped`` and the pre-reset jumped state at a jump
    end point.  The sum is a left Riemann sum.  ``slack`` defaults to
    ``c (dt + sqrt(dt) eps)``.
    """
    dt, eps = run.dt, run.eps
    if slack is None:
        slack = c * (dt + math.sqrt(dt) * eps)
    if not run.jumps:
        return EnergyReport(np.empty(0), slack)
    dy = run.baseline.y - run.jumped.y
    dz = run.baseline.z - run.jumped.z
    steps = [j.step for j in run.jumps]
    ends = steps[1:] + [len(run.baseline) - 1]
    yb, zb = run.baseline.y, run.baseline.z
    margins = []
    for n, (j, i0, i1) in enumerate(zip(run.jumps, steps, ends)):
        start = yb[i0] ** 2 + p.k * (zb[i0] - j.z_pre) ** 2
        if n + 1 < len(run.jumps):
            nxt = run.jumps[n + 1]
            e_y, e_z = yb[i1] - nxt.y_pre, zb[i1] - nxt.z_pre
        else:
            e_y, e_z = dy[i1], dz[i1]
        integral = float(np.sum(dy[i0:i1] ** 2)) * dt
        lhs = e_y**2 + p.k * e_z**2 - start + 2 * p.c0 * integral
        margins.append(p.k * eps**2 - lhs)
    return EnergyReport(np.array(margins), slack)


@dataclass(frozen=True)
class PhaseSummary:
    """Maximal plastic segments of a trajectory.

    ``deformation`` holds ``sum y dt`` over each segment (the plastic
    increment), ``gaps`` the elastic time between consecutive segments and
    ``gap_depth`` the largest ``Y - |z|`` reached in each gap.
    """

    n_segments: int
    durations: np.ndarray
    signs: np.ndarray
    deformation: np.ndarray
    gaps: np.ndarray
    gap_depth: np.ndarray

    @property
    def plastic_time(self) -> float:
        return float(self.durations.sum())


def phase_statistics(traj: Trajectory) -> PhaseSummary:
    r = np.asarray(traj.regimes)
    dt = float(traj.times[1] - traj.times[0]) if len(traj) > 1 else 0.0
    plastic = r != 0
    # segment boundaries: changes of the label, including switches between signs
    edges = np.flatnonzero(np.diff(np.concatenate(([0], r.astype(np.int64), [0]))) != 0)
    starts, stops = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        if plastic[a]:
            starts.append(a)
            stops.append(b)
    starts = np.array(starts, dtype=np.int64)
    stops = np.array(stops, dtype=np.int64)
    durations = (stops - starts) * dt
    signs = r[starts].astype(np.int64) if starts.size else np.empty(0, dtype=np.int64)
    deformation = np.array([traj.y[a:b].sum() * dt for a, b in zip(starts, stops)])
    gaps = (starts[1:] - stops[:-1]) * dt if starts.size > 1 else np.empty(0)
    depth = np.array(
        [traj.Y - np.abs(traj.z[a:b]).min() for a, b in zip(stops[:-1], starts[1:])]
    ) if starts.size > 1 else np.empty(0)
    return PhaseSummary(starts.size, durations, signs, deformation, gaps, depth)


def write_trajectory_csv(run: CoupledRun, path: str | Path, stride: int = 1) -> Path:
    """Columns ``t, y, z, regime, y_eps, z_eps, jump_flag``; every ``stride``-th row plus all jumps."""
    path = Path(path)
    jump_steps = {j.step for j in run.jumps}
    keep = sorted(set(range(0, len(run.baseline), max(1, stride))) | jump_steps)
    b, e = run.baseline, run.jumped
    with path.open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "y", "z", "regime", "y_eps", "z_eps", "jump_flag"])
        for i in keep:
            w.writerow([
                repr(float(b.times[i])), repr(float(b.y[i])), repr(float(b.z[i])), int(b.regimes[i]),
                repr(float(e.y[i])), repr(float(e.z[i])), int(i in jump_steps),
            ])
    return path
