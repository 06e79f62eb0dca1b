"""Figures written next to the CSV outputs (Agg backend, PNG files)."""

from __future__ import annotations

from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402

__all__ = [
    "plot_trajectory",
    "plot_convergence",
    "plot_census",
    "plot_blowup",
    "plot_u_slice",
    "plot_expansions",
]

# fixed metadata keeps the PNG bytes reproducible
_META = {"Software": None}


def _save(fig, path: Path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fig.tight_layout()
    fig.savefig(path, dpi=110, metadata=_META)
    plt.close(fig)
    return path


def plot_trajectory(run, path) -> Path:
    b, e = run.baseline, run.jumped
    fig, ax = plt.subplots(2, 1, figsize=(8, 5), sharex=True)
    ax[0].plot(b.times, b.z, lw=0.8, label="z")
    ax[0].plot(e.times, e.z, lw=0.8, label=f"z eps={run.eps:g}")
    ax[0].axhline(b.Y, color="k", lw=0.5)
    ax[0].axhline(-b.Y, color="k", lw=0.5)
    ax[0].set_ylabel("z")
    ax[0].legend(loc="lower left", fontsize=8)
    ax[1].plot(b.times, b.y, lw=0.6, label="y")
    ax[1].plot(e.times, e.y, lw=0.6, label="y eps")
    for j in run.jumps:
        ax[1].axvline(j.tau, color="r", lw=0.3)
    ax[1].set_xlabel("t")
    ax[1].set_ylabel("y")
    return _save(fig, path)


def plot_convergence(rows, path) -> Path:
    eps = np.array([r.eps for r in rows])
    fig, ax = plt.subplots(1, 2, figsize=(9, 3.5))
    ax[0].errorbar(eps, [r.M_over_eps for r in rows], yerr=[2 * r.M_stderr for r in rows], marker="o")
    ax[0].set_xscale("log")
    ax[0].set_xlabel("eps")
    ax[0].set_ylabel("E[sup metric] / eps")
    ax[1].errorbar(eps, [r.eps_times_jumps for r in rows], yerr=[2 * r.eps * r.jumps_stderr for r in rows], marker="o")
    ax[1].set_xscale("log")
    ax[1].set_xlabel("eps")
    ax[1].set_ylabel("eps E[N_T]")
    return _save(fig, path)


def plot_census(rows, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 3.5))
    width = 0.8 / max(1, len(rows))
    for i, r in enumerate(rows):
        n = np.array(sorted(r.histogram))
        c = np.array([r.histogram[k] for k in n], dtype=float)
        ax.bar(n + i * width, c / c.sum(), width=width, label=f"eps={r.eps:g}")
    ax.set_xlabel("number of jumps")
    ax.set_ylabel("fraction of paths")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_blowup(rows, path) -> Path:
    eps = np.array([r.eps for r in rows])
    fig, ax = plt.subplots(figsize=(6, 4))
    for name in ("u_over_eps", "I_over_eps", "H_over_eps"):
        ax.plot(eps, [getattr(r, name) for r in rows], marker="o", label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("eps")
    ax.legend(fontsize=8)
    return _save(fig, path)


def plot_u_slice(y, z, u, t, path) -> Path:
    fig, ax = plt.subplots(figsize=(6, 4))
    m = ax.pcolormesh(z, y, u, shading="auto", vmin=0.0, vmax=1.0)
    fig.colorbar(m, ax=ax, label="u")
    ax.set_xlabel("z")
    ax.set_ylabel("y")
    ax.set_title(f"survival probability at t = {t:g}")
    return _save(fig, path)


def plot_expansions(rows, path) -> Path:
    """``rows``: iterable of ``(name, t, ratio)``."""
    fig, ax = plt.subplots(figsize=(7, 4.5))
    by_name: dict[str, list] = {}
    for name, t, ratio in rows:
        by_name.setdefault(name, []).append((t, ratio))
    for name, pts in by_name.items():
        t, r = np.array(pts).T
        ax.plot(t, np.abs(r), marker=".", lw=0.8, label=name)
    ax.set_xscale("log")
    ax.set_yscale("log")
    ax.set_xlabel("t")
    ax.set_ylabel("|exact - series| / t^(order+1)")
    ax.legend(fontsize=6, ncol=2)
    return _save(fig, path)
