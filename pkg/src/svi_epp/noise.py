"""Reproducible Brownian increment streams.

Each path is drawn from a Philox counter-based generator whose 128-bit key is
``(seed, path_index)``.  A path therefore depends on nothing but its
:class:`PathSpec`; batches, worker counts and scheduling order cannot change
a single bit of it.  Brownian-bridge refinement draws its extra randomness
from the same key with the high counter word set to the cumulative
refinement factor of that stage, so a refined path stays coupled to the
coarse one.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Iterator, Sequence

import numpy as np

__all__ = [
    "STORE_LIMIT",
    "PathSpec",
    "BrownianPath",
    "generate",
    "generate_batch",
    "iter_increments",
    "refine",
]

# stored paths are capped; longer horizons go through iter_increments
STORE_LIMIT = 10_000_000
_MAX_STEPS = 2**53
_U64 = 2**64


def _n_steps(t_end: float, dt: float) -> int:
    ratio = t_end / dt
    n = round(ratio)
    # grid-aligned horizons (t_end = n*dt up to rounding) must not gain a step
    if abs(ratio - n) > 1e-9 * max(1.0, ratio):
        n = math.ceil(ratio)
    return int(n)


@dataclass(frozen=True)
class PathSpec:
    """Everything that determines a Brownian path.

    ``refinements`` lists the Brownian-bridge subdivisions applied, in order,
    on top of the base grid ``dt``; the effective step is ``dt / refinement``
    where ``refinement`` is their product.
    """

    t_end: float
    dt: float
    seed: int
    path_index: int = 0
    refinements: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        if not (math.isfinite(self.t_end) and self.t_end > 0):
            raise ValueError(f"t_end must be finite and > 0, got {self.t_end!r}")
        if not (math.isfinite(self.dt) and self.dt > 0):
            raise ValueError(f"dt must be finite and > 0, got {self.dt!r}")
        if not 0 <= int(self.seed) < _U64:
            raise ValueError(f"seed must fit in 64 unsigned bits, got {self.seed!r}")
        if not 0 <= int(self.path_index) < _U64:
            raise ValueError(f"path_index must be a non-negative 64-bit integer, got {self.path_index!r}")
        if any(int(f) < 2 for f in self.refinements):
            raise ValueError(f"refinement factors must be >= 2, got {self.refinements}")
        n = self.t_end / self.dt * self.refinement
        if not math.isfinite(n) or n > _MAX_STEPS:
            raise OverflowError(f"step count t_end/dt = {n:g} is too large")

    @property
    def refinement(self) -> int:
        return math.prod(self.refinements)

    @property
    def base_steps(self) -> int:
        return _n_steps(self.t_end, self.dt)

    @property
    def n_steps(self) -> int:
        return self.base_steps * self.refinement

    @property
    def step(self) -> float:
        """Effective time step ``dt / refinement``."""
        return self.dt / self.refinement

    def times(self) -> np.ndarray:
        return self.step * np.arange(self.n_steps + 1)


@dataclass(frozen=True)
class BrownianPath:
    increments: np.ndarray
    spec: PathSpec

    def __post_init__(self) -> None:
        if self.increments.shape != (self.spec.n_steps,):
            raise ValueError(
                f"expected {self.spec.n_steps} increments, got shape {self.increments.shape}"
            )
        self.increments.setflags(write=False)

    @property
    def dt(self) -> float:
        return self.spec.step

    @property
    def n_steps(self) -> int:
        return self.spec.n_steps

    def times(self) -> np.ndarray:
        return self.spec.times()

    def values(self) -> np.ndarray:
        """Cumulative path ``w(t_i)`` with ``w(0) = 0``."""
        return np.concatenate(([0.0], np.cumsum(self.increments)))


def _generator(seed: int, path_index: int, stream: int = 0) -> np.random.Generator:
    key = np.array([int(seed), int(path_index)], dtype=np.uint64)
    counter = np.array([0, 0, 0, int(stream)], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=key, counter=counter))


def _base_increments(spec: PathSpec) -> np.ndarray:
    rng = _generator(spec.seed, spec.path_index)
    return rng.standard_normal(spec.base_steps) * math.sqrt(spec.dt)


def _bridge(coarse: np.ndarray, dt: float, factor: int, rng: np.random.Generator) -> np.ndarray:
    """Split each coarse increment into ``factor`` pieces with the bridge law."""
    xi = rng.standard_normal((coarse.size, factor)) * math.sqrt(dt / factor)
    fine = xi - xi.mean(axis=1, keepdims=True) + coarse[:, None] / factor
    # last piece absorbs the residual so every block sums back to the coarse step
    fine[:, -1] = coarse - fine[:, :-1].sum(axis=1)
    return fine.reshape(-1)


def generate(spec: PathSpec) -> BrownianPath:
    """Materialise the path described by ``spec``.

    Paths longer than :data:`STORE_LIMIT` steps must be streamed with
    :func:`iter_increments`.
    """
    if spec.n_steps > STORE_LIMIT:
        raise OverflowError(
            f"{spec.n_steps} steps exceeds the stored-path limit {STORE_LIMIT}; use iter_increments"
        )
    inc = _base_increments(spec)
    step, level = spec.dt, 1
    for f in spec.refinements:
        level *= f
        inc = _bridge(inc, step, f, _generator(spec.seed, spec.path_index, level))
        step /= f
    return BrownianPath(inc, spec)


def generate_batch(
    t_end: float,
    dt: float,
    seed: int,
    path_indices: Sequence[int],
    refinements: tuple[int, ...] = (),
) -> np.ndarray:
    """Increments for several paths as an ``(n_paths, n_steps)`` array.

    Row ``i`` is bit-identical to ``generate(PathSpec(t_end, dt, seed,
    path_indices[i], refinements)).increments``.
    """
    specs = [PathSpec(t_end, dt, seed, int(i), tuple(refinements)) for i in path_indices]
    if not specs:
        return np.empty((0, PathSpec(t_end, dt, seed, 0, tuple(refinements)).n_steps))
    out = np.empty((len(specs), specs[0].n_steps))
    for row, spec in zip(out, specs):
        row[:] = generate(spec).increments
    return out


def iter_increments(spec: PathSpec, chunk: int = 1_000_000) -> Iterator[np.ndarray]:
    """Stream the increments of ``spec`` in chunks of at most ``chunk`` steps.

    The concatenated chunks equal ``generate(spec).increments`` whenever the
    latter is allowed.
    """
    if chunk < 1:
        raise ValueError("chunk must be >= 1")
    rng = _generator(spec.seed, spec.path_index)
    sd = math.sqrt(spec.dt)
    stages = []
    step, level = spec.dt, 1
    for f in spec.refinements:
        level *= f
        stages.append((step, f, _generator(spec.seed, spec.path_index, level)))
        step /= f
    # bridging is sequential per coarse step, so chunking leaves the stream unchanged
    coarse_chunk = max(1, chunk // spec.refinement)
    remaining = spec.base_steps
    while remaining > 0:
        m = min(coarse_chunk, remaining)
        inc = rng.standard_normal(m) * sd
        for h, f, bridge_rng in stages:
            inc = _bridge(inc, h, f, bridge_rng)
        remaining -= m
        yield inc


def refine(path: BrownianPath, factor: int) -> BrownianPath:
    """Brownian-bridge refinement of ``path`` onto the grid ``dt / factor``.

    Each block of ``factor`` fine increments sums to the coarse increment it
    replaces (up to one rounding in the final addition).
    """
    if int(factor) != factor or factor < 2:
        raise ValueError(f"refinement factor must be an integer >= 2, got {factor!r}")
    factor = int(factor)
    spec = replace(path.spec, refinements=path.spec.refinements + (factor,))
    rng = _generator(spec.seed, spec.path_index, spec.refinement)
    fine = _bridge(np.asarray(path.increments), path.dt, factor, rng)
    return BrownianPath(fine, spec)
