"""Global-best particle swarm optimizer with inertia weight.

Each iteration: evaluate every particle, update personal bests (strict
improvement only), pick the global best, then move::

    v <- w v + c1 r1 (pbest - x) + c2 r2 (gbest - x),   |v_k| <= vmax_k
    x <- clip(x + v, lo, hi)                             (offending v_k := 0)

Random numbers come from ``numpy.random.Generator(PCG64(seed))``. Both ``r1``
and ``r2`` are drawn for the whole swarm, in particle order, before any
fitness call is dispatched, so a thread pool never changes the result.
"""
from __future__ import annotations

import logging
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, NamedTuple, Optional, Sequence

import numpy as np

__all__ = [
    "SwarmConfig",
    "Particle",
    "Swarm",
    "SwarmResult",
    "InvalidConfig",
    "FitnessNotFinite",
    "init_swarm",
    "pso_step",
    "optimize",
    "default_workers",
    "WORKERS_ENV",
]

log = logging.getLogger(__name__)

WORKERS_ENV = "DSTATCOM_WORKERS"

Fitness = Callable[[np.ndarray], float]


class InvalidConfig(ValueError):
    pass


class FitnessNotFinite(RuntimeWarning):
    """A fitness call returned NaN or inf; the evaluation counts as +inf."""


@dataclass(frozen=True)
class SwarmConfig:
    bounds: Sequence[tuple[float, float]] = ((0.0, 1000.0), (0.0, 500.0))
    n_particles: int = 30
    n_iterations: int = 50
    w: float = 0.7298
    c1: float = 1.49618
    c2: float = 1.49618
    vmax_fraction: float = 0.2
    seed: int = 0
    target_fitness: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(
            self, "bounds", tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        )
        self.validate()

    def validate(self) -> None:
        if self.n_particles < 2:
            raise InvalidConfig("n_particles must be at least 2")
        if self.n_iterations < 1:
            raise InvalidConfig("n_iterations must be at least 1")
        if not self.bounds:
            raise InvalidConfig("bounds must have at least one dimension")
        for lo, hi in self.bounds:
            if not (math.isfinite(lo) and math.isfinite(hi)) or lo > hi:
                raise InvalidConfig(f"bad bounds interval [{lo}, {hi}]")
        if not 0 < self.vmax_fraction <= 1:
            raise InvalidConfig("vmax_fraction must lie in (0, 1]")
        if min(self.w, self.c1, self.c2) < 0:
            raise InvalidConfig("w, c1 and c2 must be non-negative")
        if not 0 <= self.seed < 2**64:
            raise InvalidConfig("seed must be a 64-bit unsigned integer")

    @property
    def lower(self) -> np.ndarray:
        return np.array([b[0] for b in self.bounds])

    @property
    def upper(self) -> np.ndarray:
        return np.array([b[1] for b in self.bounds])

    @property
    def vmax(self) -> np.ndarray:
        return self.vmax_fraction * (self.upper - self.lower)


class Particle(NamedTuple):
    position: np.ndarray
    velocity: np.ndarray
    pbest_position: np.ndarray
    pbest_fitness: float


@dataclass
class Swarm:
    """Mutable swarm state, one row per particle."""

    positions: np.ndarray
    velocities: np.ndarray
    pbest_positions: np.ndarray
    pbest_fitness: np.ndarray
    rng: np.random.Generator
    gbest_position: Optional[np.ndarray] = None
    gbest_fitness: float = math.inf
    iteration: int = 0
    evaluations: int = 0
    nonfinite: list = field(default_factory=list)

    @property
    def size(self) -> int:
        return self.positions.shape[0]

    def particle(self, i: int) -> Particle:
        return Particle(
            self.positions[i].copy(),
            self.velocities[i].copy(),
            self.pbest_positions[i].copy(),
            float(self.pbest_fitness[i]),
        )


class SwarmResult(NamedTuple):
    gbest_position: np.ndarray
    gbest_fitness: float
    history: list  # (iteration, gbest_fitness, gbest_position) per iteration
    evaluations: int
    nonfinite: list


def default_workers() -> int:
    raw = os.environ.get(WORKERS_ENV)
    if raw:
        try:
            return max(1, int(raw))
        except ValueError:
            raise InvalidConfig(f"{WORKERS_ENV} must be an integer, got {raw!r}")
    return os.cpu_count() or 1


def init_swarm(cfg: SwarmConfig) -> Swarm:
    cfg.validate()
    rng = np.random.Generator(np.random.PCG64(cfg.seed))
    lo, hi = cfg.lower, cfg.upper
    n, d = cfg.n_particles, lo.size
    positions = lo + (hi - lo) * rng.random((n, d))
    vmax = cfg.vmax
    velocities = -vmax + 2.0 * vmax * rng.random((n, d))
    return Swarm(
        positions=positions,
        velocities=velocities,
        pbest_positions=positions.copy(),
        pbest_fitness=np.full(n, np.inf),
        rng=rng,
    )


def _evaluate(fitness: Fitness, positions: np.ndarray, pool) -> np.ndarray:
    rows = [positions[i].copy() for i in range(positions.shape[0])]
    values = list(pool.map(fitness, rows)) if pool is not None else [fitness(r) for r in rows]
    return np.array(values, dtype=float)


def pso_step(swarm: Swarm, fitness: Fitness, cfg: SwarmConfig, pool=None) -> Swarm:
    """Evaluate, update personal and global bests, then move every particle.

    ``pool`` is an optional executor with a ``map`` method.
    """
    n, d = swarm.positions.shape
    r1 = swarm.rng.random((n, d))
    r2 = swarm.rng.random((n, d))

    values = _evaluate(fitness, swarm.positions, pool)
    swarm.evaluations += n
    bad = ~np.isfinite(values)
    if bad.any():
        for i in np.flatnonzero(bad):
            swarm.nonfinite.append((swarm.iteration, int(i)))
        warnings.warn(
            f"{int(bad.sum())} non-finite fitness value(s) at iteration {swarm.iteration}",
            FitnessNotFinite,
            stacklevel=2,
        )
        values = np.where(bad, np.inf, values)

    improved = values < swarm.pbest_fitness
    swarm.pbest_fitness = np.where(improved, values, swarm.pbest_fitness)
    swarm.pbest_positions = np.where(improved[:, None], swarm.positions, swarm.pbest_positions)

    best = int(np.argmin(swarm.pbest_fitness))
    if swarm.gbest_position is None or swarm.pbest_fitness[best] < swarm.gbest_fitness:
        swarm.gbest_fitness = float(swarm.pbest_fitness[best])
        swarm.gbest_position = swarm.pbest_positions[best].copy()

    # an all-infinite first iteration still needs an attractor
    gbest = swarm.gbest_position if swarm.gbest_position is not None else swarm.pbest_positions[best]
    vmax = cfg.vmax
    v = (
        cfg.w * swarm.velocities
        + cfg.c1 * r1 * (swarm.pbest_positions - swarm.positions)
        + cfg.c2 * r2 * (gbest - swarm.positions)
    )
    v = np.clip(v, -vmax, vmax)
    x = swarm.positions + v
    lo, hi = cfg.lower, cfg.upper
    out = (x < lo) | (x > hi)
    swarm.positions = np.clip(x, lo, hi)
    swarm.velocities = np.where(out, 0.0, v)
    swarm.iteration += 1
    return swarm


def optimize(
    fitness: Fitness,
    cfg: SwarmConfig,
    workers: Optional[int] = None,
    callback: Optional[Callable[[Swarm], None]] = None,
) -> SwarmResult:
    """Run the swarm for ``cfg.n_iterations`` or until ``target_fitness`` is met.

    ``workers`` defaults to :func:`default_workers`; results do not depend on it.
    """
    swarm = init_swarm(cfg)
    workers = default_workers() if workers is None else max(1, int(workers))
    history = []
    pool = ThreadPoolExecutor(max_workers=workers) if workers > 1 else None
    try:
        for _ in range(cfg.n_iterations):
            pso_step(swarm, fitness, cfg, pool)
            history.append((swarm.iteration, swarm.gbest_fitness, swarm.gbest_position.copy()))
            log.debug("iteration %d: gbest %.6g at %s", swarm.iteration, swarm.gbest_fitness, swarm.gbest_position)
            if callback is not None:
                callback(swarm)
            if cfg.target_fitness is not None and swarm.gbest_fitness <= cfg.target_fitness:
                break
    finally:
        if pool is not None:
            pool.shutdown()
    return SwarmResult(
        swarm.gbest_position.copy(),
        swarm.gbest_fitness,
        history,
        swarm.evaluations,
        list(swarm.nonfinite),
    )
