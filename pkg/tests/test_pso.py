import math
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dstatcom.benchmarks import rosenbrock, sphere
from dstatcom.pso import (
    FitnessNotFinite,
    InvalidConfig,
    Swarm,
    SwarmConfig,
    init_swarm,
    optimize,
    pso_step,
)

SEEDS = range(5)


def test_config_validation():
    with pytest.raises(InvalidConfig):
        SwarmConfig(n_particles=1)
    with pytest.raises(InvalidConfig):
        SwarmConfig(bounds=[(1.0, 0.0)])
    with pytest.raises(InvalidConfig):
        SwarmConfig(vmax_fraction=0.0)
    with pytest.raises(InvalidConfig):
        SwarmConfig(w=-0.1)
    with pytest.raises(InvalidConfig):
        SwarmConfig(n_iterations=0)


def test_init_deterministic():
    a, b = init_swarm(SwarmConfig(seed=7)), init_swarm(SwarmConfig(seed=7))
    assert np.array_equal(a.positions, b.positions)
    assert np.array_equal(a.velocities, b.velocities)
    assert not np.array_equal(a.positions, init_swarm(SwarmConfig(seed=8)).positions)


@settings(max_examples=50, deadline=None)
@given(st.integers(0, 2**64 - 1))
def test_init_inside_bounds(seed):
    cfg = SwarmConfig(seed=seed)
    s = init_swarm(cfg)
    assert np.all(s.positions >= cfg.lower) and np.all(s.positions <= cfg.upper)
    assert np.all(np.abs(s.velocities) <= cfg.vmax)
    assert np.array_equal(s.pbest_positions, s.positions)


def test_init_degenerate_interval():
    s = init_swarm(SwarmConfig(bounds=[(5.0, 5.0)], n_particles=2))
    assert np.all(s.positions == 5.0)


def _single(position, w=0.7298, c1=1.49618):
    x = np.array([position], dtype=float)
    cfg = SwarmConfig(bounds=[(-10, 10)] * x.shape[1], w=w, c1=c1)
    swarm = Swarm(
        positions=x.copy(), velocities=np.zeros_like(x), pbest_positions=x.copy(),
        pbest_fitness=np.array([sphere(x[0])]), rng=np.random.default_rng(0),
    )
    return swarm, cfg


def test_fixed_point_single_particle():
    swarm, cfg = _single([1.0, -2.0])
    for _ in range(5):
        pso_step(swarm, sphere, cfg)
        assert np.array_equal(swarm.positions, [[1.0, -2.0]])
        assert np.all(swarm.velocities == 0.0)


def test_no_inertia_no_cognition_at_gbest():
    swarm, cfg = _single([3.0, 4.0], w=0.0, c1=0.0)
    for _ in range(5):
        pso_step(swarm, sphere, cfg)
    assert np.array_equal(swarm.positions, [[3.0, 4.0]])


@pytest.mark.parametrize("seed", SEEDS)
def test_sphere(seed):
    r = optimize(sphere, SwarmConfig(bounds=[(-10, 10)] * 2, n_iterations=100, seed=seed), workers=1)
    assert r.gbest_fitness < 1e-6


def test_rosenbrock():
    hits = sum(
        optimize(rosenbrock, SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=200, seed=s), workers=1).gbest_fitness
        < 1e-2
        for s in SEEDS
    )
    assert hits >= 4


def test_constant_fitness():
    r = optimize(lambda z: 7.0, SwarmConfig(bounds=[(0, 1)] * 2, n_iterations=10, seed=1), workers=1)
    assert r.gbest_fitness == 7.0
    assert [h[1] for h in r.history] == [7.0] * 10
    assert r.evaluations == 300


def test_invariants_along_run():
    cfg = SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=40, seed=3)
    swarm = init_swarm(cfg)
    evaluated = [[] for _ in range(swarm.size)]
    history = []
    for _ in range(cfg.n_iterations):
        before = swarm.positions.copy()
        pso_step(swarm, rosenbrock, cfg)
        for i, x in enumerate(before):
            evaluated[i].append(rosenbrock(x))
        history.append(swarm.gbest_fitness)
        assert np.all(swarm.positions >= cfg.lower) and np.all(swarm.positions <= cfg.upper)
        for i in range(swarm.size):
            assert swarm.pbest_fitness[i] == min(evaluated[i])
            assert swarm.pbest_fitness[i] == rosenbrock(swarm.pbest_positions[i])
    assert np.all(np.diff(history) <= 0)


def test_scale_invariance():
    cfg = SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=30, seed=11)
    a = optimize(rosenbrock, cfg, workers=1)
    b = optimize(lambda z: 37.5 * rosenbrock(z), cfg, workers=1)
    assert all(np.array_equal(ha[2], hb[2]) for ha, hb in zip(a.history, b.history))


def test_parallel_matches_serial():
    cfg = SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=30, seed=5)
    serial = optimize(rosenbrock, cfg, workers=1)
    parallel = optimize(rosenbrock, cfg, workers=4)
    assert serial.gbest_fitness == parallel.gbest_fitness
    assert all(np.array_equal(x[2], y[2]) for x, y in zip(serial.history, parallel.history))


def test_nonfinite_fitness_is_survived():
    def f(z):
        return math.nan if z[0] > 0 else sphere(z)

    with pytest.warns(FitnessNotFinite):
        r = optimize(f, SwarmConfig(bounds=[(-5, 5)] * 2, n_iterations=20, seed=2), workers=1)
    assert r.nonfinite
    assert math.isfinite(r.gbest_fitness)
    assert r.gbest_position[0] <= 0


def test_early_stop():
    cfg = SwarmConfig(bounds=[(-10, 10)] * 2, n_iterations=500, seed=0, target_fitness=1e-3)
    r = optimize(sphere, cfg, workers=1)
    assert r.gbest_fitness <= 1e-3
    assert len(r.history) < 500
