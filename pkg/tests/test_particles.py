import dataclasses

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from mfgtraffic.config import ModelParams, initial_density
from mfgtraffic.particles import (ParticleEnsemble, ParticleStreams, empirical_vs_fk,
                                  interpolate_feedback, reflect, sample_from_density, simulate,
                                  step_particles)
from mfgtraffic.trajectory import TimeGrid, TrajectoryStore

from conftest import uniform_density


def test_reflection_examples():
    assert reflect(np.array([30.4]), 30.0)[0] == pytest.approx(29.6)
    assert reflect(np.array([-1.5]), 30.0)[0] == 1.5
    assert reflect(np.array([-65.0]), 30.0)[0] == pytest.approx(5.0)
    assert reflect(np.array([12.0]), 30.0)[0] == 12.0


@given(st.lists(st.floats(-1e5, 1e5, allow_nan=False), min_size=1, max_size=50),
       st.floats(0.5, 50))
def test_reflection_always_lands_inside(vs, s_max):
    out = reflect(np.array(vs), s_max)
    assert np.all((out >= 0) & (out <= s_max))


def test_step_free_flight():
    p = dataclasses.replace(ModelParams(), alpha=0.0, epsilon=0.0)
    ens = ParticleEnsemble(x=np.array([5.0]), v=np.array([10.0]))
    out = step_particles(ens, 0.0, 0.0, 1.0, p, None)
    assert out.x[0] == 15.0 and out.v[0] == 10.0 and out.t == 1.0
    wrapped = step_particles(ParticleEnsemble(np.array([p.L - 2.0]), np.array([10.0])), 0, 0,
                             1.0, p, None)
    assert wrapped.x[0] == pytest.approx(8.0)
    with pytest.raises(ValueError):
        step_particles(ens, 0, 0, 0.0, p, None)


def test_step_reflects_at_speed_limit():
    p = dataclasses.replace(ModelParams(), alpha=0.0, epsilon=0.0)
    out = step_particles(ParticleEnsemble(np.array([0.0]), np.array([29.9])), 0.3, 0.2, 1.0, p,
                         None)
    assert out.v[0] == pytest.approx(29.6)


def test_drag_ode_closed_form():
    p = dataclasses.replace(ModelParams(), epsilon=0.0)
    ens = ParticleEnsemble(x=np.zeros(3), v=np.full(3, 30.0))
    for _ in range(30000):
        ens = step_particles(ens, 0.0, 0.0, 0.001, p, None)
    exact = 30.0 / (1 + p.alpha * 30.0 * 30.0)
    assert exact == pytest.approx(25.117, abs=1e-3)
    assert np.all(np.abs(ens.v - exact) < 0.01)


def test_drag_error_is_first_order():
    p = dataclasses.replace(ModelParams(), epsilon=0.0)
    exact = 30.0 / (1 + p.alpha * 30.0 * 10.0)
    errs = []
    for n in (100, 200):
        ens = ParticleEnsemble(x=np.zeros(1), v=np.full(1, 30.0))
        for _ in range(n):
            ens = step_particles(ens, 0.0, 0.0, 10.0 / n, p, None)
        errs.append(abs(ens.v[0] - exact))
    assert errs[0] / errs[1] == pytest.approx(2.0, rel=0.1)


def test_interpolation_at_nodes_and_midpoints(grid, params):
    rng = np.random.default_rng(0)
    f = np.stack([rng.uniform(-5, 5, grid.shape), rng.uniform(-1.5, 1.5, grid.shape)])
    ii, jj = np.meshgrid(np.arange(grid.Nx), np.arange(grid.Nx), indexing="ij")
    u, w = interpolate_feedback(f, grid.xi[ii], grid.ups[jj], grid, params)
    assert np.allclose(u, f[0], atol=1e-12) and np.allclose(w, f[1], atol=1e-12)
    g = np.zeros((2, *grid.shape))
    g[0, 3, 4], g[0, 4, 4] = 1.0, 3.0
    u, _ = interpolate_feedback(g, grid.xi[3] + grid.h / 2, grid.ups[4], grid, params)
    assert u == pytest.approx(2.0)
    g[0, -1, 4], g[0, 0, 4] = 1.0, 3.0
    u, _ = interpolate_feedback(g, grid.L - grid.h / 2, grid.ups[4], grid, params)
    assert u == pytest.approx(2.0)


def test_interpolation_constant_and_clamped(grid, params):
    f = np.stack([np.full(grid.shape, 2.5), np.full(grid.shape, -0.75)])
    x = np.random.default_rng(1).uniform(0, grid.L, 100)
    v = np.random.default_rng(2).uniform(0, grid.s_max, 100)
    u, w = interpolate_feedback(f, x, v, grid, params)
    assert np.allclose(u, 2.5) and np.allclose(w, -0.75)
    ramp = np.zeros((2, *grid.shape))
    ramp[0] = np.arange(grid.Nx)[None, :] * 1.0
    u, _ = interpolate_feedback(ramp, 0.0, np.array([0.0, grid.s_max]), grid, params)
    assert u[0] == 0.0 and u[1] == params.u_max  # held beyond centers, then boxed


def test_uniform_ensemble_on_nodes_matches_uniform_density(grid):
    ii, jj = np.meshgrid(np.arange(grid.Nx), np.arange(grid.Nx), indexing="ij")
    ens = ParticleEnsemble(grid.xi[ii].ravel(), grid.ups[jj].ravel())
    lx, lv = empirical_vs_fk(ens, uniform_density(grid), grid)
    assert lx == pytest.approx(0.0, abs=1e-12) and lv == pytest.approx(0.0, abs=1e-12)


def test_single_particle_distance_bounded(grid):
    ens = ParticleEnsemble(np.array([100.0]), np.array([20.0]))
    lx, lv = empirical_vs_fk(ens, initial_density(grid), grid)
    assert 0 < lx <= 2 and 0 < lv <= 2


def test_sampling_error_decays_like_inverse_sqrt(grid):
    rho = initial_density(grid)

    def mean_l1(n):
        return np.mean([empirical_vs_fk(sample_from_density(rho, grid, n, seed), rho, grid)[0]
                        for seed in range(8)])

    a, b = mean_l1(250), mean_l1(1000)
    assert a / b == pytest.approx(2.0, rel=0.25)


def test_streams_are_per_particle(grid):
    rho = initial_density(grid)
    small = sample_from_density(rho, grid, 5, seed=42)
    big = sample_from_density(rho, grid, 12, seed=42)
    assert np.array_equal(small.x, big.x[:5]) and np.array_equal(small.v, big.v[:5])
    other = sample_from_density(rho, grid, 5, seed=43)
    assert not np.array_equal(small.x, other.x)
    s = ParticleStreams(3, 7)
    assert s.normal(4).shape == (4, 3)


def test_sampled_particles_lie_in_domain(grid):
    ens = sample_from_density(initial_density(grid), grid, 2000, 0)
    assert ens.x.min() >= 0 and ens.x.max() < grid.L
    assert ens.v.min() >= 0 and ens.v.max() <= grid.s_max


def _replay_setup(grid, params, n_steps=20, tau=0.02, stride=2):
    tg = TimeGrid(n_steps, tau, stride)
    rho = TrajectoryStore.constant(tg, initial_density(grid))
    controls = TrajectoryStore.constant(tg, np.stack([np.full(grid.shape, 1.0),
                                                      np.full(grid.shape, -0.5)]))
    return tg, rho, controls


@pytest.mark.parametrize("mode", ["worst", "zero", "random"])
def test_simulate_modes(grid, params, mode):
    tg, rho, controls = _replay_setup(grid, params)
    a = simulate(controls, rho, grid, params, 64, seed=3, disturbance=mode, dump_stride=5)
    b = simulate(controls, rho, grid, params, 64, seed=3, disturbance=mode, dump_stride=5)
    assert np.array_equal(a.l1_position, b.l1_position)
    assert len(a.times) == tg.n_snapshots and a.times[-1] == pytest.approx(tg.T)
    assert np.all((a.final.v >= 0) & (a.final.v <= params.s_max))
    assert len(a.dump) == 64 * (1 + 20 // 5)


def test_simulate_substeps_and_bad_particle_step(grid, params):
    tg, rho, controls = _replay_setup(grid, params)
    run = simulate(controls, rho, grid, params, 16, 0, tau_p=0.01)
    assert run.final.t == pytest.approx(tg.T)
    with pytest.raises(ValueError):
        simulate(controls, rho, grid, params, 16, 0, tau_p=0.03)


def test_simulate_drift_without_noise_is_deterministic_in_seed_only_through_sampling(grid):
    p = dataclasses.replace(ModelParams(), epsilon=0.0)
    tg, rho, controls = _replay_setup(grid, p)
    run = simulate(controls, rho, grid, p, 10, 0, disturbance="zero")
    start = sample_from_density(rho.initial(), grid, 10, 0)
    v = start.v.copy()
    for _ in range(tg.n_steps):
        v = reflect(v + (-p.alpha * v**2 + 1.0) * tg.tau, p.s_max)
    assert np.allclose(run.final.v, v, rtol=1e-13)
