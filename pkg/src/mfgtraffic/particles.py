"""Monte-Carlo replay of the mean-field feedback on independent vehicles.

Each vehicle follows the reflected SDE

    dx = v dt
    dv = (-alpha v^2 + u* + w*) dt + sqrt(2 eps) dW,   v kept in [0, s_max]

discretized by Euler-Maruyama followed by mirror reflection at the walls.
Every particle owns an RNG stream spawned from the master seed, so particle
``n`` sees the same noise regardless of ensemble size or chunking.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .trajectory import TrajectoryStore


class ParticleStreams:
    """Per-particle generators that hand out blocks of draws."""

    def __init__(self, n: int, seed: int):
        children = np.random.SeedSequence(seed).spawn(n)
        self.generators = [np.random.Generator(np.random.PCG64(s)) for s in children]

    def __len__(self):
        return len(self.generators)

    def uniform(self, size: int) -> np.ndarray:
        """Shape (size, n): row t holds every particle's t-th uniform in the block."""
        return np.stack([g.random(size) for g in self.generators], axis=1)

    def normal(self, size: int) -> np.ndarray:
        return np.stack([g.standard_normal(size) for g in self.generators], axis=1)


@dataclass
class ParticleEnsemble:
    x: np.ndarray
    v: np.ndarray
    t: float = 0.0
    seed: int | None = None
    streams: ParticleStreams | None = field(default=None, repr=False)

    def __len__(self):
        return self.x.shape[0]


def reflect(v: np.ndarray, s_max: float) -> np.ndarray:
    """Mirror ``v`` back into [0, s_max] as often as needed.

    Repeated mirroring at both walls is the triangle-wave fold of period
    2 s_max, computed directly. Values already inside are returned untouched.
    """
    v = np.array(v, dtype=float)
    out = (v < 0) | (v > s_max)
    if out.any():
        folded = np.mod(v[out], 2.0 * s_max)
        v[out] = np.where(folded > s_max, 2.0 * s_max - folded, folded)
    return v


def sample_from_density(rho: np.ndarray, grid, n: int, seed: int) -> ParticleEnsemble:
    """Draw ``n`` particles from the piecewise-constant density ``rho``.

    A cell is picked with probability proportional to its mass, then the
    position is uniform within it.
    """
    streams = ParticleStreams(n, seed)
    draws = streams.uniform(3)
    cdf = np.cumsum(rho.ravel())
    cdf /= cdf[-1]
    cell = np.minimum(np.searchsorted(cdf, draws[0], side="right"), cdf.size - 1)
    i, j = np.unravel_index(cell, rho.shape)
    x = np.mod(grid.xi[i] + (draws[1] - 0.5) * grid.h, grid.L)
    v = np.clip(grid.ups[j] + (draws[2] - 0.5) * grid.k, 0.0, grid.s_max)
    return ParticleEnsemble(x=x, v=v, t=0.0, seed=seed, streams=streams)


def interpolate_feedback(controls: np.ndarray, x, v, grid, params):
    """Bilinear interpolation of stacked (u*, w*) node values at (x, v).

    Periodic in position; in speed, values are held constant outside the
    band of cell centers. Outputs are clamped to their boxes.
    """
    x = np.asarray(x, dtype=float)
    v = np.asarray(v, dtype=float)
    s = np.mod(x, grid.L) / grid.h
    i0 = np.floor(s).astype(int) % grid.Nx
    fx = s - np.floor(s)
    i1 = (i0 + 1) % grid.Nx
    r = np.clip((v - grid.ups[0]) / grid.k, 0.0, grid.Nx - 1.0)
    j0 = np.minimum(np.floor(r).astype(int), grid.Nx - 2)
    fy = r - j0
    j1 = j0 + 1

    def interp(f):
        return ((1 - fx) * (1 - fy) * f[i0, j0] + fx * (1 - fy) * f[i1, j0]
                + (1 - fx) * fy * f[i0, j1] + fx * fy * f[i1, j1])

    u = np.clip(interp(controls[0]), params.u_min, params.u_max)
    w = np.clip(interp(controls[1]), -params.w_max, params.w_max)
    return u, w


def step_particles(ens: ParticleEnsemble, u, w, tau_p: float, params, z) -> ParticleEnsemble:
    """One Euler-Maruyama step with standard-normal increments ``z``, then reflection."""
    if not tau_p > 0:
        raise ValueError("tau_p must be positive")
    x = np.mod(ens.x + ens.v * tau_p, params.L)
    v = ens.v + (-params.alpha * ens.v**2 + u + w) * tau_p
    if params.epsilon:
        v = v + np.sqrt(2.0 * params.epsilon * tau_p) * z
    v = reflect(v, params.s_max)
    return ParticleEnsemble(x=x, v=v, t=ens.t + tau_p, seed=ens.seed, streams=ens.streams)


def empirical_vs_fk(ens: ParticleEnsemble, rho: np.ndarray, grid):
    """L1 distances between the ensemble's cell histogram and the density, per marginal."""
    n = len(ens)
    if n < 1:
        raise ValueError("need at least one particle")
    i = np.floor(ens.x / grid.h + 0.5).astype(int) % grid.Nx
    j = np.clip(np.floor(ens.v / grid.k).astype(int), 0, grid.Nx - 1)
    kappa_emp = np.bincount(i, minlength=grid.Nx) / (n * grid.h)
    vel_emp = np.bincount(j, minlength=grid.Nx) / (n * grid.k)
    kappa = rho.sum(axis=1) * grid.k
    vel = rho.sum(axis=0) * grid.h
    l1_x = float(np.abs(kappa_emp - kappa).sum() * grid.h)
    l1_v = float(np.abs(vel_emp - vel).sum() * grid.k)
    return l1_x, l1_v


@dataclass
class ParticleRun:
    times: np.ndarray
    l1_position: np.ndarray
    l1_velocity: np.ndarray
    final: ParticleEnsemble
    dump: list = field(default_factory=list)  # (time, id, x, v) rows


def simulate(controls: TrajectoryStore, rho_traj: TrajectoryStore, grid, params, n: int,
             seed: int, tau_p: float | None = None, disturbance="worst", dump_stride=0,
             chunk=512) -> ParticleRun:
    """Replay the stored feedback on ``n`` particles drawn from the initial density.

    The feedback between checkpoints is sample-and-hold, as in the FK solve.
    Distances to the FK density are taken at every density checkpoint.
    ``disturbance`` selects the worst-case field, zero, or an independent
    uniform draw in [-w_max, w_max] per particle and step.
    """
    tg = rho_traj.timegrid
    tau = tg.tau
    tau_p = tau if tau_p is None else tau_p
    sub = (tg.stride * tau) / tau_p
    if abs(sub - round(sub)) > 1e-9 * sub or round(sub) < 1:
        raise ValueError("tau_p must divide the checkpoint interval stride * tau")
    sub = round(sub)
    per_step = sub / tg.stride  # particle steps per PDE step, may be fractional
    total = sub * (tg.n_snapshots - 1)

    ens = sample_from_density(rho_traj.initial(), grid, n, seed)
    times, lx, lv = [0.0], [], []
    a, b = empirical_vs_fk(ens, rho_traj.initial(), grid)
    lx.append(a)
    lv.append(b)
    dump = []
    if dump_stride:
        dump.extend((0.0, pid, ens.x[pid], ens.v[pid]) for pid in range(n))

    normals = uniforms = None
    for m in range(total):
        if m % chunk == 0:
            size = min(chunk, total - m)
            if params.epsilon:
                normals = ens.streams.normal(size)
            if disturbance == "random":
                uniforms = ens.streams.uniform(size)
        theta = min(int(m / per_step + 1e-9), tg.n_steps)
        u, w = interpolate_feedback(controls.at_step(theta), ens.x, ens.v, grid, params)
        if disturbance == "zero":
            w = np.zeros_like(w)
        elif disturbance == "random":
            w = (2.0 * uniforms[m % chunk] - 1.0) * params.w_max
        z = normals[m % chunk] if params.epsilon else None
        ens = step_particles(ens, u, w, tau_p, params, z)
        if dump_stride and (m + 1) % dump_stride == 0:
            t = (m + 1) * tau_p
            dump.extend((t, pid, ens.x[pid], ens.v[pid]) for pid in range(n))
        if (m + 1) % sub == 0:
            snap = (m + 1) // sub
            a, b = empirical_vs_fk(ens, rho_traj.values[snap], grid)
            times.append(snap * tg.stride * tau)
            lx.append(a)
            lv.append(b)
    return ParticleRun(np.array(times), np.array(lx), np.array(lv), ens, dump)
