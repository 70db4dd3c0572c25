"""Backward-forward (Picard) iteration between the HJB-I and FK solvers."""

from __future__ import annotations

import math
import time
from dataclasses import dataclass, field

import numpy as np

from .errors import SolverError
from .fk import solve_fk
from .hjbi import solve_hjbi
from .trajectory import TimeGrid, TrajectoryStore


def compute_delta2(V_n: TrajectoryStore, rho_n: TrajectoryStore, V_prev: TrajectoryStore,
                   rho_prev: TrajectoryStore, grid, timegrid: TimeGrid) -> float:
    """Squared discrete L2 distance between successive (V, rho) iterates.

    Sum over stored snapshots and nodes of |dV|^2 + |drho|^2, weighted by
    h * k * stride * tau.
    """
    for a, b in ((V_n, V_prev), (rho_n, rho_prev), (V_n, rho_n)):
        if a.values.shape != b.values.shape:
            raise ValueError(f"trajectory shapes differ: {a.values.shape} vs {b.values.shape}")
    dV = V_n.values - V_prev.values
    dr = rho_n.values - rho_prev.values
    weight = grid.cell_area * timegrid.stride * timegrid.tau
    return float((np.sum(dV * dV) + np.sum(dr * dr)) * weight)


@dataclass
class IterationLog:
    delta2: list = field(default_factory=list)
    D: list = field(default_factory=list)  # running sum after each iteration
    stopped: list = field(default_factory=list)
    wall_time: list = field(default_factory=list)
    stop_iter: int | None = None

    def append(self, delta2, D, stopped, wall):
        self.delta2.append(delta2)
        self.D.append(D)
        self.stopped.append(stopped)
        self.wall_time.append(wall)

    @property
    def n(self) -> int:
        return len(self.delta2)

    def rows(self):
        for n, (d2, D, s) in enumerate(zip(self.delta2, self.D, self.stopped), start=1):
            yield n, d2, (math.log10(d2) if d2 > 0 else -math.inf), D, s

    def to_csv(self) -> str:
        lines = ["n,delta2,log10_delta2,D,stopped"]
        for n, d2, lg, D, s in self.rows():
            lines.append(f"{n},{d2!r},{lg!r},{D!r},{int(s)}")
        return "\n".join(lines) + "\n"


@dataclass
class FixedPointResult:
    V: TrajectoryStore
    rho: TrajectoryStore
    controls: TrajectoryStore | None
    log: IterationLog
    converged: bool
    fk_meta: list = field(default_factory=list)  # per FK solve diagnostics


def run_algorithm1(rho0, grid, timegrid: TimeGrid, params, n_iters: int, kernel,
                   relaxation=1.0, run_all=False, upwind="forward", store_controls=True,
                   callback=None) -> FixedPointResult:
    """Alternate backward and forward solves until the running sum of delta^2 stagnates.

    Iteration 0 solves HJB-I against the frozen initial density and FK
    against that value; iterations 1..n_iters then repeat with the previous
    density. The loop stops at the first n where D + delta2_n == D in double
    precision, unless ``run_all`` is set, in which case the stagnation index
    is recorded and the loop continues. ``relaxation`` < 1 blends each new
    density with the previous one.
    """
    if n_iters < 1:
        raise ValueError("n_iters must be >= 1")
    rho_prev = TrajectoryStore.constant(timegrid, np.asarray(rho0, dtype=float))

    def sweep(rho_in, n):
        try:
            V, controls = solve_hjbi(rho_in, grid, timegrid, params, kernel,
                                     store_controls=store_controls, upwind=upwind)
            rho = solve_fk(rho0, grid, timegrid, params, controls=controls, values=V,
                           upwind=upwind)
        except SolverError as exc:
            exc.iteration = n
            raise
        return V, rho, controls

    V_prev, rho_prev, controls = sweep(rho_prev, 0)
    fk_meta = [dict(rho_prev.meta)]
    log = IterationLog()
    D = 0.0
    for n in range(1, n_iters + 1):
        t0 = time.perf_counter()
        V, rho, controls = sweep(rho_prev, n)
        fk_meta.append(dict(rho.meta))
        if relaxation != 1.0:
            rho.values = relaxation * rho.values + (1.0 - relaxation) * rho_prev.values
        d2 = compute_delta2(V, rho, V_prev, rho_prev, grid, timegrid)
        stagnant = D + d2 == D
        if not stagnant:
            D += d2
        log.append(d2, D, stagnant, time.perf_counter() - t0)
        if callback is not None:
            callback(n, d2, D, stagnant)
        V_prev, rho_prev = V, rho
        if stagnant and log.stop_iter is None:
            log.stop_iter = n
            if not run_all:
                break
    return FixedPointResult(V_prev, rho_prev, controls, log, log.stop_iter is not None, fk_meta)
