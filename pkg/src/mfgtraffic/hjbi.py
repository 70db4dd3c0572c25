"""Backward explicit solver for the semi-discrete HJB-Isaacs equation.

    dV/dt = -H(V) - eps * D2^2 V,    V(T) = 0

is integrated in reversed time s = T - t, where it reads dV/ds = H(V) + eps D2^2 V,
with the same SSP-RK2 kernel as the forward solver.
"""

from __future__ import annotations

import numpy as np

from .errors import SolverError
from .grid import GhostPolicy, d2_second
from .hamiltonian import congestion_coefficient, control_fields, numerical_hamiltonian
from .trajectory import TimeGrid, TrajectoryStore


def _reversed_rate(V, c, grid, params, upwind):
    return numerical_hamiltonian(V, c, grid, params, upwind) + params.epsilon * d2_second(
        V, grid.k, GhostPolicy.EVEN)


def hjbi_rhs(V, rho, grid, params, kernel, upwind="forward"):
    """dV/dt on the nodes, given the density at the same time."""
    c = congestion_coefficient(rho, grid, kernel)
    return -_reversed_rate(V, c, grid, params, upwind)


def ssp_rk2(y, rate, tau):
    """Heun / SSP-RK2: y1 = y + tau F(y); out = (y + y1 + tau F(y1)) / 2."""
    y1 = y + tau * rate(y)
    return 0.5 * y + 0.5 * (y1 + tau * rate(y1))


def _check_finite(V, step):
    if not np.all(np.isfinite(V)):
        node = tuple(int(n) for n in np.argwhere(~np.isfinite(V))[0])
        raise SolverError("non-finite value function", step=step, node=node)


def step_backward_rk2(V_next, rho_at_t, tau, grid, params, kernel, upwind="forward", step=None):
    """One reversed-time SSP-RK2 step from t to t - tau with the density frozen."""
    c = congestion_coefficient(rho_at_t, grid, kernel)
    V = ssp_rk2(V_next, lambda v: _reversed_rate(v, c, grid, params, upwind), tau)
    _check_finite(V, step)
    return V


def solve_hjbi(rho_traj: TrajectoryStore, grid, timegrid: TimeGrid, params, kernel,
               terminal=None, store_controls=True, upwind="forward"):
    """March from V(T) = terminal (zero by default) down to t = 0.

    The step from t[theta+1] to t[theta] reads the density at t[theta+1]
    (sample-and-hold). Returns ``(V_traj, controls_traj)``; the controls store
    holds (u*, w*) stacked on the first axis, or is None when not stored.
    """
    V = np.zeros(grid.shape) if terminal is None else np.array(terminal, dtype=float)
    V_traj = TrajectoryStore(timegrid, grid.shape)
    controls = TrajectoryStore(timegrid, (2, *grid.shape)) if store_controls else None

    def record(theta, V):
        if V_traj.is_checkpoint(theta):
            V_traj.record(theta, V)
            if controls is not None:
                controls.record(theta, control_fields(V, grid, params, upwind))

    n = timegrid.n_steps
    record(n, V)
    for theta in range(n - 1, -1, -1):
        V = step_backward_rk2(V, rho_traj.at_step(theta + 1), timegrid.tau, grid, params,
                              kernel, upwind, step=theta)
        record(theta, V)
    return V_traj, controls
