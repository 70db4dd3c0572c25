"""Finite-volume solver for the forward Kolmogorov (kinetic) equation.

    d rho_ij / dt = -(g1[i+1/2, j] - g1[i-1/2, j]) / h
                    -(g2[i, j+1/2] - g2[i, j-1/2]) / k + eps (D2^2 rho)_ij

with local Lax-Friedrichs (Rusanov) face fluxes. Density ghosts are periodic
in position and even in speed, the drift ghosts are odd in speed; together
these make both wall fluxes vanish, so the discrete mass is conserved.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import initial_density
from .errors import CFLError, SolverError
from .grid import GhostPolicy, d2_second, extend_ghosts
from .hamiltonian import control_fields, velocity_drift
from .trajectory import TimeGrid, TrajectoryStore

NEGATIVITY_TOL = 1e-14


def drift_field(u, w, grid, params):
    """psi[i, j] = -alpha ups[j]^2 + u*[i, j] + w*[i, j]."""
    return velocity_drift(grid.ups[None, :], u, w, params)


def flux_xi(rho_b, grid):
    """g1 on the faces i+1/2 for i = -1 .. Nx-1, shape (Nx+1, Nx)."""
    left = rho_b[:-1, 1:-1]
    right = rho_b[1:, 1:-1]
    v = grid.ups[None, :]
    return 0.5 * (v * left + v * right - np.abs(v) * (right - left))


def flux_upsilon(rho_b, psi_b):
    """g2 on the faces j+1/2 for j = -1 .. Nx-1, shape (Nx, Nx+1)."""
    rl, rr = rho_b[1:-1, :-1], rho_b[1:-1, 1:]
    pl, pr = psi_b[1:-1, :-1], psi_b[1:-1, 1:]
    speed = np.maximum(np.abs(pl), np.abs(pr))
    return 0.5 * (pl * rl + pr * rr - speed * (rr - rl))


def fk_rhs(rho, psi, grid, params):
    rho_b = extend_ghosts(rho, GhostPolicy.EVEN)
    psi_b = extend_ghosts(psi, GhostPolicy.ODD)
    g1 = flux_xi(rho_b, grid)
    g2 = flux_upsilon(rho_b, psi_b)
    out = -(g1[1:, :] - g1[:-1, :]) / grid.h - (g2[:, 1:] - g2[:, :-1]) / grid.k
    if params.epsilon:
        out += params.epsilon * d2_second(rho, grid.k, GhostPolicy.EVEN)
    return out


def step_forward_rk2(rho, psi, tau, grid, params, step=None, info=None):
    """One SSP-RK2 step with the drift frozen over the step.

    ``psi`` is an array or a callable of the stage index (0 or 1). Values in
    [-NEGATIVITY_TOL, 0) are set to zero; anything more negative aborts.
    ``info``, if given, receives the pre-clamp minimum and the mass change.
    """
    drift = psi if callable(psi) else (lambda stage: psi)
    r1 = rho + tau * fk_rhs(rho, drift(0), grid, params)
    new = 0.5 * rho + 0.5 * (r1 + tau * fk_rhs(r1, drift(1), grid, params))
    if not np.all(np.isfinite(new)):
        node = tuple(int(n) for n in np.argwhere(~np.isfinite(new))[0])
        raise SolverError("non-finite density", step=step, node=node)
    low = float(new.min())
    if low < -NEGATIVITY_TOL:
        node = tuple(int(n) for n in np.unravel_index(np.argmin(new), new.shape))
        raise SolverError(f"density went negative ({low:.3e}); check the CFL step",
                          step=step, node=node)
    if info is not None:
        info["min_preclamp"] = low
        info["mass_change"] = float((new.sum() - rho.sum()) * grid.cell_area)
    if low < 0:
        new = np.maximum(new, 0.0)
    return new


@dataclass(frozen=True)
class CFLReport:
    ok: bool
    tau: float
    tau_max: float
    limits: dict
    literal_bound: float

    def __str__(self):
        parts = ", ".join(f"{k}={v:.6g}" for k, v in self.limits.items())
        status = "ok" if self.ok else "VIOLATED"
        tau = "unset" if self.tau is None else f"{self.tau:.6g} s"
        return (f"CFL {status}: tau={tau}, tau_max={self.tau_max:.6g} s ({parts}); "
                f"literal 0.01*(h*s_max + k*psi_max) = {self.literal_bound:.6g}")


def check_cfl(grid, tau, params, safety=0.5) -> CFLReport:
    """Explicit-step bound safety * min(h/s_max, k/psi_max, k^2/(2 eps)).

    The diffusion limit is dropped when eps = 0.
    """
    psi_max = params.psi_max
    limits = {"advection_xi": grid.h / params.s_max, "advection_ups": grid.k / psi_max}
    if params.epsilon > 0:
        limits["diffusion"] = grid.k**2 / (2.0 * params.epsilon)
    tau_max = safety * min(limits.values())
    literal = 0.01 * (grid.h * params.s_max + grid.k * psi_max)
    ok = tau is not None and tau <= tau_max * (1 + 1e-12)
    return CFLReport(ok=ok, tau=tau, tau_max=tau_max, limits=limits, literal_bound=literal)


def require_cfl(grid, tau, params, safety=0.5) -> CFLReport:
    report = check_cfl(grid, tau, params, safety)
    if not report.ok:
        raise CFLError(str(report))
    return report


def solve_fk(rho0, grid, timegrid: TimeGrid, params, controls: TrajectoryStore | None = None,
             values: TrajectoryStore | None = None, upwind="forward") -> TrajectoryStore:
    """March the density from t = 0 to T.

    The feedback comes from ``controls`` (stacked u*, w*) or, if that is None,
    is recomputed from the value snapshots in ``values``. The step from
    t[theta] to t[theta+1] uses the feedback at t[theta] (sample-and-hold).
    ``meta`` on the result carries the worst per-step mass change and the
    lowest pre-clamp density.
    """
    if controls is None and values is None:
        raise ValueError("need control or value snapshots")
    rho = np.array(rho0 if rho0 is not None else initial_density(grid), dtype=float)
    rho /= rho.sum() * grid.cell_area
    traj = TrajectoryStore(timegrid, grid.shape)
    traj.record(0, rho)
    source = controls if controls is not None else values
    worst_drift, lowest = 0.0, float(rho.min())
    cached, psi = None, None
    info = {}
    for theta in range(timegrid.n_steps):
        snap = source.snapshot_index(theta)
        if snap != cached:
            uw = controls.values[snap] if controls is not None else control_fields(
                values.values[snap], grid, params, upwind)
            psi = drift_field(uw[0], uw[1], grid, params)
            cached = snap
        rho = step_forward_rk2(rho, psi, timegrid.tau, grid, params, step=theta, info=info)
        worst_drift = max(worst_drift, abs(info["mass_change"]))
        lowest = min(lowest, info["min_preclamp"])
        traj.record(theta + 1, rho)
    traj.meta.update(max_step_mass_change=worst_drift, min_preclamp=lowest)
    return traj
