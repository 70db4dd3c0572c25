"""Hydrodynamic moments of the kinetic density: spatial marginal, momentum, bulk velocity."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

KAPPA_FLOOR = 1e-12  # 1/m; bulk velocity is undefined below this marginal density


@dataclass
class HydroFields:
    kappa: np.ndarray  # spatial marginal, 1/m
    j_mom: np.ndarray  # momentum density, 1/s
    v_bulk: np.ndarray  # m/s, NaN where undefined
    time_tag: float = 0.0

    @property
    def defined(self) -> np.ndarray:
        return ~np.isnan(self.v_bulk)


def marginals(rho, grid, time_tag=0.0, kappa_floor=KAPPA_FLOOR) -> HydroFields:
    kappa = rho.sum(axis=1) * grid.k
    j_mom = (rho * grid.ups[None, :]).sum(axis=1) * grid.k
    v_bulk = np.full_like(kappa, np.nan)
    ok = kappa > kappa_floor
    v_bulk[ok] = j_mom[ok] / kappa[ok]
    return HydroFields(kappa, j_mom, v_bulk, time_tag)


def hydro_series(rho_traj, grid):
    return [marginals(rho_traj.values[s], grid, t) for s, t in enumerate(rho_traj.times)]


def continuity_residual(rho_traj, grid) -> np.ndarray:
    """d kappa/dt + d j/dxi on interior snapshot midpoints, shape (n_snapshots - 1, Nx).

    Time derivative by forward difference between snapshots, flux derivative
    by the periodic central difference averaged over the two snapshots.
    """
    series = hydro_series(rho_traj, grid)
    kappa = np.array([s.kappa for s in series])
    j = np.array([s.j_mom for s in series])
    dt = np.diff(rho_traj.times)[:, None]
    dk = np.diff(kappa, axis=0) / dt
    jm = 0.5 * (j[1:] + j[:-1])
    dj = (np.roll(jm, -1, axis=1) - np.roll(jm, 1, axis=1)) / (2.0 * grid.h)
    return dk + dj


def hydro_csv(rho_traj, grid) -> str:
    lines = ["t,i,xi,kappa,j,v_bulk"]
    for h in hydro_series(rho_traj, grid):
        for i in range(grid.Nx):
            vb = "" if np.isnan(h.v_bulk[i]) else repr(float(h.v_bulk[i]))
            lines.append(f"{float(h.time_tag)!r},{i},{float(grid.xi[i])!r},"
                         f"{float(h.kappa[i])!r},{float(h.j_mom[i])!r},{vb}")
    return "\n".join(lines) + "\n"
