"""Running cost, Isaacs saddle in closed form, and the upwind numerical Hamiltonian.

The pre-Hamiltonian is

    H(u, w; p) = u^2/2 - w^2/(2 gamma^2) + (c - 1/beta) v + p1 v + p2 (-alpha v^2 + u + w)

It separates into a strictly convex function of ``u`` plus a strictly concave
function of ``w``, so the saddle is attained at the clamped stationary points
and min-max equals max-min.
"""

from __future__ import annotations

from functools import lru_cache

import numpy as np

from .grid import GhostPolicy, d1_plus, d2_minus, d2_plus


@lru_cache(maxsize=16)
def _kernel_matrix(kernel, Nx: int, h: float) -> np.ndarray:
    m = kernel.matrix(np.arange(Nx) * h)
    m.setflags(write=False)
    return m


def congestion_coefficient(rho: np.ndarray, grid, kernel) -> np.ndarray:
    """c[i] = sum_{i', j'} phi(xi[i], xi[i']) rho[i', j'] h k."""
    K = _kernel_matrix(kernel, grid.Nx, grid.h)
    return K @ (rho.sum(axis=1) * grid.cell_area)


def running_cost(upsilon, u, w, c, params):
    return 0.5 * u**2 - w**2 / (2.0 * params.gamma**2) + (c - params.inv_beta) * upsilon


def velocity_drift(upsilon, u, w, params):
    return -params.alpha * upsilon**2 + u + w


def pre_hamiltonian(upsilon, c, p1, p2, u, w, params):
    return (running_cost(upsilon, u, w, c, params) + p1 * upsilon
            + p2 * velocity_drift(upsilon, u, w, params))


def optimal_control(p2, params):
    """argmin over [u_min, u_max] of u^2/2 + p2 u."""
    return np.clip(-np.asarray(p2, dtype=float), params.u_min, params.u_max)


def worst_disturbance(p2, params):
    """argmax over [-w_max, w_max] of -w^2/(2 gamma^2) + p2 w."""
    return np.clip(params.gamma**2 * np.asarray(p2, dtype=float), -params.w_max, params.w_max)


def hamiltonian_value(upsilon, c, p1, p2, params):
    """min_u max_w of the pre-Hamiltonian."""
    u = optimal_control(p2, params)
    w = worst_disturbance(p2, params)
    return pre_hamiltonian(upsilon, c, p1, p2, u, w, params)


def value_gradients(V, grid, params, upwind="forward"):
    """Costates (p1, p2) used by the numerical Hamiltonian.

    ``forward`` takes D1+ and D2+ everywhere. ``adaptive`` switches the speed
    difference to D2- on nodes where the drift evaluated with either one-sided
    difference points downward.
    """
    p1 = d1_plus(V, grid.h, GhostPolicy.EVEN)
    p2 = d2_plus(V, grid.k, GhostPolicy.EVEN)
    if upwind == "adaptive":
        ups = grid.ups[None, :]
        p2m = d2_minus(V, grid.k, GhostPolicy.EVEN)

        def drift(p):
            return velocity_drift(ups, optimal_control(p, params), worst_disturbance(p, params), params)

        use_minus = (drift(p2) < 0) & (drift(p2m) < 0)
        p2 = np.where(use_minus, p2m, p2)
    elif upwind != "forward":
        raise ValueError(f"unknown upwind mode {upwind!r}")
    return p1, p2


def numerical_hamiltonian(V, c, grid, params, upwind="forward"):
    p1, p2 = value_gradients(V, grid, params, upwind)
    return hamiltonian_value(grid.ups[None, :], np.asarray(c)[:, None], p1, p2, params)


def control_fields(V, grid, params, upwind="forward"):
    """Feedback (u*, w*) on the nodes, stacked as an array of shape (2, Nx, Nx)."""
    _, p2 = value_gradients(V, grid, params, upwind)
    return np.stack([optimal_control(p2, params), worst_disturbance(p2, params)])
