"""Phase-space grid, ghost extensions and difference operators.

Arrays are indexed ``f[i, j]`` with ``i`` the position index (``xi[i] = i*h``,
periodic) and ``j`` the speed index (``ups[j] = k/2 + j*k``, staggered so the
walls ``v = 0`` and ``v = s_max`` sit on cell faces). Indices are 0-based.
A bordered array ``b`` holds one ghost layer per side, so ``b[i+1, j+1]`` is
node ``(i, j)``; the 1-based ghost labels ``0`` and ``Nx+1`` used in the
conservation argument are ``b[0, :]`` and ``b[-1, :]`` here.
"""

from __future__ import annotations

from dataclasses import dataclass
from enum import Enum
from functools import cached_property

import numpy as np


@dataclass(frozen=True)
class PhaseGrid:
    Nx: int
    L: float
    s_max: float

    def __post_init__(self):
        if self.Nx < 2:
            raise ValueError("Nx must be at least 2")

    @classmethod
    def from_params(cls, params, Nx: int) -> "PhaseGrid":
        return cls(Nx=Nx, L=params.L, s_max=params.s_max)

    @property
    def h(self) -> float:
        return self.L / self.Nx

    @property
    def k(self) -> float:
        return self.s_max / self.Nx

    @property
    def cell_area(self) -> float:
        return self.h * self.k

    @cached_property
    def xi(self) -> np.ndarray:
        return np.arange(self.Nx) * self.h

    @cached_property
    def ups(self) -> np.ndarray:
        return self.k / 2 + np.arange(self.Nx) * self.k

    @property
    def shape(self) -> tuple[int, int]:
        return (self.Nx, self.Nx)

    def mass(self, rho: np.ndarray) -> float:
        return float(rho.sum() * self.cell_area)


class GhostPolicy(str, Enum):
    """Ghost fill rule in the speed direction. Position ghosts are always periodic."""

    EVEN = "even"  # f[i,-1] = f[i,0]: homogeneous Neumann, used for the value and density
    ODD = "odd"  # f[i,-1] = -f[i,0]: used for the velocity drift


def extend_ghosts(f: np.ndarray, policy: GhostPolicy | str = GhostPolicy.EVEN) -> np.ndarray:
    """Return an (Nx+2, Nx+2) bordered copy of ``f``."""
    policy = GhostPolicy(policy)
    nx, ny = f.shape
    b = np.empty((nx + 2, ny + 2), dtype=float)
    b[1:-1, 1:-1] = f
    sign = 1.0 if policy is GhostPolicy.EVEN else -1.0
    b[1:-1, 0] = sign * f[:, 0]
    b[1:-1, -1] = sign * f[:, -1]
    # wrap after the speed ghosts are set so corners are consistent
    b[0, :] = b[-2, :]
    b[-1, :] = b[1, :]
    return b


def d1_plus(f: np.ndarray, h: float, ghost=GhostPolicy.EVEN) -> np.ndarray:
    b = extend_ghosts(f, ghost)
    return (b[2:, 1:-1] - b[1:-1, 1:-1]) / h


def d1_minus(f: np.ndarray, h: float, ghost=GhostPolicy.EVEN) -> np.ndarray:
    b = extend_ghosts(f, ghost)
    return (b[1:-1, 1:-1] - b[:-2, 1:-1]) / h


def d2_plus(f: np.ndarray, k: float, ghost=GhostPolicy.EVEN) -> np.ndarray:
    b = extend_ghosts(f, ghost)
    return (b[1:-1, 2:] - b[1:-1, 1:-1]) / k


def d2_minus(f: np.ndarray, k: float, ghost=GhostPolicy.EVEN) -> np.ndarray:
    b = extend_ghosts(f, ghost)
    return (b[1:-1, 1:-1] - b[1:-1, :-2]) / k


def d2_second(f: np.ndarray, k: float, ghost=GhostPolicy.EVEN) -> np.ndarray:
    """Centered second difference in speed, written as (D2+ - D2-)/k."""
    b = extend_ghosts(f, ghost)
    fwd = (b[1:-1, 2:] - b[1:-1, 1:-1]) / k
    bwd = (b[1:-1, 1:-1] - b[1:-1, :-2]) / k
    return (fwd - bwd) / k
