"""Time grid and checkpointed field trajectories."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError


@dataclass(frozen=True)
class TimeGrid:
    """Time points ``t[theta] = theta * tau`` for ``theta = 0 .. n_steps``.

    Snapshots are kept every ``stride`` steps; ``n_steps`` must be a multiple
    of ``stride`` so the terminal and initial times are both stored.
    """

    n_steps: int
    tau: float
    stride: int = 1

    def __post_init__(self):
        if self.n_steps < 0 or self.stride < 1:
            raise ConfigError("n_steps must be >= 0 and stride >= 1")
        if self.n_steps % self.stride:
            raise ConfigError(
                f"checkpoint stride {self.stride} does not divide the {self.n_steps} time steps")

    @classmethod
    def from_horizon(cls, T: float, tau: float | None, stride: int = 1,
                     tau_max: float | None = None) -> "TimeGrid":
        if T == 0:
            return cls(0, tau or (tau_max or 1.0), stride)
        if tau is None:
            if tau_max is None:
                raise ConfigError("need tau or a CFL bound to build the time grid")
            chunks = math.ceil(T / (tau_max * stride) - 1e-12)
            n = chunks * stride
            return cls(n, T / n, stride)
        n = round(T / tau)
        if abs(n * tau - T) > 1e-9 * T:
            n = math.ceil(T / tau)
        return cls(n, tau, stride)

    @property
    def N_T(self) -> int:
        return self.n_steps + 1

    @property
    def T(self) -> float:
        return self.n_steps * self.tau

    @property
    def n_snapshots(self) -> int:
        return self.n_steps // self.stride + 1

    @property
    def checkpoint_steps(self) -> np.ndarray:
        return np.arange(0, self.n_steps + 1, self.stride)

    def time(self, theta) -> float:
        return theta * self.tau


@dataclass
class TrajectoryStore:
    """Snapshots of one field at steps ``0, stride, 2*stride, ...``.

    ``values[s]`` is the field at step ``steps[s]``. Lookup between snapshots
    is sample-and-hold: the last stored step at or before the query.
    """

    timegrid: TimeGrid
    field_shape: tuple[int, ...]
    values: np.ndarray = None
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.values is None:
            self.values = np.zeros((self.timegrid.n_snapshots, *self.field_shape))
        elif self.values.shape != (self.timegrid.n_snapshots, *self.field_shape):
            raise ValueError(f"values shape {self.values.shape} does not match time grid")

    @classmethod
    def constant(cls, timegrid: TimeGrid, value: np.ndarray) -> "TrajectoryStore":
        values = np.broadcast_to(value, (timegrid.n_snapshots, *value.shape)).copy()
        return cls(timegrid, value.shape, values)

    @property
    def steps(self) -> np.ndarray:
        return self.timegrid.checkpoint_steps

    @property
    def times(self) -> np.ndarray:
        return self.steps * self.timegrid.tau

    def __len__(self):
        return self.values.shape[0]

    def is_checkpoint(self, theta: int) -> bool:
        return theta % self.timegrid.stride == 0

    def snapshot_index(self, theta: int) -> int:
        if not 0 <= theta <= self.timegrid.n_steps:
            raise IndexError(f"step {theta} outside [0, {self.timegrid.n_steps}]")
        return theta // self.timegrid.stride

    def at_step(self, theta: int) -> np.ndarray:
        return self.values[self.snapshot_index(theta)]

    def record(self, theta: int, value: np.ndarray) -> None:
        if self.is_checkpoint(theta):
            self.values[theta // self.timegrid.stride] = value

    def initial(self) -> np.ndarray:
        return self.values[0]

    def terminal(self) -> np.ndarray:
        return self.values[-1]
