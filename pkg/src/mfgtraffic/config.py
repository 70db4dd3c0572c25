"""Model constants, congestion kernel, initial density and run configuration.

Configuration files are flat TOML documents. Every key is optional; missing
keys take the defaults below (the high-performance EV parameter set on a
200*pi m ring road).
"""

from __future__ import annotations

import dataclasses
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

import numpy as np

from .errors import ConfigError

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

ROAD_LENGTH = 200.0 * math.pi


@dataclass(frozen=True)
class ModelParams:
    alpha: float = 2.16e-4  # aggregate drag, 1/m
    epsilon: float = 0.05  # velocity diffusion, m^2/s
    gamma: float = 0.25  # disturbance attenuation
    beta: float = 4.0  # speed preference, s^3/m; inf disables the speed reward
    u_min: float = -10.0  # m/s^2
    u_max: float = 8.0  # m/s^2
    w_max: float = 2.0  # m/s^2
    s_max: float = 30.0  # m/s
    T: float = 30.0  # s
    L: float = ROAD_LENGTH  # m

    @property
    def inv_beta(self) -> float:
        return 0.0 if math.isinf(self.beta) else 1.0 / self.beta

    @property
    def psi_max(self) -> float:
        """Upper bound on |velocity drift| over the admissible boxes."""
        return self.alpha * self.s_max**2 + max(abs(self.u_min), self.u_max) + self.w_max

    def validate(self) -> "ModelParams":
        for name in ("alpha", "epsilon", "gamma", "beta", "u_min", "u_max",
                     "w_max", "s_max", "T", "L"):
            value = getattr(self, name)
            if not isinstance(value, (int, float)) or math.isnan(value):
                raise ConfigError(f"{name} must be a real number, got {value!r}")
        if not self.u_min < 0 < self.u_max:
            raise ConfigError(f"need u_min < 0 < u_max, got {self.u_min}, {self.u_max}")
        if not 0 <= self.w_max < min(abs(self.u_min), self.u_max):
            raise ConfigError(
                f"need 0 <= w_max < min(|u_min|, u_max), got w_max={self.w_max}")
        if not self.alpha > 0:
            raise ConfigError("alpha must be positive")
        if not self.epsilon >= 0:
            raise ConfigError("epsilon must be non-negative")
        for name in ("gamma", "beta", "s_max", "L"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive")
        if not self.T >= 0:
            raise ConfigError("T must be non-negative")
        return self


def default_params() -> ModelParams:
    return ModelParams()


def drag_coefficient(rho_air=1.2, area=2.16, c_d=0.3, mass=1800.0) -> float:
    """alpha = rho_air * A * c_d / (2 m)."""
    return 0.5 * rho_air * area * c_d / mass


@dataclass(frozen=True)
class CongestionKernel:
    """phi(xi, sigma) = scale * exp(cos((xi - sigma) / length)), in m/s^3.

    With length = L / (2 pi) the kernel is L-periodic in both arguments.
    ``scale = 0`` gives the cost-free kernel.
    """

    scale: float = 0.01
    length: float = 100.0
    L: float = ROAD_LENGTH

    def __call__(self, xi, sigma):
        d = np.mod(np.asarray(xi, dtype=float) - np.asarray(sigma, dtype=float), self.L)
        return self.scale * np.exp(np.cos(d / self.length))

    def matrix(self, xi: np.ndarray) -> np.ndarray:
        """K[i, i'] = phi(xi[i], xi[i'])."""
        return self(xi[:, None], xi[None, :])

    @classmethod
    def zero(cls) -> "CongestionKernel":
        return cls(scale=0.0)


def eval_kernel(xi, sigma, kernel: CongestionKernel | None = None):
    return (kernel or CongestionKernel())(xi, sigma)


def eval_rho0(xi, upsilon, C: float = 1.0):
    """Von Mises in position (peak at 100*pi) times a unit-variance Gaussian in speed."""
    if not C > 0:
        raise ValueError("normalizer C must be positive")
    xi = np.asarray(xi, dtype=float)
    upsilon = np.asarray(upsilon, dtype=float)
    return np.exp(np.cos((xi - 100.0 * math.pi) / 100.0)) * np.exp(-0.5 * (upsilon - 20.0) ** 2) / C


def rho0_normalizer(grid) -> float:
    """Riemann sum of the unnormalized initial density on ``grid``."""
    raw = eval_rho0(grid.xi[:, None], grid.ups[None, :])
    return float(raw.sum() * grid.cell_area)


def initial_density(grid) -> np.ndarray:
    """Initial density sampled at nodes, with unit discrete mass."""
    raw = eval_rho0(grid.xi[:, None], grid.ups[None, :])
    return raw / (raw.sum() * grid.cell_area)


@dataclass(frozen=True)
class RunConfig:
    """Discretization and driver settings.

    ``tau = None`` means: take the largest CFL-admissible step that divides T
    into a whole number of checkpoint strides.
    """

    Nx: int = 100
    tau: float | None = 0.001
    checkpoint_stride: int = 50
    n_iters: int = 30
    seed: int = 0
    kernel: str = "default"  # "default" | "zero"
    relaxation: float = 1.0  # 1.0 is plain Picard alternation
    upwind: str = "forward"  # "forward" | "adaptive"
    store_controls: bool = True
    run_all_iters: bool = False
    cfl_safety: float = 0.5
    tau_p: float | None = None  # particle step; None means tau
    disturbance: str = "worst"  # "worst" | "zero" | "random"
    dump_stride: int = 0  # particle trajectory dump stride in particle steps, 0 = off

    def validate(self) -> "RunConfig":
        if not isinstance(self.Nx, int) or self.Nx < 2:
            raise ConfigError("Nx must be an integer >= 2")
        if self.tau is not None and not self.tau > 0:
            raise ConfigError("tau must be positive (or omitted for the CFL step)")
        if not isinstance(self.checkpoint_stride, int) or self.checkpoint_stride < 1:
            raise ConfigError("checkpoint_stride must be a positive integer")
        if not isinstance(self.n_iters, int) or self.n_iters < 1:
            raise ConfigError("n_iters must be a positive integer")
        if not isinstance(self.seed, int) or self.seed < 0:
            raise ConfigError("seed must be a non-negative integer")
        if self.kernel not in ("default", "zero"):
            raise ConfigError(f"unknown kernel {self.kernel!r}")
        if not 0 < self.relaxation <= 1:
            raise ConfigError("relaxation must lie in (0, 1]")
        if self.upwind not in ("forward", "adaptive"):
            raise ConfigError(f"unknown upwind mode {self.upwind!r}")
        if not 0 < self.cfl_safety <= 1:
            raise ConfigError("cfl_safety must lie in (0, 1]")
        if self.tau_p is not None and not self.tau_p > 0:
            raise ConfigError("tau_p must be positive")
        if self.disturbance not in ("worst", "zero", "random"):
            raise ConfigError(f"unknown disturbance mode {self.disturbance!r}")
        if not isinstance(self.dump_stride, int) or self.dump_stride < 0:
            raise ConfigError("dump_stride must be a non-negative integer")
        return self

    def make_kernel(self) -> CongestionKernel:
        return CongestionKernel.zero() if self.kernel == "zero" else CongestionKernel()


@dataclass(frozen=True)
class Config:
    params: ModelParams = field(default_factory=ModelParams)
    run: RunConfig = field(default_factory=RunConfig)

    def replace(self, **changes) -> "Config":
        """Copy with fields of either section overridden by name."""
        p = {k: v for k, v in changes.items() if k in _PARAM_KEYS}
        r = {k: v for k, v in changes.items() if k in _RUN_KEYS}
        unknown = set(changes) - set(p) - set(r)
        if unknown:
            raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
        return Config(dataclasses.replace(self.params, **p).validate(),
                      dataclasses.replace(self.run, **r).validate())

    def to_dict(self) -> dict[str, Any]:
        d = dataclasses.asdict(self.params)
        d.pop("L")
        d.update(dataclasses.asdict(self.run))
        return d


_PARAM_KEYS = {f.name for f in dataclasses.fields(ModelParams)} - {"L"}
_RUN_KEYS = {f.name for f in dataclasses.fields(RunConfig)}
_FLOAT_KEYS = _PARAM_KEYS | {"tau", "relaxation", "cfl_safety", "tau_p"}
# TOML has no null: these strings stand for "derive automatically"
_NULLABLE = {"tau": "cfl", "tau_p": "tau"}


def config_from_mapping(data: dict[str, Any]) -> Config:
    unknown = set(data) - _PARAM_KEYS - _RUN_KEYS
    if unknown:
        raise ConfigError(f"unknown configuration keys: {sorted(unknown)}")
    clean = {}
    for key, value in data.items():
        if key in _NULLABLE and value == _NULLABLE[key]:
            clean[key] = None
            continue
        if isinstance(value, (dict, list)):
            raise ConfigError(f"{key}: configuration is flat, got {type(value).__name__}")
        if key in _FLOAT_KEYS and isinstance(value, int) and not isinstance(value, bool):
            value = float(value)
        if key in _FLOAT_KEYS and not isinstance(value, float):
            raise ConfigError(f"{key} must be a number, got {value!r}")
        clean[key] = value
    return Config().replace(**clean)


def load_config(path: str | Path | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path, "rb") as fh:
            data = tomllib.load(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    return config_from_mapping(data)


def dump_config(config: Config) -> str:
    """Render as TOML; ``load_config`` of the output reproduces ``config``."""
    lines = []
    for key, value in config.to_dict().items():
        if value is None:
            lines.append(f'{key} = "{_NULLABLE[key]}"')
        elif isinstance(value, bool):
            lines.append(f"{key} = {'true' if value else 'false'}")
        elif isinstance(value, str):
            lines.append(f'{key} = "{value}"')
        elif isinstance(value, float):
            if math.isinf(value):
                lines.append(f"{key} = {'inf' if value > 0 else '-inf'}")
            else:
                lines.append(f"{key} = {value!r}")
        else:
            lines.append(f"{key} = {value}")
    return "\n".join(lines) + "\n"
