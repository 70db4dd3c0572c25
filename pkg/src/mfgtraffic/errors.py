"""Exception types. Each maps to one CLI exit status."""


class MFGError(Exception):
    exit_code = 1


class ConfigError(MFGError, ValueError):
    exit_code = 2


class CFLError(MFGError):
    exit_code = 3


class SolverError(MFGError, FloatingPointError):
    """Non-finite value or positivity loss inside a time step."""

    exit_code = 4

    def __init__(self, message, step=None, node=None, iteration=None):
        super().__init__(message)
        self.step = step
        self.node = node
        self.iteration = iteration

    def __str__(self):
        parts = [super().__str__()]
        if self.iteration is not None:
            parts.append(f"iteration={self.iteration}")
        if self.step is not None:
            parts.append(f"step={self.step}")
        if self.node is not None:
            parts.append(f"node={self.node}")
        return " ".join(parts)


class ArtifactError(MFGError):
    exit_code = 6
