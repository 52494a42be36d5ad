# src/rarefaction_lab/errors.py

from typing import Optional


class RarefactionLabError(Exception):
    """Base class for every error the package raises on purpose."""


class DomainError(RarefactionLabError, ValueError):
    """An input lies outside the domain of a formula (γ ≤ 1, ρ < 0, ...)."""


class ScheduleError(DomainError):
    """The (μ, δ) schedule for a viscosity violates one of its bounds."""

    def __init__(self, bound: str, message: str):
        super().__init__(f"{bound}: {message}")
        self.bound = bound


class ConfigError(RarefactionLabError, ValueError):
    def __init__(self, key: str, reason: str):
        super().__init__(f"config key {key!r}: {reason}")
        self.key    = key
        self.reason = reason


class ConvergenceError(RarefactionLabError, ArithmeticError):
    """An iteration or quadrature ran out of budget."""


class VacuumBreachError(RarefactionLabError, ArithmeticError):
    def __init__(self, cell: int, time: float, value: Optional[float] = None):
        detail = "" if value is None else f" (rho={value:.3e})"
        super().__init__(f"non-positive density in cell {cell} at t={time:.6g}{detail}")
        self.cell = cell
        self.time = time


class StiffnessError(RarefactionLabError, ArithmeticError):
    def __init__(self, dt: float, time: float):
        super().__init__(f"time step underflow: dt={dt:.3e} at t={time:.6g}")
        self.dt   = dt
        self.time = time


class FitError(RarefactionLabError, ValueError):
    """Rate fit inputs are degenerate (too few points, zero errors, ...)."""


class ManifestError(RarefactionLabError):
    """A completed run already exists in the output directory."""
