"""Exception types shared across the package.

All errors raised by the simulation loops carry an optional ``step_index``
so a failure deep inside a long run can be located without re-running.
"""

from __future__ import annotations


class AggrsimError(Exception):
    """Base class for all package errors."""

    def __init__(self, message: str, *, step_index: int | None = None):
        self.step_index = step_index
        super().__init__(message)

    def __str__(self) -> str:  # pragma: no cover - trivial
        base = super().__str__()
        if self.step_index is not None:
            return f"{base} (at step {self.step_index})"
        return base


class GeometryMismatch(AggrsimError):
    """Two fields that must share a grid do not."""


class UnresolvableKernel(AggrsimError):
    """The scaled mollifier support spans fewer than 3 grid cells.

    Signals a beta / n_particles / grid-resolution mismatch: either refine
    the grid or lower beta (or n_particles).
    """


class ParticleOutOfDomain(AggrsimError):
    """A particle left the grid interior minus the required margin."""

    def __init__(self, message: str, *, index: int, step_index: int | None = None):
        self.index = index
        super().__init__(message, step_index=step_index)


class NonFiniteResult(AggrsimError):
    """An interaction-strength evaluation produced NaN or infinity."""


class NoDecayBound(AggrsimError):
    """The kernel has no exponential decay envelope, so no drift bound exists."""


class BallOutsideDomain(AggrsimError):
    """A requested metric ball is not contained in the field domain."""


class BoundaryMassLeak(AggrsimError):
    """Field mass near the grid boundary is too large for a periodic transform."""


class NonFiniteField(AggrsimError):
    """A solver state contains NaN or infinity."""


class ConfigError(AggrsimError):
    """A run configuration failed to parse or validate."""
