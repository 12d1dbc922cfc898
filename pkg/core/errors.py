# ----------------------- core/errors.py -----------------------
from __future__ import annotations
from typing import Optional


class SimulatorError(Exception):
    """Base for every error raised by the simulator."""


class ScenarioError(SimulatorError, ValueError):
    """Malformed scenario file or violated scenario invariant. `field` names the culprit."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")


class BalancingDomainError(SimulatorError, ValueError):
    """Load difference outside [-1, 1]."""


class ConsistencyError(SimulatorError, RuntimeError):
    """Engine invariant breach (PRB books, conservation). Fatal for the run."""

    def __init__(self, message: str, cell: Optional[int] = None, user: Optional[int] = None):
        self.cell = cell
        self.user = user
        diag = []
        if cell is not None:
            diag.append(f"cell={cell}")
        if user is not None:
            diag.append(f"user={user}")
        suffix = f" ({', '.join(diag)})" if diag else ""
        super().__init__(message + suffix)


class AllocationError(ConsistencyError):
    """Sum of minimum PRB demands exceeds cell capacity: admission control let too many in."""
# ----------------------- /core/errors.py -----------------------
