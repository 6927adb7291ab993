"""Exception hierarchy shared by the solver, the CLI and the HTTP service"""

from typing import Any


class TentwaveError(Exception):
    """Base class for every error raised by tentwave"""

    def __init__(self, message: str, **details: Any):
        super().__init__(message)
        self.message = message
        self.details = details


class ConfigurationError(TentwaveError):
    """Raised when settings or a run configuration are missing or inconsistent"""


class GeometryError(TentwaveError):
    """Raised for a tent or spatial mesh with invalid geometry"""


class CFLViolationError(GeometryError):
    """Raised when a tent or a uniform grid violates the causality condition"""


class MeshingError(TentwaveError):
    """Raised when the tent mesher cannot complete a slab"""


class OrderingError(TentwaveError):
    """Raised when a tent is solved before all of its inflow values are known"""

    def __init__(self, message: str, tent_index: int, **details: Any):
        super().__init__(message, tent_index=tent_index, **details)
        self.tent_index = tent_index


class SingularSystemError(TentwaveError):
    """Raised when a local tent system cannot be solved"""

    def __init__(self, message: str, condition: float, **details: Any):
        super().__init__(message, condition=condition, **details)
        self.condition = condition


class SnapshotRangeError(TentwaveError):
    """Raised when a field is requested outside the meshed time range"""
