"""Exception hierarchy shared by the library and the CLI exit-code mapping."""

from typing import Iterable, Optional


class PolariscopeError(Exception):
    """Base class for all polariscope failures"""


class InvalidInputError(PolariscopeError, ValueError):
    """Malformed labels, recipes, or arguments"""


class InvalidStateError(InvalidInputError):
    """Density-matrix invariants violated"""


class ReconstructionError(PolariscopeError):
    """Inversion of intensity moments failed"""


class InsufficientDataError(ReconstructionError):
    def __init__(self, message: str, missing_orders: Iterable[int] = ()):
        self.missing_orders = sorted(set(missing_orders))
        if self.missing_orders:
            message = f"{message} (missing L: {', '.join(str(L) for L in self.missing_orders)})"
        super().__init__(message)


class ConditioningError(ReconstructionError):
    def __init__(self, message: str, condition: float = float('inf'), order: Optional[int] = None):
        self.condition = condition
        self.order = order
        super().__init__(f"{message} [L={order}, cond={condition:.3e}]" if order is not None
                         else f"{message} [cond={condition:.3e}]")


class VanishingCoefficientError(ReconstructionError):
    def __init__(self, order: int, q_label: str):
        self.order = order
        super().__init__(
            f"C^{{{order}0}}_{{Kq,K-q}} vanishes for q={q_label}, L={order}; "
            f"choose another q for this order (q = K always works)"
        )


class ConvergenceError(PolariscopeError):
    def __init__(self, message: str, best_residual: float):
        self.best_residual = best_residual
        super().__init__(f"{message} (best residual {best_residual:.3e})")


class VerificationError(PolariscopeError):
    """Reconstruction does not match the ground-truth file"""
