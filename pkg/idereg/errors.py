"""Exception hierarchy shared by the solver core and the command layer."""

from __future__ import annotations

from typing import Any


class IderegError(Exception):
    """Root of every error raised by the package."""


class InvalidInputError(IderegError, ValueError):
    """Malformed matrices, functions, documents or parameters."""


class InconsistentRankError(IderegError):
    """A projector does not have the rank its caller declared."""

    def __init__(self, expected: int, found: int):
        super().__init__(f"projector rank {found} does not match declared rank {expected}")
        self.expected = expected
        self.found = found


class InvalidImpulseError(InvalidInputError):
    """An impulse record violates rank(E_i + S_i) = k_i < n or its shape contract."""


class UnsolvableProblemError(IderegError):
    """The generating problem fails its solvability conditions."""

    def __init__(self, report: Any):
        super().__init__(
            "problem is not solvable "
            f"(cond1={report.cond1_residual:.3e}, cond2={report.cond2_residual:.3e})"
        )
        self.report = report


class NotRegularizableError(IderegError):
    """No constant control makes the problem solvable."""

    def __init__(self, criterion_residual: float):
        super().__init__(f"problem is not regularizable (criterion residual {criterion_residual:.3e})")
        self.criterion_residual = criterion_residual


class MissingControlKernelError(IderegError):
    """A control operation was requested on a problem without a kernel K."""


class InvalidWeightError(InvalidInputError):
    """A selection weight is not symmetric positive definite."""
