"""Exception types shared across the package."""

from __future__ import annotations


class LatticeError(ValueError):
    """Invalid lattice data (non-symmetric, odd, not positive definite, bad file)."""


class CapExceededError(RuntimeError):
    """A configured resource cap fired.

    ``cap`` names the limit and ``limit`` is its value, so reports can say
    which one tripped.
    """

    def __init__(self, cap: str, limit: int, message: str | None = None):
        self.cap = cap
        self.limit = limit
        super().__init__(message or f"resource cap {cap}={limit} exceeded")


class TruncationError(ValueError):
    """A requested coefficient is not determined inside the working truncation."""


class DegenerateFormError(ArithmeticError):
    """The bilinear form on a graded piece turned out to be singular."""
