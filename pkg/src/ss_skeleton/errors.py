class InvariantError(ValueError):
    """Input violates a named data invariant (non-special term, bad prime, ...)."""

    def __init__(self, invariant: str, message: str):
        super().__init__(f"[{invariant}] {message}")
        self.invariant = invariant


class CoefficientDivisionError(ArithmeticError):
    """A coefficient quotient is not a finite sum in the coefficient model."""
