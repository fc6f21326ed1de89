"""Exception types shared across hairlab."""


class DomainError(ValueError):
    """An argument lies outside the mathematical domain of an operation."""


class TowerRequired(OverflowError):
    """Hardware floats would overflow; use the tower representation instead."""


class RegimeError(ArithmeticError):
    """A real-dominant representation can no longer carry the imaginary part."""


class ResolutionError(RuntimeError):
    """A numerical procedure failed to resolve its target at the requested depth."""


class FatouEscape(DomainError):
    """An orbit entered the half-plane Re z < beta, which lies in the Fatou set."""

    def __init__(self, step, value):
        self.step = step
        self.value = value
        super().__init__(f"escaped to Fatou half-plane at step {step} (z={value!r})")
