"""Exception types shared across the package."""


class SpmError(Exception):
    """Base class for all package-specific errors."""


class FormatError(SpmError):
    """Malformed or inconsistent input file."""


class NumericalError(SpmError):
    """A numerical step of the algorithm failed."""


class DegenerateDeflationError(NumericalError):
    """The deflation weight solve was singular or near-singular."""


class MembershipError(NumericalError):
    """A candidate component does not lie in the extracted subspace."""


class LocalComponentError(NumericalError):
    """No null direction found at the converged point."""


class InconsistentRankError(NumericalError):
    """A block needs more rank than the subspace has left."""


class DecompositionError(NumericalError):
    """A decomposition driver failed; carries the failing component index."""

    def __init__(self, component: int, message: str):
        super().__init__(f"component {component}: {message}")
        self.component = component
