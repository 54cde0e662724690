"""Exception hierarchy shared across the package."""


class ThinSpectraError(Exception):
    """Base class for all package errors."""


class BadDimension(ThinSpectraError):
    """Ambient dimension outside {2, 3}."""


class NonInteriorOrigin(ThinSpectraError):
    """Cross-section does not strictly contain the origin."""


class RegimeViolation(ThinSpectraError):
    """A generated (r, h) pair breaks the defining inequality chain of its regime."""


class DegenerateCell(ThinSpectraError):
    """A mesh cell width underflowed the 1e-14 tolerance."""


class PointLocationFailure(ThinSpectraError):
    """A scaled junction point could not be located in the slab surface mesh."""


class SingularMass(ThinSpectraError):
    """Constraint elimination produced an empty row in the mass matrix."""


class FactorizationFailure(ThinSpectraError):
    """Sparse factorization of the stiffness matrix found a non-positive pivot."""


class TooLarge(ThinSpectraError):
    """Dense oracle refused a pencil above its order guard."""


class NotConverged(ThinSpectraError):
    """Eigensolver hit its iteration cap; partial results are attached.

    Attributes:
        partial: Spectrum holding the best available pairs (flagged unconverged).
        iterations: number of iterations performed.
    """

    def __init__(self, message, partial=None, iterations=0):
        super().__init__(message)
        self.partial = partial
        self.iterations = iterations


class RootLoss(ThinSpectraError):
    """A root bracket could not be certified; the offending interval is attached."""

    def __init__(self, message, interval=None):
        super().__init__(message)
        self.interval = interval


class RegimeMismatch(ThinSpectraError):
    """Limit eigenvectors from different regimes/spaces were combined."""


class OrderViolation(ThinSpectraError):
    """Discrete eigenvalues fed to spectrum matching were not ascending."""


class ClusterSkipped(ThinSpectraError):
    """Corrector check requested for a multiple limit eigenvalue."""


class ConfigError(ThinSpectraError):
    """Invalid study configuration; names the offending key.

    Attributes:
        key: dotted config key ("section.name") that failed validation.
    """

    def __init__(self, key, message):
        super().__init__(f"{key}: {message}")
        self.key = key
