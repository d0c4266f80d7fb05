"""Exception hierarchy. Every error raised by the package derives from GeophaseError."""


class GeophaseError(ValueError):
    pass


class DimensionMismatchError(GeophaseError):
    pass


class UndefinedPhaseError(GeophaseError):
    """Relative phase of two (nearly) orthogonal states requested."""


class UnderResolvedError(GeophaseError):
    """Consecutive states on a track are too far apart to compare phases."""


class DegeneracyError(GeophaseError):
    pass


class ExtrapolationError(GeophaseError):
    pass


class NonHermitianError(GeophaseError):
    pass


class NoOracleError(GeophaseError):
    pass


class UndefinedTiltError(GeophaseError):
    pass


class NotCyclicError(GeophaseError):
    pass


class OpenLoopError(GeophaseError):
    pass


class GridMismatchError(GeophaseError):
    pass


class ScenarioError(GeophaseError):
    """Invalid scenario; ``field`` names the offending entry."""

    def __init__(self, field, message):
        self.field = field
        super().__init__(f"{field}: {message}")
