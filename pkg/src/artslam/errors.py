"""Exception hierarchy.

Input problems derive from :class:`InputError` and numerical breakdowns from
:class:`NumericalError`; the CLI maps them to exit codes 2 and 3.
"""


class ArtSlamError(Exception):
    """Base class for all package errors."""


class InputError(ArtSlamError, ValueError):
    pass


class NumericalError(ArtSlamError, ArithmeticError):
    pass


class DegenerateGeometry(NumericalError):
    """Points are too few or too degenerate (coincident/collinear) to fit."""


class InsufficientSamples(InputError):
    pass


class SingularProjection(NumericalError):
    """A point projects onto the revolute center, so its angle is undefined."""


class InvalidOrder(InputError):
    pass


class DimensionMismatch(InputError):
    pass


class SingularInnovation(NumericalError):
    pass


class InvalidPrior(InputError):
    pass


class AllModelsImplausible(NumericalError):
    pass


class NotCommitted(ArtSlamError):
    pass


class UnknownLandmark(InputError):
    pass


class OutOfSchedule(InputError):
    pass


class LengthMismatch(InputError):
    pass


class MalformedRow(InputError):
    def __init__(self, line, message):
        super().__init__(f"line {line}: {message}")
        self.line = line


class NonMonotoneFrames(InputError):
    def __init__(self, track_id, line):
        super().__init__(f"line {line}: frames of track {track_id!r} are not strictly increasing")
        self.track_id = track_id
        self.line = line


class ScenarioError(InputError):
    """Scenario file does not match the schema."""
