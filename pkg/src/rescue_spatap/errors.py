"""Exception types shared across the toolkit."""


class RescueError(Exception):
    """Base class for every error raised by this package."""


class ParseError(RescueError):
    """A file or payload is malformed (bad JSON, wrong types, unknown fields)."""


class ValidationError(RescueError):
    """A structurally well-formed object violates a model invariant."""


class UnknownVertex(RescueError):
    """A vertex id is outside the graph."""


class InvalidAction(RescueError):
    """A joint action targets a vertex that is not reachable in one step."""


class StateSpaceTooLarge(RescueError):
    """The exact solver would enumerate more states than the configured cap."""

    def __init__(self, required: int, cap: int, context: str = ""):
        msg = f"joint state space needs {required} states, cap is {cap}"
        super().__init__(f"{context}: {msg}" if context else msg)
        self.required = required
        self.cap = cap


class StageOutOfRange(RescueError):
    """A value table was queried past its planning horizon."""


class EmptyTaskSet(RescueError):
    """An operation that needs at least one task received none."""


class UnreachableTask(RescueError):
    """A task vertex cannot be reached from the agent position."""


class NonPositiveTemperature(RescueError):
    """Softmax temperature must be strictly positive."""


class DimensionMismatch(RescueError):
    """Two sequences that must be aligned have different lengths."""


class EmptyPriorityList(RescueError):
    """Target coordination received an agent with no ranked targets."""


class InsufficientBuildings(RescueError):
    """A map does not contain enough buildings for the requested district."""
