"""Exception types shared across the package."""


class LapsensError(Exception):
    """Base class for all package-specific errors."""


class InfeasibleError(LapsensError):
    """No assignment can cover every task."""


class UnknownEdgeError(LapsensError):
    """An (agent, task) pair is not an edge of the instance."""


class CapExceededError(LapsensError):
    """The instance is too large for exhaustive enumeration."""


class DegenerateOptimumError(LapsensError):
    """The optimal assignment is not unique, so the requested analysis is undefined."""


class ShapeMismatchError(LapsensError):
    """Two objects that must share an edge set or shape do not."""


class ParseError(LapsensError):
    """Malformed input text.

    `line` and `column` are 1-based positions in the original text.
    """

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(message)
        self.message = message
        self.line = line
        self.column = column

    def __str__(self) -> str:
        if self.line:
            return f"line {self.line}, column {self.column}: {self.message}"
        return self.message


class ShapeError(ParseError):
    """Rows of a grid input have inconsistent lengths."""
