"""Exception hierarchy shared across the package."""


class SuperflowError(Exception):
    """Base class for all package errors."""


class FlowParseError(SuperflowError, ValueError):
    """A flow record could not be parsed from text."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = []
        if line is not None:
            where.append(f"line {line}")
        if column is not None:
            where.append(f"column {column}")
        prefix = f"{', '.join(where)}: " if where else ""
        super().__init__(prefix + message)


class FlowFormatError(SuperflowError, ValueError):
    """A binary record has the wrong size or a corrupt layout."""


class ScenarioError(SuperflowError, ValueError):
    """Invalid parameters for a synthetic traffic scenario."""


class HypothesisError(SuperflowError, ValueError):
    """Problem with the text or structure of a superflow hypothesis."""

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        if line is not None:
            message = f"{message} (line {line}, column {column})"
        super().__init__(message)


class HypothesisSyntaxError(HypothesisError):
    pass


class UnknownAttributeError(HypothesisError):
    pass


class UnboundVariableError(HypothesisError):
    pass


class UnsupportedHypothesisError(SuperflowError):
    """The hypothesis lies outside the efficiently monitorable fragment."""


class DecompositionSizeError(SuperflowError, ValueError):
    """An exhaustive check was asked to run on too many flows."""


class EncodingError(SuperflowError, ValueError):
    """A superflow summary cannot be written in the requested record layout."""
