"""Exception types shared across the toolkit."""


class MarkbenchError(Exception):
    """Base class for all toolkit errors."""


class ParameterError(MarkbenchError):
    """A parameter is outside its legal range."""


class UndefinedSnrError(MarkbenchError):
    """SNR requested against a zero-energy reference."""
