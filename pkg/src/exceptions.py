"""
Exceptions Module

This module provides custom exceptions for the shape decomposition toolkit.
"""


class ShapeDecompError(Exception):
    """Base class for all exceptions raised by the toolkit."""
    pass


class ConfigurationError(ShapeDecompError):
    """Exception raised when a configuration value is invalid."""
    pass


class ValidationError(ShapeDecompError):
    """Exception raised when a grid, signal, profile or shape violates its invariants."""
    pass


class DataFormatError(ShapeDecompError):
    """Exception raised when an input file cannot be parsed."""

    def __init__(self, message, path=None, line=None):
        self.path = path
        self.line = line
        location = ""
        if path is not None:
            location = f"{path}"
            if line is not None:
                location += f", line {line}"
            location += ": "
        super().__init__(f"{location}{message}")


class TransformError(ShapeDecompError):
    """Exception raised when the wave packet transform cannot be computed."""
    pass


class RidgeError(ShapeDecompError):
    """Exception raised when ridge extraction or classification fails."""
    pass


class RegressionError(ShapeDecompError):
    """Exception raised when a shape regression problem cannot be solved."""
    pass


class DecompositionError(ShapeDecompError):
    """Exception raised when the recursive decomposition cannot be run."""
    pass
