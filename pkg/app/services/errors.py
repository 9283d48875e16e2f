"""
Exceptions raised by the verification services.
"""

from typing import Optional


class VerificationError(Exception):
    """Base class for every error raised by the services."""


class InvalidSubsetError(VerificationError):
    pass


class GroundSetMismatchError(VerificationError):
    pass


class UnsupportedSymmetryError(VerificationError):
    pass


class UnsupportedPullbackError(VerificationError):
    pass


class ReductionFailureError(VerificationError):
    def __init__(self, message: str, orbit=None, value=None):
        super().__init__(message)
        self.orbit = orbit
        self.value = value


class SolverError(VerificationError):
    pass


class InputFormatError(VerificationError):
    def __init__(self, message: str, file: Optional[str] = None,
                 line: Optional[int] = None, field: Optional[str] = None):
        super().__init__(message)
        self.file = file
        self.line = line
        self.field = field

    def diagnostic(self) -> str:
        """One-line diagnostic naming file, line and field."""
        return (f"{self.file or '<input>'}:{self.line if self.line is not None else '?'}: "
                f"{self.field or '-'}: {self}")
