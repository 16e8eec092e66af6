"""Exception taxonomy shared across the package.

Every operation that can reject its input raises one of these rather than a
bare ValueError, so callers (and the RPC layer) can map failures to stable
error codes.
"""

from __future__ import annotations


class VisevoError(Exception):
    """Base class for all package-specific errors."""


# -- revision store --

class UnknownParent(VisevoError):
    pass


class UnknownRevision(VisevoError):
    pass


class InvalidPath(VisevoError):
    pass


class CorruptStore(VisevoError):
    pass


# -- scope parsing --

class UnbalancedScope(VisevoError):
    def __init__(self, message: str, line: int, col: int):
        super().__init__(f"{message} at {line}:{col}")
        self.line = line
        self.col = col


class DuplicatePath(VisevoError):
    pass


# -- diffs --

class DiffMismatch(VisevoError):
    pass


# -- images --

class DimensionMismatch(VisevoError):
    pass


class TooFewImages(VisevoError):
    pass


class MalformedPPM(VisevoError):
    pass


# -- parameters --

class DuplicateParameter(VisevoError):
    pass


class TypeMismatch(VisevoError):
    pass


class NonPositiveFactor(VisevoError):
    pass


# -- scheduler --

class QueueEmpty(VisevoError):
    pass


# -- toolchains --

class UnknownToolchain(VisevoError):
    pass


class ToolchainRunError(VisevoError):
    """A run step failed (timeout, missing output, non-zero exit)."""


# -- sessions / api --

class UnknownSession(VisevoError):
    pass


class UnknownImage(VisevoError):
    pass


class UnknownGroup(VisevoError):
    pass
