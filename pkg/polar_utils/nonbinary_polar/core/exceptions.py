"""
Custom exception classes for the non-binary polar coding toolkit.
"""

from typing import Optional, Tuple


class PolarSystemError(Exception):
    """Base class for toolkit exceptions."""
    pass

class SignalSetError(PolarSystemError):
    """Exception related to signal set construction or indexing."""
    pass

class KernelError(PolarSystemError):
    """Exception related to kernel tables, permutations or schedules."""
    pass

class SpectrumError(PolarSystemError):
    """Exception related to distance spectrum computations."""
    pass

class SearchError(PolarSystemError):
    """Exception related to kernel search."""
    pass

class CodecError(PolarSystemError):
    """Exception related to encoding or decoding."""
    pass

class DecodingUnderflowError(CodecError):
    """A decoder node produced an all-zero likelihood vector."""

    def __init__(self, level: int, offset: int, message: Optional[str] = None):
        self.level = level
        self.offset = offset
        super().__init__(message or f"Degenerate all-zero likelihood vector at node (level={level}, offset={offset})")

    @property
    def node(self) -> Tuple[int, int]:
        return (self.level, self.offset)

class SimulationError(PolarSystemError):
    """Exception related to Monte-Carlo simulation."""
    pass

class ConfigurationError(PolarSystemError):
    """Exception related to configuration errors."""
    pass

class CacheError(PolarSystemError):
    """Exception related to cache operations."""
    pass
