"""Exception types shared across the compiler and runtime."""

from __future__ import annotations


class WarpfoldError(Exception):
    """Base class for all errors raised by this package."""


class ParseError(WarpfoldError):
    def __init__(self, message: str, line: int = 0, col: int = 0):
        super().__init__(f"{line}:{col}: {message}" if line else message)
        self.line = line
        self.col = col
        self.message = message


class SemanticError(ParseError):
    """Well-formed syntax that violates a language rule (unknown name, bad kind, ...)."""


class UnsupportedFeatureError(WarpfoldError):
    """Input uses a feature this pipeline deliberately does not handle."""


class TransformError(WarpfoldError):
    """A pass produced or detected a structurally invalid program."""


class ConfigError(WarpfoldError):
    """Invalid launch configuration (e.g. block size not a multiple of warp size)."""


class LaunchError(WarpfoldError):
    """Kernel arguments do not match the kernel signature."""


class ExecutionError(WarpfoldError):
    """Runtime fault inside an interpreter (out-of-bounds access, step limit, ...)."""


class BarrierViolation(ExecutionError):
    """Aligned-barrier rule broken: some but not all threads of a group reached a barrier."""


class DivergenceError(WarpfoldError):
    """Reference and transformed runs disagree (raised only when callers opt in)."""
