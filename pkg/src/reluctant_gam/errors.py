"""Exception hierarchy shared across the package.

The CLI maps these onto exit codes: usage problems exit 1, data problems
exit 2, numeric failures exit 3.
"""

from __future__ import annotations


class RgamError(Exception):
    """Base class for all errors raised by this package."""


class UsageError(RgamError):
    """Invalid arguments or option combinations (CLI exit code 1)."""


class DataError(RgamError):
    """Malformed or inconsistent input data (CLI exit code 2)."""


class SolverError(RgamError):
    """Numeric failure: divergence, non-convergence, singular system (CLI exit code 3)."""
