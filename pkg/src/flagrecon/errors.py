"""Exception types raised across the package."""


class FlagReconError(Exception):
    """Base class for all package errors."""


class SymmetryViolation(FlagReconError):
    """Nodal data carries odd-degree content above the evenness tolerance."""


class NonOrthogonal(FlagReconError, ValueError):
    pass


class NumericalBlowup(FlagReconError, FloatingPointError):
    """An integrand exceeded the sanity bound; the grid is broken, not the math."""


class NotABody(FlagReconError):
    """Density fails the nonnegativity (Lindquist) test."""


class DegenerateMesh(FlagReconError):
    pass


class JacobianDomainError(FlagReconError, ValueError):
    """A Jacobian cell sits on the singular rim cos^2 u = sin^2 nu."""


class FormatError(FlagReconError, ValueError):
    """Malformed input file (maps to CLI exit code 3)."""


class HarmonicClassError(FormatError):
    """Flag data carries psi-harmonics outside {0, 2}."""
