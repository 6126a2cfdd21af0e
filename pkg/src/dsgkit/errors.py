"""Exception hierarchy.

Two families: :class:`ValidationError` for bad inputs (CLI exit code 1) and
:class:`NumericalError` for numerical failures (CLI exit code 2).
"""

from __future__ import annotations


class DsgError(Exception):
    """Base class for all package errors."""


class ValidationError(DsgError, ValueError):
    """Input violates a documented precondition."""


class NumericalError(DsgError, ArithmeticError):
    """A numerical procedure failed or hit an unstable regime."""


class EmptyGraph(ValidationError):
    pass


class NonRegularGraph(ValidationError):
    pass


class InvalidTopology(ValidationError):
    pass


class InvalidMixingMatrix(ValidationError):
    pass


class NonpositiveTau(ValidationError):
    pass


class DimensionMismatch(ValidationError):
    pass


class AlphaOutOfRange(ValidationError):
    pass


class DeltaOutOfRange(ValidationError):
    pass


class ParameterOutOfRange(ValidationError):
    pass


class Assumption3Violated(ValidationError):
    """The smallest mixing eigenvalue is not positive."""


class InvalidRho(ValidationError):
    pass


class NonPSDInput(ValidationError):
    pass


class MinibatchOnQuadratic(ValidationError):
    pass


class NonQuadraticSuite(ValidationError):
    pass


class RegimeViolation(ValidationError):
    pass


class ConfigError(ValidationError):
    pass


class NoConvergence(NumericalError):
    pass


class SingularSystem(NumericalError):
    pass


class UnstableSpectrum(NumericalError):
    pass


class UnstableA(NumericalError):
    pass


class DegenerateEigenvalue(NumericalError):
    pass
