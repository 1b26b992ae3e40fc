"""Exception hierarchy.

Everything numerical derives from :class:`NumericalError` (CLI exit code 3);
bad input raises :class:`ValidationError`, which is also a ``ValueError``
(exit code 2).
"""


class SRGeodesicsError(Exception):
    pass


class ValidationError(SRGeodesicsError, ValueError):
    pass


class OutOfRange(ValidationError):
    pass


class NumericalError(SRGeodesicsError, ArithmeticError):
    pass


# sl2_core
class NotInSubgroup(NumericalError):
    pass


class ParabolicGenerator(ValidationError):
    pass


# euler_dynamics / phase_flow
class StepSizeUnderflow(NumericalError):
    pass


class InvariantDrift(NumericalError):
    pass


class QuadratureMismatch(NumericalError):
    pass


class NoPeriodicOrbit(ValidationError):
    pass


class UnwrapAmbiguity(NumericalError):
    pass


# geodesic_catalog
class UnresolvedRoot(NumericalError):
    pass


class ClosureFailure(NumericalError):
    pass


class UndersampledPath(NumericalError):
    pass


class NotClosed(NumericalError):
    pass


# birkhoff_model
class NewtonDivergence(NumericalError):
    pass


class InvalidModel(NumericalError):
    pass


class IllConditionedFit(NumericalError):
    pass


class NotAreaPreserving(ValidationError):
    pass


# annulus_tools
class NoSignChange(NumericalError):
    pass


class DegenerateNormalDirection(ValidationError):
    pass


# flow_compare
class SingularDifferential(NumericalError):
    pass
