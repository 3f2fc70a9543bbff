"""Exception hierarchy shared by every module of the package."""


class AirySplineError(Exception):
    """Base class for all package errors."""


class InvalidDiscretizationError(AirySplineError, ValueError):
    pass


class DomainError(AirySplineError, ValueError):
    """Evaluation point outside the domain of definition."""


class DifferentiationError(AirySplineError, ValueError):
    """Requested derivative exceeds the available polynomial degree."""


class ConfigurationError(AirySplineError, ValueError):
    pass


class DegenerateMappingError(AirySplineError, ArithmeticError):
    """Jacobian determinant (or edge tangent) vanishes at an evaluation point."""


class InvalidMaterialError(AirySplineError, ValueError):
    pass


class InfeasibleConstraintsError(AirySplineError, ValueError):
    pass


class SolverError(AirySplineError, ArithmeticError):
    pass


class GaugeError(SolverError):
    """Reduced Hessian stays singular after removing the affine gauge."""


class ReferenceUnavailableError(AirySplineError, LookupError):
    """No closed-form reference field exists for the requested case."""
