"""Plane elasticity with a tensor-product B-spline Airy stress function.

The stress function lives on one or more mapped patches. Traction conditions
are enforced weakly as squared residuals and the remaining control values
minimise the total complementary energy.
"""
from .cases import CASE_NAMES, CaseDefinition, build_case, error_table, l2_relative_error, reference_stress
from .constraints import BoundaryConditionSpec, residual_form, strong_constraints
from .errors import (
    AirySplineError,
    ConfigurationError,
    DegenerateMappingError,
    DifferentiationError,
    DomainError,
    GaugeError,
    InfeasibleConstraintsError,
    InvalidDiscretizationError,
    InvalidMaterialError,
    ReferenceUnavailableError,
    SolverError,
)
from .geometry import EdgeRef, GeometricMapping, make_mapping
from .materials import BodyForcePotential, IsotropicPlaneStress, OrthotropicLayer, RotatedOrthotropicLayered
from .physics import GlobalDofMap, Patch, QuadraticForm, internal_energy_form, stress_at
from .solver import Problem, Solution, SolveOptions, solve
from .splines import ControlNet, KnotVector, open_uniform_knots

__version__ = "0.1.0"

__all__ = [
    "AirySplineError",
    "BodyForcePotential",
    "BoundaryConditionSpec",
    "CASE_NAMES",
    "CaseDefinition",
    "ConfigurationError",
    "ControlNet",
    "DegenerateMappingError",
    "DifferentiationError",
    "DomainError",
    "EdgeRef",
    "GaugeError",
    "GeometricMapping",
    "GlobalDofMap",
    "InfeasibleConstraintsError",
    "InvalidDiscretizationError",
    "InvalidMaterialError",
    "IsotropicPlaneStress",
    "KnotVector",
    "OrthotropicLayer",
    "Patch",
    "Problem",
    "QuadraticForm",
    "ReferenceUnavailableError",
    "RotatedOrthotropicLayered",
    "Solution",
    "SolveOptions",
    "SolverError",
    "build_case",
    "error_table",
    "internal_energy_form",
    "l2_relative_error",
    "make_mapping",
    "open_uniform_knots",
    "reference_stress",
    "residual_form",
    "solve",
    "stress_at",
    "strong_constraints",
]
