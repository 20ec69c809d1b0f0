"""Reconstruction of centrally symmetric convex bodies from projection curvature radii."""

from .errors import (DegenerateMesh, FlagReconError, FormatError, HarmonicClassError,
                     JacobianDomainError, NonOrthogonal, NotABody, NumericalBlowup,
                     SymmetryViolation)
from .flag_field import FlagField, evaluate_flag, mean_over_psi, validate_symmetry
from .reconstruct import BodyMesh, boundary_point, convexity_audit, export_mesh
from .scalar_field import ScalarField, SphereGrid, analyze, geodesic_derivative, synthesize
from .sphere import FRAME_CONVENTION, Flag, canonical_frame, jacobian_identity_residual
from .transforms import (ConsistencyReport, GeneratingDensity, SupportEvaluator,
                         blaschke_density, consistency_residual, consistency_rhs,
                         forward_field, lindquist_margin, projection_radius,
                         support_function)

__version__ = "0.1.0"

__all__ = [
    "BodyMesh", "ConsistencyReport", "DegenerateMesh", "FRAME_CONVENTION", "Flag",
    "FlagField", "FlagReconError", "FormatError", "GeneratingDensity",
    "HarmonicClassError", "JacobianDomainError", "NonOrthogonal", "NotABody",
    "NumericalBlowup", "ScalarField", "SphereGrid", "SupportEvaluator",
    "SymmetryViolation", "analyze", "blaschke_density", "boundary_point",
    "canonical_frame", "consistency_residual", "consistency_rhs", "convexity_audit",
    "evaluate_flag", "export_mesh", "forward_field", "geodesic_derivative",
    "jacobian_identity_residual", "lindquist_margin", "mean_over_psi",
    "projection_radius", "support_function", "synthesize", "validate_symmetry",
]
