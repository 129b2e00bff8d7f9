"""Numerical comparison geometry on embedded test manifolds."""

from .manifolds import (
    Euclidean,
    GeometryError,
    Hyperbolic,
    ManifoldSpec,
    ModelSurface,
    Point,
    Quadric,
    Sphere,
    TangentVector,
    clustered_focal_quadric,
    curvature_operator,
    curvature_range,
    normal,
    parse_manifold,
    sectional_curvature,
    shape_operator,
    tangent_project,
)
from .geodesics import (
    DistanceResult,
    GeodesicPath,
    LiftedCurve,
    distance,
    distance_ratio,
    distance_result,
    exp_map,
    integrate_geodesic,
    lift_curve,
    log_map,
    parallel_transport,
    rotation_isometry_displacement,
)
from .jacobi import (
    FocalReport,
    JacobiBoundary,
    JacobiFlowState,
    adjoint_check,
    curvature_frame_operator,
    detect_singularities,
    epifocal_trend,
    flow_estimate_suite,
    focal_index_lemma_check,
    index_form,
    integrate_flow,
    jacobi_field,
    reversal_symmetry_check,
    wronskian,
)
from .comparison import (
    ComparisonFunction,
    ComparisonReport,
    GeodesicTriangle,
    Hinge,
    berger_compare,
    comparison_value,
    conjugate_distance_bounds_check,
    curve_length_comparison,
    exp_image_curve_length,
    maximal_diameter_probe,
    model_hinge_distance,
    model_triangle_angles,
    pinch_constants,
    rauch_compare,
    toponogov_hinge_check,
    triangle_comparison_check,
    weak_rauch_check,
)

__version__ = "0.1.0"
