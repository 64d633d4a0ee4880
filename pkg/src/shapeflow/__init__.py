"""Shape-tensor geometry of embedded manifolds in Euclidean geometric algebra."""

from .curvature import (
    ConnectionData,
    CurvatureValue,
    connection_data,
    curvature_from_commutator,
    curvature_from_connection,
    frame_vector_field,
    total_curvature,
)
from .errors import (
    DegenerateChartError,
    DegeneratePointError,
    DegenerateShapeError,
    ProjectionError,
    ShapeFlowError,
    SingularError,
    SpanConditionError,
)
from .expr import ScalarFieldExpr, parse_scalar_field
from .ga import (
    LinearMap,
    Multivector,
    Rotor,
    blade_inverse,
    commutator,
    geometric_product,
    inner_product,
    outer_product,
    outermorphism,
    project_tangent,
    project_transverse,
    reverse,
    rotor_exp,
    symmetric_inv_sqrt,
    symmetric_sqrt,
)
from .manifold import (
    FrameData,
    Hypersurface,
    ImplicitHypersurface,
    Manifold,
    ParametricChart,
    Quadric,
    Sphere,
    manifold_from_json,
    project_to_manifold,
    pseudoscalar_at,
    shape_operator_at,
    shape_tensor,
    shape_tensor_frame,
)
from .shapemin import (
    ShapeMinProblem,
    ellipsoid_closed_form,
    ellipsoid_closed_form_trace,
    euler_lagrange_residual,
    shape_min_trace,
    sigma_functional,
    sphere_geodesic_closed_form,
    verify_minimality,
)
from .traceio import emit_plot_data, read_trace_csv, write_trace_csv
from .transport import (
    CurveTrace,
    MultivectorField,
    chart_curve_trace,
    covariant_derivative,
    geodesic_trace,
    holonomy,
    latitude_loop,
    named_loop,
    octant_loop,
    rotation_angle,
    transport_along,
    transport_rotors,
    transport_step,
)

__version__ = "0.1.0"
