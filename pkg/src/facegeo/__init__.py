"""Facial geometry of the rank-sparsity ball ``{X : ||X||_1 + theta ||X||_* <= 1}``."""

__version__ = "0.1.0"

from .faces import (  # noqa: E402
    FaceReport,
    SupportPattern,
    check_extreme_inequality,
    is_vertex,
    minimal_face_dimension,
    subdifferential_dimension_estimate,
    support_complement,
)
from .linalg import DEFAULT_TOL, SvdFactors, Tolerances, joint_norm, numerical_rank, span_dimension, svd  # noqa: E402
from .manifold import manifold_dimension, orbit_differential_rank  # noqa: E402
from .prox import project_ball, soft_threshold, svt  # noqa: E402
from .solvers import (  # noqa: E402
    LinearMap,
    SolveResult,
    SolverConfig,
    extreme_point_refine,
    minimize_linear_over_ball,
    solve_affine_recovery,
)
