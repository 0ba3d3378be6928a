"""Higher-order total variation (polynomial annihilation) regularization
for linear inverse problems: order-k difference transforms, an ADMM solver,
and the power-of-two regularization-weight scaling across orders."""

from .linsys import (
    LinearOperator,
    NormalizedSystem,
    normalize_system,
    random_sampling_operator,
    spectral_norm,
)
from .operators import (
    PATransform,
    binomial,
    pa_adjoint,
    pa_forward,
    pa_matrix,
    pa_matrix_l1_norm,
    pa_seminorm,
    verify_binomial_identity,
)
from .signals import (
    NoiseSpec,
    add_noise,
    piecewise_smooth_phantom,
    random_piecewise_polynomial,
    relative_data_error,
    shepp_logan,
    spaced_piecewise_constant,
)
from .solver import (
    SolverConfig,
    SolverResult,
    hotv_reconstruct,
    least_squares,
    objective,
    shrink,
)
from .tuning import (
    LambdaSearchSpec,
    optimal_lambda_search,
    scale_lambda,
    scaling_relative_error,
)

__version__ = "0.1.0"

__all__ = [
    "LinearOperator",
    "NormalizedSystem",
    "normalize_system",
    "random_sampling_operator",
    "spectral_norm",
    "PATransform",
    "binomial",
    "pa_adjoint",
    "pa_forward",
    "pa_matrix",
    "pa_matrix_l1_norm",
    "pa_seminorm",
    "verify_binomial_identity",
    "NoiseSpec",
    "add_noise",
    "piecewise_smooth_phantom",
    "random_piecewise_polynomial",
    "relative_data_error",
    "shepp_logan",
    "spaced_piecewise_constant",
    "SolverConfig",
    "SolverResult",
    "hotv_reconstruct",
    "least_squares",
    "objective",
    "shrink",
    "LambdaSearchSpec",
    "optimal_lambda_search",
    "scale_lambda",
    "scaling_relative_error",
    "__version__",
]
