"""Sparse-grid Gauss-Hermite interpolation and quadrature for Gaussian
product measures, with multilevel variants, Gaussian-random-field input
generators, and a log-Gaussian diffusion model problem."""

from ._accel import ACCEL_BACKEND
from .hermite import (
    MAX_LEVEL,
    HermiteRule,
    gauss_hermite_rule,
    hermite_eval,
    hermite_eval_all,
    tensor_hermite_eval,
)
from .indexset import (
    EMPTY_INDEX,
    IndexSet,
    MultiIndex,
    WeightFamily,
    binomial_weight,
    build_threshold_set,
    degree_weight,
    drop_unit_exponents,
    is_downward_closed,
    surrogate_weight,
)
from .smolyak import (
    CombinationExpansion,
    HermitePolynomial,
    SparseGrid,
    combination_coeffs,
    interpolant_eval,
    interpolate,
    l2_norm,
    quadrature,
    sparse_grid_points,
    zero_polynomial,
)
from .multilevel import (
    LevelAllocation,
    WorkSequence,
    build_level_index_set,
    build_level_index_set_even,
    construct_levels,
    default_work_sequence,
    gamma_sets,
    ml_interpolate,
    ml_quadrature,
    work,
    work_level_major,
)
from .grf import (
    CovarianceSpec,
    EmbeddingPlan,
    brownian_bridge_kl,
    bspline_cutoff,
    circulant_embed_1d,
    levy_ciesielski,
    matern_cov,
    sample_grf,
    sample_grf_batch,
)
from .model import (
    BayesSetup,
    ModelProblem1D,
    ParametricMapFn,
    PosteriorEstimate,
    RepresentationSystem,
    as_parametric_map,
    coeff_eval,
    exact_solution_1d,
    expected_qoi_oracle,
    fem_solve_1d,
    posterior_density,
    posterior_expectation,
)

__version__ = "0.1.0"
