"""Spherical-harmonic coefficient calculus.

Graded coefficient norms, the ten-generator ladder algebra, structural
multiplication/derivative operators built from degree recurrences,
quadrature transforms between samples and coefficients, and numerical
verification of the continuity bounds tying them together.
"""

from .algebra import (
    CoefficientOperator,
    DomainError,
    GENERATOR_NAMES,
    Operator,
    apply,
    boundary_vanishing_check,
    closure_check,
    commutator,
    derive_structure_constants,
    generator,
    so3_casimir_check,
)
from .bounds import (
    PointFunctional,
    batched_bound_scan,
    bound_cos,
    bound_dtheta,
    bound_Kplus,
    bound_L,
    bound_point_functional,
    continuity_criterion_check,
    functional_constant,
    random_expansion,
    substream,
    trial_expansion,
    unit_mode_bound_sweep,
    weak_eigen_cos,
)
from .expansions import (
    BASIS_TAG,
    CoefficientFileError,
    DecayEstimate,
    HarmonicExpansion,
    HarmonicIndex,
    NormProfile,
    SpherePoint,
    estimate_decay,
    graded_norm,
    hilbert_norm,
    load_expansion,
    norm_profile,
    save_expansion,
)
from .legendre import (
    SH_SUP_BOUND,
    assoc_legendre,
    orthonormal_legendre_table,
    orthonormal_sh_eval,
    sh_eval,
    uniform_bound_check,
)
from .report import BoundReport
from .structural import (
    clebsch_gordan,
    cos_theta_op,
    dphi_op,
    dtheta_op_literal,
    exp_iphi_composite,
    inv_sin_op_literal,
    pde_residual,
    pointwise_multiply_oracle,
    sh_product,
    sin_exp_op,
)
from .transform import (
    FieldFileError,
    GridTooCoarseError,
    SampledField,
    SphereGrid,
    analyze,
    basis_point_values,
    completeness_kernel,
    gauss_legendre,
    inner_product,
    load_field,
    make_grid,
    orthonormality_check,
    point_eval,
    quadrature_inner_product,
    quadrature_integral,
    save_field,
    synthesize,
)

__version__ = "0.1.0"
