"""Elementary-matrix factorization over truncated power-series algebras."""

from .elementary import (
    ElementaryFactor,
    Factorization,
    UnipotentBlock,
    apply_left,
    apply_right,
    elem_to_matrix,
    group_ik_normal_form,
    invert_factors,
    merge_factors,
    product_of_blocks,
    product_of_factors,
)
from .errors import *  # noqa: F401,F403
from .matrix import AlgMatrix, det, mat_add, mat_dilate, mat_inverse_near_identity, mat_mul, mat_norm, mat_sub
from .nearid import diagonal_to_factors, factor_near_identity, whitehead
from .pipeline import (
    FactorRequest,
    VerificationReport,
    choose_radius,
    cohn_matrix,
    factor,
    split_dilation,
    verify,
)
from .series import (
    AlgebraConfig,
    TruncatedSeries,
    add,
    dilate,
    dilation_gap_bound,
    evaluate,
    mul,
    norm,
    power,
    reciprocal,
    scale,
    sub,
)
from .unipoly import check_unimodular, factor_univariate, poly_divmod

__version__ = "0.1.0"
