"""End-to-end driver: dispatch to the elimination routes, the dilation split
``F = F_r G^-1``, verification reports and the Cohn fixture.

The dilation route handles a univariate matrix with tails that is far from
the identity. ``F_r(z) = F(r z)`` differs from ``F`` by at most the dilation
gap, so ``G = I + F^-1 (F_r - F)`` is close to ``I`` and ``F = F_r G^-1``.
The polynomial part of ``F_r`` goes through Euclidean elimination and ``G``
through near-identity elimination.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import Literal

from .elementary import Factorization, group_ik_normal_form, invert_factors, merge_factors, product_of_factors
from .errors import (
    ConfigMismatch,
    InverseUnavailable,
    NotInvertible,
    NotNearIdentity,
    Unreachable,
    Unsupported,
)
from .matrix import AlgMatrix, det, mat_add, mat_dilate, mat_inverse_near_identity, mat_mul, mat_norm, mat_sub
from .nearid import factor_near_identity
from .series import AlgebraConfig, TruncatedSeries, dilation_gap_bound, mul, reciprocal
from .unipoly import check_unimodular, factor_univariate

log = logging.getLogger(__name__)

Mode = Literal["auto", "near_identity", "euclid", "dilation"]
MODES = ("auto", "near_identity", "euclid", "dilation")
RADIUS_GRID_STEPS = 52
NEAR_IDENTITY_THRESHOLD = 0.5
UNIMODULAR_TOL = 1e-9
# The near-identity factorization of G needs ||G - I|| < 1; aim well inside.
MAX_DILATION_DEFECT = 0.25

OKA_REFUSAL = (
    "no constructive route: for d >= 2 variables and a matrix far from the identity, elementary "
    "factorization rests on the Oka-principle theorem of Ivarsson and Kutzschebauch (unipotent "
    "factorization of null-homotopic holomorphic maps on Stein spaces), whose proof is not an algorithm"
)


@dataclass(frozen=True)
class FactorRequest:
    """What to factor and how.

    ``assume_unimodular`` skips the ``det F = 1`` check (the caller promises it).
    """

    matrix: AlgMatrix
    mode: Mode = "auto"
    tol: float = 1e-10
    radius: float | None = None
    assume_unimodular: bool = False

    def __post_init__(self):
        if self.mode not in MODES:
            raise ValueError(f"unknown mode {self.mode!r}; expected one of {MODES}")
        if not self.tol > 0:
            raise ValueError(f"tol must be positive, got {self.tol!r}")
        if self.radius is not None and not 0.0 < self.radius < 1.0:
            raise ValueError(f"radius must lie in (0, 1), got {self.radius!r}")


@dataclass(frozen=True)
class VerificationReport:
    """Outcome of multiplying a factor list back out.

    ``residual`` is the certified bound on ``||product - F||`` and includes the
    tails of both; ``center_residual`` compares the polynomial parts only and
    ``tail_mass`` is the total tail of ``F`` and of the computed product.
    """

    residual: float
    tol: float
    passed: bool
    factor_count: int
    normal_form_blocks: int
    center_residual: float = 0.0
    tail_mass: float = 0.0

    def __post_init__(self):
        if not self.residual >= 0.0:
            raise ValueError("residual must be nonnegative")
        if self.passed != (self.residual <= self.tol):
            raise ValueError("passed must equal (residual <= tol)")


def choose_radius(F: AlgMatrix, eta: float) -> float:
    """Smallest ``r = 1 - 2^-m`` whose summed dilation gap bounds are ``<= eta``."""
    tails = 2.0 * F.tail_mass()
    if not eta > tails:
        raise Unreachable(f"tails alone contribute {tails:.3g} to the dilation gap, which is not below eta = {eta:.3g}")
    entries = [x for row in F.entries for x in row]
    for m in range(1, RADIUS_GRID_STEPS + 1):
        r = 1.0 - 2.0**-m
        if math.fsum(dilation_gap_bound(x, r) for x in entries) <= eta:
            return r
    raise Unreachable(f"no radius 1 - 2^-m with m <= {RADIUS_GRID_STEPS} meets eta = {eta:.3g}")


def adjugate(F: AlgMatrix) -> AlgMatrix:
    """Transposed cofactor matrix, so that ``F adj(F) = det(F) I``."""
    n = F.n
    config = F.config
    if n == 1:
        return AlgMatrix.identity(1, config)
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            # entry (i, j) is the cofactor of F[j, i]
            minor = AlgMatrix([[F[r, c] for c in range(n) if c != i] for r in range(n) if r != j])
            d = det(minor)
            row.append(-d if (i + j) % 2 else d)
        rows.append(row)
    return AlgMatrix(rows)


def certified_inverse(F: AlgMatrix, tol: float = 1e-12) -> AlgMatrix:
    """Enclosure of ``F^-1``: Neumann series near ``I``, otherwise ``adj(F) / det(F)``.

    Raises:
        InverseUnavailable: neither route yields a certificate.
    """
    if mat_norm(mat_sub(F, AlgMatrix.identity(F.n, F.config))) < 1.0:
        try:
            return mat_inverse_near_identity(F, tol)
        except NotNearIdentity:
            pass
    try:
        inv_det = reciprocal(det(F), tol)
    except NotInvertible as exc:
        raise InverseUnavailable(f"det F could not be inverted: {exc}") from None
    return adjugate(F).map(lambda x: mul(x, inv_det))


def split_dilation(F: AlgMatrix, r: float, tol: float = 1e-12) -> tuple[AlgMatrix, AlgMatrix]:
    """``(F_r, G)`` with ``G = I + F^-1 (F_r - F)``, so that ``F G = F_r``.

    Raises:
        InverseUnavailable: no certified inverse of ``F``.
    """
    return _split(F, r, certified_inverse(F, tol))


def _split(F: AlgMatrix, r: float, F_inv: AlgMatrix) -> tuple[AlgMatrix, AlgMatrix]:
    F_r = mat_dilate(F, r)
    G = mat_add(AlgMatrix.identity(F.n, F.config), mat_mul(F_inv, mat_sub(F_r, F)))
    return F_r, G


def factor(req: FactorRequest) -> Factorization:
    """Factor ``req.matrix`` into elementary matrices along the requested route.

    Raises:
        NotUnimodular: ``det F`` differs from 1 (unless ``assume_unimodular``).
        Unsupported: no constructive route exists for this input.
    """
    F = req.matrix
    d = F.config.num_vars
    if not req.assume_unimodular:
        check_unimodular(F, UNIMODULAR_TOL)
    mode = req.mode
    if mode == "near_identity":
        return factor_near_identity(F, req.tol)
    if mode == "euclid":
        return factor_univariate(F, req.tol, unimodular_tol=None)
    if mode == "dilation":
        return _dilation_route(F, req.tol, req.radius)
    # auto
    if d == 1 and F.is_tail_free():
        return factor_univariate(F, req.tol, unimodular_tol=None)
    distance = mat_norm(mat_sub(F, AlgMatrix.identity(F.n, F.config)))
    if distance < NEAR_IDENTITY_THRESHOLD:
        return factor_near_identity(F, req.tol)
    if d == 1:
        return _dilation_route(F, req.tol, req.radius)
    raise Unsupported(f"{OKA_REFUSAL} (d = {d}, ||F - I|| = {distance:.3g})")


def dilation_eta(F: AlgMatrix, tol: float, inverse_norm: float) -> float:
    """Gap budget for the dilation route.

    ``min(tol, 0.1) / max(1, ||F^-1||)``, raised to four times the total tail
    when the tails leave no room below it, and refused when that exceeds what
    keeps ``G`` near the identity.
    """
    scale = max(1.0, inverse_norm)
    eta = min(tol, 0.1) / scale
    floor = 4.0 * F.tail_mass()
    if eta <= floor:
        eta = floor
        if eta > MAX_DILATION_DEFECT / scale:
            raise Unreachable(
                f"tails ({F.tail_mass():.3g}) too large for the dilation route with ||F^-1|| = {inverse_norm:.3g}"
            )
    return eta


def _dilation_route(F: AlgMatrix, tol: float, radius: float | None) -> Factorization:
    F_inv = certified_inverse(F)
    if radius is None:
        radius = choose_radius(F, dilation_eta(F, tol, mat_norm(F_inv)))
    F_r, G = _split(F, radius, F_inv)
    log.debug("dilation route: r = %r, ||G - I|| = %.3g", radius, mat_norm(mat_sub(G, AlgMatrix.identity(F.n, F.config))))
    head = F_r.center()
    if F.config.num_vars == 1:
        # det(head) drifts from 1 by the truncated tails; the drift ends up in the residual
        head_fac = factor_univariate(head, tol, unimodular_tol=None)
    else:
        head_fac = factor_near_identity(head, tol)
    g_fac = factor_near_identity(G, tol)
    factors = merge_factors(list(head_fac.factors) + invert_factors(g_fac.factors))
    return Factorization.certify(F, factors, "dilation_pipeline")


def verify(F: AlgMatrix, fac: Factorization, tol: float) -> VerificationReport:
    """Multiply ``fac`` out, compare with ``F`` and count normal-form blocks."""
    if fac.n != F.n:
        raise ConfigMismatch(f"factorization is {fac.n} x {fac.n} but the matrix is {F.n} x {F.n}")
    config = F.config
    product = fac.product() if fac.config == config else product_of_factors(fac.factors, F.n, config)
    difference = mat_sub(product, F)
    residual = mat_norm(difference)
    center_residual = mat_norm(mat_sub(product.center(), F.center()))
    blocks = group_ik_normal_form(fac.factors, F.n, config)
    return VerificationReport(
        residual=residual,
        tol=tol,
        passed=residual <= tol,
        factor_count=len(fac.factors),
        normal_form_blocks=len(blocks),
        center_residual=center_residual,
        tail_mass=product.tail_mass() + F.tail_mass(),
    )


def cohn_matrix(config: AlgebraConfig) -> AlgMatrix:
    """``[[1 + z1 z2, z1^2], [-z2^2, 1 - z1 z2]]``: determinant 1, but not a
    product of elementary matrices over polynomials in two variables."""
    if config.num_vars != 2:
        raise ConfigMismatch(f"the Cohn matrix needs num_vars = 2, got {config.num_vars}")
    if config.degree_cap < 2:
        raise ConfigMismatch("the Cohn matrix needs degree_cap >= 2")
    s = lambda terms: TruncatedSeries.from_terms(config, terms)  # noqa: E731
    return AlgMatrix(
        [
            [s({(0, 0): 1.0, (1, 1): 1.0}), s({(2, 0): 1.0})],
            [s({(0, 2): -1.0}), s({(0, 0): 1.0, (1, 1): -1.0})],
        ]
    )
