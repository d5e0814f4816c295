"""Factorization of matrices close to the identity.

Gaussian elimination without pivoting clears each column below the diagonal
and each row to the right of it, using certified reciprocals of the pivots.
The diagonal that remains is reduced with the Whitehead identity

    diag(u, 1/u) = E12(u) E21(-1/u) E12(u) E12(-1) E21(1) E12(-1)

applied to the running products ``u_1 ... u_k``.

Multipliers are stored as tail-free polynomials, so the output is a concrete
product of elementary matrices; everything it misses (truncated reciprocals,
rounding, ``det F != 1``) shows up in the certified residual.
"""

from __future__ import annotations

import logging

from .elementary import ElementaryFactor, Factorization, invert_factors
from .errors import NearIdentityDiverged, NotNearIdentity
from .matrix import AlgMatrix, mat_norm, mat_sub
from .series import TruncatedSeries, add, mul, norm, reciprocal, sub

log = logging.getLogger(__name__)


def whitehead(
    u: TruncatedSeries,
    k: int,
    n: int,
    tol: float = 1e-12,
    u_inverse: TruncatedSeries | None = None,
) -> list[ElementaryFactor]:
    """Six factors in rows/columns ``(k, k+1)`` (one-based) whose product is ``diag(u, 1/u)``.

    ``u_inverse`` may be supplied when an exact inverse is known (constant
    units); otherwise it is obtained from :func:`reciprocal`, which raises
    ``NotInvertible`` when it cannot certify one.
    """
    if not 1 <= k < n:
        raise IndexError(f"Whitehead block at ({k}, {k + 1}) does not fit in dimension {n}")
    config = u.config
    if u_inverse is None:
        u_inverse = reciprocal(u, tol)
    u = u.center()
    v = u_inverse.center()
    one = TruncatedSeries.one(config)
    a, b = k, k + 1
    return [
        ElementaryFactor(a, b, u),
        ElementaryFactor(b, a, -v),
        ElementaryFactor(a, b, u),
        ElementaryFactor(a, b, -one),
        ElementaryFactor(b, a, one),
        ElementaryFactor(a, b, -one),
    ]


def _is_one(u: TruncatedSeries) -> bool:
    return u.tail == 0.0 and u.degree() == 0 and u.constant_term() == 1.0


def diagonal_to_factors(
    D: AlgMatrix, tol: float = 1e-12
) -> tuple[list[ElementaryFactor], TruncatedSeries]:
    """Reduce ``diag(u_1, ..., u_n)`` to ``diag(1, ..., 1, u_1 ... u_n)``.

    Emits ``whitehead(u_1 ... u_k, k)`` for ``k = 1 .. n-1`` and returns the
    factors with the leftover product ``u_1 ... u_n``. Blocks for running
    products equal to exactly 1 are skipped; constant running products use the
    scalar inverse instead of a Neumann certificate.
    """
    n = D.n
    for i in range(n):
        for j in range(n):
            if i != j and not D[i, j].is_zero():
                raise ValueError(f"matrix is not diagonal: entry ({i + 1}, {j + 1}) is nonzero")
    factors: list[ElementaryFactor] = []
    running = D[0, 0]
    for k in range(1, n):
        if not _is_one(running):
            inverse = None
            if running.tail == 0.0 and running.degree() == 0:
                inverse = TruncatedSeries.constant(running.config, 1.0 / running.constant_term())
            factors.extend(whitehead(running, k, n, tol, inverse))
        running = mul(running, D[k, k])
    return factors, running


def factor_near_identity(F: AlgMatrix, tol: float = 1e-12) -> Factorization:
    """Elementary factorization of ``F`` with ``||F - I|| < 1``.

    The working matrix is the tail-free center of ``F``; the returned residual
    is measured against ``F`` itself and therefore includes its tails.

    Raises:
        NotNearIdentity: ``||F - I|| >= 1``.
        NearIdentityDiverged: some elimination pivot ``p`` has ``||p - 1|| >= 1``.
        NotInvertible: a pivot reciprocal could not be certified.
    """
    n = F.n
    config = F.config
    ident = AlgMatrix.identity(n, config)
    q = mat_norm(mat_sub(F, ident))
    if not q < 1.0:
        raise NotNearIdentity(f"||F - I|| = {q:.6g} >= 1")
    zero = TruncatedSeries.zero(config)
    rows = [list(row) for row in F.center().entries]
    row_ops: list[ElementaryFactor] = []
    col_ops: list[ElementaryFactor] = []
    inner_tol = tol / (4 * n * n)

    for k in range(n - 1):
        pivot = rows[k][k]
        drift = norm(sub(pivot, TruncatedSeries.one(config)))
        if not drift < 1.0:
            raise NearIdentityDiverged(f"pivot {k + 1} has ||p - 1|| = {drift:.6g} >= 1")
        pinv = None
        for i in range(k + 1, n):
            target = rows[i][k]
            if target.is_zero():
                continue
            if pinv is None:
                pinv = reciprocal(pivot, inner_tol)
            m = -mul(target, pinv).center()
            for c in range(k + 1, n):
                if not rows[k][c].is_zero():
                    rows[i][c] = add(rows[i][c], mul(m, rows[k][c])).center()
            rows[i][k] = zero
            row_ops.append(ElementaryFactor(i + 1, k + 1, m))
        for j in range(k + 1, n):
            target = rows[k][j]
            if target.is_zero():
                continue
            if pinv is None:
                pinv = reciprocal(pivot, inner_tol)
            # column k is zero below the pivot, so the column operation only clears (k, j)
            col_ops.append(ElementaryFactor(k + 1, j + 1, -mul(pinv, target).center()))
            rows[k][j] = zero

    last = rows[n - 1][n - 1]
    drift = norm(sub(last, TruncatedSeries.one(config)))
    if not drift < 1.0:
        raise NearIdentityDiverged(f"pivot {n} has ||p - 1|| = {drift:.6g} >= 1")
    diag_factors, leftover = diagonal_to_factors(AlgMatrix(rows), inner_tol)
    log.debug("near-identity elimination: leftover det deviation %.3g", norm(leftover - 1.0))
    factors = [op.inverse() for op in row_ops] + diag_factors + invert_factors(col_ops)
    return Factorization.certify(F, factors, "near_identity")
