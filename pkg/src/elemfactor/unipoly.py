"""Euclidean elimination for univariate polynomial matrices of determinant 1.

Works on plain ``numpy`` coefficient vectors (ascending powers) in floating
point. Degree decisions treat coefficients below ``drop_tol`` times the
column's largest coefficient as zero. The elimination itself is not rigorous;
the returned :class:`Factorization` is certified afterwards by multiplying the
factors out in enclosure arithmetic.
"""

from __future__ import annotations

import logging

import numpy as np

from .elementary import ElementaryFactor, Factorization, invert_factors, merge_factors, product_of_factors
from .errors import (
    DivisionByZero,
    NearIdentityDiverged,
    NotInvertible,
    NotInvertibleDiagonal,
    NotUnimodular,
    PivotBreakdown,
    Unsupported,
)
from .matrix import AlgMatrix, det, mat_mul, mat_norm, mat_sub
from .nearid import diagonal_to_factors, factor_near_identity
from .series import AlgebraConfig, TruncatedSeries, norm, reciprocal

DEFAULT_DROP_TOL = 1e-10
FALLBACK_DROP_TOLS = (1e-12, 1e-8)
PRECONDITIONED_RUNS = 8
UNIMODULAR_TOL = 1e-9

log = logging.getLogger(__name__)


def _as_poly(f: TruncatedSeries) -> np.ndarray:
    if f.num_vars != 1:
        raise Unsupported("Euclidean elimination needs univariate entries (num_vars = 1)")
    if f.tail != 0.0:
        raise Unsupported("Euclidean elimination needs tail-free entries")
    return np.array(f.coeffs, dtype=np.complex128)


def _clean(p: np.ndarray, threshold: float) -> np.ndarray:
    """Drop trailing coefficients with magnitude <= threshold; the zero polynomial is empty."""
    nz = np.flatnonzero(np.abs(p) > threshold)
    if nz.size == 0:
        return p[:0]
    return p[: nz[-1] + 1]


def _l1(p: np.ndarray) -> float:
    return float(np.abs(p).sum())


def _deg(p: np.ndarray) -> int:
    return p.shape[0] - 1


def _divmod(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    db = _deg(b)
    lead = b[-1]
    r = a.copy()
    if _deg(a) < db:
        return np.zeros(0, dtype=np.complex128), r
    q = np.zeros(_deg(a) - db + 1, dtype=np.complex128)
    for s in range(_deg(a) - db, -1, -1):
        c = r[s + db] / lead
        q[s] = c
        r[s : s + db + 1] -= c * b
        r[s + db] = 0
    return q, r[:db]


def _sub_mul(a: np.ndarray, m: np.ndarray, b: np.ndarray) -> np.ndarray:
    """``a - m * b`` for coefficient vectors of any lengths."""
    if m.size == 0 or b.size == 0:
        return a
    prod = np.convolve(m, b)
    size = max(a.size, prod.size)
    out = np.zeros(size, dtype=np.complex128)
    out[: a.size] += a
    out[: prod.size] -= prod
    return out


def poly_divmod(
    a: TruncatedSeries, b: TruncatedSeries, drop_tol: float = DEFAULT_DROP_TOL
) -> tuple[TruncatedSeries, TruncatedSeries]:
    """Quotient and remainder with ``a = b q + rem`` and ``deg rem < deg b``."""
    pa, pb = _as_poly(a), _as_poly(b)
    if a.config != b.config:
        raise ValueError("series configs differ")
    scale = max(float(np.abs(pa).max(initial=0.0)), float(np.abs(pb).max(initial=0.0)))
    threshold = drop_tol * scale
    pa, pb = _clean(pa, threshold), _clean(pb, threshold)
    if pb.size == 0:
        raise DivisionByZero("divisor is zero after coefficient cleanup")
    q, r = _divmod(pa, pb)
    r = _clean(r, threshold)
    config = a.config
    return _series(config, q), _series(config, r)


def _series(config: AlgebraConfig, p: np.ndarray) -> TruncatedSeries:
    return TruncatedSeries(config, p if p.size else None)


def _vector_quotient(
    v: list[np.ndarray], w: list[np.ndarray], max_degree: int, threshold: float
) -> tuple[np.ndarray, list[np.ndarray]] | None:
    """Polynomial ``alpha`` making ``v - alpha w`` (entrywise) of lowest possible degree.

    ``deg alpha = deg v - deg w`` (degrees of vectors are the largest entry
    degree). For each candidate degree ``t = -1 .. max_degree`` the
    coefficients of ``v - alpha w`` above ``t`` are driven to zero in the
    least-squares sense; the first ``t`` whose leftover has l1 mass at most
    ``threshold`` wins and that leftover is dropped. Returns None when no
    ``t <= max_degree`` qualifies.

    Long division would fix ``alpha`` from the top coefficients alone, dividing
    by the leading coefficient once per quotient term. When the true result
    drops several degrees the system is overdetermined, and using every
    equation keeps ``alpha`` accurate even when that leading coefficient is
    small.
    """
    dv = max(_deg(p) for p in v)
    dw = max(_deg(p) for p in w)
    if dw < 0 or dv < dw:
        return None
    m = dv - dw
    for t in range(-1, max_degree + 1):
        blocks, rhs = [], []
        for ve, we in zip(v, w):
            top = max(ve.size, we.size + m)
            if top <= t + 1:
                continue
            # rows: coefficient indices t+1 .. top-1 of alpha * we
            idx = np.arange(t + 1, top)[:, None] - np.arange(m + 1)[None, :]
            inside = (idx >= 0) & (idx < we.size)
            padded_w = np.append(we, 0.0)
            blocks.append(np.where(inside, padded_w[np.where(inside, idx, we.size)], 0.0))
            padded = np.zeros(top, dtype=np.complex128)
            padded[: ve.size] = ve
            rhs.append(padded[t + 1 :])
        if not blocks:
            continue
        A = np.vstack(blocks)
        b = np.concatenate(rhs)
        alpha = np.linalg.lstsq(A, b, rcond=None)[0]
        if not np.all(np.isfinite(alpha)):
            return None
        if _l1(A @ alpha - b) <= threshold:
            new = [_clean(_sub_mul(ve, alpha, we)[: t + 1], 0.0) for ve, we in zip(v, w)]
            return alpha, new
    return None


class _Elimination:
    """Working matrix of coefficient vectors plus the log of applied row operations."""

    def __init__(self, rows: list[list[np.ndarray]], config: AlgebraConfig):
        self.n = len(rows)
        self.config = config
        self.rows = [list(row) for row in rows]
        self.ops: list[ElementaryFactor] = []

    def add_row(self, target: int, source: int, m: np.ndarray, skip: int | None = None) -> None:
        """row[target] += m * row[source]; column ``skip`` is left for the caller to set."""
        if not np.any(m):
            return
        for c in range(self.n):
            if c != skip:
                self.rows[target][c] = _sub_mul(self.rows[target][c], -m, self.rows[source][c])
        self.ops.append(ElementaryFactor(target + 1, source + 1, _series(self.config, m)))

    def reduce_column(self, k: int, drop_tol: float) -> None:
        """Euclidean reduction of column ``k`` (rows k..n-1) to a single entry.

        Each step divides one entry by another of no larger degree. Among all
        such pairs the one with the smallest quotient is taken, which keeps
        the row operations (and the growth of the other columns) small.
        Quotients come from :func:`_vector_quotient`, so a remainder can skip
        several degrees when its top coefficients are noise.
        """
        rows = self.rows
        scale = max(float(np.abs(rows[i][k]).max(initial=0.0)) for i in range(k, self.n))
        for i in range(k, self.n):
            rows[i][k] = _clean(rows[i][k], drop_tol * scale)
        while True:
            live = [i for i in range(k, self.n) if rows[i][k].size]
            if not live:
                raise PivotBreakdown(f"column {k + 1} vanished below the diagonal")
            if len(live) == 1:
                break
            best = None
            for p in live:
                b = rows[p][k]
                for i in live:
                    a = rows[i][k]
                    if i == p or _deg(a) < _deg(b):
                        continue
                    threshold = drop_tol * (_l1(a) + _l1(b))
                    found = _vector_quotient([a], [b], _deg(b) - 1, threshold)
                    if found is None:
                        # square triangular system missed the threshold: plain long division
                        q, r = _divmod(a, b)
                        r = _clean(r, 0.0)
                    else:
                        q, (r,) = found
                    if best is None or _l1(q) < best[0]:
                        best = (_l1(q), i, p, q, r)
            _, i, p, q, r = best
            assert _deg(r) < _deg(rows[i][k]), "Euclidean step failed to lower the degree"
            self.add_row(i, p, -q, skip=k)
            rows[i][k] = r
        survivor = live[0]
        if survivor != k:
            # signed swap: E_kp(1) E_pk(-1) E_kp(1) applied on the left
            one = np.ones(1, dtype=np.complex128)
            self.add_row(k, survivor, one)
            self.add_row(survivor, k, -one)
            self.add_row(k, survivor, one)
            rows[survivor][k] = rows[survivor][k][:0]

    def clear_above(self, k: int) -> None:
        rows = self.rows
        pivot = rows[k][k]
        inverse = None
        for i in range(k):
            if not rows[i][k].size:
                continue
            if _deg(pivot) == 0:
                m = -rows[i][k] / pivot[0]
            else:
                if inverse is None:
                    inverse = _certified_inverse(_series(self.config, pivot), k)
                m = -np.convolve(rows[i][k], inverse)[: self.config.degree_cap + 1]
            self.add_row(i, k, m, skip=k)
            rows[i][k] = rows[i][k][:0]


def _peel(
    rows: list[list[np.ndarray]], config: AlgebraConfig, drop_tol: float, max_steps: int = 1000
) -> tuple[list[ElementaryFactor], list[list[np.ndarray]], list[ElementaryFactor]]:
    """Strip elementary factors from both ends while that lowers a row or column degree.

    Every step tries all row operations ``row_i -= alpha row_j`` and column
    operations ``col_j -= alpha col_i``, takes the one lowering the degree of
    the modified row/column the most (smaller ``alpha`` breaks ties) and stops
    when the matrix is constant or nothing lowers a degree. Returns the left
    operations, the reduced matrix and the right operations, each list in
    order of application, so ``W = L_k ... L_1 F R_1 ... R_m``.
    """
    n = len(rows)
    W = [list(row) for row in rows]
    left: list[ElementaryFactor] = []
    right: list[ElementaryFactor] = []
    for _ in range(max_steps):
        if max(_deg(p) for row in W for p in row) <= 0:
            break
        best = None
        for i in range(n):
            for j in range(n):
                if i == j:
                    continue
                col_i = [W[r][i] for r in range(n)]
                col_j = [W[r][j] for r in range(n)]
                for side, v, w in (("right", col_j, col_i), ("left", W[i], W[j])):
                    dv = max(_deg(p) for p in v)
                    threshold = drop_tol * (sum(map(_l1, v)) + sum(map(_l1, w)))
                    found = _vector_quotient(v, w, dv - 1, threshold)
                    if found is None:
                        continue
                    alpha, new = found
                    key = (max(_deg(p) for p in new) - dv, _l1(alpha))
                    if best is None or key < best[0]:
                        best = (key, side, i, j, alpha, new)
        if best is None:
            break
        _, side, i, j, alpha, new = best
        op = ElementaryFactor(i + 1, j + 1, _series(config, -alpha))
        if side == "right":
            for r in range(n):
                W[r][j] = new[r]
            right.append(op)
        else:
            W[i] = new
            left.append(op)
    return left, W, right


def _certified_inverse(u: TruncatedSeries, k: int) -> np.ndarray:
    c = u.constant_term()
    if c == 0 or not norm(u * (1.0 / c) - 1.0) < 1.0:
        raise NotInvertibleDiagonal(f"diagonal entry {k + 1} is not a unit close to a constant")
    try:
        return np.array(reciprocal(u).coeffs)
    except NotInvertible as exc:
        raise NotInvertibleDiagonal(f"diagonal entry {k + 1}: {exc}") from None


def check_unimodular(F: AlgMatrix, tol: float = UNIMODULAR_TOL) -> float:
    """Largest coefficient of ``det F - 1``; raises NotUnimodular above ``tol``."""
    dev = det(F) - 1.0
    worst = float(np.abs(dev.coeffs).max(initial=0.0))
    if not worst <= tol:
        raise NotUnimodular(f"det F - 1 has a coefficient of size {worst:.3g} > {tol:g}")
    return worst


def _eliminate(rows: list[list[np.ndarray]], config: AlgebraConfig, tol: float, drop_tol: float) -> list[ElementaryFactor]:
    """Factors whose product approximates the matrix ``rows`` (not yet certified)."""
    n = len(rows)
    work = _Elimination(rows, config)
    for k in range(n):
        work.reduce_column(k, drop_tol)
    for k in range(n - 1, 0, -1):
        work.clear_above(k)
    zero = TruncatedSeries.zero(config)
    diagonal = AlgMatrix(
        [[_series(config, work.rows[i][i]) if i == j else zero for j in range(n)] for i in range(n)]
    )
    for i in range(n):
        u = diagonal[i, i]
        if u.degree() > 0:
            _certified_inverse(u, i)
    try:
        diag_factors, _ = diagonal_to_factors(diagonal, tol)
    except NotInvertible as exc:
        raise NotInvertibleDiagonal(str(exc)) from None
    return [op.inverse() for op in work.ops] + diag_factors


def _peel_then_eliminate(
    rows: list[list[np.ndarray]], config: AlgebraConfig, tol: float, drop_tol: float
) -> list[ElementaryFactor]:
    left, core, right = _peel(rows, config, drop_tol)
    # W = L F R  =>  F = L^-1 W R^-1
    return [op.inverse() for op in left] + _eliminate(core, config, tol, drop_tol) + invert_factors(right)


def _preconditioned(seed: int, strategy, drop_tol: float):
    """Strategy run on ``L F R`` for random constant elementary ``L``, ``R``.

    A different starting point changes every pivot decision; the constant
    factors are undone around the result.
    """

    def run(rows: list[list[np.ndarray]], config: AlgebraConfig, tol: float, _drop_tol: float):
        n = len(rows)
        rng = np.random.default_rng(seed)
        sides = []
        for _ in range(2):
            ops = []
            for _ in range(n):
                i, j = rng.choice(n, 2, replace=False)
                ops.append(ElementaryFactor(int(i) + 1, int(j) + 1, TruncatedSeries.constant(config, rng.uniform(-1, 1))))
            sides.append(ops)
        L, R = (product_of_factors(ops, n, config) for ops in sides)
        F = AlgMatrix([[_series(config, p) for p in row] for row in rows])
        moved = mat_mul(mat_mul(L, F), R).center()
        inner = strategy([[_as_poly(x) for x in row] for row in moved.entries], config, tol, drop_tol)
        return invert_factors(sides[0]) + inner + invert_factors(sides[1])

    return run


def _strategies(drop_tol: float, fallback_drop_tols: tuple[float, ...], preconditioned: int):
    """Candidate runs, cheapest and most often successful first."""
    tols = (drop_tol,) + tuple(t for t in fallback_drop_tols if t != drop_tol)
    for t in tols:
        yield f"peel@{t:g}", _peel_then_eliminate, t
        yield f"euclid@{t:g}", _eliminate, t
    for seed in range(preconditioned):
        yield f"preconditioned#{seed}", _preconditioned(seed, _peel_then_eliminate, drop_tol), drop_tol
        yield f"preconditioned-euclid#{seed}", _preconditioned(seed, _eliminate, drop_tol), drop_tol


def factor_univariate(
    F: AlgMatrix,
    tol: float = 1e-10,
    drop_tol: float = DEFAULT_DROP_TOL,
    unimodular_tol: float | None = UNIMODULAR_TOL,
    fallback_drop_tols: tuple[float, ...] = FALLBACK_DROP_TOLS,
    preconditioned: int = PRECONDITIONED_RUNS,
) -> Factorization:
    """Elementary factorization of ``F`` in ``SL_n(C[z])`` by Euclidean elimination.

    Column by column, entries divide one another until a single (constant)
    entry survives, which is moved onto the diagonal with a signed swap.
    Entries above the diagonal are then cleared bottom-up and the diagonal
    units are reduced with Whitehead blocks. Before that, factors that lower a
    row or column degree are peeled off both ends of ``F``.

    Floating-point remainder sequences are ill-conditioned and which path is
    well conditioned depends on the matrix, so several runs are tried: with
    and without peeling, each threshold in ``drop_tol`` and
    ``fallback_drop_tols``, then ``preconditioned`` runs on ``L F R`` with
    random constant ``L``, ``R``. Every run is certified (and refined with a
    near-identity correction when close); the first within ``tol`` is
    returned, otherwise the best.

    ``unimodular_tol=None`` skips the determinant check; a determinant drift
    then lands in the last diagonal unit and in the residual.
    """
    if F.config.num_vars != 1:
        raise Unsupported("Euclidean elimination needs univariate entries (num_vars = 1)")
    if not F.is_tail_free():
        raise Unsupported("Euclidean elimination needs tail-free entries")
    if unimodular_tol is not None:
        check_unimodular(F, unimodular_tol)
    rows = [[_as_poly(x) for x in row] for row in F.entries]
    best: Factorization | None = None
    failure: Exception | None = None
    for name, strategy, threshold in _strategies(drop_tol, fallback_drop_tols, preconditioned):
        try:
            fac = Factorization.certify(F, merge_factors(strategy(rows, F.config, tol, threshold)), "euclid")
        except (PivotBreakdown, NotInvertibleDiagonal) as exc:
            failure = exc
            log.debug("%s: %s", name, exc)
            continue
        if fac.residual_bound > tol:
            fac = min(fac, _refine(F, fac, tol), key=lambda f: f.residual_bound)
        log.debug("%s: residual %.3g", name, fac.residual_bound)
        if best is None or fac.residual_bound < best.residual_bound:
            best = fac
        if fac.residual_bound <= tol:
            break
    if best is None:
        raise failure
    return best


def _refine(F: AlgMatrix, fac: Factorization, tol: float) -> Factorization:
    """Absorb the residual of ``fac`` with a near-identity correction.

    With ``P`` the product of the factors, ``G = P^-1 F`` is close to ``I``
    (``P^-1`` is the product of the inverted factors), so ``F = P G`` and
    ``G`` is factored by elimination. Returns ``fac`` unchanged when ``G`` is
    not close enough to the identity.
    """
    G = mat_mul(product_of_factors(invert_factors(fac.factors), F.n, F.config), F)
    if not mat_norm(mat_sub(G, AlgMatrix.identity(F.n, F.config))) < 0.5:
        return fac
    try:
        correction = factor_near_identity(G, tol)
    except (NearIdentityDiverged, NotInvertible):
        return fac
    return Factorization.certify(F, list(fac.factors) + list(correction.factors), "euclid")
