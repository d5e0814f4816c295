"""Square matrices over :class:`~elemfactor.series.TruncatedSeries`.

The matrix norm is the sum of the entry norms, which is submultiplicative
because the entry norm is.
"""

from __future__ import annotations

import math
from typing import Callable, Sequence

from .errors import ConfigMismatch, DimensionTooLarge, NotNearIdentity
from .series import AlgebraConfig, TruncatedSeries, add, dilate, mul, norm, sub

MAX_DET_DIMENSION = 8


class AlgMatrix:
    """Immutable n x n matrix of series sharing one :class:`AlgebraConfig`.

    Indexing is zero-based: ``F[i, j]``.
    """

    __slots__ = ("entries",)
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, entries: Sequence[Sequence[TruncatedSeries]]):
        rows = tuple(tuple(row) for row in entries)
        n = len(rows)
        if n == 0:
            raise ValueError("matrix must have at least one row")
        for i, row in enumerate(rows):
            if len(row) != n:
                raise ValueError(f"row {i} has {len(row)} entries, expected {n} (matrix must be square)")
        config = rows[0][0].config
        for i, row in enumerate(rows):
            for j, entry in enumerate(row):
                if not isinstance(entry, TruncatedSeries):
                    raise TypeError(f"entry ({i}, {j}) is not a TruncatedSeries")
                if entry.config != config:
                    raise ConfigMismatch(f"entry ({i}, {j}) has config {entry.config}, expected {config}")
        self.entries = rows

    @classmethod
    def identity(cls, n: int, config: AlgebraConfig) -> "AlgMatrix":
        one = TruncatedSeries.one(config)
        zero = TruncatedSeries.zero(config)
        return cls([[one if i == j else zero for j in range(n)] for i in range(n)])

    @classmethod
    def zeros(cls, n: int, config: AlgebraConfig) -> "AlgMatrix":
        zero = TruncatedSeries.zero(config)
        return cls([[zero] * n for _ in range(n)])

    @classmethod
    def from_rows(cls, rows, config: AlgebraConfig) -> "AlgMatrix":
        """Build from rows whose items are series or plain numbers."""
        return cls(
            [
                [x if isinstance(x, TruncatedSeries) else TruncatedSeries.constant(config, x) for x in row]
                for row in rows
            ]
        )

    @property
    def n(self) -> int:
        return len(self.entries)

    @property
    def config(self) -> AlgebraConfig:
        return self.entries[0][0].config

    def __getitem__(self, ij: tuple[int, int]) -> TruncatedSeries:
        i, j = ij
        return self.entries[i][j]

    def replace(self, i: int, j: int, value: TruncatedSeries) -> "AlgMatrix":
        rows = [list(row) for row in self.entries]
        rows[i][j] = value
        return AlgMatrix(rows)

    def map(self, fn: Callable[[TruncatedSeries], TruncatedSeries]) -> "AlgMatrix":
        return AlgMatrix([[fn(x) for x in row] for row in self.entries])

    def tail_mass(self) -> float:
        return math.fsum(x.tail for row in self.entries for x in row)

    def is_tail_free(self) -> bool:
        return all(x.tail == 0.0 for row in self.entries for x in row)

    def center(self) -> "AlgMatrix":
        return self.map(TruncatedSeries.center)

    def __eq__(self, other):
        if not isinstance(other, AlgMatrix):
            return NotImplemented
        return self.entries == other.entries

    def __repr__(self):
        body = ",\n ".join("[" + ", ".join(repr(x) for x in row) + "]" for row in self.entries)
        return f"AlgMatrix([{body}])"

    def __add__(self, other):
        return mat_add(self, other) if isinstance(other, AlgMatrix) else NotImplemented

    def __sub__(self, other):
        return mat_sub(self, other) if isinstance(other, AlgMatrix) else NotImplemented

    def __matmul__(self, other):
        return mat_mul(self, other) if isinstance(other, AlgMatrix) else NotImplemented


def _check_pair(F: AlgMatrix, G: AlgMatrix) -> None:
    if F.n != G.n:
        raise ConfigMismatch(f"dimension mismatch: {F.n} vs {G.n}")
    if F.config != G.config:
        raise ConfigMismatch(f"config mismatch: {F.config} vs {G.config}")


def mat_norm(F: AlgMatrix) -> float:
    return math.fsum(norm(x) for row in F.entries for x in row)


def mat_add(F: AlgMatrix, G: AlgMatrix) -> AlgMatrix:
    _check_pair(F, G)
    return AlgMatrix([[add(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(F.entries, G.entries)])


def mat_sub(F: AlgMatrix, G: AlgMatrix) -> AlgMatrix:
    _check_pair(F, G)
    return AlgMatrix([[sub(a, b) for a, b in zip(ra, rb)] for ra, rb in zip(F.entries, G.entries)])


def _dot(terms: list[TruncatedSeries], config: AlgebraConfig) -> TruncatedSeries:
    acc = None
    for t in terms:
        acc = t if acc is None else add(acc, t)
    return acc if acc is not None else TruncatedSeries.zero(config)


def mat_mul(F: AlgMatrix, G: AlgMatrix) -> AlgMatrix:
    _check_pair(F, G)
    n = F.n
    config = F.config
    rows = []
    for i in range(n):
        row = []
        for j in range(n):
            terms = [
                mul(F.entries[i][k], G.entries[k][j])
                for k in range(n)
                if not (F.entries[i][k].is_zero() or G.entries[k][j].is_zero())
            ]
            row.append(_dot(terms, config))
        rows.append(row)
    return AlgMatrix(rows)


def mat_dilate(F: AlgMatrix, r: float) -> AlgMatrix:
    """Entrywise dilation ``F_r(z) = F(r z)``."""
    return F.map(lambda x: dilate(x, r))


def det(F: AlgMatrix) -> TruncatedSeries:
    """Determinant by Laplace expansion along rows, memoized over column subsets.

    Division-free, so it stays inside the series ring.
    """
    n = F.n
    if n > MAX_DET_DIMENSION:
        raise DimensionTooLarge(f"det supports n <= {MAX_DET_DIMENSION}, got {n}")
    config = F.config
    memo: dict[int, TruncatedSeries] = {}

    def minor(cols: int) -> TruncatedSeries:
        # determinant of rows (n - popcount) .. n-1 restricted to the column bitmask
        if cols == 0:
            return TruncatedSeries.one(config)
        if cols in memo:
            return memo[cols]
        r = n - bin(cols).count("1")
        acc = None
        position = 0
        for c in range(n):
            if not cols >> c & 1:
                continue
            entry = F.entries[r][c]
            if not entry.is_zero():
                term = mul(entry, minor(cols & ~(1 << c)))
                if position % 2:
                    term = -term
                acc = term if acc is None else add(acc, term)
            position += 1
        memo[cols] = acc if acc is not None else TruncatedSeries.zero(config)
        return memo[cols]

    return minor((1 << n) - 1)


def mat_inverse_near_identity(F: AlgMatrix, tol: float = 1e-12, max_terms: int = 2000) -> AlgMatrix:
    """Neumann-series inverse ``sum (I - F)^k`` of a matrix within distance 1 of I.

    With ``E = I - F`` and ``q = ||E||`` the neglected part after the m-th
    power ``P_m = E^m`` is ``P_m (E + E^2 + ...)``, of norm at most
    ``||P_m|| q / (1 - q) <= q^(m+1) / (1 - q)``. The sum stops once that bound
    is below ``tol`` and the bound is added to every entry tail.

    Raises:
        NotNearIdentity: ``||F - I|| >= 1``.
    """
    config = F.config
    ident = AlgMatrix.identity(F.n, config)
    E = mat_sub(ident, F)
    q = mat_norm(E)
    if not q < 1.0:
        raise NotNearIdentity(f"||F - I|| = {q:.6g} >= 1; Neumann series does not apply")
    total = ident
    power = ident
    remainder = q / (1.0 - q)
    for _ in range(max_terms):
        if remainder < tol:
            break
        power = mat_mul(power, E)
        total = mat_add(total, power)
        remainder = mat_norm(power) * q / (1.0 - q)
    else:
        raise NotNearIdentity(f"Neumann series did not reach tol={tol:g} in {max_terms} terms (q = {q:.6g})")
    if remainder == 0.0:
        return total
    bump = remainder * config.float_slack
    return total.map(lambda x: x.with_tail((x.tail + bump) * config.float_slack))
