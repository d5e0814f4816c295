"""Elementary factors ``I + alpha e_ij``, their products, and the alternating
lower/upper unipotent normal form.

Factor indices are one-based, as in ``E_12(alpha)``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Literal, Sequence

from .errors import ConfigMismatch, MergeOverflow
from .matrix import AlgMatrix, mat_mul, mat_norm, mat_sub
from .series import AlgebraConfig, TruncatedSeries, add, mul

METHODS = ("euclid", "near_identity", "dilation_pipeline", "manual")
PRODUCT_RUN = 4


@dataclass(frozen=True, eq=False)
class ElementaryFactor:
    i: int
    j: int
    alpha: TruncatedSeries

    def __post_init__(self):
        if self.i == self.j:
            raise ValueError(f"elementary factor needs i != j, got i = j = {self.i}")
        if self.i < 1 or self.j < 1:
            raise ValueError(f"indices are one-based, got ({self.i}, {self.j})")

    @property
    def is_lower(self) -> bool:
        return self.i > self.j

    def inverse(self) -> "ElementaryFactor":
        return ElementaryFactor(self.i, self.j, -self.alpha)

    def __eq__(self, other):
        if not isinstance(other, ElementaryFactor):
            return NotImplemented
        return (self.i, self.j) == (other.i, other.j) and self.alpha == other.alpha

    __hash__ = None  # type: ignore[assignment]


def _check_index(e: ElementaryFactor, n: int) -> None:
    if not (1 <= e.i <= n and 1 <= e.j <= n):
        raise IndexError(f"factor E_{e.i},{e.j} does not fit in dimension {n}")


def elem_to_matrix(e: ElementaryFactor, n: int) -> AlgMatrix:
    _check_index(e, n)
    return AlgMatrix.identity(n, e.alpha.config).replace(e.i - 1, e.j - 1, e.alpha)


def apply_right(M: AlgMatrix, e: ElementaryFactor) -> AlgMatrix:
    """``M @ E_ij(alpha)``: adds ``alpha`` times column i to column j."""
    _check_index(e, M.n)
    i, j = e.i - 1, e.j - 1
    rows = [list(row) for row in M.entries]
    for r in range(M.n):
        src = rows[r][i]
        if not src.is_zero():
            rows[r][j] = add(rows[r][j], mul(src, e.alpha))
    return AlgMatrix(rows)


def apply_left(e: ElementaryFactor, M: AlgMatrix) -> AlgMatrix:
    """``E_ij(alpha) @ M``: adds ``alpha`` times row j to row i."""
    _check_index(e, M.n)
    i, j = e.i - 1, e.j - 1
    rows = [list(row) for row in M.entries]
    for c in range(M.n):
        src = rows[j][c]
        if not src.is_zero():
            rows[i][c] = add(rows[i][c], mul(e.alpha, src))
    return AlgMatrix(rows)


def product_of_factors(
    fs: Sequence[ElementaryFactor], n: int, config: AlgebraConfig | None = None
) -> AlgMatrix:
    """Product ``E_1 E_2 ... E_K``; the empty product is ``I_n``.

    Runs of ``PRODUCT_RUN`` factors are multiplied out left to right and the
    runs are then combined as a balanced tree. A rounding error made early in
    a plain left-to-right pass is scaled by the norm of every later factor,
    while in the tree it is scaled only by sibling partial products, whose
    norms stay close to that of the result. Enclosures are much tighter when
    the factors are large and cancel.
    """
    if config is None:
        if not fs:
            raise ValueError("config is required for an empty factor list")
        config = fs[0].alpha.config
    runs = []
    for start in range(0, len(fs), PRODUCT_RUN):
        M = AlgMatrix.identity(n, config)
        for e in fs[start : start + PRODUCT_RUN]:
            if e.alpha.config != config:
                raise ConfigMismatch(f"factor E_{e.i},{e.j} has config {e.alpha.config}, expected {config}")
            M = apply_right(M, e)
        runs.append(M)
    return tree_product(runs, n, config)


def tree_product(ms: Sequence[AlgMatrix], n: int, config: AlgebraConfig) -> AlgMatrix:
    """Ordered product ``M_1 M_2 ... M_k`` associated as a balanced tree."""
    ms = list(ms)
    if not ms:
        return AlgMatrix.identity(n, config)
    while len(ms) > 1:
        paired = [mat_mul(a, b) for a, b in zip(ms[::2], ms[1::2])]
        if len(ms) % 2:
            paired.append(ms[-1])
        ms = paired
    return ms[0]


def invert_factors(fs: Sequence[ElementaryFactor]) -> list[ElementaryFactor]:
    return [e.inverse() for e in reversed(fs)]


def merge_factors(fs: Sequence[ElementaryFactor]) -> list[ElementaryFactor]:
    """Combine neighbours ``E_ij(a) E_ij(b) = E_ij(a + b)`` and drop zero factors."""
    out: list[ElementaryFactor] = []
    for e in fs:
        if out and (out[-1].i, out[-1].j) == (e.i, e.j):
            e = ElementaryFactor(e.i, e.j, add(out.pop().alpha, e.alpha))
        if not e.alpha.is_zero():
            out.append(e)
    return out


@dataclass(frozen=True, eq=False)
class Factorization:
    """Ordered elementary factors with a certified residual against a target matrix."""

    n: int
    factors: tuple[ElementaryFactor, ...]
    residual_bound: float
    method: str = "manual"
    config: AlgebraConfig | None = field(default=None, repr=False)

    def __post_init__(self):
        if self.method not in METHODS:
            raise ValueError(f"unknown method tag {self.method!r}; expected one of {METHODS}")
        if not self.residual_bound >= 0.0:
            raise ValueError("residual_bound must be nonnegative")
        object.__setattr__(self, "factors", tuple(self.factors))
        for e in self.factors:
            _check_index(e, self.n)

    @classmethod
    def certify(
        cls, target: AlgMatrix, factors: Sequence[ElementaryFactor], method: str = "manual"
    ) -> "Factorization":
        """Multiply the factors out and record ``||product - target||`` as the residual."""
        product = product_of_factors(factors, target.n, target.config)
        residual = mat_norm(mat_sub(product, target))
        fac = cls(target.n, tuple(factors), residual, method, target.config)
        object.__setattr__(fac, "_product", product)
        return fac

    def product(self) -> AlgMatrix:
        """The factors multiplied out (computed once and kept)."""
        cached = self.__dict__.get("_product")
        if cached is None:
            cached = product_of_factors(self.factors, self.n, self.config)
            object.__setattr__(self, "_product", cached)
        return cached

    def __len__(self):
        return len(self.factors)

    def __eq__(self, other):
        if not isinstance(other, Factorization):
            return NotImplemented
        return (
            self.n == other.n
            and self.method == other.method
            and self.residual_bound == other.residual_bound
            and self.factors == other.factors
        )

    __hash__ = None  # type: ignore[assignment]


@dataclass(frozen=True, eq=False)
class UnipotentBlock:
    """Unipotent triangular matrix given by its strict-triangle entries in row-major order."""

    side: Literal["lower", "upper"]
    g: tuple[TruncatedSeries, ...]

    def __post_init__(self):
        if self.side not in ("lower", "upper"):
            raise ValueError(f"side must be 'lower' or 'upper', got {self.side!r}")
        object.__setattr__(self, "g", tuple(self.g))

    @property
    def n(self) -> int:
        m = len(self.g)
        n = int(round((1 + (1 + 8 * m) ** 0.5) / 2))
        if n * (n - 1) // 2 != m:
            raise ValueError(f"block vector length {m} is not n(n-1)/2")
        return n

    def to_matrix(self, n: int | None = None, config: AlgebraConfig | None = None) -> AlgMatrix:
        n = self.n if n is None else n
        if len(self.g) != n * (n - 1) // 2:
            raise ValueError(f"block vector length {len(self.g)} != n(n-1)/2 for n = {n}")
        if config is None:
            config = self.g[0].config
        rows = [list(row) for row in AlgMatrix.identity(n, config).entries]
        for (r, c), value in zip(_strict_positions(n, self.side), self.g):
            rows[r][c] = value
        return AlgMatrix(rows)


def _strict_positions(n: int, side: str) -> list[tuple[int, int]]:
    if side == "lower":
        return [(r, c) for r in range(n) for c in range(r)]
    return [(r, c) for r in range(n) for c in range(r + 1, n)]


def _merge_run(run: list[ElementaryFactor], side: str, n: int, config: AlgebraConfig) -> UnipotentBlock:
    M = product_of_factors(run, n, config)
    zero_side = "upper" if side == "lower" else "lower"
    for r, c in _strict_positions(n, zero_side):
        if not M[r, c].is_zero():
            raise MergeOverflow(f"{side} run produced a nonzero entry at ({r + 1}, {c + 1})")
    for k in range(n):
        d = M[k, k]
        if d.tail != 0.0 or d.degree() != 0 or d.constant_term() != 1.0:
            raise MergeOverflow(f"{side} run changed diagonal entry {k + 1}")
    return UnipotentBlock(side, [M[r, c] for r, c in _strict_positions(n, side)])


def group_ik_normal_form(
    fs: Sequence[ElementaryFactor], n: int, config: AlgebraConfig | None = None
) -> list[UnipotentBlock]:
    """Merge maximal same-side runs into alternating lower/upper unipotent blocks.

    The result starts with a lower block; an identity lower block is prepended
    when the first factor is upper triangular.
    """
    if not fs:
        return []
    if config is None:
        config = fs[0].alpha.config
    blocks: list[UnipotentBlock] = []
    run: list[ElementaryFactor] = []
    side = None
    for e in fs:
        _check_index(e, n)
        e_side = "lower" if e.is_lower else "upper"
        if side is not None and e_side != side:
            blocks.append(_merge_run(run, side, n, config))
            run = []
        side = e_side
        run.append(e)
    blocks.append(_merge_run(run, side, n, config))
    if blocks[0].side == "upper":
        zero = TruncatedSeries.zero(config)
        blocks.insert(0, UnipotentBlock("lower", [zero] * (n * (n - 1) // 2)))
    return blocks


def product_of_blocks(blocks: Sequence[UnipotentBlock], n: int, config: AlgebraConfig) -> AlgMatrix:
    return tree_product([b.to_matrix(n, config) for b in blocks], n, config)
