"""Enclosure arithmetic for power series in the Wiener algebra.

A :class:`TruncatedSeries` stands for the set of all absolutely summable power
series ``p + g`` where ``p`` is the stored polynomial (total degree at most
``degree_cap``) and ``||g||_1 <= tail``.  Every operation returns a series whose
set contains the exact result for every choice of members of the inputs:
mass that is truncated, dropped, or lost to floating-point rounding is folded
into the output tail.

Coefficients live in a dense complex ``numpy`` array with one axis per
variable, trimmed to the smallest box holding the nonzero coefficients.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from functools import lru_cache
from typing import Iterable, Mapping, Sequence

import numpy as np

from .errors import ConfigMismatch, NotInvertible

# Per-term rounding allowance for convolutions (a generous multiple of 2**-53).
ROUNDING_PER_TERM = 1e-15
_UNIT_ROUNDOFF = 2.0**-53
_SPLITTER = 134217729.0  # 2**27 + 1, Dekker splitting constant
_EXACT_INT_LIMIT = 2.0**53


@dataclass(frozen=True)
class AlgebraConfig:
    """Shape of the truncated algebra.

    ``drop_below`` is the magnitude under which coefficients are swept into
    the tail. Raising it trades a slightly larger tail for sparser tables.
    """

    num_vars: int = 1
    degree_cap: int = 64
    float_slack: float = 1.0 + 1e-12
    drop_below: float = 1e-300

    def __post_init__(self):
        if int(self.num_vars) != self.num_vars or self.num_vars < 1:
            raise ValueError(f"num_vars must be a positive integer, got {self.num_vars!r}")
        if int(self.degree_cap) != self.degree_cap or self.degree_cap < 1:
            raise ValueError(f"degree_cap must be a positive integer, got {self.degree_cap!r}")
        if not self.float_slack >= 1.0:
            raise ValueError(f"float_slack must be >= 1, got {self.float_slack!r}")
        if not self.drop_below >= 0.0:
            raise ValueError(f"drop_below must be >= 0, got {self.drop_below!r}")


@lru_cache(maxsize=512)
def _degree_grid(shape: tuple[int, ...]) -> np.ndarray:
    grid = np.zeros(shape, dtype=np.int64)
    for axis, size in enumerate(shape):
        view = [1] * len(shape)
        view[axis] = size
        grid = grid + np.arange(size).reshape(view)
    grid.flags.writeable = False
    return grid


def _trim(arr: np.ndarray) -> np.ndarray:
    nz = np.nonzero(arr)
    if nz[0].size == 0:
        return np.zeros((1,) * arr.ndim, dtype=np.complex128)
    return arr[tuple(slice(0, int(idx.max()) + 1) for idx in nz)]


def _fsum_abs(arr: np.ndarray) -> float:
    return math.fsum(np.abs(arr).ravel().tolist())


def _pad_to(arr: np.ndarray, shape: tuple[int, ...]) -> np.ndarray:
    if arr.shape == shape:
        return arr
    out = np.zeros(shape, dtype=np.complex128)
    out[tuple(slice(0, s) for s in arr.shape)] = arr
    return out


def _two_sum(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Knuth's error-free sum: ``a + b == s + err`` exactly (real arrays)."""
    s = a + b
    bb = s - a
    err = (a - (s - bb)) + (b - bb)
    return s, err


def _split(a):
    c = _SPLITTER * a
    hi = c - (c - a)
    return hi, a - hi


def _two_prod(a, b):
    """Dekker's error-free product: ``a * b == p + err`` exactly barring under/overflow."""
    p = a * b
    ah, al = _split(a)
    bh, bl = _split(b)
    err = ((ah * bh - p) + ah * bl + al * bh) + al * bl
    return p, err


def _complex_scale(c: complex, arr: np.ndarray) -> tuple[np.ndarray, float]:
    """Return ``c * arr`` and an upper bound on the l1 rounding error."""
    cr, ci = float(c.real), float(c.imag)
    p1, e1 = _two_prod(cr, arr.real)
    p2, e2 = _two_prod(ci, arr.imag)
    p3, e3 = _two_prod(cr, arr.imag)
    p4, e4 = _two_prod(ci, arr.real)
    re, e5 = _two_sum(p1, -p2)
    im, e6 = _two_sum(p3, p4)
    err = _fsum_abs(e1) + _fsum_abs(e2) + _fsum_abs(e3) + _fsum_abs(e4) + _fsum_abs(e5) + _fsum_abs(e6)
    return re + 1j * im, err


def _is_integral(arr: np.ndarray) -> bool:
    return bool(np.all(arr.real == np.round(arr.real)) and np.all(arr.imag == np.round(arr.imag)))


def _parts_l1(arr: np.ndarray) -> float:
    return _fsum_abs(arr.real) + _fsum_abs(arr.imag)


_SMALLEST_SUBNORMAL = 2.0**-1074
_UNDERFLOW_ZONE = 2.0**-960
_SMALLEST_NORMAL = 2.0**-1022


def _floor_underflow(x: float, nonzero: bool) -> float:
    """Tail term ``x`` padded by a few subnormal ulps when it may have underflowed."""
    if nonzero and x < _SMALLEST_NORMAL:
        return x + 4.0 * _SMALLEST_SUBNORMAL
    return x


def _smallest_part(arr: np.ndarray) -> float:
    parts = np.abs(np.concatenate([arr.real.ravel(), arr.imag.ravel()]))
    parts = parts[parts > 0]
    return float(parts.min()) if parts.size else math.inf


def _exact_scaling(c: complex, b: np.ndarray) -> bool:
    """Whether ``c * b`` is exact: ``c`` real or imaginary with power-of-two
    magnitude, and no part of the result leaves the normal range."""
    if c.real != 0 and c.imag != 0:
        return False
    x = abs(c.real) if c.real else abs(c.imag)
    if math.frexp(x)[0] != 0.5:
        return False
    parts = np.abs(np.concatenate([b.real.ravel(), b.imag.ravel()]))
    parts = parts[parts > 0]
    return parts.size == 0 or (x * parts.min() >= 2.0**-1000 and x * parts.max() <= 2.0**1000)


def _convolve(a: np.ndarray, b: np.ndarray) -> tuple[np.ndarray, float]:
    """Full product of two coefficient boxes plus an l1 bound on its rounding error."""
    nnz_a = int(np.count_nonzero(a))
    nnz_b = int(np.count_nonzero(b))
    if nnz_a > nnz_b:
        a, b = b, a
        nnz_a, nnz_b = nnz_b, nnz_a
    if a.ndim == 1:
        out = np.convolve(a, b)
    else:
        out = np.zeros(tuple(sa + sb - 1 for sa, sb in zip(a.shape, b.shape)), dtype=np.complex128)
        for idx in zip(*np.nonzero(a)):
            sl = tuple(slice(i, i + s) for i, s in zip(idx, b.shape))
            out[sl] += a[idx] * b
    if nnz_a == 0:
        return out, 0.0
    if _is_integral(a) and _is_integral(b) and _parts_l1(a) * _parts_l1(b) < _EXACT_INT_LIMIT:
        return out, 0.0
    # one product per output coefficient, by a power of two: exact
    if nnz_a == 1 and _exact_scaling(complex(a[np.nonzero(a)][0]), b):
        return out, 0.0
    if nnz_b == 1 and _exact_scaling(complex(b[np.nonzero(b)][0]), a):
        return out, 0.0
    # At most nnz_a products are accumulated into any one output coefficient.
    rounding = nnz_a * ROUNDING_PER_TERM * _parts_l1(a) * _parts_l1(b)
    if _smallest_part(a) * _smallest_part(b) < _UNDERFLOW_ZONE:
        # products near the subnormal range lose absolute (not relative) accuracy
        rounding += 4.0 * nnz_a * nnz_b * _SMALLEST_SUBNORMAL
    return out, rounding


def _normalize(config: AlgebraConfig, arr: np.ndarray) -> tuple[np.ndarray, float]:
    """Apply the degree cap and the drop threshold; return the cleaned box and the swept mass."""
    swept = 0.0
    copied = False
    cap = config.degree_cap
    grid = _degree_grid(arr.shape)
    over = grid > cap
    if over.any():
        swept += _fsum_abs(arr[over])
        arr = arr.copy()
        arr[over] = 0
        arr = arr[tuple(slice(0, min(s, cap + 1)) for s in arr.shape)]
        copied = True
    if config.drop_below > 0:
        mag = np.abs(arr)
        tiny = (mag < config.drop_below) & (mag > 0)
        if tiny.any():
            if not copied:
                arr = arr.copy()
            swept += math.fsum(mag[tiny].tolist())
            arr[tiny] = 0
    return _trim(arr), swept


class TruncatedSeries:
    """Polynomial center plus an l1 tail radius, over a fixed :class:`AlgebraConfig`."""

    __slots__ = ("config", "coeffs", "tail")
    __hash__ = None  # type: ignore[assignment]

    def __init__(self, config: AlgebraConfig, coeffs=None, tail: float = 0.0):
        if coeffs is None:
            arr = np.zeros((1,) * config.num_vars, dtype=np.complex128)
        else:
            arr = np.array(coeffs, dtype=np.complex128)
            if arr.ndim != config.num_vars:
                raise ConfigMismatch(
                    f"coefficient box has {arr.ndim} axes but config has {config.num_vars} variables"
                )
        if not np.all(np.isfinite(arr)):
            raise ValueError("coefficients must be finite")
        tail = float(tail)
        if not (tail >= 0.0 and math.isfinite(tail)):
            raise ValueError(f"tail must be a finite nonnegative number, got {tail!r}")
        arr, swept = _normalize(config, arr)
        if swept:
            tail = (tail + swept) * config.float_slack
        arr.flags.writeable = False
        self.config = config
        self.coeffs = arr
        self.tail = tail

    # -- constructors -----------------------------------------------------

    @classmethod
    def from_terms(
        cls,
        config: AlgebraConfig,
        terms: Mapping[Sequence[int], complex] | Iterable[tuple[Sequence[int], complex]],
        tail: float = 0.0,
    ) -> "TruncatedSeries":
        items = terms.items() if isinstance(terms, Mapping) else terms
        items = [(tuple(int(x) for x in k), complex(c)) for k, c in items]
        d = config.num_vars
        shape = [1] * d
        for k, _ in items:
            if len(k) != d:
                raise ConfigMismatch(f"multi-index {k} has length {len(k)}, expected {d}")
            if any(x < 0 for x in k):
                raise ValueError(f"negative exponent in multi-index {k}")
            shape = [max(s, x + 1) for s, x in zip(shape, k)]
        arr = np.zeros(shape, dtype=np.complex128)
        for k, c in items:
            arr[k] += c
        return cls(config, arr, tail)

    @classmethod
    def constant(cls, config: AlgebraConfig, c: complex, tail: float = 0.0) -> "TruncatedSeries":
        return cls(config, np.full((1,) * config.num_vars, complex(c)), tail)

    @classmethod
    def zero(cls, config: AlgebraConfig) -> "TruncatedSeries":
        return cls(config)

    @classmethod
    def one(cls, config: AlgebraConfig) -> "TruncatedSeries":
        return cls.constant(config, 1.0)

    @classmethod
    def variable(cls, config: AlgebraConfig, index: int = 0) -> "TruncatedSeries":
        """The coordinate function ``z_{index+1}``."""
        k = [0] * config.num_vars
        k[index] = 1
        return cls.from_terms(config, {tuple(k): 1.0})

    # -- inspection -------------------------------------------------------

    @property
    def num_vars(self) -> int:
        return self.config.num_vars

    def terms(self) -> list[tuple[tuple[int, ...], complex]]:
        """Nonzero coefficients in graded lexicographic order.

        Ascending total degree; within one degree, larger exponents of earlier
        variables come first (``1, z1, z2, z1^2, z1 z2, z2^2, ...``).
        """
        idx = np.argwhere(self.coeffs != 0)
        keys = [tuple(int(x) for x in row) for row in idx]
        keys.sort(key=lambda k: (sum(k), tuple(-x for x in k)))
        return [(k, complex(self.coeffs[k])) for k in keys]

    def coeff(self, k: Sequence[int]) -> complex:
        k = tuple(k)
        if len(k) != self.num_vars:
            raise ConfigMismatch(f"multi-index {k} has wrong length")
        if any(x >= s for x, s in zip(k, self.coeffs.shape)):
            return 0j
        return complex(self.coeffs[k])

    def constant_term(self) -> complex:
        return complex(self.coeffs[(0,) * self.num_vars])

    def degree(self) -> int:
        """Total degree of the stored polynomial (-1 for the zero polynomial)."""
        if not np.any(self.coeffs):
            return -1
        return int(_degree_grid(self.coeffs.shape)[self.coeffs != 0].max())

    def poly_norm(self) -> float:
        return _fsum_abs(self.coeffs)

    def is_zero(self) -> bool:
        return self.tail == 0.0 and not np.any(self.coeffs)

    def center(self) -> "TruncatedSeries":
        """The stored polynomial with the tail discarded (not an enclosure of ``self``)."""
        return self if self.tail == 0.0 else TruncatedSeries(self.config, self.coeffs, 0.0)

    def with_tail(self, tail: float) -> "TruncatedSeries":
        return TruncatedSeries(self.config, self.coeffs, tail)

    def __eq__(self, other):
        if not isinstance(other, TruncatedSeries):
            return NotImplemented
        return (
            self.config == other.config
            and self.tail == other.tail
            and self.coeffs.shape == other.coeffs.shape
            and bool(np.array_equal(self.coeffs, other.coeffs))
        )

    def __repr__(self):
        parts = []
        for k, c in self.terms():
            mono = "*".join(
                f"z{i + 1}" if e == 1 else f"z{i + 1}^{e}" for i, e in enumerate(k) if e
            )
            coef = f"{c.real:g}" if c.imag == 0 else f"({c.real:g}{c.imag:+g}j)"
            parts.append(f"{coef}*{mono}" if mono else coef)
        body = " + ".join(parts) if parts else "0"
        return f"TruncatedSeries({body}, tail={self.tail:.3g})"

    # -- operators --------------------------------------------------------

    def _coerce(self, other) -> "TruncatedSeries":
        if isinstance(other, TruncatedSeries):
            return other
        if isinstance(other, (int, float, complex, np.number)):
            return TruncatedSeries.constant(self.config, complex(other))
        return NotImplemented

    def __add__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else add(self, other)

    __radd__ = __add__

    def __sub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else sub(self, other)

    def __rsub__(self, other):
        other = self._coerce(other)
        return NotImplemented if other is NotImplemented else sub(other, self)

    def __mul__(self, other):
        if isinstance(other, (int, float, complex, np.number)):
            return scale(self, complex(other))
        if isinstance(other, TruncatedSeries):
            return mul(self, other)
        return NotImplemented

    __rmul__ = __mul__

    def __neg__(self):
        return TruncatedSeries(self.config, -self.coeffs, self.tail)

    def __pow__(self, k):
        if isinstance(k, bool) or not isinstance(k, (int, np.integer)):
            return NotImplemented
        return power(self, int(k))


def _check_same(f: TruncatedSeries, g: TruncatedSeries) -> AlgebraConfig:
    if f.config != g.config:
        raise ConfigMismatch(f"series configs differ: {f.config} vs {g.config}")
    return f.config


def norm(f: TruncatedSeries) -> float:
    """Upper bound on ``||g||_1`` for every member ``g`` of ``f``."""
    return f.poly_norm() + f.tail


def add(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    config = _check_same(f, g)
    shape = tuple(max(a, b) for a, b in zip(f.coeffs.shape, g.coeffs.shape))
    a = _pad_to(f.coeffs, shape)
    b = _pad_to(g.coeffs, shape)
    re, e_re = _two_sum(a.real, b.real)
    im, e_im = _two_sum(a.imag, b.imag)
    rounding = _fsum_abs(e_re) + _fsum_abs(e_im)
    return TruncatedSeries(config, re + 1j * im, (f.tail + g.tail + rounding) * config.float_slack)


def sub(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    return add(f, -g)


def scale(f: TruncatedSeries, c: complex) -> TruncatedSeries:
    c = complex(c)
    arr, rounding = _complex_scale(c, f.coeffs)
    carried = _floor_underflow(f.tail * abs(c), f.tail > 0 and c != 0)
    tail = (carried + rounding) * f.config.float_slack
    return TruncatedSeries(f.config, arr, tail)


def mul(f: TruncatedSeries, g: TruncatedSeries) -> TruncatedSeries:
    """Product with overflow beyond the degree cap folded into the tail.

    With ``f = p + a`` and ``g = q + b`` the cross terms satisfy
    ``||p b + a q + a b|| <= norm(f) * tail_g + tail_f * ||q||``.
    """
    config = _check_same(f, g)
    out, rounding = _convolve(f.coeffs, g.coeffs)
    propagated = norm(f) * g.tail + f.tail * g.poly_norm()
    nonzero = (g.tail > 0 and norm(f) > 0) or (f.tail > 0 and g.poly_norm() > 0)
    propagated = _floor_underflow(propagated, nonzero)
    return TruncatedSeries(config, out, (propagated + rounding) * config.float_slack)


def power(f: TruncatedSeries, k: int) -> TruncatedSeries:
    if k < 0:
        raise ValueError("negative powers need reciprocal()")
    result = TruncatedSeries.one(f.config)
    base = f
    while k:
        if k & 1:
            result = mul(result, base)
        k >>= 1
        if k:
            base = mul(base, base)
    return result


def _check_radius(r: float) -> float:
    r = float(r)
    if not (0.0 < r <= 1.0):
        raise ValueError(f"dilation radius must lie in (0, 1], got {r!r}")
    return r


def _is_power_of_two(r: float) -> bool:
    mantissa, _ = math.frexp(r)
    return mantissa == 0.5


def dilate(f: TruncatedSeries, r: float) -> TruncatedSeries:
    """``f(r z_1, ..., r z_d)``: coefficient ``a_k`` becomes ``a_k r^{|k|}``.

    The tail is unchanged since dilation does not increase the l1 norm; only
    the rounding of ``r^{|k|}`` and of the products is added.
    """
    r = _check_radius(r)
    if r == 1.0:
        return f
    grid = _degree_grid(f.coeffs.shape)
    powers = np.power(r, grid.astype(np.float64))
    p_re, e_re = _two_prod(f.coeffs.real, powers)
    p_im, e_im = _two_prod(f.coeffs.imag, powers)
    rounding = _fsum_abs(e_re) + _fsum_abs(e_im)
    if not _is_power_of_two(r):
        # r^0 and r^1 are exact; np.power is accurate to a couple of ulps, allow 2|k| of them.
        rounding += math.fsum((np.abs(f.coeffs) * powers * grid * 2 * _UNIT_ROUNDOFF).ravel().tolist())
    tail = f.tail + rounding * f.config.float_slack if rounding else f.tail
    return TruncatedSeries(f.config, p_re + 1j * p_im, tail)


def dilation_gap_bound(f: TruncatedSeries, r: float) -> float:
    """Certified upper bound on ``||f_r - f||_1``, nonincreasing in ``r``."""
    r = _check_radius(r)
    if r == 1.0:
        return 2.0 * f.tail
    grid = _degree_grid(f.coeffs.shape).astype(np.float64)
    gaps = -np.expm1(grid * math.log(r))
    total = math.fsum((np.abs(f.coeffs) * gaps).ravel().tolist())
    return total * f.config.float_slack + 2.0 * f.tail


def evaluate(f: TruncatedSeries, point: Sequence[complex]) -> tuple[complex, float]:
    """Value of the stored polynomial at ``point`` and the error radius ``tail``.

    Valid for every member of ``f`` because ``|z^k| <= 1`` on the closed polydisc.
    """
    point = [complex(z) for z in point]
    if len(point) != f.num_vars:
        raise ValueError(f"expected {f.num_vars} coordinates, got {len(point)}")
    for z in point:
        if abs(z) > 1.0:
            raise ValueError(f"point {point} lies outside the closed unit polydisc")
    val = f.coeffs
    for z, size in zip(point, f.coeffs.shape):
        val = np.tensordot(np.power(z, np.arange(size)), val, axes=([0], [0]))
    return complex(val), f.tail


def _candidate_univariate(a: np.ndarray, cap: int) -> np.ndarray:
    b = np.zeros(cap + 1, dtype=np.complex128)
    inv0 = 1.0 / a[0]
    b[0] = inv0
    deg = a.shape[0] - 1
    for k in range(1, cap + 1):
        j = min(k, deg)
        if j == 0:
            break
        b[k] = -inv0 * np.dot(a[1 : j + 1], b[k - j : k][::-1])
        if not np.isfinite(b[k]):
            raise NotInvertible("reciprocal candidate overflowed; the series is not invertible")
    return b


def _candidate_newton(f: TruncatedSeries) -> np.ndarray:
    """Truncated inverse via Newton's iteration b <- b + b (1 - f b), doubling precision."""
    config = f.config
    cap = config.degree_cap
    center = f.center()
    b = TruncatedSeries.constant(config, 1.0 / f.constant_term())
    prec = 1
    while prec <= cap:
        prec = min(2 * prec, cap + 1)
        step_cfg = replace(config, degree_cap=prec - 1)
        fc = TruncatedSeries(step_cfg, center.coeffs)
        bb = TruncatedSeries(step_cfg, b.coeffs)
        r = sub(TruncatedSeries.one(step_cfg), mul(fc, bb))
        nb = add(bb, mul(bb, r.center()))
        if not np.all(np.isfinite(nb.coeffs)):
            raise NotInvertible("reciprocal candidate overflowed; the series is not invertible")
        b = TruncatedSeries(config, nb.coeffs)
        if prec == cap + 1:
            break
    return b.coeffs


def reciprocal(f: TruncatedSeries, tol: float = 1e-12, max_terms: int = 500) -> TruncatedSeries:
    """Certified inverse of ``f``.

    A candidate ``b`` is the truncated power-series inverse of the center. With
    ``e = 1 - f b`` and ``rho = norm(e) < 1`` the exact inverse is
    ``b * sum(e^k)``; the Neumann sum is cut once ``rho^(m+1) / (1 - rho) < tol``
    and the remainder goes into the tail.

    Raises:
        NotInvertible: the constant term vanishes or ``rho >= 1``.
    """
    config = f.config
    a0 = f.constant_term()
    if a0 == 0:
        raise NotInvertible("constant coefficient is zero")
    try:
        with np.errstate(over="raise", invalid="raise"):
            if config.num_vars == 1:
                cand = _candidate_univariate(f.coeffs, config.degree_cap)
            else:
                cand = _candidate_newton(f)
        b = TruncatedSeries(config, cand)
    except (FloatingPointError, ValueError) as exc:
        raise NotInvertible(f"reciprocal candidate is not finite: {exc}") from None
    one = TruncatedSeries.one(config)
    e = sub(one, mul(f, b))
    rho = norm(e)
    if not rho < 1.0:
        raise NotInvertible(f"certification failed: ||1 - f*b|| = {rho:.6g} >= 1")
    total = one
    term = one
    m = 0
    while rho ** (m + 1) / (1.0 - rho) >= tol:
        m += 1
        if m > max_terms:
            raise NotInvertible(f"Neumann certificate too weak (rho = {rho:.6g})")
        term = mul(term, e)
        total = add(total, term)
    remainder = rho ** (m + 1) / (1.0 - rho) if rho > 0 else 0.0
    g = mul(b, total) if m else b
    if remainder:
        g = g.with_tail((g.tail + norm(b) * remainder) * config.float_slack)
    return g
