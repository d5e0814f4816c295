from __future__ import annotations

import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import assume, given, strategies as st

from elemfactor import (
    AlgebraConfig,
    ConfigMismatch,
    NotInvertible,
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
from support import exact_mul, random_series, series_pair_st, series_st, to_exact

C1 = AlgebraConfig(1)
C2 = AlgebraConfig(2)


def z(config=C1, index=0):
    return TruncatedSeries.variable(config, index)


def poly(*coeffs, config=C1, tail=0.0):
    return TruncatedSeries(config, list(coeffs), tail)


# -- config and construction --------------------------------------------------


@pytest.mark.parametrize(
    "kwargs", [dict(num_vars=0), dict(degree_cap=0), dict(float_slack=0.5), dict(num_vars=1.5)]
)
def test_config_rejects_invalid(kwargs):
    with pytest.raises(ValueError):
        AlgebraConfig(**kwargs)


def test_construction_folds_coefficients_above_cap_into_tail():
    config = AlgebraConfig(1, degree_cap=2)
    f = TruncatedSeries(config, [1.0, 0.0, 0.0, 0.5, -0.25])
    assert f.degree() == 0
    assert f.tail >= 0.75


def test_coefficients_are_read_only():
    f = poly(1.0, 2.0)
    with pytest.raises(ValueError):
        f.coeffs[0] = 3.0


def test_rejects_bad_tail_and_nonfinite():
    with pytest.raises(ValueError):
        poly(1.0, tail=-1.0)
    with pytest.raises(ValueError):
        poly(float("nan"))


def test_terms_are_graded_lexicographic():
    f = TruncatedSeries.from_terms(C2, {(0, 2): 1, (1, 1): 2, (2, 0): 3, (0, 1): 4, (1, 0): 5, (0, 0): 6})
    assert [k for k, _ in f.terms()] == [(0, 0), (1, 0), (0, 1), (2, 0), (1, 1), (0, 2)]


def test_from_terms_checks_multi_index_length():
    with pytest.raises(ConfigMismatch):
        TruncatedSeries.from_terms(C2, {(1,): 1.0})


# -- norm ---------------------------------------------------------------------


def test_norm_examples():
    assert norm(poly(1.0, 0.5)) == 1.5
    assert norm(TruncatedSeries(C1, None, 0.25)) == 0.25
    f = TruncatedSeries.from_terms(C2, {(1, 1): 1.0, (2, 0): -1j}, tail=0.1)
    assert norm(f) == pytest.approx(2.1, abs=1e-15)


# -- ring operations ----------------------------------------------------------


def test_add_examples():
    out = add(1 + z(), 1 - z())
    assert out == TruncatedSeries.constant(C1, 2.0)
    assert out.tail == 0.0
    assert add(poly(1.0, tail=0.1), poly(0.0, 1.0, tail=0.2)).tail >= 0.3
    assert scale(z(), 2j) == TruncatedSeries(C1, [0, 2j])


def test_sub_and_neg_are_consistent():
    f, g = poly(1.0, 2.0, 3.0), poly(0.5, -1.0)
    assert sub(f, g) == add(f, -g)
    assert (f - f).is_zero()


def test_config_mismatch_is_rejected():
    with pytest.raises(ConfigMismatch):
        add(z(C1), z(C2))
    with pytest.raises(ConfigMismatch):
        mul(z(C1), TruncatedSeries.one(AlgebraConfig(1, degree_cap=3)))


def test_mul_examples():
    out = mul(1 + z(), 1 - z())
    assert out == poly(1.0, 0.0, -1.0)
    assert out.tail == 0.0

    capped = AlgebraConfig(1, degree_cap=1)
    one_plus_z = TruncatedSeries(capped, [1.0, 1.0])
    sq = mul(one_plus_z, one_plus_z)
    assert sq.coeff((0,)) == 1 and sq.coeff((1,)) == 2
    assert sq.tail >= 1.0

    out = mul(z().with_tail(0.1), z())
    assert out.coeff((2,)) == 1
    assert out.tail >= 0.1


def test_mul_tail_formula_lower_bound():
    f = poly(1.0, 2.0, tail=0.3)
    g = poly(0.5, -0.5, tail=0.2)
    out = mul(f, g)
    assert out.tail >= (norm(f) * 0.2 + 0.3 * g.poly_norm()) * f.config.float_slack


def test_power_matches_repeated_multiplication():
    f = poly(1.0, 0.5)
    p, q = power(f, 3), mul(mul(f, f), f)
    assert np.array_equal(p.center().coeffs, q.center().coeffs)
    assert p.tail <= 1e-13 and q.tail <= 1e-13
    assert power(f, 0) == TruncatedSeries.one(C1)


def test_scalar_operators_coerce():
    f = z() * 2 + 1
    assert f == poly(1.0, 2.0)
    assert (3 - z()) == poly(3.0, -1.0)


# -- dilation -----------------------------------------------------------------


def test_dilate_examples():
    assert dilate(poly(0, 0, 0, 1.0), 0.5) == poly(0, 0, 0, 0.125)
    c = TruncatedSeries.constant(C1, 2.5)
    assert dilate(c, 0.3) == c
    assert norm(dilate(z(), 0.9) - z()) == pytest.approx(0.1, abs=1e-12)


def test_dilate_rejects_radius_out_of_range():
    for r in (0.0, -0.5, 1.5):
        with pytest.raises(ValueError):
            dilate(z(), r)


def test_dilation_gap_bound_examples():
    assert dilation_gap_bound(z(), 0.9) == pytest.approx(0.1, rel=1e-12)
    assert dilation_gap_bound(TruncatedSeries.constant(C1, 3.0), 0.5) == 0.0
    assert dilation_gap_bound(TruncatedSeries.constant(C1, 3.0, tail=0.2), 0.5) == pytest.approx(0.4)
    assert dilation_gap_bound(poly(0.0, 1.0, 1.0), 0.5) == pytest.approx(1.25, rel=1e-11)


# -- reciprocal ---------------------------------------------------------------


def test_reciprocal_of_one_is_one():
    assert reciprocal(TruncatedSeries.one(C1)) == TruncatedSeries.one(C1)


def test_reciprocal_geometric_series_multiplies_back():
    f = poly(1.0, -0.5)
    g = reciprocal(f, 1e-12)
    for k in range(10):
        assert g.coeff((k,)) == pytest.approx(0.5**k, abs=1e-14)
    assert norm(mul(f, g) - 1.0) <= 1e-12 + g.tail * norm(f) + 1e-15


@pytest.mark.parametrize("f", [poly(1.0, 2.0), poly(0.0, 1.0), TruncatedSeries.zero(C1)])
def test_reciprocal_refuses_non_units(f):
    with pytest.raises(NotInvertible):
        reciprocal(f)


def test_reciprocal_bivariate():
    f = TruncatedSeries.from_terms(C2, {(0, 0): 1.0, (1, 0): 0.2, (1, 1): -0.3})
    g = reciprocal(f, 1e-12)
    assert norm(mul(f, g) - 1.0) <= 1e-10


# -- evaluation ---------------------------------------------------------------


def test_evaluate_examples():
    assert evaluate(z(C2, 0) * z(C2, 1), (1, 1)) == (1, 0.0)
    assert evaluate(TruncatedSeries.one(C1), (0.3j,))[0] == 1
    value, radius = evaluate((1 + z()).with_tail(0.25), (1j,))
    assert value == 1 + 1j and radius == 0.25


def test_evaluate_rejects_points_outside_the_polydisc():
    with pytest.raises(ValueError):
        evaluate(z(), (1.5,))
    with pytest.raises(ValueError):
        evaluate(z(), (0.1, 0.1))


# -- properties ---------------------------------------------------------------


def _member(f: TruncatedSeries, rng: np.random.Generator, reach: int) -> dict:
    """Exact real member of ``f``: its center plus a perturbation of l1 mass <= tail."""
    out = {k: Fraction(c.real) for k, c in f.terms() if c.real != 0}
    if f.tail:
        d = f.num_vars
        k = tuple(int(x) for x in rng.integers(0, reach, d))
        out[k] = out.get(k, Fraction(0)) + Fraction(f.tail) * Fraction(int(rng.integers(0, 1000)), 1000)
    return out


def _exact_l1(p: dict) -> Fraction:
    return sum((abs(v) for v in p.values()), Fraction(0))


def _real(f: TruncatedSeries) -> TruncatedSeries:
    return TruncatedSeries(f.config, f.coeffs.real, f.tail)


@given(series_pair_st(), st.integers(0, 2**32 - 1))
def test_mul_and_add_are_enclosures(pair, seed):
    """Exact products/sums of members lie within the reported ball."""
    f, g = (_real(x) for x in pair)
    rng = np.random.default_rng(seed)
    a, b = _member(f, rng, 6), _member(g, rng, 6)
    for op, exact in ((mul, exact_mul(a, b)), (add, {k: a.get(k, 0) + b.get(k, 0) for k in set(a) | set(b)})):
        out = op(f, g)
        center = to_exact(out)
        gap = _exact_l1({k: exact.get(k, 0) - center.get(k, 0) for k in set(exact) | set(center)})
        assert gap <= Fraction(out.tail)


@given(series_pair_st())
def test_submultiplicativity(pair):
    f, g = pair
    assert norm(mul(f, g)) <= norm(f) * norm(g) * (1 + 1e-10) + 1e-300


@given(series_st(), st.floats(0.01, 1.0))
def test_dilation_contracts_and_gap_is_monotone(f, r):
    assert norm(dilate(f, r)) <= norm(f) * (1 + 1e-12)
    assert dilation_gap_bound(f, 1.0) == 2 * f.tail
    grid = sorted({r, min(1.0, r * 1.1), r**2})
    bounds = [dilation_gap_bound(f, x) for x in grid]
    assert all(b1 >= b2 for b1, b2 in zip(bounds, bounds[1:]))
    # the bound dominates the actual gap of the centers
    assert norm(dilate(f, r).center() - f.center()) <= dilation_gap_bound(f, r) + 1e-12


@given(series_st(AlgebraConfig(1, degree_cap=24), max_degree=3, max_tail=0.0), st.floats(0.05, 0.5))
def test_reciprocal_certificate(f, size):
    f = f - f.constant_term()
    # subnormal leftovers of the subtraction are swept into the tail; keep inputs tail-free
    assume(f.poly_norm() > 0 and f.tail == 0)
    u = 1.0 + f * (size / f.poly_norm())
    g = reciprocal(u, 1e-12)
    # 1/u lies in g, so 1 lies in u*g
    check = mul(u, g) - 1.0
    assert check.poly_norm() <= check.tail
    # the cap dominates the tail: powers of f beyond 24 // deg f are cut
    first_cut = 24 // f.degree() + 1
    assert g.tail <= 4 * size**first_cut / (1 - size) + 1e-11


@given(series_pair_st())
def test_addition_commutes_exactly(pair):
    f, g = pair
    assert add(f, g) == add(g, f)


@given(series_pair_st())
def test_multiplication_commutes_within_enclosure(pair):
    f, g = pair
    fg, gf = mul(f, g), mul(g, f)
    assert norm(fg.center() - gf.center()) <= fg.tail + gf.tail + 1e-15


def test_degree_cap_enclosure_against_full_reference():
    rng = np.random.default_rng(3)
    small = AlgebraConfig(2, degree_cap=3)
    for _ in range(20):
        f = random_series(rng, small, 3)
        g = random_series(rng, small, 3)
        out = mul(f, g)
        exact = exact_mul(to_exact(f), to_exact(g))
        excluded = sum(abs(v) for k, v in exact.items() if sum(k) > 3)
        assert excluded <= out.tail
        assert math.isfinite(out.tail)
