"""Random generators and exact reference arithmetic shared by the tests."""

from __future__ import annotations

import itertools
from fractions import Fraction

import numpy as np
from hypothesis import strategies as st

from elemfactor import AlgebraConfig, AlgMatrix, ElementaryFactor, TruncatedSeries, mat_norm, mat_sub, product_of_factors


def random_series(
    rng: np.random.Generator, config: AlgebraConfig, degree: int, scale: float = 1.0, tail: float = 0.0, complex_: bool = False
) -> TruncatedSeries:
    """Dense random polynomial of total degree <= ``degree``."""
    idx = [k for k in itertools.product(range(degree + 1), repeat=config.num_vars) if sum(k) <= degree]
    re = rng.uniform(-scale, scale, len(idx))
    im = rng.uniform(-scale, scale, len(idx)) if complex_ else np.zeros(len(idx))
    return TruncatedSeries.from_terms(config, zip(idx, re + 1j * im), tail)


def random_matrix(rng, config: AlgebraConfig, n: int, degree: int, scale: float = 1.0) -> AlgMatrix:
    return AlgMatrix([[random_series(rng, config, degree, scale) for _ in range(n)] for _ in range(n)])


def random_factors(
    rng, config: AlgebraConfig, n: int, k: int, degree: int, scale: float = 1.0, random_degree: bool = False
) -> list[ElementaryFactor]:
    out = []
    for _ in range(k):
        i, j = rng.choice(n, 2, replace=False)
        deg = int(rng.integers(0, degree + 1)) if random_degree else degree
        out.append(ElementaryFactor(int(i) + 1, int(j) + 1, random_series(rng, config, deg, scale)))
    return out


def scaled(fs: list[ElementaryFactor], s: float) -> list[ElementaryFactor]:
    return [ElementaryFactor(e.i, e.j, e.alpha * s) for e in fs]


def near_identity_product(rng, config: AlgebraConfig, n: int, k: int, degree: int, target: float = 0.3):
    """Product of ``k`` random factors shrunk until ``||F - I|| <= target``; returns (F, factors)."""
    fs = random_factors(rng, config, n, k, degree)
    ident = AlgMatrix.identity(n, config)
    s = 1.0
    while True:
        cur = scaled(fs, s)
        F = product_of_factors(cur, n, config)
        dist = mat_norm(mat_sub(F, ident))
        if dist <= target:
            return F, cur
        s *= 0.9 * target / dist


def univariate_product(rng, n: int, k: int, degree: int = 3) -> AlgMatrix:
    """Tail-free univariate product of ``k`` factors, degrees uniform in 0..degree,
    coefficients uniform in [-1, 1]."""
    config = AlgebraConfig(1)
    fs = random_factors(rng, config, n, k, degree, random_degree=True)
    return product_of_factors(fs, n, config).center()


# -- exact reference arithmetic on dict polynomials ---------------------------


def to_exact(f: TruncatedSeries) -> dict[tuple[int, ...], Fraction | complex]:
    """Coefficients as exact rationals (real inputs) keyed by multi-index."""
    out = {}
    for k, c in f.terms():
        out[k] = Fraction(c.real) if c.imag == 0 else complex(c)
    return out


def exact_mul(a: dict, b: dict) -> dict:
    out: dict = {}
    for ka, ca in a.items():
        for kb, cb in b.items():
            k = tuple(x + y for x, y in zip(ka, kb))
            out[k] = out.get(k, 0) + ca * cb
    return {k: v for k, v in out.items() if v != 0}


# -- hypothesis strategies ----------------------------------------------------

coeff = st.floats(min_value=-2.0, max_value=2.0, allow_nan=False, allow_infinity=False)


@st.composite
def series_st(draw, config: AlgebraConfig | None = None, max_degree: int = 4, max_tail: float = 0.5):
    if config is None:
        config = AlgebraConfig(num_vars=draw(st.integers(1, 3)), degree_cap=8)
    idx = [k for k in itertools.product(range(max_degree + 1), repeat=config.num_vars) if sum(k) <= max_degree]
    chosen = draw(st.lists(st.sampled_from(idx), max_size=6, unique=True))
    terms = [(k, complex(draw(coeff), draw(coeff))) for k in chosen]
    tail = draw(st.sampled_from([0.0, 0.0, draw(st.floats(0.0, max_tail))]))
    return TruncatedSeries.from_terms(config, terms, tail)


@st.composite
def series_pair_st(draw, max_degree: int = 4):
    config = AlgebraConfig(num_vars=draw(st.integers(1, 3)), degree_cap=draw(st.integers(1, 8)))
    return draw(series_st(config, max_degree)), draw(series_st(config, max_degree))
