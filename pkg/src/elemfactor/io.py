"""JSON interchange for series, matrices and factorizations.

Formats (field order is fixed on output)::

    series         {"vars": d, "tail": t, "coeffs": [{"k": [k1, ..., kd], "re": x, "im": y}, ...]}
    matrix         {"n": n, "vars": d, "entries": [series, ...]}        # row-major, n*n entries
    factorization  {"n": n, "method": tag, "residual": r, "factors": [{"i": i, "j": j, "alpha": series}, ...]}

Coefficients are listed in graded lexicographic order and floats are written
with ``repr`` precision, so parsing an emitted document reproduces every
double exactly. Malformed input raises :class:`SchemaError` carrying the path
of the offending field, e.g. ``entries[3].tail``.
"""

from __future__ import annotations

import json
import math
from pathlib import Path
from typing import Any

from .elementary import METHODS, ElementaryFactor, Factorization
from .errors import ConfigMismatch, SchemaError
from .matrix import AlgMatrix
from .series import AlgebraConfig, TruncatedSeries

DEFAULT_DEGREE_CAP = 64


def _field(obj: Any, key: str, path: str) -> Any:
    if not isinstance(obj, dict):
        raise SchemaError(path, f"expected an object, got {type(obj).__name__}")
    if key not in obj:
        raise SchemaError(path, f'missing field "{key}"')
    return obj[key]


def _join(path: str, key: str) -> str:
    return f"{path}.{key}" if path else key


def _int(value: Any, path: str, minimum: int) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise SchemaError(path, f"expected an integer, got {value!r}")
    if value < minimum:
        raise SchemaError(path, f"must be >= {minimum}, got {value}")
    return value


def _real(value: Any, path: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SchemaError(path, f"expected a number, got {value!r}")
    value = float(value)
    if not math.isfinite(value):
        raise SchemaError(path, "must be finite")
    return value


def _list(value: Any, path: str) -> list:
    if not isinstance(value, list):
        raise SchemaError(path, f"expected a list, got {type(value).__name__}")
    return value


# -- series ------------------------------------------------------------------


def series_to_json(f: TruncatedSeries) -> dict:
    return {
        "vars": f.num_vars,
        "tail": f.tail,
        "coeffs": [{"k": list(k), "re": c.real, "im": c.imag} for k, c in f.terms()],
    }


def _series_degree(obj: Any, path: str) -> int:
    """Largest total degree in a series object (validates the coefficient list shape)."""
    top = 0
    for idx, term in enumerate(_list(_field(obj, "coeffs", path), _join(path, "coeffs"))):
        here = f"{_join(path, 'coeffs')}[{idx}]"
        k = _list(_field(term, "k", here), _join(here, "k"))
        top = max(top, sum(_int(x, f"{_join(here, 'k')}[{p}]", 0) for p, x in enumerate(k)))
    return top


def series_from_json(obj: Any, config: AlgebraConfig, path: str = "") -> TruncatedSeries:
    d = _int(_field(obj, "vars", path), _join(path, "vars"), 1)
    if d != config.num_vars:
        raise ConfigMismatch(f"{_join(path, 'vars')}: series has {d} variables, expected {config.num_vars}")
    tail = _real(_field(obj, "tail", path), _join(path, "tail"))
    if tail < 0:
        raise SchemaError(_join(path, "tail"), "must be nonnegative")
    terms = []
    seen = set()
    for idx, term in enumerate(_list(_field(obj, "coeffs", path), _join(path, "coeffs"))):
        here = f"{_join(path, 'coeffs')}[{idx}]"
        k = tuple(
            _int(x, f"{_join(here, 'k')}[{p}]", 0)
            for p, x in enumerate(_list(_field(term, "k", here), _join(here, "k")))
        )
        if len(k) != d:
            raise SchemaError(_join(here, "k"), f"multi-index has length {len(k)}, expected {d}")
        if sum(k) > config.degree_cap:
            raise SchemaError(_join(here, "k"), f"total degree {sum(k)} exceeds degree_cap {config.degree_cap}")
        if k in seen:
            raise SchemaError(_join(here, "k"), f"duplicate multi-index {list(k)}")
        seen.add(k)
        re = _real(_field(term, "re", here), _join(here, "re"))
        im = _real(_field(term, "im", here), _join(here, "im"))
        terms.append((k, complex(re, im)))
    return TruncatedSeries.from_terms(config, terms, tail)


def _config_for(vars_: int, documents: list[tuple[Any, str]], degree_cap: int | None) -> AlgebraConfig:
    """Config wide enough for every series in ``documents``."""
    needed = max([1] + [_series_degree(obj, path) for obj, path in documents])
    cap = max(needed, DEFAULT_DEGREE_CAP if degree_cap is None else degree_cap)
    return AlgebraConfig(num_vars=vars_, degree_cap=cap)


# -- matrices ----------------------------------------------------------------


def matrix_to_json(F: AlgMatrix) -> dict:
    return {
        "n": F.n,
        "vars": F.config.num_vars,
        "entries": [series_to_json(x) for row in F.entries for x in row],
    }


def matrix_from_json(obj: Any, degree_cap: int | None = None, config: AlgebraConfig | None = None) -> AlgMatrix:
    """Parse a matrix document.

    Without ``config`` the degree cap is ``degree_cap`` (default 64), raised
    if needed so that every stored coefficient fits.
    """
    n = _int(_field(obj, "n", ""), "n", 1)
    d = _int(_field(obj, "vars", ""), "vars", 1)
    entries = _list(_field(obj, "entries", ""), "entries")
    if len(entries) != n * n:
        raise SchemaError("entries", f"expected n*n = {n * n} entries, got {len(entries)}")
    for idx, entry in enumerate(entries):
        ev = _int(_field(entry, "vars", f"entries[{idx}]"), f"entries[{idx}].vars", 1)
        if ev != d:
            raise ConfigMismatch(f"entries[{idx}].vars: entry has {ev} variables but the matrix declares {d}")
    if config is None:
        config = _config_for(d, [(e, f"entries[{i}]") for i, e in enumerate(entries)], degree_cap)
    elif config.num_vars != d:
        raise ConfigMismatch(f"vars: matrix has {d} variables, expected {config.num_vars}")
    series = [series_from_json(e, config, f"entries[{i}]") for i, e in enumerate(entries)]
    return AlgMatrix([series[r * n : (r + 1) * n] for r in range(n)])


# -- factorizations ----------------------------------------------------------


def factorization_to_json(fac: Factorization) -> dict:
    return {
        "n": fac.n,
        "method": fac.method,
        "residual": fac.residual_bound,
        "factors": [{"i": e.i, "j": e.j, "alpha": series_to_json(e.alpha)} for e in fac.factors],
    }


def factorization_from_json(
    obj: Any, config: AlgebraConfig | None = None, degree_cap: int | None = None
) -> Factorization:
    """Parse a factorization document; ``config`` defaults to one inferred from the alphas."""
    n = _int(_field(obj, "n", ""), "n", 1)
    method = _field(obj, "method", "")
    if method not in METHODS:
        raise SchemaError("method", f"unknown method {method!r}; expected one of {list(METHODS)}")
    residual = _real(_field(obj, "residual", ""), "residual")
    if residual < 0:
        raise SchemaError("residual", "must be nonnegative")
    raw = _list(_field(obj, "factors", ""), "factors")
    alphas = [(_field(item, "alpha", f"factors[{i}]"), f"factors[{i}].alpha") for i, item in enumerate(raw)]
    if config is None:
        if alphas:
            d = _int(_field(alphas[0][0], "vars", alphas[0][1]), _join(alphas[0][1], "vars"), 1)
        else:
            d = 1
        config = _config_for(d, alphas, degree_cap)
    factors = []
    for idx, item in enumerate(raw):
        here = f"factors[{idx}]"
        i = _int(_field(item, "i", here), f"{here}.i", 1)
        j = _int(_field(item, "j", here), f"{here}.j", 1)
        if i > n or j > n:
            raise SchemaError(here, f"index ({i}, {j}) out of range for n = {n}")
        if i == j:
            raise SchemaError(here, f"elementary factor needs i != j, got {i}")
        alpha = series_from_json(item["alpha"], config, f"{here}.alpha")
        factors.append(ElementaryFactor(i, j, alpha))
    return Factorization(n, factors, residual, method, config)


# -- files -------------------------------------------------------------------


def dumps(obj: dict) -> str:
    """Deterministic compact JSON text (fixed key order, repr floats, trailing newline)."""
    return json.dumps(obj, separators=(",", ":"), allow_nan=False) + "\n"


def load_json(path: str | Path) -> Any:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise SchemaError("", f"cannot read {path}: {exc.strerror or exc}") from None
    try:
        return json.loads(text)
    except json.JSONDecodeError as exc:
        raise SchemaError("", f"{path} is not valid JSON: {exc}") from None


def write_json(obj: dict, path: str | Path) -> None:
    Path(path).write_text(dumps(obj), encoding="utf-8")


def parse_matrix(path: str | Path, degree_cap: int | None = None) -> AlgMatrix:
    return matrix_from_json(load_json(path), degree_cap)


def parse_factorization(path: str | Path, config: AlgebraConfig | None = None) -> Factorization:
    return factorization_from_json(load_json(path), config)


def emit_factorization(fac: Factorization, path: str | Path) -> None:
    write_json(factorization_to_json(fac), path)


def emit_matrix(F: AlgMatrix, path: str | Path) -> None:
    write_json(matrix_to_json(F), path)
