"""Command-line front end.

Exit codes: 0 success, 1 verification failure, 2 refusal (no factorization
produced), 3 malformed input.
"""

from __future__ import annotations

import argparse
import itertools
import logging
import sys
from typing import Sequence

import numpy as np

from . import io
from .elementary import ElementaryFactor, Factorization, product_of_factors
from .errors import ConfigMismatch, FactorizationError, SchemaError
from .matrix import AlgMatrix, det, mat_norm, mat_sub
from .pipeline import FactorRequest, cohn_matrix, factor, verify
from .series import AlgebraConfig, TruncatedSeries, evaluate, norm

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_REFUSED = 2
EXIT_MALFORMED = 3

GENERATOR = "numpy.random.default_rng (PCG64)"

log = logging.getLogger("elemfactor")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        print(f"{self.prog}: error: {message}", file=sys.stderr)
        raise SystemExit(EXIT_MALFORMED)


def _positive_float(text: str) -> float:
    value = float(text)
    if not value > 0:
        raise argparse.ArgumentTypeError(f"must be positive, got {text}")
    return value


def _build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="elemfactor", description="Factor SL_n matrices over series algebras into elementary matrices.")
    parser.add_argument("-v", "--verbose", action="store_true", help="debug logging on stderr")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("factor", help="factor a matrix file")
    p.add_argument("--input", required=True, help="matrix JSON")
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--mode", choices=["auto", "near-identity", "euclid", "dilation"], default="auto")
    p.add_argument("--radius", type=float, help="dilation radius in (0, 1); chosen automatically if absent")
    p.add_argument("--output", help="factorization JSON (stdout if absent)")
    p.add_argument("--degree-cap", type=int, help="truncation degree (default 64, raised to fit the input)")
    p.add_argument("--assume-unimodular", action="store_true", help="skip the det F = 1 check")

    p = sub.add_parser("verify", help="check a factorization against a matrix")
    p.add_argument("--matrix", required=True)
    p.add_argument("--factors", required=True)
    p.add_argument("--tol", type=_positive_float, default=1e-10)
    p.add_argument("--degree-cap", type=int)

    p = sub.add_parser("norm", help="l1 norms of a matrix or series file")
    p.add_argument("--input", required=True)
    p.add_argument("--degree-cap", type=int)

    p = sub.add_parser("demo", help="built-in fixtures")
    p.add_argument("fixture", choices=["cohn"])
    p.add_argument("--eval", nargs=2, metavar=("U", "V"), type=complex, help="evaluate at (z1, z2) = (U, V)")
    p.add_argument("--output", help="also write the fixture as matrix JSON")

    p = sub.add_parser("roundtrip", help="factor a random elementary product and verify it")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--d", type=int, required=True)
    p.add_argument("--factors", type=int, required=True, help="number of random factors K")
    p.add_argument("--scale", type=float, required=True, help="coefficient magnitude bound")
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--degree", type=int, default=2, help="total degree of each alpha (default 2)")
    p.add_argument("--tol", type=_positive_float, default=1e-8)
    p.add_argument("--mode", choices=["auto", "near-identity", "euclid", "dilation"], default="auto")
    p.add_argument("--output", help="write the recovered factorization JSON")
    return parser


def _emit(doc: dict, path: str | None) -> None:
    if path:
        io.write_json(doc, path)
    else:
        sys.stdout.write(io.dumps(doc))


def _cmd_factor(args) -> int:
    F = io.parse_matrix(args.input, args.degree_cap)
    req = FactorRequest(
        F, mode=args.mode.replace("-", "_"), tol=args.tol, radius=args.radius, assume_unimodular=args.assume_unimodular
    )
    fac = factor(req)
    _emit(io.factorization_to_json(fac), args.output)
    passed = fac.residual_bound <= args.tol + F.tail_mass()
    summary = (
        f"method {fac.method}, {len(fac)} factors, residual {fac.residual_bound:.3e} "
        f"(input tails {F.tail_mass():.3e}, tol {args.tol:g}): {'ok' if passed else 'ABOVE TOLERANCE'}"
    )
    print(summary, file=sys.stderr if args.output is None else sys.stdout)
    return EXIT_OK if passed else EXIT_FAILED


def _cmd_verify(args) -> int:
    F = io.parse_matrix(args.matrix, args.degree_cap)
    fac = io.parse_factorization(args.factors, F.config)
    if fac.n != F.n:
        raise ConfigMismatch(f"factorization is for n = {fac.n} but the matrix has n = {F.n}")
    report = verify(F, fac, args.tol)
    print(f"factors:            {report.factor_count}")
    print(f"normal-form blocks: {report.normal_form_blocks}")
    print(f"residual:           {report.residual:.6e}")
    print(f"center residual:    {report.center_residual:.6e}")
    print(f"tail mass:          {report.tail_mass:.6e}")
    print(f"tol:                {report.tol:g}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAILED


def _cmd_norm(args) -> int:
    doc = io.load_json(args.input)
    if isinstance(doc, dict) and "entries" in doc:
        F = io.matrix_from_json(doc, args.degree_cap)
        print(f"norm:          {mat_norm(F)!r}")
        print(f"||F - I||:     {mat_norm(mat_sub(F, AlgMatrix.identity(F.n, F.config)))!r}")
        print(f"tail mass:     {F.tail_mass()!r}")
        for i, j in itertools.product(range(F.n), repeat=2):
            print(f"  ({i + 1},{j + 1}): {norm(F[i, j])!r}")
    else:
        vars_ = doc.get("vars") if isinstance(doc, dict) else None
        if not isinstance(vars_, int) or isinstance(vars_, bool) or vars_ < 1:
            raise SchemaError("vars", "expected a matrix or series document")
        config = io._config_for(vars_, [(doc, "")], args.degree_cap)
        f = io.series_from_json(doc, config)
        print(f"norm: {norm(f)!r}")
        print(f"tail: {f.tail!r}")
    return EXIT_OK


def _cmd_demo(args) -> int:
    config = AlgebraConfig(num_vars=2, degree_cap=8)
    C = cohn_matrix(config)
    print("Cohn matrix over C[z1, z2]:")
    for i in range(2):
        print("  " + "   ".join(repr(C[i, j]) for j in range(2)))
    dev = det(C) - 1.0
    print(f"det - 1: max coefficient {float(np.abs(dev.coeffs).max()):.3g}, tail {dev.tail:.3g}")
    if args.eval is not None:
        point = list(args.eval)
        values = [[evaluate(C[i, j], point)[0] for j in range(2)] for i in range(2)]
        value_det = values[0][0] * values[1][1] - values[0][1] * values[1][0]
        print(f"at (z1, z2) = ({point[0]}, {point[1]}): {values}, det = {value_det}")
    try:
        factor(FactorRequest(C))
    except FactorizationError as exc:
        print(f"auto mode refuses: {type(exc).__name__}: {exc}")
    else:  # pragma: no cover - would contradict the refusal policy
        print("auto mode unexpectedly produced a factorization")
        return EXIT_FAILED
    if args.output:
        io.emit_matrix(C, args.output)
    return EXIT_OK


def random_product(
    n: int, d: int, k: int, scale: float, degree: int, rng: np.random.Generator
) -> list[ElementaryFactor]:
    """``k`` factors with random positions and alphas whose coefficients (all
    multi-indices up to total ``degree``) are uniform in ``[-scale, scale]``."""
    if n < 2:
        raise ValueError("n must be at least 2")
    config = AlgebraConfig(num_vars=d, degree_cap=max(64, degree * k))
    indices = [m for m in itertools.product(range(degree + 1), repeat=d) if sum(m) <= degree]
    factors = []
    for _ in range(k):
        i, j = rng.choice(n, size=2, replace=False)
        coeffs = rng.uniform(-scale, scale, size=len(indices))
        alpha = TruncatedSeries.from_terms(config, zip(indices, coeffs))
        factors.append(ElementaryFactor(int(i) + 1, int(j) + 1, alpha))
    return factors


def _cmd_roundtrip(args) -> int:
    for name in ("n", "d", "factors", "degree"):
        if getattr(args, name) < (2 if name == "n" else 1 if name == "d" else 0):
            raise SchemaError(name, f"out of range: {getattr(args, name)}")
    rng = np.random.default_rng(args.seed)
    print(f"# generator: {GENERATOR}, seed {args.seed}")
    print(f"# n={args.n} d={args.d} K={args.factors} scale={args.scale:g} degree={args.degree}")
    fs = random_product(args.n, args.d, args.factors, args.scale, args.degree, rng)
    config = fs[0].alpha.config if fs else AlgebraConfig(num_vars=args.d)
    F = product_of_factors(fs, args.n, config).center()
    fac = factor(FactorRequest(F, mode=args.mode.replace("-", "_"), tol=args.tol))
    report = verify(F, fac, args.tol)
    if args.output:
        io.emit_factorization(fac, args.output)
    print(f"method:   {fac.method}")
    print(f"factors:  {report.factor_count} (normal-form blocks {report.normal_form_blocks})")
    print(f"residual: {report.residual:.6e}")
    print("PASS" if report.passed else "FAIL")
    return EXIT_OK if report.passed else EXIT_FAILED


COMMANDS = {
    "factor": _cmd_factor,
    "verify": _cmd_verify,
    "norm": _cmd_norm,
    "demo": _cmd_demo,
    "roundtrip": _cmd_roundtrip,
}


def run(argv: Sequence[str] | None = None) -> int:
    """Execute one command and return its exit code."""
    try:
        args = _build_parser().parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_MALFORMED
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING, format="%(name)s: %(message)s")
    try:
        return COMMANDS[args.command](args)
    except (SchemaError, ConfigMismatch) as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED
    except FactorizationError as exc:
        print(f"refused: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_REFUSED
    except ValueError as exc:
        print(f"malformed input: {exc}", file=sys.stderr)
        return EXIT_MALFORMED


def main() -> None:
    sys.exit(run())
