"""tropadel command-line interface.

Every subcommand reads JSON/CSV files named by flags and writes one JSON
document to stdout. Exit codes: 0 success, 1 a check failed, 2 bad input.
"""
from __future__ import annotations

import argparse
import contextlib
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import serialize as ser
from ._validation import as_fraction, fraction_str
from .adelic import (BoundaryDatum, CauchyReport, ConvergenceError, PairCheck, ToleranceError,
                     from_oracle, green_of_adelic, verify_cauchy)
from .berkovich import interior_test, model_green, norm_equivalent, trop, valuation_eval
from .conical import (ConicalOracle, add, euclidean_oracle, lp_oracle, minimum, pl_oracle,
                      sup_ratio_witness)
from .divisors import arc_order, pullback_one_param, supporting_function
from .heights import SimplexFunction, expected_slope, fit_slope, green_residual
from .intersect import NefError, ma_integral, pair_adelic, intersection_number
from .lattice import common_refinement, is_complete, simplicialize


class CheckFailed(Exception):
    """A computation finished but its check did not pass."""


@dataclass
class CommandResult:
    exit_code: int
    stdout: str
    stderr: str


def _color(text: str, code: str) -> str:
    if os.environ.get("TROPADEL_NO_COLOR") or not sys.stderr.isatty():
        return text
    return f"\033[{code}m{text}\033[0m"


def _load(path: str):
    try:
        with open(path, encoding="utf-8") as fh:
            return json.load(fh)
    except json.JSONDecodeError as exc:
        raise ser.FormatError(f"{path}: invalid JSON ({exc})") from exc


def _read(path: str) -> str:
    with open(path, encoding="utf-8") as fh:
        return fh.read()


def _vector(text: str) -> list[Fraction]:
    try:
        return [as_fraction(x.strip()) for x in text.split(",") if x.strip()]
    except (TypeError, ValueError) as exc:
        raise ser.FormatError(f"bad vector {text!r}: {exc}") from exc


def _tol(args) -> Fraction:
    t = as_fraction(args.tol)
    if t <= 0:
        raise ValueError("--tol must be positive")
    return t


def _oracle(spec: str, dim: int) -> ConicalOracle:
    if spec == "euclid":
        return euclidean_oracle(dim)
    if spec.startswith("lp:"):
        return lp_oracle(dim, float(spec[3:]))
    if spec.startswith("pl:"):
        return pl_oracle(ser.pl_from_json(_load(spec[3:])))
    raise ser.FormatError(f"unknown oracle {spec!r}; use euclid, lp:P or pl:FILE")


# ------------------------------------------------------------- handlers

def _fan_validate(args):
    fan = ser.fan_from_json(_load(args.fan))
    problems = fan.validate()
    complete = is_complete(fan) if not problems else False
    if fan.complete is not None and fan.complete != complete and not problems:
        problems.append(f"declared complete={fan.complete} but the fan is "
                        f"{'complete' if complete else 'not complete'}")
    out = {"valid": not problems, "problems": problems, "complete": complete,
           "simplicial": fan.is_simplicial}
    return out, not problems


def _fan_refine(args):
    f1, f2 = (ser.fan_from_json(_load(p)) for p in args.fans)
    return ser.fan_to_json(common_refinement(f1, f2)), True


def _fan_simplicialize(args):
    return ser.fan_to_json(simplicialize(ser.fan_from_json(_load(args.fan)))), True


def _sf_eval(args):
    f = ser.pl_from_json(_load(args.function))
    return {"value": fraction_str(f.eval(_vector(args.at)))}, True


def _sf_binary(op):
    def run(args):
        f, g = (ser.pl_from_json(_load(p)) for p in args.functions)
        return ser.pl_to_json(op(f, g)), True
    return run


def _sf_norm(args):
    f = ser.pl_from_json(_load(args.function))
    z = BoundaryDatum(ser.divisor_from_json(_load(args.boundary)))
    value, witness = sup_ratio_witness(f, z.sf)
    return {"value": ser.dump_number(value),
            "witness": None if witness is None else ser._vec(witness)}, True


def _divisor_sf(args):
    return ser.pl_to_json(supporting_function(ser.divisor_from_json(_load(args.divisor)))), True


def _divisor_pullback(args):
    d = ser.divisor_from_json(_load(args.divisor))
    o0, oinf = pullback_one_param(d, _vector(args.a))
    return {"ord_at_0": fraction_str(o0), "ord_at_infty": fraction_str(oinf)}, True


def _divisor_arc_order(args):
    d = ser.divisor_from_json(_load(args.divisor))
    arc = ser.arc_from_json(_load(args.arc))
    return {"value": fraction_str(arc_order(supporting_function(d), arc))}, True


def _point_eval(args):
    p = ser.point_from_json(_load(args.point))
    f = ser.poly_from_json(_load(args.poly))
    return {"value": ser.dump_number(valuation_eval(p, f))}, True


def _point_trop(args):
    return {"a": ser._vec(trop(ser.point_from_json(_load(args.point))))}, True


def _point_equiv(args):
    x, y = (ser.point_from_json(_load(p)) for p in args.points)
    s = norm_equivalent(x, y)
    return {"equivalent": s is not None, "scale": None if s is None else fraction_str(s)}, True


def _point_green(args):
    p = ser.point_from_json(_load(args.point))
    gens, = ser._need(_load(args.ideal), "gens")
    return {"value": fraction_str(model_green(gens, p))}, True


def _point_interior(args):
    p = ser.point_from_json(_load(args.point))
    z = ser.divisor_from_json(_load(args.boundary))
    return {"interior": interior_test(p, z)}, True


def _adelic_approx(args):
    ref = ser.fan_from_json(_load(args.fan))
    z = BoundaryDatum(ser.divisor_from_json(_load(args.boundary)))
    seq = from_oracle(_oracle(args.oracle, ref.dim), ref, z, _tol(args),
                      max_depth=args.depth if args.depth is not None else 16, seed=args.seed)
    for d, eps in zip(seq.depths, seq.epsilons):
        _diag(f"term depth {d}: epsilon {float(eps):.3e}")
    return ser.sequence_to_json(seq), True


def _pair_norm(job):
    f, g, zsf = job
    return sup_ratio_witness(f - g, zsf)


def _adelic_verify(args):
    seq = ser.sequence_from_json(_load(args.seq))
    z = BoundaryDatum(ser.divisor_from_json(_load(args.boundary))) if args.boundary else seq.boundary
    prefix = args.prefix if args.prefix is not None else len(seq)
    if args.jobs > 1:
        if prefix > len(seq):
            raise ValueError(f"prefix {prefix} exceeds materialized length {len(seq)}")
        idx = [(i, j) for i in range(prefix) for j in range(i + 1, prefix)]
        jobs = [(seq.terms[i], seq.terms[j], z.sf) for i, j in idx]
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            results = list(pool.map(_pair_norm, jobs))
        report = CauchyReport()
        for (i, j), (norm, wit) in zip(idx, results):
            ok = norm <= seq.epsilons[i]
            report.pairs.append(PairCheck(i, j, norm, seq.epsilons[i], ok, None if ok else wit))
    else:
        report = verify_cauchy(seq, z, prefix)
    return report.to_json(), report.passed


def _adelic_green(args):
    seq = ser.sequence_from_json(_load(args.seq))
    p = ser.point_from_json(_load(args.point))
    g = green_of_adelic(seq, p, _tol(args))
    return {"value": fraction_str(g.value), "error_bound": fraction_str(g.error_bound),
            "depth": g.depth}, True


def _divisors(paths):
    return [ser.divisor_from_json(_load(p)) for p in paths]


def _pair_intersect(args):
    return {"value": fraction_str(intersection_number(_divisors(args.divisors)))}, True


def _pair_adelic(args):
    seq = ser.sequence_from_json(_load(args.seq))
    z = BoundaryDatum(ser.divisor_from_json(_load(args.boundary))) if args.boundary else seq.boundary
    return pair_adelic(seq, _divisors(args.divisors), z, _tol(args)).to_json(), True


def _pair_ma(args):
    h = ser.pl_from_json(_load(args.function))
    z = BoundaryDatum(ser.divisor_from_json(_load(args.boundary)))
    return {"value": fraction_str(ma_integral(h, _divisors(args.divisors), z))}, True


def _slope_fit(args):
    header, rows = ser.read_samples_csv(_read(args.samples))
    if len(header) != 2:
        raise ser.FormatError("slope samples need exactly two columns: modulus, height")
    slope, bound = fit_slope([tuple(r) for r in rows])
    return {"slope": slope, "o1_bound": bound, "samples": len(rows)}, True


def _slope_expect(args):
    mu = ser.mu_from_json(_load(args.mu))
    orders = [int(x) for x in _vector(args.orders)]
    return {"value": fraction_str(expected_slope(mu, orders))}, True


def _slope_residual(args):
    header, rows = ser.read_samples_csv(_read(args.samples))
    values = [float(x) for x in _vector(args.vertex_values)]
    if len(header) != len(values) + 1:
        raise ser.FormatError(f"expected {len(values)} modulus columns plus a value column")
    f = SimplexFunction(values)
    samples = [(r[:-1], r[-1]) for r in rows]
    radii = [float(x) for x in args.radii.split(",")]
    report = green_residual(f, samples, radii)
    return report.to_json(), report.passed


# ----------------------------------------------------------------- parser

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="random seed (default 0)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("--tol", default="1/100", help="tolerance as p/q")
    common.add_argument("--depth", type=int, default=None, help="depth guard")

    p = argparse.ArgumentParser(prog="tropadel", description=__doc__.splitlines()[0],
                                parents=[common])
    groups = p.add_subparsers(dest="group", required=True)

    def sub(group, name, handler, **flags):
        sp = group.add_parser(name, parents=[common])
        for flag, kw in flags.items():
            sp.add_argument("--" + flag.replace("_", "-"), dest=flag, **kw)
        sp.set_defaults(handler=handler)
        return sp

    req = {"required": True}
    two = {"required": True, "nargs": 2}
    many = {"required": True, "nargs": "+"}

    g = groups.add_parser("fan").add_subparsers(dest="cmd", required=True)
    sub(g, "validate", _fan_validate, fan=req)
    sub(g, "refine", _fan_refine, fans=two)
    sub(g, "simplicialize", _fan_simplicialize, fan=req)

    g = groups.add_parser("sf").add_subparsers(dest="cmd", required=True)
    sub(g, "eval", _sf_eval, function=req, at=req)
    sub(g, "add", _sf_binary(add), functions=two)
    sub(g, "min", _sf_binary(minimum), functions=two)
    sub(g, "norm", _sf_norm, function=req, boundary=req)

    g = groups.add_parser("divisor").add_subparsers(dest="cmd", required=True)
    sub(g, "sf", _divisor_sf, divisor=req)
    sub(g, "pullback", _divisor_pullback, divisor=req, a=req)
    sub(g, "arc-order", _divisor_arc_order, divisor=req, arc=req)

    g = groups.add_parser("point").add_subparsers(dest="cmd", required=True)
    sub(g, "eval", _point_eval, point=req, poly=req)
    sub(g, "trop", _point_trop, point=req)
    sub(g, "equiv", _point_equiv, points=two)
    sub(g, "green", _point_green, point=req, ideal=req)
    sub(g, "interior", _point_interior, point=req, boundary=req)

    g = groups.add_parser("adelic").add_subparsers(dest="cmd", required=True)
    sub(g, "approx", _adelic_approx, oracle={"default": "euclid"}, fan=req, boundary=req)
    sub(g, "verify", _adelic_verify, seq=req, boundary={"default": None},
        prefix={"type": int, "default": None})
    sub(g, "green", _adelic_green, seq=req, point=req)

    g = groups.add_parser("pair").add_subparsers(dest="cmd", required=True)
    sub(g, "intersect", _pair_intersect, divisors=many)
    sub(g, "adelic", _pair_adelic, seq=req, divisors=many, boundary={"default": None})
    sub(g, "ma", _pair_ma, function=req, divisors=many, boundary=req)

    g = groups.add_parser("slope").add_subparsers(dest="cmd", required=True)
    sub(g, "fit", _slope_fit, samples=req)
    sub(g, "expect", _slope_expect, mu=req, orders=req)
    sub(g, "residual", _slope_residual, samples=req, vertex_values=req,
        radii={"default": "0.5,1e-2,1e-5,1e-10,1e-20,1e-40,1e-80"})
    return p


_DIAG: list[str] = []


def _diag(msg: str) -> None:
    _DIAG.append(msg)


INPUT_ERRORS = (ser.FormatError, ValueError, TypeError, KeyError, IndexError, OSError,
                ZeroDivisionError)
CHECK_ERRORS = (ToleranceError, ConvergenceError, CheckFailed)


def run(argv: Sequence[str]) -> CommandResult:
    _DIAG.clear()
    parser = _parser()
    out, err = io.StringIO(), io.StringIO()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(list(argv))
    except SystemExit as exc:
        code = exc.code if isinstance(exc.code, int) else 2
        return CommandResult(code, out.getvalue(), err.getvalue())
    if args.jobs < 1:
        return CommandResult(2, "", "error: --jobs must be at least 1\n")
    try:
        payload, ok = args.handler(args)
    except CHECK_ERRORS as exc:
        return CommandResult(1, "", _color(f"check failed: {exc}", "33") + "\n")
    except INPUT_ERRORS as exc:
        kind = type(exc).__name__
        extra = f" (ray {exc.ray})" if isinstance(exc, NefError) and exc.ray is not None else ""
        return CommandResult(2, "", _color(f"error: {kind}: {exc}{extra}", "31") + "\n")
    err = "".join(m + "\n" for m in _DIAG)
    if not ok:
        err += _color("check failed", "33") + "\n"
    return CommandResult(0 if ok else 1, ser.dumps(payload) + "\n", err)


def main(argv: Sequence[str] | None = None) -> int:
    res = run(sys.argv[1:] if argv is None else argv)
    sys.stdout.write(res.stdout)
    sys.stderr.write(res.stderr)
    return res.exit_code


if __name__ == "__main__":
    sys.exit(main())
