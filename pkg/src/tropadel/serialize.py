"""JSON and CSV interchange. Rationals travel as "p/q" strings."""
from __future__ import annotations

import csv
import io
import json
import math
from fractions import Fraction
from typing import Any

from . import _linalg as la
from ._validation import as_fraction, fraction_str
from .adelic import AdelicToricDivisor, BoundaryDatum
from .berkovich import CoefficientSpec, LaurentPoly, MonomialPoint, TRational
from .conical import PLConical
from .divisors import MonomialArc, ToricBoundaryDivisor
from .heights import HomogeneousRational
from .intersect import RationalPolytope
from .lattice import Fan


class FormatError(ValueError):
    """Malformed interchange document."""


def dump_number(x) -> str | float:
    if isinstance(x, float):
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    return fraction_str(x)


def load_number(s) -> Fraction:
    if s in ("inf", "-inf"):
        raise FormatError("infinite value where a rational is required")
    try:
        return as_fraction(s)
    except (TypeError, ValueError, ZeroDivisionError) as exc:
        raise FormatError(f"bad rational {s!r}: {exc}") from exc


def _vec(xs) -> list[str]:
    return [fraction_str(x) for x in xs]


def _need(obj: dict, *keys):
    if not isinstance(obj, dict):
        raise FormatError(f"expected a JSON object, got {type(obj).__name__}")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"missing field(s) {missing}")
    return [obj[k] for k in keys]


# fans and functions

def fan_to_json(f: Fan) -> dict:
    return {"dim": f.dim, "rays": [_vec(r) for r in f.rays], "cones": [list(c) for c in f.cones],
            "complete": bool(f.complete) if f.complete is not None else _complete(f)}


def _complete(f: Fan) -> bool:
    from .lattice import is_complete
    return is_complete(f)


def fan_from_json(obj) -> Fan:
    dim, rays, cones = _need(obj, "dim", "rays", "cones")
    prim = []
    for r in rays:
        v = [load_number(x) for x in r]
        if all(x == 0 for x in v):
            raise FormatError("zero ray")
        prim.append(la.primitive(v))
    try:
        return Fan(int(dim), tuple(prim), tuple(tuple(c) for c in cones), obj.get("complete"))
    except (TypeError, ValueError) as exc:
        raise FormatError(str(exc)) from exc


def pl_to_json(f: PLConical) -> dict:
    return {"fan": fan_to_json(f.fan), "ray_values": _vec(f.ray_values)}


def pl_from_json(obj) -> PLConical:
    fan, vals = _need(obj, "fan", "ray_values")
    return PLConical(fan_from_json(fan), [load_number(v) for v in vals])


def divisor_to_json(d: ToricBoundaryDivisor) -> dict:
    return {"model": fan_to_json(d.fan), "coeffs": _vec(d.coeffs)}


def divisor_from_json(obj) -> ToricBoundaryDivisor:
    model, coeffs = _need(obj, "model", "coeffs")
    return ToricBoundaryDivisor(fan_from_json(model), [load_number(c) for c in coeffs])


def arc_to_json(a: MonomialArc) -> dict:
    return {"cone": list(a.cone), "orders": list(a.orders)}


def arc_from_json(obj) -> MonomialArc:
    cone, orders = _need(obj, "cone", "orders")
    return MonomialArc(tuple(cone), tuple(orders))


# points and polynomials

def point_to_json(p: MonomialPoint) -> dict:
    return {"tau": fraction_str(p.tau), "a": _vec(p.a), "spec": p.spec.kind}


def point_from_json(obj) -> MonomialPoint:
    a, = _need(obj, "a")
    return MonomialPoint(load_number(obj.get("tau", "0/1")), tuple(load_number(x) for x in a),
                         CoefficientSpec(obj.get("spec", "trivial")))


def _coeff_to_json(c):
    if isinstance(c, TRational):
        return {"num": [[k, fraction_str(v)] for k, v in sorted(c.num.items())],
                "den": [[k, fraction_str(v)] for k, v in sorted(c.den.items())]}
    return fraction_str(c)


def _coeff_from_json(c):
    if isinstance(c, dict):
        num, = _need(c, "num")
        den = c.get("den", [[0, "1/1"]])
        return TRational({int(k): load_number(v) for k, v in num},
                         {int(k): load_number(v) for k, v in den})
    return load_number(c)


def poly_to_json(f: LaurentPoly) -> dict:
    return {"spec": f.spec.kind,
            "terms": [{"m": list(m), "coeff": _coeff_to_json(c)} for m, c in sorted(f.terms.items())]}


def poly_from_json(obj, spec: CoefficientSpec | None = None) -> LaurentPoly:
    terms, = _need(obj, "terms")
    spec = spec or CoefficientSpec(obj.get("spec", "trivial"))
    return LaurentPoly([(t["m"], _coeff_from_json(t["coeff"])) for t in terms], spec)


# sequences, polytopes, slope functions

def sequence_to_json(s: AdelicToricDivisor) -> dict:
    return {"boundary": divisor_to_json(s.boundary.divisor),
            "terms": [pl_to_json(f) for f in s.terms],
            "epsilons": _vec(s.epsilons),
            "depths": list(s.depths)}


def sequence_from_json(obj) -> AdelicToricDivisor:
    boundary, terms, eps = _need(obj, "boundary", "terms", "epsilons")
    return AdelicToricDivisor([pl_from_json(t) for t in terms], [load_number(e) for e in eps],
                              BoundaryDatum(divisor_from_json(boundary)), obj.get("depths"))


def polytope_to_json(p: RationalPolytope) -> dict:
    return {"vertices": [_vec(v) for v in p.vertices]}


def polytope_from_json(obj, dim: int | None = None) -> RationalPolytope:
    verts, = _need(obj, "vertices")
    return RationalPolytope.from_points([[load_number(x) for x in v] for v in verts], dim)


def _poly_terms(p: dict) -> list[dict]:
    return [{"exps": list(e), "coeff": fraction_str(c)} for e, c in sorted(p.items())]


def mu_to_json(mu: HomogeneousRational) -> dict:
    return {"num": _poly_terms(mu.num), "den": _poly_terms(mu.den)}


def mu_from_json(obj) -> HomogeneousRational:
    num, = _need(obj, "num")
    den = obj.get("den")
    nvars = obj.get("nvars")
    conv = lambda ts: [(t["exps"], load_number(t["coeff"])) for t in ts]
    return HomogeneousRational(conv(num), None if den is None else conv(den), nvars=nvars)


def read_samples_csv(text: str) -> tuple[list[str], list[list[float]]]:
    """Parse a headed CSV of floats; returns (header, rows)."""
    reader = csv.reader(io.StringIO(text))
    rows = [r for r in reader if r and any(c.strip() for c in r)]
    if not rows:
        raise FormatError("empty CSV")
    header = [c.strip() for c in rows[0]]
    try:
        [float(c) for c in header]
    except ValueError:
        pass
    else:
        raise FormatError("CSV header row required")
    try:
        data = [[float(c) for c in r] for r in rows[1:]]
    except ValueError as exc:
        raise FormatError(f"non-numeric CSV cell: {exc}") from exc
    if any(len(r) != len(header) for r in data):
        raise FormatError("CSV row length disagrees with header")
    return header, data


def dumps(obj: Any) -> str:
    return json.dumps(obj, sort_keys=True, separators=(",", ":"))
