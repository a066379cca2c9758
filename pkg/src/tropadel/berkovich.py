"""Monomial points of the Berkovich analytification of a torus.

Seminorms are handled additively as valuations v = -log|.|, so every
quantity on an exact path is a rational number. A monomial point (tau, a)
evaluates a Laurent polynomial by ``min_m tau * v(c_m) + <m, a>``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Iterable, Mapping, Sequence

import numpy as np

from . import _linalg as la
from ._validation import DimensionError, as_fraction, as_int_vector, as_vector
from .divisors import ToricBoundaryDivisor, supporting_function

INFINITY = math.inf
SPECS = ("trivial", "t-adic")


class TRational:
    """A rational function in t, stored as num/den Laurent polynomials (unreduced).

    Only the t-adic valuation ord_t(num) - ord_t(den) is ever consumed, so no
    gcd reduction is performed.
    """

    __slots__ = ("num", "den")

    def __init__(self, num: Mapping[int, object], den: Mapping[int, object] | None = None):
        self.num = {int(k): as_fraction(v) for k, v in num.items() if as_fraction(v) != 0}
        den = {0: 1} if den is None else den
        self.den = {int(k): as_fraction(v) for k, v in den.items() if as_fraction(v) != 0}
        if not self.den:
            raise ZeroDivisionError("zero denominator")

    @classmethod
    def monomial(cls, c, k: int = 0) -> "TRational":
        return cls({k: c})

    @staticmethod
    def _mul(p, q):
        out: dict[int, Fraction] = {}
        for i, a in p.items():
            for j, b in q.items():
                out[i + j] = out.get(i + j, Fraction(0)) + a * b
        return {k: v for k, v in out.items() if v != 0}

    @staticmethod
    def _add(p, q):
        out = dict(p)
        for k, v in q.items():
            out[k] = out.get(k, Fraction(0)) + v
        return {k: v for k, v in out.items() if v != 0}

    def __add__(self, other):
        other = _as_trational(other)
        return TRational(self._add(self._mul(self.num, other.den), self._mul(other.num, self.den)),
                         self._mul(self.den, other.den))

    __radd__ = __add__

    def __mul__(self, other):
        other = _as_trational(other)
        return TRational(self._mul(self.num, other.num), self._mul(self.den, other.den))

    __rmul__ = __mul__

    def __neg__(self):
        return TRational({k: -v for k, v in self.num.items()}, self.den)

    def is_zero(self) -> bool:
        return not self.num

    def __eq__(self, other):
        other = _as_trational(other)
        return self._mul(self.num, other.den) == self._mul(other.num, self.den)

    def __hash__(self):
        raise TypeError("TRational is unhashable")

    def valuation(self):
        if not self.num:
            return INFINITY
        return Fraction(min(self.num) - min(self.den))

    def __repr__(self):
        return f"TRational({self.num}, {self.den})"


def _as_trational(x) -> TRational:
    if isinstance(x, TRational):
        return x
    return TRational({0: as_fraction(x)})


@dataclass(frozen=True)
class CoefficientSpec:
    """The coefficient field: trivially valued, or rational functions in t with v(t) = 1."""

    kind: str = "trivial"

    def __post_init__(self):
        if self.kind not in SPECS:
            raise ValueError(f"unknown coefficient spec {self.kind!r}")

    def coerce(self, c):
        if self.kind == "trivial":
            if isinstance(c, TRational):
                raise TypeError("t-adic coefficient under the trivial spec")
            return as_fraction(c)
        return _as_trational(c)

    def is_zero(self, c) -> bool:
        return c.is_zero() if isinstance(c, TRational) else c == 0

    def valuation(self, c):
        if self.is_zero(c):
            return INFINITY
        if self.kind == "trivial":
            return Fraction(0)
        return c.valuation()


TRIVIAL = CoefficientSpec("trivial")
TADIC = CoefficientSpec("t-adic")


class LaurentPoly:
    """Finite sum of c_m chi^m with nonzero coefficients and unique exponents."""

    def __init__(self, terms: Mapping[Sequence[int], object] | Iterable, spec: CoefficientSpec = TRIVIAL):
        items = terms.items() if isinstance(terms, Mapping) else terms
        out: dict[tuple[int, ...], object] = {}
        for m, c in items:
            m = as_int_vector(m)
            c = spec.coerce(c)
            out[m] = out[m] + c if m in out else c
        self.spec = spec
        self.terms = {m: c for m, c in out.items() if not spec.is_zero(c)}
        dims = {len(m) for m in self.terms}
        if len(dims) > 1:
            raise DimensionError("exponent vectors of different lengths")

    def __repr__(self):
        return f"LaurentPoly({self.terms}, spec={self.spec.kind})"

    def is_zero(self) -> bool:
        return not self.terms

    def __add__(self, other: "LaurentPoly") -> "LaurentPoly":
        return LaurentPoly(list(self.terms.items()) + list(other.terms.items()), self.spec)

    def __mul__(self, other: "LaurentPoly") -> "LaurentPoly":
        prod = []
        for m1, c1 in self.terms.items():
            for m2, c2 in other.terms.items():
                prod.append((tuple(x + y for x, y in zip(m1, m2)), c1 * c2))
        return LaurentPoly(prod, self.spec)


@dataclass(frozen=True)
class MonomialPoint:
    """The seminorm with |sum c_m chi^m| = max |c_m|^tau e^{-<m,a>}."""

    tau: Fraction
    a: tuple[Fraction, ...]
    spec: CoefficientSpec = TRIVIAL

    def __post_init__(self):
        tau = as_fraction(self.tau)
        if not 0 <= tau <= 1:
            raise ValueError("tau must lie in [0, 1]")
        object.__setattr__(self, "tau", tau)
        object.__setattr__(self, "a", as_vector(self.a))

    @property
    def dim(self) -> int:
        return len(self.a)

    def scale(self, s) -> "MonomialPoint":
        """The point with seminorm |.|^s: both tau and a scale by s (tau may leave [0,1])."""
        s = as_fraction(s)
        if s <= 0:
            raise ValueError("scale must be positive")
        p = object.__new__(MonomialPoint)
        object.__setattr__(p, "tau", self.tau * s)
        object.__setattr__(p, "a", tuple(s * x for x in self.a))
        object.__setattr__(p, "spec", self.spec)
        return p


def valuation_eval(p: MonomialPoint, f: LaurentPoly, spec: CoefficientSpec | None = None):
    spec = spec or f.spec
    if f.is_zero():
        return INFINITY
    best = None
    for m, c in f.terms.items():
        if len(m) != p.dim:
            raise DimensionError("exponent and point dimensions disagree")
        v = p.tau * spec.valuation(c) + la.dot(m, p.a)
        if best is None or v < best:
            best = v
    return best


def trop(p: MonomialPoint) -> tuple[Fraction, ...]:
    return p.a


def emb(a: Sequence, tau=0, spec: CoefficientSpec = TRIVIAL) -> MonomialPoint:
    return MonomialPoint(as_fraction(tau), as_vector(a), spec)


def retract(p: MonomialPoint) -> MonomialPoint:
    """q = emb o trop (keeping the point's coefficient scaling)."""
    return emb(trop(p), p.tau, p.spec)


def hybrid_structure_map(p: MonomialPoint) -> Fraction:
    return p.tau


def norm_equivalent(x: MonomialPoint, y: MonomialPoint) -> Fraction | None:
    """s > 0 with |.|_x = |.|_y^s, i.e. (tau_x, a_x) = s (tau_y, a_y); None if none exists."""
    if x.spec != y.spec:
        raise ValueError("points over different coefficient specs")
    if x.dim != y.dim:
        raise DimensionError("points of different dimension")
    vx = (x.tau,) + x.a
    vy = (y.tau,) + y.a
    s = None
    for u, w in zip(vx, vy):
        if w == 0:
            if u != 0:
                return None
            continue
        r = u / w
        if s is None:
            s = r
        elif r != s:
            return None
    if s is None:
        return Fraction(1)
    return s if s > 0 else None


def model_green(gens: Sequence[Sequence[int]], p: MonomialPoint) -> Fraction:
    """Green function of a monomial boundary ideal: min_i <m_i, a>."""
    if not gens:
        raise ValueError("the zero ideal has no model function")
    vals = [la.dot(as_int_vector(m), p.a) for m in gens]
    if any(v < 0 for v in vals):
        raise ValueError("point is outside the reduction locus of the ideal")
    return min(vals)


def ideal_product(g1: Sequence[Sequence[int]], g2: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    return sorted({tuple(x + y for x, y in zip(m1, m2)) for m1 in g1 for m2 in g2})


def ideal_sum(g1: Sequence[Sequence[int]], g2: Sequence[Sequence[int]]) -> list[tuple[int, ...]]:
    return sorted({tuple(m) for m in g1} | {tuple(m) for m in g2})


def interior_test(p: MonomialPoint, z: ToricBoundaryDivisor) -> bool:
    """g_Z(p) = 0 exactly, i.e. p reduces into U = X minus the support of Z."""
    if not z.is_effective():
        raise ValueError("boundary divisor must be effective")
    return supporting_function(z).eval(p.a) == 0


@dataclass(frozen=True)
class TriangleReport:
    t: float
    samples: int
    max_violation: float
    passed: bool

    def to_json(self) -> dict:
        return {"t": self.t, "samples": self.samples, "max_violation": self.max_violation,
                "passed": self.passed}


def hybrid_triangle_check(t, samples: int = 10_000, seed: int = 0, threshold: float = 1e-12) -> TriangleReport:
    """Check that ||.||^(1/t) is subadditive when ||.|| = |.|^t on random complex pairs."""
    t = float(as_fraction(t)) if not isinstance(t, float) else t
    if not 0 < t <= 1:
        raise ValueError("t must lie in (0, 1]")
    rng = np.random.default_rng(seed)
    scale = 10.0 ** rng.uniform(-3, 3, size=(samples, 2))
    x = (rng.standard_normal(samples) + 1j * rng.standard_normal(samples)) * scale[:, 0]
    y = (rng.standard_normal(samples) + 1j * rng.standard_normal(samples)) * scale[:, 1]
    norm_t = lambda z: np.abs(z) ** t
    lhs = norm_t(x + y) ** (1 / t)
    rhs = norm_t(x) ** (1 / t) + norm_t(y) ** (1 / t)
    rel = (lhs - rhs) / np.maximum(rhs, 1e-300)
    worst = float(max(0.0, rel.max()))
    return TriangleReport(t, samples, worst, worst <= threshold)
