"""Toric boundary divisors, supporting functions and arc orders.

Sign convention: SF_D(v_rho) = a_rho, the order of vanishing of D along the
one-parameter subgroup through v_rho. The divisor [0] on P^1 therefore has
value 1 on the ray +1 and 0 on the ray -1.
"""
from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

from . import _linalg as la
from ._validation import DimensionError, as_fraction, as_int_vector, as_vector
from .conical import PLConical
from .lattice import Fan, is_complete


class ConeCompatibilityError(ValueError):
    """A linear map sends a cone of the source fan across several target cones."""


@dataclass(frozen=True)
class ToricModel:
    """A complete toric variety, given by its fan. Ray rho <-> prime divisor D_rho."""

    fan: Fan

    def __post_init__(self):
        if not is_complete(self.fan):
            raise ValueError("toric model requires a complete fan")

    @property
    def dim(self) -> int:
        return self.fan.dim

    @property
    def rays(self):
        return self.fan.rays


class ToricBoundaryDivisor:
    """D = sum a_rho D_rho, a Q-divisor supported on the toric boundary."""

    def __init__(self, model: ToricModel | Fan, coeffs: Sequence):
        if isinstance(model, Fan):
            model = ToricModel(model)
        coeffs = tuple(as_fraction(c) for c in coeffs)
        if len(coeffs) != len(model.rays):
            raise ValueError(f"expected {len(model.rays)} coefficients, got {len(coeffs)}")
        self.model = model
        self.coeffs = coeffs

    def __repr__(self):
        return f"ToricBoundaryDivisor({[str(c) for c in self.coeffs]})"

    @property
    def fan(self) -> Fan:
        return self.model.fan

    def __add__(self, other: "ToricBoundaryDivisor") -> "ToricBoundaryDivisor":
        if not other.fan.same_as(self.fan) or other.fan.rays != self.fan.rays:
            raise ValueError("divisors live on different models")
        return ToricBoundaryDivisor(self.model, [a + b for a, b in zip(self.coeffs, other.coeffs)])

    def __mul__(self, c) -> "ToricBoundaryDivisor":
        c = as_fraction(c)
        return ToricBoundaryDivisor(self.model, [c * a for a in self.coeffs])

    __rmul__ = __mul__

    def is_effective(self) -> bool:
        return all(c >= 0 for c in self.coeffs)

    @classmethod
    def prime(cls, model: ToricModel | Fan, ray_index: int) -> "ToricBoundaryDivisor":
        fan = model.fan if isinstance(model, ToricModel) else model
        return cls(model, [int(i == ray_index) for i in range(len(fan.rays))])

    @classmethod
    def from_function(cls, f: PLConical) -> "ToricBoundaryDivisor":
        return cls(f.fan, f.ray_values)


def supporting_function(d: ToricBoundaryDivisor) -> PLConical:
    if not d.fan.is_simplicial:
        raise ValueError("supporting function needs a simplicial fan; simplicialize first")
    return PLConical(d.fan, d.coeffs)


def pullback_one_param(d: ToricBoundaryDivisor, a: Sequence) -> tuple[Fraction, Fraction]:
    """Orders of lambda_a^* D at 0 and at infinity: (SF_D(a), SF_D(-a))."""
    f = supporting_function(d)
    a = as_vector(a)
    return f.eval(a), f.eval([-x for x in a])


@dataclass(frozen=True)
class MonomialArc:
    """Arc with chart coordinates x_j(s) = unit * s^(m_j) along the rays of one cone."""

    cone: tuple[int, ...]
    orders: tuple[int, ...]

    def __post_init__(self):
        cone = tuple(int(i) for i in self.cone)
        orders = as_int_vector(self.orders)
        if len(cone) != len(orders):
            raise ValueError("one order per cone ray required")
        if any(m < 0 for m in orders):
            raise ValueError("arc orders must be nonnegative")
        object.__setattr__(self, "cone", cone)
        object.__setattr__(self, "orders", orders)

    def tropical_point(self, fan: Fan) -> tuple[Fraction, ...]:
        """sum_j m_j v_j."""
        pt = [Fraction(0)] * fan.dim
        for j, m in zip(self.cone, self.orders):
            for k, x in enumerate(fan.rays[j]):
                pt[k] += m * x
        return tuple(pt)


def arc_order(f: PLConical, arc: MonomialArc, fan: Fan | None = None) -> Fraction:
    """ord_0 of the pulled-back divisor: f(sum_j m_j v_j).

    ``fan`` names the model whose rays the arc indexes (defaults to f's fan).
    """
    fan = fan or f.fan
    if fan.dim != f.dim:
        raise DimensionError("arc model and function dimensions disagree")
    support = [j for j, m in zip(arc.cone, arc.orders) if m != 0]
    if not any(set(support) <= set(c) for c in fan.cones):
        raise ValueError("the arc's nonzero orders do not index a single cone of the model")
    return f.eval(arc.tropical_point(fan))


def pullback_linear(d: ToricBoundaryDivisor, phi: Sequence[Sequence], source: Fan) -> ToricBoundaryDivisor:
    """Pull back along an integer linear map N' -> N (matrix rows index N).

    Every cone of ``source`` must map into a single cone of D's fan.
    """
    phi = [as_int_vector(row) for row in phi]
    if len(phi) != d.fan.dim or any(len(row) != source.dim for row in phi):
        raise DimensionError("map shape does not match the fans")
    f = supporting_function(d)
    images = [tuple(la.matvec(phi, r)) for r in source.rays]
    for c in source.cones:
        imgs = [images[j] for j in c]
        if not any(all(d.fan.cone(k).contains(p) for p in imgs) for k in range(len(d.fan.cones))):
            raise ConeCompatibilityError(f"cone {c} of the source is not mapped into a single cone")
    return ToricBoundaryDivisor(source, [f.eval(p) for p in images])


def is_zero_by_arcs(f: PLConical) -> bool:
    """f vanishes on every monomial arc iff it vanishes on every ray."""
    return f.is_zero()
