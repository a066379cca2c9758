"""Boundary norms and Cauchy sequences of toric model divisors."""
from __future__ import annotations

import threading
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from ._validation import as_fraction
from .berkovich import MonomialPoint, trop
from .conical import (ConicalOracle, PLConical, approximate, cross_section_samples,
                      l1_normalized, sup_ratio, sup_ratio_witness)
from .divisors import ToricBoundaryDivisor, supporting_function
from .lattice import Fan, is_complete

MAX_DEPTH = 16
HEADROOM = Fraction(5, 4)


class ConvergenceError(RuntimeError):
    """The depth schedule hit its guard before reaching the target."""


class ToleranceError(ValueError):
    """The requested tolerance is out of reach of the materialized prefix."""


class BoundaryDatum:
    """A boundary divisor Z with positive coefficient on every ray of a complete fan."""

    def __init__(self, z: ToricBoundaryDivisor):
        if not is_complete(z.fan):
            raise ValueError("boundary datum needs a complete fan")
        if any(c <= 0 for c in z.coeffs):
            raise ValueError("boundary datum needs strictly positive coefficients")
        self.divisor = z
        self.sf = supporting_function(z)

    @property
    def fan(self) -> Fan:
        return self.divisor.fan

    def min_on_cross_section(self) -> Fraction:
        """min of SF_Z on the L1 unit sphere (attained at a normalized ray)."""
        return min(self.sf.eval(l1_normalized(r)) for r in self.fan.rays)


def boundary_norm(f: PLConical, z: BoundaryDatum):
    return sup_ratio(f, z.sf)


@dataclass
class PairCheck:
    i: int
    j: int
    norm: Fraction
    epsilon: Fraction
    passed: bool
    witness: tuple | None = None

    def to_json(self) -> dict:
        from .serialize import dump_number
        out = {"i": self.i, "j": self.j, "norm": dump_number(self.norm),
               "epsilon": dump_number(self.epsilon), "passed": self.passed}
        if self.witness is not None:
            out["witness"] = list(self.witness)
        return out


@dataclass
class CauchyReport:
    pairs: list[PairCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(p.passed for p in self.pairs)

    def failures(self) -> list[PairCheck]:
        return [p for p in self.pairs if not p.passed]

    def to_json(self) -> dict:
        return {"passed": self.passed, "pairs": [p.to_json() for p in self.pairs]}


class AdelicToricDivisor:
    """Cauchy sequence of PL supporting functions with error schedule epsilons.

    Sequences built by :func:`from_oracle` remember their oracle and can be
    extended deterministically with :meth:`extend_to`.
    """

    def __init__(self, terms: Sequence[PLConical], epsilons: Sequence, boundary: BoundaryDatum,
                 depths: Sequence[int] | None = None):
        if len(terms) != len(epsilons):
            raise ValueError("one epsilon per term required")
        eps = [as_fraction(e) for e in epsilons]
        if any(e < 0 for e in eps):
            raise ValueError("epsilons must be nonnegative")
        if any(a < b for a, b in zip(eps, eps[1:])):
            raise ValueError("epsilons must be non-increasing")
        self.terms = list(terms)
        self.epsilons = eps
        self.boundary = boundary
        self.depths = list(depths) if depths is not None else list(range(len(terms)))
        self._oracle: ConicalOracle | None = None
        self._reference: Fan | None = None
        self._reports = []
        self._norms: dict[tuple[int, int], Fraction] = {}
        self._lock = threading.Lock()

    def __len__(self):
        return len(self.terms)

    @property
    def reports(self):
        return list(self._reports)

    @property
    def is_lazy(self) -> bool:
        return self._oracle is not None

    def pair_norm(self, i: int, j: int) -> Fraction:
        key = (min(i, j), max(i, j))
        if key not in self._norms:
            self._norms[key] = boundary_norm(self.terms[key[0]] - self.terms[key[1]], self.boundary)
        return self._norms[key]

    def _recompute_epsilons(self) -> None:
        n = len(self.terms)
        if n == 1:
            self.epsilons = [Fraction(0)]
            return
        eps = []
        for i in range(n - 1):
            eps.append(HEADROOM * max(self.pair_norm(i, j) for j in range(i + 1, n)))
        eps.append(HEADROOM * self.pair_norm(n - 2, n - 1))
        for i in range(n - 2, -1, -1):
            eps[i] = max(eps[i], eps[i + 1])
        self.epsilons = eps

    def extend_to(self, depth: int) -> None:
        """Materialize terms up to ``depth`` (lazy sequences only)."""
        if not self.is_lazy:
            raise ValueError("sequence has no oracle to extend from")
        if depth > MAX_DEPTH:
            raise ConvergenceError(f"depth {depth} exceeds the guard of {MAX_DEPTH}")
        with self._lock:
            while self.depths[-1] < depth:
                d = self.depths[-1] + 1
                f, rep = approximate(self._oracle, self._reference, d)
                self.terms.append(f)
                self.depths.append(d)
                self._reports.append(rep)
            self._recompute_epsilons()

    def green(self, a: Sequence) -> Fraction:
        return self.terms[-1].eval(a)


def verify_cauchy(seq: AdelicToricDivisor, z: BoundaryDatum | None = None,
                  prefix: int | None = None) -> CauchyReport:
    """Exact check of ||f_i - f_j||_Z <= eps_i for all i < j < prefix."""
    z = z or seq.boundary
    prefix = len(seq) if prefix is None else prefix
    if prefix > len(seq):
        raise ValueError(f"prefix {prefix} exceeds materialized length {len(seq)}")
    report = CauchyReport()
    for i in range(prefix):
        for j in range(i + 1, prefix):
            if z is seq.boundary:
                norm = seq.pair_norm(i, j)
                witness = None
                if norm > seq.epsilons[i]:
                    _, witness = sup_ratio_witness(seq.terms[i] - seq.terms[j], z.sf)
            else:
                norm, witness = sup_ratio_witness(seq.terms[i] - seq.terms[j], z.sf)
            ok = norm <= seq.epsilons[i]
            report.pairs.append(PairCheck(i, j, norm, seq.epsilons[i], ok, None if ok else witness))
    return report


def _sampled_gap(f: PLConical, g: PLConical, pts: np.ndarray) -> float:
    return float(np.max(np.abs(f.predict(pts) - g.predict(pts))))


def from_oracle(oracle: ConicalOracle, reference: Fan, z: BoundaryDatum, target_eps,
                max_depth: int = MAX_DEPTH, n_samples: int = 10_000,
                seed: int = 0) -> AdelicToricDivisor:
    """Interpolate at depths 0, 1, 2, ... until consecutive terms are target-close.

    The sampled gap steers the schedule; the stop is confirmed by the exact
    boundary norm, and the stored epsilons are exact norms with 25% headroom.
    """
    target = as_fraction(target_eps)
    if target <= 0:
        raise ValueError("target epsilon must be positive")
    # homogeneity is checked before any term is produced
    oracle.check_homogeneity()
    pts = cross_section_samples(reference.dim, n_samples, seed)
    zmin = float(z.min_on_cross_section())
    f0, r0 = approximate(oracle, reference, 0, n_samples)
    seq = AdelicToricDivisor([f0], [0], z, [0])
    seq._oracle, seq._reference, seq._reports = oracle, reference, [r0]
    f1, r1 = approximate(oracle, reference, 1, n_samples)
    if boundary_norm(f0 - f1, z) == 0:
        return seq
    seq.terms.append(f1)
    seq.depths.append(1)
    seq._reports.append(r1)
    d = 1
    while True:
        gap = _sampled_gap(seq.terms[-1], seq.terms[-2], pts) / zmin
        if gap < float(target) and seq.pair_norm(len(seq) - 2, len(seq) - 1) < target:
            break
        if d >= max_depth:
            raise ConvergenceError(
                f"no convergence to {target} by depth {max_depth}; last sampled gap {gap:.3e}")
        d += 1
        f, rep = approximate(oracle, reference, d, n_samples)
        seq.terms.append(f)
        seq.depths.append(d)
        seq._reports.append(rep)
    seq._recompute_epsilons()
    return seq


@dataclass(frozen=True)
class GreenValue:
    value: Fraction
    error_bound: Fraction
    depth: int

    def __float__(self):
        return float(self.value)


def green_of_adelic(seq: AdelicToricDivisor, p: MonomialPoint, tol) -> GreenValue:
    """Green function at a monomial point via the deepest term, with certified bound."""
    tol = as_fraction(tol)
    a = trop(p)
    zval = seq.boundary.sf.eval(a)
    while seq.epsilons[-1] * zval > tol:
        if not seq.is_lazy or seq.depths[-1] >= MAX_DEPTH:
            raise ToleranceError(
                f"bound {float(seq.epsilons[-1] * zval):.3e} exceeds tolerance {float(tol):.3e}")
        seq.extend_to(seq.depths[-1] + 1)
    return GreenValue(seq.terms[-1].eval(a), seq.epsilons[-1] * zval, seq.depths[-1])
