"""Slope functions for degenerating heights and numeric slope recovery.

Exact where the inputs are exact (evaluating mu at rational arc orders);
floating point for heights and moduli, with explicit thresholds.
"""
from __future__ import annotations

import itertools
import math
import random
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, Mapping, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_array, check_is_fitted, check_X_y

from ._validation import DimensionError, as_fraction

Poly = dict[tuple[int, ...], Fraction]

MIN_SAMPLES = 8
MIN_DECADES = 3
EXTENSION_THRESHOLD = 1e-6
RESIDUAL_THRESHOLD = 0.01


class DynamicRangeError(ValueError):
    """Too few samples, or -log|s| spans too few decades, for a slope fit."""


class EmptyBucketError(ValueError):
    """No sample is deep enough for some radius of the schedule."""


def _poly(terms) -> Poly:
    out: Poly = {}
    items = terms.items() if isinstance(terms, Mapping) else terms
    for exps, c in items:
        exps = tuple(int(e) for e in exps)
        if any(e < 0 for e in exps):
            raise ValueError("negative exponent in a polynomial")
        out[exps] = out.get(exps, Fraction(0)) + as_fraction(c)
    return {k: v for k, v in out.items() if v != 0}


def _peval(p: Poly, x: Sequence) -> Fraction:
    total = Fraction(0)
    for exps, c in p.items():
        term = c
        for xi, e in zip(x, exps):
            if e:
                term *= xi ** e
        total += term
    return total


def _degrees(p: Poly) -> set[int]:
    return {sum(e) for e in p}


class HomogeneousRational:
    """mu = num / den, homogeneous of degree one on the open positive orthant.

    Polynomials are dicts from exponent tuples to rational coefficients.
    """

    def __init__(self, num, den=None, nvars: int | None = None, seed: int = 0):
        self.num = _poly(num)
        self.den = _poly(den) if den is not None else None
        keys = list(self.num) + list(self.den or {})
        if nvars is None:
            if not keys:
                raise ValueError("cannot infer the number of variables of the zero function")
            nvars = len(keys[0])
        if any(len(k) != nvars for k in keys):
            raise DimensionError("exponent vectors of different lengths")
        self.nvars = nvars
        if self.den is None:
            self.den = {tuple([0] * nvars): Fraction(1)}
        if not self.den:
            raise ZeroDivisionError("denominator is the zero polynomial")
        self._check(seed)

    def _check(self, seed: int) -> None:
        rng = random.Random(seed)
        pts = [[Fraction(rng.randint(1, 97), rng.randint(1, 13)) for _ in range(self.nvars)]
               for _ in range(32)]
        signs = set()
        for m in pts:
            d = _peval(self.den, m)
            if d == 0:
                raise ValueError(f"denominator vanishes at {[str(x) for x in m]} in the open orthant")
            signs.add(d > 0)
        if len(signs) > 1:
            # the orthant is connected, so a sign change forces a zero in between
            raise ValueError("denominator changes sign on the open orthant")
        dn, dd = _degrees(self.num), _degrees(self.den)
        if len(dd) == 1 and (not dn or (len(dn) == 1 and dn == {next(iter(dd)) + 1})):
            return
        for m in pts[:8]:
            lam = Fraction(rng.randint(2, 9), rng.randint(1, 7))
            v, w = self(m), self([lam * x for x in m])
            if abs(float(w - lam * v)) > 1e-10 * max(1.0, abs(float(lam * v))):
                raise ValueError("function is not homogeneous of degree one")

    def __call__(self, m: Sequence) -> Fraction:
        m = [as_fraction(x) for x in m]
        if len(m) != self.nvars:
            raise DimensionError(f"expected {self.nvars} coordinates, got {len(m)}")
        d = _peval(self.den, m)
        if d == 0:
            raise ZeroDivisionError(f"denominator vanishes at {[str(x) for x in m]}")
        return _peval(self.num, m) / d

    def evalf(self, x: Sequence[float]) -> float:
        return float(self(x))

    @classmethod
    def linear(cls, coeffs: Sequence) -> "HomogeneousRational":
        n = len(coeffs)
        return cls({tuple(int(i == j) for j in range(n)): c for i, c in enumerate(coeffs)}, nvars=n)

    def __repr__(self):
        return f"HomogeneousRational(num={self.num}, den={self.den})"


def eval_mu(mu: HomogeneousRational, m: Sequence) -> Fraction:
    m = [as_fraction(x) for x in m]
    if any(x <= 0 for x in m):
        raise ValueError("mu is evaluated on strictly positive vectors; use check_boundary_extension "
                         "for faces of the orthant")
    return mu(m)


def expected_slope(mu: HomogeneousRational, arc_orders: Sequence[int]) -> Fraction:
    """Predicted coefficient of -log|s| for an arc with coordinate orders m_i."""
    if any(int(x) != x for x in arc_orders):
        raise ValueError("arc orders must be integers")
    return eval_mu(mu, arc_orders)


@dataclass
class ExtensionReport:
    face: tuple[int, ...]
    max_discrepancy: float
    worst_point: tuple[float, ...] | None
    threshold: float = EXTENSION_THRESHOLD

    @property
    def passed(self) -> bool:
        return self.max_discrepancy <= self.threshold

    def to_json(self) -> dict:
        return {"face": list(self.face), "max_discrepancy": self.max_discrepancy,
                "worst_point": None if self.worst_point is None else list(self.worst_point),
                "threshold": self.threshold, "passed": self.passed}


def check_boundary_extension(mu: HomogeneousRational, face: Sequence[int], samples: int = 100,
                             seed: int = 0, step=Fraction(1, 10**9)) -> ExtensionReport:
    """Compare limits of mu toward a face of the orthant along three directions.

    For each random face point p, mu(p + step*d) is evaluated exactly for
    three random positive directions d; the spread of the three values is
    the discrepancy at p.
    """
    face = tuple(sorted(set(int(i) for i in face)))
    if any(i < 0 or i >= mu.nvars for i in face):
        raise ValueError(f"face coordinates must lie in 0..{mu.nvars - 1}")
    rng = random.Random(seed)
    step = as_fraction(step)
    worst, where = 0.0, None
    for _ in range(samples):
        p = [Fraction(0) if i in face else Fraction(rng.randint(1, 1000), 100)
             for i in range(mu.nvars)]
        vals = []
        for _ in range(3):
            d = [Fraction(rng.randint(1, 1000), 100) for _ in range(mu.nvars)]
            vals.append(mu([x + step * y for x, y in zip(p, d)]))
        spread = float(max(vals) - min(vals))
        if where is None or spread > worst:
            worst, where = spread, tuple(float(x) for x in p)
    return ExtensionReport(face, worst, where)


# ------------------------------------------------------------- slopes

def _log_depths(moduli) -> np.ndarray:
    s = np.asarray(moduli, dtype=float)
    if np.any(~np.isfinite(s)) or np.any(s <= 0) or np.any(s >= 1):
        raise ValueError("moduli must lie in the open interval (0, 1)")
    return -np.log(s)


def _check_range(x: np.ndarray) -> None:
    if x.size < MIN_SAMPLES:
        raise DynamicRangeError(f"need at least {MIN_SAMPLES} samples, got {x.size}")
    if x.max() / x.min() < 10 ** MIN_DECADES:
        raise DynamicRangeError(
            f"-log|s| spans {math.log10(x.max() / x.min()):.2f} decades; need {MIN_DECADES}")


class SlopeRegressor(BaseEstimator, RegressorMixin):
    """Least-squares line h ~ slope * x + intercept in x = -log|s|.

    ``fit`` takes X of shape (n, 1) holding x = -log|s| (or |s| itself when
    ``input="modulus"``). After fitting, ``o1_bound_`` is the largest
    absolute residual, the empirical size of the bounded term.
    """

    def __init__(self, input: str = "log_depth", check_range: bool = True):
        self.input = input
        self.check_range = check_range

    def _x(self, X) -> np.ndarray:
        X = check_array(X, ensure_min_samples=1)
        if X.shape[1] != 1:
            raise ValueError("SlopeRegressor takes a single feature column")
        col = X[:, 0]
        if self.input == "modulus":
            return _log_depths(col)
        if self.input != "log_depth":
            raise ValueError(f"unknown input kind {self.input!r}")
        return col

    def fit(self, X, y):
        X, y = check_X_y(X, y, y_numeric=True)
        x = self._x(X)
        if self.check_range:
            _check_range(x)
        A = np.column_stack([x, np.ones_like(x)])
        (slope, intercept), *_ = np.linalg.lstsq(A, y, rcond=None)
        self.slope_ = float(slope)
        self.intercept_ = float(intercept)
        self.o1_bound_ = float(np.max(np.abs(y - slope * x - intercept)))
        self.n_features_in_ = 1
        return self

    def predict(self, X):
        check_is_fitted(self, "slope_")
        return self.slope_ * self._x(X) + self.intercept_


def fit_slope(samples: Sequence[tuple[float, float]]) -> tuple[float, float]:
    """(slope, O(1) bound) from samples (|s|, h)."""
    arr = np.asarray(samples, dtype=float)
    if arr.ndim != 2 or arr.shape[1] != 2:
        raise ValueError("samples must be (modulus, height) pairs")
    reg = SlopeRegressor(input="modulus").fit(arr[:, :1], arr[:, 1])
    return reg.slope_, reg.o1_bound_


# ------------------------------------------------------- simplex functions

@dataclass
class SimplexFunction:
    """A function on the cone over a simplicial complex with vertex set 0..r-1.

    ``vertex_values`` fixes the values at the vertices. Each simplex (a tuple
    of vertex indices) may carry its own evaluator taking the full coordinate
    vector; simplices without one use the linear interpolation sum v_i x_i.
    When ``simplices`` is omitted the complex is the full simplex.
    """

    vertex_values: Sequence[float]
    simplices: Sequence[Sequence[int]] | None = None
    evaluators: dict = field(default_factory=dict)

    def __post_init__(self):
        self.vertex_values = [float(v) for v in self.vertex_values]
        r = len(self.vertex_values)
        if self.simplices is None:
            self.simplices = [tuple(range(r))]
        self.simplices = [tuple(sorted(s)) for s in self.simplices]
        if any(i < 0 or i >= r for s in self.simplices for i in s):
            raise ValueError("simplex refers to a missing vertex")
        self.evaluators = {tuple(sorted(k)): v for k, v in self.evaluators.items()}
        unknown = set(self.evaluators) - set(self.simplices)
        if unknown:
            raise ValueError(f"evaluators for unknown simplices {sorted(unknown)}")

    @property
    def r(self) -> int:
        return len(self.vertex_values)

    def _simplex_for(self, x: np.ndarray):
        support = {i for i, v in enumerate(x) if v != 0}
        for s in self.simplices:
            if support <= set(s):
                return s
        raise ValueError(f"point with support {sorted(support)} lies in no simplex")

    def __call__(self, x: Sequence[float]) -> float:
        x = np.asarray(x, dtype=float)
        if x.shape != (self.r,):
            raise DimensionError(f"expected {self.r} coordinates")
        if np.any(x < 0):
            raise ValueError("coordinates must be nonnegative")
        s = self._simplex_for(x)
        ev = self.evaluators.get(s)
        if ev is not None:
            return float(ev(x))
        return float(sum(self.vertex_values[i] * x[i] for i in s))

    def continuity_gap(self, samples: int = 200, seed: int = 0) -> float:
        """Largest disagreement of simplex evaluators on shared faces."""
        rng = np.random.default_rng(seed)
        worst = 0.0
        for s, t in itertools.combinations(self.simplices, 2):
            common = sorted(set(s) & set(t))
            if not common:
                continue
            for _ in range(samples):
                x = np.zeros(self.r)
                x[common] = rng.random(len(common)) + 1e-3
                vals = []
                for simplex in (s, t):
                    ev = self.evaluators.get(simplex)
                    vals.append(float(ev(x)) if ev is not None
                                else float(sum(self.vertex_values[i] * x[i] for i in simplex)))
                worst = max(worst, abs(vals[0] - vals[1]) / max(1.0, float(x.sum())))
        return worst


@dataclass
class ResidualReport:
    radii: list[float]
    residuals: list[float]
    counts: list[int]
    threshold: float = RESIDUAL_THRESHOLD

    @property
    def decreasing(self) -> bool:
        return all(b <= a + 1e-15 for a, b in zip(self.residuals, self.residuals[1:]))

    @property
    def passed(self) -> bool:
        return self.decreasing and self.residuals[-1] <= self.threshold

    def to_json(self) -> dict:
        return {"radii": self.radii, "residuals": self.residuals, "counts": self.counts,
                "decreasing": self.decreasing, "threshold": self.threshold, "passed": self.passed}


def green_residual(f: SimplexFunction, samples: Sequence[tuple[Sequence[float], float]],
                   scale_schedule: Sequence[float]) -> ResidualReport:
    """Relative residual sup |g - f(-log|z|)| / sum(-log|z_i|) on shrinking polydiscs.

    ``scale_schedule`` holds decreasing polydisc radii rho in (0, 1); the
    bucket for rho is every sample with max|z_i| <= rho, i.e. with
    min(-log|z_i|) >= R = -log(rho). Reported radii are these R.
    """
    rhos = [float(r) for r in scale_schedule]
    if not rhos:
        raise ValueError("empty radius schedule")
    if any(not 0 < r < 1 for r in rhos):
        raise ValueError("polydisc radii must lie in (0, 1)")
    if any(b >= a for a, b in zip(rhos, rhos[1:])):
        raise ValueError("polydisc radii must be strictly decreasing")
    zs = np.asarray([z for z, _ in samples], dtype=float)
    g = np.asarray([v for _, v in samples], dtype=float)
    if zs.ndim != 2 or zs.shape[1] != f.r:
        raise DimensionError(f"each sample needs {f.r} moduli")
    x = _log_depths(zs)
    fx = np.array([f(row) for row in x])
    rel = np.abs(g - fx) / x.sum(axis=1)
    depth = x.min(axis=1)
    radii, residuals, counts = [], [], []
    for rho in rhos:
        R = -math.log(rho)
        mask = depth >= R * (1 - 1e-12)
        if not mask.any():
            raise EmptyBucketError(f"no sample lies in the polydisc of radius {rho:g}")
        radii.append(R)
        residuals.append(float(rel[mask].max()))
        counts.append(int(mask.sum()))
    return ResidualReport(radii, residuals, counts)
