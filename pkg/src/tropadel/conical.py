"""Piecewise-linear conical functions on N_R and their approximation.

A :class:`PLConical` is a simplicial fan plus one exact rational value per
ray; on each maximal cone the function is the linear extension of those
values. Sums, scalings and minima are computed on common refinements so the
result stays genuinely linear per cone.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from itertools import permutations
from typing import Callable, Sequence

import numpy as np
from sklearn.base import BaseEstimator
from sklearn.utils.validation import check_array, check_is_fitted

from . import _linalg as la
from ._validation import DimensionError, as_fraction, as_vector
from .lattice import Fan, common_refinement, is_complete, simplicialize

INFINITY = math.inf


class OutsideSupportError(ValueError):
    """A point was evaluated outside the support of a fan."""


class HomogeneityError(ValueError):
    """A conical oracle failed its degree-1 homogeneity spot-check."""


class PLConical:
    """Piecewise-linear conical function: a simplicial fan with ray values."""

    def __init__(self, fan: Fan, ray_values: Sequence):
        if not fan.is_simplicial:
            raise ValueError("PLConical requires a simplicial fan; call simplicialize first")
        values = tuple(as_fraction(v) for v in ray_values)
        if len(values) != len(fan.rays):
            raise ValueError(f"expected {len(fan.rays)} ray values, got {len(values)}")
        self.fan = fan
        self.ray_values = values

    def __repr__(self):
        vals = ", ".join(str(v) for v in self.ray_values)
        return f"PLConical(dim={self.fan.dim}, rays={len(self.fan.rays)}, values=[{vals}])"

    @property
    def dim(self) -> int:
        return self.fan.dim

    @cached_property
    def _pieces(self):
        """Per maximal cone: (barycentric matrix or None, linear functional)."""
        pieces = []
        for k, c in enumerate(self.fan.cones):
            vals = [self.ray_values[j] for j in c]
            bary = self.fan.cone(k).barycentric
            if bary is not None:
                lin = la.matvec(la.transpose(bary), vals)
            else:
                bary = None
                lin = None
            pieces.append((bary, lin))
        return pieces

    @property
    def _float_bary(self) -> np.ndarray | None:
        return self.fan.float_barycentric

    def linear_part(self, k: int) -> list[Fraction]:
        """The linear functional l with f = <l, .> on maximal cone ``k``."""
        lin = self._pieces[k][1]
        if lin is None:
            raise ValueError("linear part is only unique on full-dimensional cones")
        return lin

    def _value_on(self, k: int, a) -> Fraction | None:
        bary, lin = self._pieces[k]
        c = self.fan.cones[k]
        if bary is not None:
            lam = la.matvec(bary, a)
            if any(x < 0 for x in lam):
                return None
            return la.dot(lin, a)
        rays = [self.fan.rays[j] for j in c]
        lam = la.solve(la.transpose(rays), a)
        if lam is None or any(x < 0 for x in lam):
            return None
        return la.dot(lam, [self.ray_values[j] for j in c])

    def __call__(self, a: Sequence) -> Fraction:
        return self.eval(a)

    def eval(self, a: Sequence) -> Fraction:
        a = as_vector(a)
        if len(a) != self.dim:
            raise DimensionError("point and function dimensions disagree")
        if all(x == 0 for x in a):
            return Fraction(0)
        fb = self._float_bary
        if fb is not None:
            af = np.array([float(x) for x in a])
            lam = fb @ af
            scale = max(1.0, float(np.abs(af).max()))
            order = np.nonzero(lam.min(axis=1) >= -1e-9 * scale)[0]
            for k in order:
                v = self._value_on(int(k), a)
                if v is not None:
                    return v
        for k in range(len(self.fan.cones)):
            v = self._value_on(k, a)
            if v is not None:
                return v
        raise OutsideSupportError(f"point {tuple(str(x) for x in a)} is outside the fan's support")

    def predict(self, points) -> np.ndarray:
        """Float evaluation at many points (NaN outside the support)."""
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        out = np.full(len(pts), np.nan)
        fb = self._float_bary
        if fb is None:
            for i, p in enumerate(pts):
                try:
                    out[i] = float(self.eval([Fraction(x) for x in p]))
                except OutsideSupportError:
                    pass
            return out
        vals = np.array([[float(self.ray_values[j]) for j in c] for c in self.fan.cones])
        k, n, _ = fb.shape
        tol = -1e-12 * np.maximum(1.0, np.abs(pts).max(axis=1))
        for start in range(0, len(pts), 2048):
            chunk = pts[start:start + 2048]
            lam = (fb.reshape(k * n, n) @ chunk.T).reshape(k, n, -1)
            ok = lam.min(axis=1) >= tol[None, start:start + 2048]
            has = ok.any(axis=0)
            first = ok.argmax(axis=0)
            cols = np.arange(chunk.shape[0])
            vals_here = np.einsum("pi,pi->p", lam[first, :, cols], vals[first])
            out[start:start + 2048] = np.where(has, vals_here, np.nan)
        return out

    def is_zero(self) -> bool:
        return all(v == 0 for v in self.ray_values)

    def on_fan(self, fan: Fan) -> "PLConical":
        """Same function re-expressed on a (simplicial) refinement of its fan."""
        return PLConical(fan, [self.eval(r) for r in fan.rays])

    def __add__(self, other):
        return add(self, other)

    def __neg__(self):
        return scale(self, -1)

    def __sub__(self, other):
        return add(self, scale(other, -1))

    def __mul__(self, c):
        return scale(self, c)

    __rmul__ = __mul__


def _refined(f: PLConical, g: PLConical) -> Fan:
    return simplicialize(common_refinement(f.fan, g.fan))


def add(f: PLConical, g: PLConical) -> PLConical:
    fan = _refined(f, g)
    return PLConical(fan, [f.eval(r) + g.eval(r) for r in fan.rays])


def scale(f: PLConical, c) -> PLConical:
    c = as_fraction(c)
    return PLConical(f.fan, [c * v for v in f.ray_values])


def minimum(f: PLConical, g: PLConical) -> PLConical:
    """Pointwise minimum, with the fan cut along the locus f = g."""
    fan = _refined(f, g)
    fv = [f.eval(r) for r in fan.rays]
    gv = [g.eval(r) for r in fan.rays]
    h = {r: a - b for r, a, b in zip(fan.rays, fv, gv)}
    cut = _split_by_sign(fan, h)
    vals = []
    for r in cut.rays:
        vals.append(min(f.eval(r), g.eval(r)))
    return PLConical(cut, vals)


def _split_by_sign(fan: Fan, h: dict) -> Fan:
    """Cut each simplicial cone where the linear function h changes sign."""
    pieces = []
    changed = False
    for c in fan.cones:
        rays = [fan.rays[j] for j in c]
        hv = [h[r] for r in rays]
        if all(x >= 0 for x in hv) or all(x <= 0 for x in hv):
            pieces.append(rays)
            continue
        changed = True
        new = []
        for i, u in enumerate(rays):
            for j, w in enumerate(rays):
                if hv[i] > 0 > hv[j]:
                    # h(u) w - h(w) u is a positive combination with h = 0
                    new.append(la.primitive([hv[i] * y - hv[j] * x for x, y in zip(u, w)]))
        pos = [r for r, x in zip(rays, hv) if x >= 0] + new
        neg = [r for r, x in zip(rays, hv) if x <= 0] + new
        pieces.extend([pos, neg])
    if not changed:
        return fan
    return simplicialize(Fan.from_cones(fan.dim, pieces, fan.complete))


def sup_ratio_witness(f: PLConical, g: PLConical):
    """``(sup |f|/g, witnessing ray)`` over the common refinement's rays.

    On a cone where f and g are linear and g >= 0, |f|/g is maximized at a
    ray (mediant inequality); rays with g = 0 and f != 0 give infinity.
    """
    if f.dim != g.dim:
        raise DimensionError("functions live in different dimensions")
    fan = common_refinement(f.fan, g.fan)
    best = Fraction(0)
    witness = None
    for r in fan.rays:
        gv = g.eval(r)
        fv = abs(f.eval(r))
        if gv < 0:
            raise ValueError(f"g is negative at ray {r}")
        if gv == 0:
            if fv != 0:
                return INFINITY, r
            continue
        q = fv / gv
        if witness is None or q > best:
            best, witness = q, r
    return best, witness


def sup_ratio(f: PLConical, g: PLConical):
    """inf{eps : -eps g <= f <= eps g}; ``math.inf`` if no eps works."""
    return sup_ratio_witness(f, g)[0]


def is_effective(f: PLConical) -> bool:
    return all(v >= 0 for v in f.ray_values)


def zero_function(fan: Fan) -> PLConical:
    return PLConical(fan, [0] * len(fan.rays))


# ---------------------------------------------------------------------------
# Oracles and approximation


class ConicalOracle:
    """A degree-1 homogeneous real function on N_R, given as a callable.

    The callable receives a 1-D float array and returns a float. Homogeneity
    is spot-checked at construction with a seeded generator.
    """

    def __init__(self, evaluator: Callable[[np.ndarray], float], dim: int,
                 check: bool = True, seed: int = 0, rtol: float = 1e-12):
        self.evaluator = evaluator
        self.dim = dim
        if check:
            self.check_homogeneity(seed=seed, rtol=rtol)

    def __call__(self, a) -> float:
        return float(self.evaluator(np.asarray(a, dtype=float)))

    def check_homogeneity(self, seed: int = 0, rtol: float = 1e-12, trials: int = 16) -> None:
        rng = np.random.default_rng(seed)
        for _ in range(trials):
            a = rng.integers(-9, 10, size=self.dim).astype(float)
            if not a.any():
                continue
            lam = float(rng.choice([1 / 3, 0.5, 2.0, 3.5, 10.0]))
            lhs = self(lam * a)
            rhs = lam * self(a)
            if abs(lhs - rhs) > rtol * max(1.0, abs(rhs)):
                raise HomogeneityError(
                    f"oracle(l*a) != l*oracle(a) at a={a.tolist()}, l={lam}: {lhs} vs {rhs}")


def euclidean_oracle(dim: int) -> ConicalOracle:
    return ConicalOracle(lambda a: float(np.sqrt(np.dot(a, a))), dim)


def lp_oracle(dim: int, p: float) -> ConicalOracle:
    return ConicalOracle(lambda a: float(np.sum(np.abs(a) ** p) ** (1.0 / p)), dim)


def quadratic_oracle(matrix) -> ConicalOracle:
    """sqrt(a^T Q a) for a positive definite Q."""
    q = np.asarray(matrix, dtype=float)
    return ConicalOracle(lambda a: float(np.sqrt(a @ q @ a)), q.shape[0])


def pl_oracle(f: PLConical) -> ConicalOracle:
    return ConicalOracle(lambda a: float(f.eval([Fraction(float(x)) for x in a])), f.dim)


def l1_normalized(r: Sequence) -> tuple[Fraction, ...]:
    s = sum(abs(Fraction(x)) for x in r)
    return tuple(Fraction(x) / s for x in r)


def barycentric_subdivision(fan: Fan) -> Fan:
    """One barycentric subdivision; barycenters taken on the L1 cross-section."""
    if not fan.is_simplicial:
        raise ValueError("barycentric subdivision needs a simplicial fan")
    cones = []
    cache: dict[frozenset, tuple[int, ...]] = {}

    def bary(face: frozenset) -> tuple[int, ...]:
        if face not in cache:
            pts = [l1_normalized(fan.rays[j]) for j in face]
            cache[face] = la.primitive([sum(col) for col in zip(*pts)])
        return cache[face]

    for c in fan.cones:
        for perm in permutations(c):
            cones.append([bary(frozenset(perm[:k])) for k in range(1, len(perm) + 1)])
    out = Fan.from_cones(fan.dim, cones)
    return Fan(out.dim, out.rays, out.cones, fan.complete)


@dataclass(frozen=True)
class ApproximationReport:
    depth: int
    deviation_estimate: float
    samples: int

    def to_json(self) -> dict:
        return {"depth": self.depth, "deviation_estimate": self.deviation_estimate,
                "samples": self.samples}


def cross_section_samples(dim: int, n: int, seed: int = 0) -> np.ndarray:
    """Points on the L1 unit sphere: a uniform perimeter grid in dimension <= 2."""
    if dim == 1:
        return np.array([[1.0], [-1.0]])
    if dim == 2:
        t = np.arange(n) * (4.0 / n)
        side = np.floor(t).astype(int)
        s = t - side
        corners = np.array([[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0], [1.0, 0.0]])
        return corners[side] * (1 - s)[:, None] + corners[side + 1] * s[:, None]
    rng = np.random.default_rng(seed)
    pts = rng.standard_normal((n, dim))
    return pts / np.abs(pts).sum(axis=1)[:, None]


def interpolate(oracle: ConicalOracle, fan: Fan, depth: int = 0) -> PLConical:
    bound = 2 ** (32 + depth)
    vals = [Fraction(oracle(np.array(r, dtype=float))).limit_denominator(bound) for r in fan.rays]
    return PLConical(fan, vals)


def measure_deviation(f: PLConical, oracle: ConicalOracle, samples: np.ndarray) -> float:
    approx = f.predict(samples)
    exact = np.array([oracle(p) for p in samples])
    return float(np.max(np.abs(approx - exact)))


def approximate(oracle: ConicalOracle, reference: Fan, depth: int, n_samples: int = 10_000,
                seed: int = 0) -> tuple[PLConical, ApproximationReport]:
    """PL interpolant of ``oracle`` on the ``depth``-fold barycentric subdivision."""
    if depth < 0:
        raise ValueError("depth must be nonnegative")
    if not (reference.is_simplicial and is_complete(reference)):
        raise ValueError("reference fan must be complete and simplicial")
    if oracle.dim != reference.dim:
        raise DimensionError("oracle and fan dimensions disagree")
    fan = reference
    for _ in range(depth):
        fan = barycentric_subdivision(fan)
    f = interpolate(oracle, fan, depth)
    pts = cross_section_samples(reference.dim, n_samples, seed)
    report = ApproximationReport(depth, measure_deviation(f, oracle, pts), len(pts))
    return f, report


class ConicalApproximator(BaseEstimator):
    """Estimator wrapper: ``fit`` an oracle, ``predict`` at directions.

    Parameters
    ----------
    reference : Fan
        Complete simplicial fan to subdivide.
    depth : int
        Number of barycentric subdivision rounds.
    n_samples : int
        Cross-section sample count for the deviation estimate.
    random_state : int
        Seed for cross-section sampling in dimension >= 3.
    """

    def __init__(self, reference=None, depth=0, n_samples=10_000, random_state=0):
        self.reference = reference
        self.depth = depth
        self.n_samples = n_samples
        self.random_state = random_state

    def fit(self, X, y=None):
        oracle = X if isinstance(X, ConicalOracle) else ConicalOracle(X, self.reference.dim)
        self.function_, self.report_ = approximate(
            oracle, self.reference, self.depth, self.n_samples, self.random_state)
        self.deviation_ = self.report_.deviation_estimate
        self.n_features_in_ = self.reference.dim
        return self

    def predict(self, X):
        check_is_fitted(self, "function_")
        X = check_array(X, ensure_2d=True)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"expected {self.n_features_in_} features, got {X.shape[1]}")
        return self.function_.predict(X)
