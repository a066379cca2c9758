"""Polytopes of toric divisors, mixed volumes and intersection numbers.

A nef divisor D on a complete fan has polytope P_D = {m : <m, v_rho> >= -a_rho}
and SF_D(a) = max over m in P_D of -<m, a>. Top intersection numbers are
n! times mixed volumes of these polytopes.

Everything is exact over the rationals. In dimension 3 and up, qhull proposes
hull facets and each one is confirmed exactly; if any check fails the hull is
recomputed by exhaustive enumeration. Meant for ambient dimension at most 3.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Sequence

import numpy as np

from . import _linalg as la
from ._validation import DimensionError, as_fraction, as_vector
from .adelic import AdelicToricDivisor, BoundaryDatum, MAX_DEPTH, ToleranceError
from .conical import PLConical
from .divisors import ToricBoundaryDivisor, supporting_function
from .lattice import Fan, common_refinement, is_complete, pair

Point = tuple[Fraction, ...]


class NefError(ValueError):
    """A divisor failed the nef certificate; ``ray`` names the offending ray index."""

    def __init__(self, message: str, ray: int | None = None, cone: int | None = None):
        super().__init__(message)
        self.ray = ray
        self.cone = cone


# ---------------------------------------------------------------- hulls

def _affine_frame(points: list[Point]):
    """Base point, pivot coordinates and dimension of the affine hull."""
    base = points[0]
    dirs = [[p[i] - base[i] for i in range(len(base))] for p in points[1:]]
    if not dirs:
        return base, [], 0
    # pivot columns are coordinates on which the projection stays injective
    _, coord_pivots = la.rref(dirs)
    return base, list(coord_pivots), len(coord_pivots)


def _project(points: list[Point], coords: list[int]) -> list[Point]:
    return [tuple(p[i] for i in coords) for p in points]


def _cross(o, a, b) -> Fraction:
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(points: list[Point]) -> list[int]:
    """Indices of the strict vertices in counter-clockwise order."""
    order = sorted(set(range(len(points))), key=lambda i: points[i])
    uniq = []
    for i in order:
        if not uniq or points[uniq[-1]] != points[i]:
            uniq.append(i)
    if len(uniq) <= 2:
        return uniq

    def chain(seq):
        out = []
        for i in seq:
            while len(out) >= 2 and _cross(points[out[-2]], points[out[-1]], points[i]) <= 0:
                out.pop()
            out.append(i)
        return out

    lower = chain(uniq)
    upper = chain(reversed(uniq))
    return lower[:-1] + upper[:-1]


def _facet_from(points, combo, k):
    """Exact supporting hyperplane through ``combo`` oriented outward, or None."""
    p0 = points[combo[0]]
    rows = [[points[c][i] - p0[i] for i in range(k)] for c in combo[1:]]
    ns = la.nullspace(rows, k)
    if len(ns) != 1:
        return None
    normal = tuple(ns[0])
    off = la.dot(normal, p0)
    return normal, off


def _facets_brute(points, k):
    found: dict[frozenset[int], tuple] = {}
    for combo in itertools.combinations(range(len(points)), k):
        plane = _facet_from(points, combo, k)
        if plane is None:
            continue
        normal, off = plane
        vals = [la.dot(normal, p) - off for p in points]
        if all(v <= 0 for v in vals):
            pass
        elif all(v >= 0 for v in vals):
            normal = tuple(-x for x in normal)
            off = -off
        else:
            continue
        on = frozenset(i for i, v in enumerate(vals) if v == 0)
        if on not in found:
            found[on] = (normal, off, on)
    return list(found.values())


def _facets_qhull(points, k):
    """Facets proposed by qhull, each confirmed exactly; None if any check fails."""
    from scipy.spatial import ConvexHull
    arr = np.array([[float(x) for x in p] for p in points])
    try:
        hull = ConvexHull(arr)
    except Exception:
        return None
    scale = max(1.0, float(np.abs(arr).max()))
    centroid = arr.mean(axis=0)
    found: dict[frozenset[int], tuple] = {}
    for simplex in hull.simplices:
        plane = _facet_from(points, [int(i) for i in simplex], k)
        if plane is None:
            return None
        normal, off = plane
        fn = np.array([float(x) for x in normal])
        if fn @ centroid > float(off):
            normal, off, fn = tuple(-x for x in normal), -off, -fn
        dist = arr @ fn - float(off)
        tol = 1e-9 * scale * max(1.0, float(np.abs(fn).max()))
        close = np.flatnonzero(dist > -tol)
        on = []
        for i in close:
            v = la.dot(normal, points[i]) - off
            if v > 0:
                return None
            if v == 0:
                on.append(int(i))
        key = frozenset(on)
        if key not in found:
            found[key] = (normal, off, key)
    return list(found.values())


def _facets(points: list[Point]) -> list[tuple[tuple[Fraction, ...], Fraction, frozenset[int]]]:
    """Facets (normal, offset, incident point indices) of a full-dimensional point set.

    Inequalities read <normal, x> <= offset.
    """
    k = len(points[0])
    if len(points) > k + 4:
        out = _facets_qhull(points, k)
        if out is not None:
            return out
    return _facets_brute(points, k)


def _vertex_indices(points: list[Point]) -> list[int]:
    """Indices of extreme points (one index per distinct point)."""
    uniq: dict[Point, int] = {}
    for i, p in enumerate(points):
        uniq.setdefault(p, i)
    idx = list(uniq.values())
    pts = [points[i] for i in idx]
    if len(pts) == 1:
        return idx
    base, coords, k = _affine_frame(pts)
    proj = _project(pts, coords)
    if k == 1:
        lo = min(range(len(proj)), key=lambda i: proj[i])
        hi = max(range(len(proj)), key=lambda i: proj[i])
        return [idx[lo], idx[hi]]
    if k == 2:
        return [idx[i] for i in _hull_2d(proj)]
    facets = _facets(proj)
    verts = []
    for j in range(len(proj)):
        normals = [f[0] for f in facets if j in f[2]]
        if normals and la.rank(normals) >= k:
            verts.append(idx[j])
    return verts


# ------------------------------------------------------------ polytopes

@dataclass(frozen=True)
class RationalPolytope:
    """Convex hull of finitely many rational points; stored irredundantly."""

    vertices: tuple[Point, ...]
    ambient_dim: int

    @classmethod
    def from_points(cls, points: Sequence[Sequence], dim: int | None = None) -> "RationalPolytope":
        pts = [as_vector(p) for p in points]
        if not pts:
            if dim is None:
                raise ValueError("empty polytope needs an explicit dimension")
            return cls((), dim)
        d = len(pts[0])
        if any(len(p) != d for p in pts):
            raise DimensionError("points of different dimensions")
        if dim is not None and dim != d:
            raise DimensionError(f"points have dimension {d}, expected {dim}")
        keep = _vertex_indices(pts)
        return cls(tuple(sorted(pts[i] for i in keep)), d)

    @property
    def is_empty(self) -> bool:
        return not self.vertices

    @property
    def dim(self) -> int:
        """Dimension of the affine hull (-1 when empty)."""
        if not self.vertices:
            return -1
        return _affine_frame(list(self.vertices))[2]

    def __add__(self, other: "RationalPolytope") -> "RationalPolytope":
        if self.ambient_dim != other.ambient_dim:
            raise DimensionError("Minkowski sum of polytopes in different dimensions")
        if self.is_empty or other.is_empty:
            return RationalPolytope((), self.ambient_dim)
        pts = [tuple(a + b for a, b in zip(p, q)) for p in self.vertices for q in other.vertices]
        return RationalPolytope.from_points(pts, self.ambient_dim)

    def scale(self, c) -> "RationalPolytope":
        c = as_fraction(c)
        if c < 0:
            raise ValueError("only nonnegative dilations")
        return RationalPolytope.from_points([tuple(c * x for x in v) for v in self.vertices],
                                            self.ambient_dim) if self.vertices else self

    def support(self, a: Sequence) -> Fraction:
        """max over P of -<m, a>; the supporting function a nef divisor reproduces."""
        return max(-pair(m, a) for m in self.vertices)


def unit_cube(n: int) -> RationalPolytope:
    return RationalPolytope.from_points(list(itertools.product((0, 1), repeat=n)), n)


def standard_simplex(n: int) -> RationalPolytope:
    pts = [tuple([0] * n)] + [tuple(int(i == j) for j in range(n)) for i in range(n)]
    return RationalPolytope.from_points(pts, n)


def _half_space_vertices(rays, coeffs, n) -> list[Point]:
    """Brute force: every n-subset of tight constraints, kept if feasible."""
    out = []
    seen = set()
    for combo in itertools.combinations(range(len(rays)), n):
        a = [list(map(Fraction, rays[i])) for i in combo]
        if la.rank(a) < n:
            continue
        m = la.solve(a, [-coeffs[i] for i in combo])
        if m is None:
            continue
        m = tuple(m)
        if m in seen:
            continue
        if all(pair(m, r) >= -c for r, c in zip(rays, coeffs)):
            seen.add(m)
            out.append(m)
    return out


def _cone_vertices(d: ToricBoundaryDivisor) -> list[Point]:
    """m_sigma = -linear part of SF_D on each maximal cone."""
    f = supporting_function(d)
    return [tuple(-x for x in f.linear_part(k)) for k in range(len(d.fan.cones))]


def polytope_of(d: ToricBoundaryDivisor) -> RationalPolytope:
    fan = d.fan
    if not is_complete(fan):
        raise ValueError("polytope_of needs a complete fan")
    n = fan.dim
    if fan.is_simplicial and _wall_violation(d) is None:
        pts = _cone_vertices(d)
    else:
        pts = _half_space_vertices(fan.rays, d.coeffs, n)
    if not pts:
        return RationalPolytope((), n)
    return RationalPolytope.from_points(pts, n)


# --------------------------------------------------------------- volumes

def _simplices(points: list[Point]) -> list[list[Point]]:
    """Triangulate a full-dimensional point configuration (in its own coordinates)."""
    k = len(points[0])
    if k == 1:
        return [[min(points), max(points)]]
    if k == 2:
        hull = [points[i] for i in _hull_2d(points)]
        return [[hull[0], hull[i], hull[i + 1]] for i in range(1, len(hull) - 1)]
    verts = [points[i] for i in _vertex_indices(points)]
    v0 = verts[0]
    out = []
    for normal, off, on in _facets(verts):
        if 0 in on:
            continue
        face = [verts[i] for i in sorted(on)]
        _, coords, fk = _affine_frame(face)
        proj = _project(face, coords)
        lift = dict(zip(proj, face))
        for s in _simplices(proj):
            out.append([v0] + [lift[q] for q in s])
    return out


def volume(p: RationalPolytope) -> Fraction:
    if p.is_empty or p.dim < p.ambient_dim:
        return Fraction(0)
    n = p.ambient_dim
    pts = list(p.vertices)
    if n == 1:
        return max(pts)[0] - min(pts)[0]
    total = Fraction(0)
    for s in _simplices(pts):
        rows = [[s[i][j] - s[0][j] for j in range(n)] for i in range(1, n + 1)]
        total += abs(la.det(rows))
    return total / math.factorial(n)


def minkowski_sum(ps: Sequence[RationalPolytope]) -> RationalPolytope:
    out = ps[0]
    for q in ps[1:]:
        out = out + q
    return out


def mixed_volume(ps: Sequence[RationalPolytope]) -> Fraction:
    """Normalized so that mixed_volume([P] * n) == volume(P)."""
    if not ps:
        raise ValueError("need at least one polytope")
    n = ps[0].ambient_dim
    if any(p.ambient_dim != n for p in ps):
        raise DimensionError("polytopes live in different dimensions")
    if len(ps) != n:
        raise DimensionError(f"need exactly {n} polytopes in dimension {n}, got {len(ps)}")
    if any(p.is_empty for p in ps):
        raise ValueError("mixed volume of an empty polytope is undefined")
    if any(p.dim == 0 for p in ps):
        return Fraction(0)
    total = Fraction(0)
    for r in range(1, n + 1):
        for subset in itertools.combinations(range(n), r):
            total += (-1) ** (n - r) * volume(minkowski_sum([ps[i] for i in subset]))
    return total / math.factorial(n)


# ------------------------------------------------------- nef divisors

def _wall_violation(d: ToricBoundaryDivisor):
    """First (cone, ray, bend) with negative bend across a wall, or None.

    The bend across the wall between cones s and t is f(v) - l_s(v) at the ray
    v of t opposite the wall; SF_D is convex iff every bend is >= 0.
    """
    for s, t, bend, ray in _bends(supporting_function(d)):
        if bend < 0:
            return s, ray, bend
    return None


def _bends(f: PLConical):
    fan = f.fan
    for s, t, _common in fan.adjacent_pairs():
        for (a, b) in ((s, t), (t, s)):
            opp = [j for j in fan.cones[b] if j not in fan.cones[a]]
            if len(opp) != 1:
                continue
            j = opp[0]
            lin = f.linear_part(a)
            yield a, b, f.ray_values[j] - pair(lin, fan.rays[j]), j


class NefToricDivisor:
    """A boundary divisor with convex supporting function, certified on construction."""

    def __init__(self, base: ToricBoundaryDivisor):
        fan = base.fan
        if not fan.is_simplicial:
            raise ValueError("nef certification needs a simplicial fan")
        bad = _wall_violation(base)
        if bad is not None:
            cone, ray, bend = bad
            raise NefError(f"supporting function bends the wrong way at ray {ray} "
                           f"(cone {cone}, bend {bend})", ray=ray, cone=cone)
        self.base = base
        self.polytope = RationalPolytope.from_points(_cone_vertices(base), fan.dim)
        ray = self._envelope_failure()
        if ray is not None:
            raise NefError(f"polytope does not reach ray {ray}", ray=ray)

    def _envelope_failure(self):
        rays = self.base.fan.rays
        verts = self.polytope.vertices
        # float scores pick the near-maximal vertices; only those are checked exactly
        scores = -np.array(rays, dtype=float) @ np.array(verts, dtype=float).T
        top = scores.max(axis=1, keepdims=True)
        near = scores >= top - 1e-9 * np.maximum(1.0, np.abs(top))
        for i, (r, c) in enumerate(zip(rays, self.base.coeffs)):
            best = max(-pair(verts[j], r) for j in np.flatnonzero(near[i]))
            if best != c:
                return i
        return None

    def upper_envelope_holds(self) -> bool:
        return self._envelope_failure() is None

    @property
    def fan(self) -> Fan:
        return self.base.fan

    def pullback(self, fan: Fan) -> "NefToricDivisor":
        f = supporting_function(self.base).on_fan(fan)
        return NefToricDivisor(ToricBoundaryDivisor(fan, f.ray_values))

    def __repr__(self):
        return f"NefToricDivisor({[str(c) for c in self.base.coeffs]})"


def _as_nef(d) -> NefToricDivisor:
    return d if isinstance(d, NefToricDivisor) else NefToricDivisor(d)


def _top_number(polys: Sequence[RationalPolytope]) -> Fraction:
    n = len(polys)
    return math.factorial(n) * mixed_volume(polys)


def intersection_number(ds: Sequence) -> Fraction:
    ds = [_as_nef(d) for d in ds]
    if not ds:
        raise ValueError("need at least one divisor")
    fan = ds[0].fan
    if any(not d.fan.same_as(fan) for d in ds[1:]):
        raise ValueError("divisors live on different fans; pull back to a common refinement")
    if len(ds) != fan.dim:
        raise DimensionError(f"need {fan.dim} divisors on a {fan.dim}-dimensional fan")
    return _top_number([d.polytope for d in ds])


# ------------------------------------------------- adelic pairing

def _shift_constant(f: PLConical, zf: PLConical) -> Fraction:
    """Least c >= 0 with f + c*SF_Z convex, found wall by wall."""
    bz = {(a, b): bend for a, b, bend, _ in _bends(zf)}
    c = Fraction(0)
    for a, b, bend, ray in _bends(f):
        if bend >= 0:
            continue
        zb = bz[(a, b)]
        if zb <= 0:
            raise NefError(f"no shift by Z makes the term convex at cone {a} (ray {ray}); "
                           "the boundary datum is flat there", ray=ray, cone=a)
        c = max(c, -bend / zb)
    return c


def _term_pairing(f: PLConical, z: BoundaryDatum, l_polys: list[RationalPolytope]) -> Fraction:
    zf = z.sf.on_fan(f.fan) if not z.fan.same_as(f.fan) else z.sf
    if _has_flat_or_concave_wall(zf):
        raise NefError("boundary datum is not nef on the refined fan")
    c = _shift_constant(f, zf)
    shifted = ToricBoundaryDivisor(f.fan, (f + zf * c).ray_values)
    p_plus = NefToricDivisor(shifted).polytope
    p_z = NefToricDivisor(ToricBoundaryDivisor(f.fan, zf.ray_values)).polytope
    value = _top_number([p_plus] + l_polys)
    if c:
        value -= c * _top_number([p_z] + l_polys)
    return value


def _has_flat_or_concave_wall(zf: PLConical) -> bool:
    return any(bend < 0 for *_, bend, _r in _bends(zf))


@dataclass(frozen=True)
class PairingReport:
    value: Fraction
    certified_error: Fraction
    depth_used: int

    def to_json(self) -> dict:
        from .serialize import dump_number
        return {"value": dump_number(self.value), "certified_error": dump_number(self.certified_error),
                "depth_used": self.depth_used}


def _check_ls(ls, dim: int) -> list[NefToricDivisor]:
    ls = [_as_nef(l) for l in ls]
    if len(ls) != dim - 1:
        raise DimensionError(f"need {dim - 1} nef divisors alongside E in dimension {dim}")
    return ls


def z_degree(z: BoundaryDatum, ls: Sequence) -> Fraction:
    """(Z . L_1 ... L_{n-1})."""
    ls = _check_ls(ls, z.fan.dim)
    zn = NefToricDivisor(z.divisor)
    return _top_number([zn.polytope] + [l.polytope for l in ls])


def pair_adelic(e: AdelicToricDivisor, ls: Sequence, z: BoundaryDatum | None = None,
                tol=Fraction(1, 100)) -> PairingReport:
    """(E . L_1 ... L_{n-1}) via the deepest term, with bound eps * (Z . L_1 ... L_{n-1})."""
    z = z or e.boundary
    tol = as_fraction(tol)
    if tol <= 0:
        raise ValueError("tolerance must be positive")
    ls = _check_ls(ls, z.fan.dim)
    l_polys = [l.polytope for l in ls]
    zdeg = z_degree(z, ls)
    if z is not e.boundary:
        # epsilons are stated for e.boundary; convert with the norm comparison factor
        from .conical import sup_ratio
        factor = sup_ratio(e.boundary.sf, z.sf)
    else:
        factor = Fraction(1)
    while e.epsilons[-1] * factor * zdeg > tol:
        if not e.is_lazy or e.depths[-1] >= MAX_DEPTH:
            raise ToleranceError(
                f"certified bound {float(e.epsilons[-1] * factor * zdeg):.3e} exceeds "
                f"tolerance {float(tol):.3e}")
        e.extend_to(e.depths[-1] + 1)
    value = _term_pairing(e.terms[-1], z, l_polys)
    return PairingReport(value, e.epsilons[-1] * factor * zdeg, e.depths[-1])


def term_pairings(e: AdelicToricDivisor, ls: Sequence, z: BoundaryDatum | None = None) -> list[Fraction]:
    """(E_i . L_1 ... L_{n-1}) for every materialized term."""
    z = z or e.boundary
    l_polys = [l.polytope for l in _check_ls(ls, z.fan.dim)]
    return [_term_pairing(f, z, l_polys) for f in e.terms]


def ma_integral(h: PLConical, ls: Sequence, z: BoundaryDatum) -> Fraction:
    """Integral of the boundary function h against MA(L_1, ..., L_{n-1}).

    Realized as (E . L_1 ... L_{n-1}) with E the model divisor h * Z; h must be
    PL on a fan refining the fan of Z.
    """
    if h.dim != z.fan.dim:
        raise DimensionError("boundary function and boundary datum differ in dimension")
    if not h.fan.refines(z.fan):
        raise ValueError("h * SF_Z is not PL: the fan of h does not refine the fan of Z")
    zf = z.sf.on_fan(h.fan) if not h.fan.same_as(z.fan) else z.sf
    e = PLConical(h.fan, [hv * zv for hv, zv in zip(h.ray_values, zf.ray_values)])
    ls = _check_ls(ls, z.fan.dim)
    return _term_pairing(e, z, [l.polytope for l in ls])
