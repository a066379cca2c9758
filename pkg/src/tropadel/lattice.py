"""Exact rational cones and fans in N_R = Q^n (x) R.

Rays are stored as primitive integer tuples; every other coordinate is a
``Fraction``. Nothing in this module touches floating point except the
candidate prefilter in :func:`common_refinement`, whose hits are always
re-decided exactly.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from itertools import combinations
from typing import Iterable, Sequence

import numpy as np

from . import _linalg as la
from ._validation import DimensionError, as_fraction, as_vector, check_same_dim


class SupportMismatchError(ValueError):
    """Two fans with different supports were combined."""


def pair(m: Sequence, a: Sequence) -> Fraction:
    """The pairing M x N -> Q under the fixed dual bases."""
    check_same_dim(m, a)
    return la.dot(as_vector(m), as_vector(a))


@dataclass(frozen=True)
class RationalCone:
    """Cone generated by primitive integer rays (normalized on construction)."""

    rays: tuple[tuple[int, ...], ...]

    def __init__(self, rays: Iterable[Sequence], dim: int | None = None):
        prim = []
        for r in rays:
            p = la.primitive(r)
            if p not in prim:
                prim.append(p)
        if dim is None:
            if not prim:
                raise ValueError("dimension required for the zero cone")
            dim = len(prim[0])
        for p in prim:
            if len(p) != dim:
                raise DimensionError("ray dimensions disagree")
        object.__setattr__(self, "rays", tuple(prim))
        object.__setattr__(self, "_dim", dim)

    @property
    def dim(self) -> int:
        """Ambient dimension."""
        return self._dim

    @cached_property
    def rank(self) -> int:
        return la.rank(self.rays)

    @property
    def is_simplicial(self) -> bool:
        return self.rank == len(self.rays)

    @cached_property
    def equalities(self) -> la.Matrix:
        """Basis of the orthogonal complement of the linear span."""
        if not self.rays:
            return [[Fraction(int(i == j)) for j in range(self.dim)] for i in range(self.dim)]
        return la.nullspace(self.rays)

    @cached_property
    def _facet_data(self) -> tuple[tuple[tuple[Fraction, ...], frozenset[int]], ...]:
        k = self.rank
        if k == 0:
            return ()
        eqs = self.equalities
        out: dict[frozenset[int], tuple[Fraction, ...]] = {}
        for subset in combinations(range(len(self.rays)), k - 1):
            sub = [self.rays[i] for i in subset]
            if la.rank(sub) != k - 1:
                continue
            ns = la.nullspace(sub + eqs, self.dim)
            if len(ns) != 1:
                continue
            u = ns[0]
            vals = [la.dot(u, r) for r in self.rays]
            if all(v >= 0 for v in vals):
                pass
            elif all(v <= 0 for v in vals):
                u = [-x for x in u]
                vals = [-v for v in vals]
            else:
                continue
            face = frozenset(i for i, v in enumerate(vals) if v == 0)
            if face not in out:
                out[face] = tuple(u)
        return tuple((u, f) for f, u in out.items())

    def facets(self) -> list[frozenset[int]]:
        """Facets as sets of positions into ``self.rays``."""
        return [f for _, f in self._facet_data]

    def inequalities(self) -> list[tuple[Fraction, ...]]:
        """Inward facet normals u (within the span) with <u, x> >= 0 on the cone."""
        return [u for u, _ in self._facet_data]

    def faces(self) -> list[frozenset[int]]:
        """All nonzero faces (including the cone itself), as ray-position sets."""
        full = frozenset(range(len(self.rays)))
        found = {full}
        frontier = [full]
        facets = self.facets()
        while frontier:
            nxt = []
            for f in frontier:
                for g in facets:
                    h = f & g
                    if h != f and h and h not in found:
                        # a proper face of a face is cut out by the facets containing it
                        found.add(h)
                        nxt.append(h)
            frontier = nxt
        return sorted(found, key=lambda s: (len(s), sorted(s)))

    @cached_property
    def barycentric(self) -> la.Matrix | None:
        """Inverse of the ray matrix (columns = rays) for full-dimensional simplicial cones."""
        if len(self.rays) != self.dim or not self.is_simplicial:
            return None
        return la.inverse(la.transpose(self.rays))

    def contains(self, a: Sequence) -> bool:
        a = as_vector(a)
        if len(a) != self.dim:
            raise DimensionError("point and cone dimensions disagree")
        if all(x == 0 for x in a):
            return True
        if not self.rays:
            return False
        bary = self.barycentric
        if bary is not None:
            return all(la.dot(row, a) >= 0 for row in bary)
        if self.is_simplicial:
            lam = la.solve(la.transpose(self.rays), a)
            return lam is not None and all(x >= 0 for x in lam)
        for e in self.equalities:
            if la.dot(e, a) != 0:
                return False
        return all(la.dot(u, a) >= 0 for u in self.inequalities())

    def intersection(self, other: "RationalCone") -> "RationalCone":
        """Exact intersection; extreme rays found by active-set enumeration."""
        if other.dim != self.dim:
            raise DimensionError("cone dimensions disagree")
        n = self.dim
        eqs = list(self.equalities) + list(other.equalities)
        ineqs = list(self.inequalities()) + list(other.inequalities())
        r_eq = la.rank(eqs) if eqs else 0
        need = n - 1 - r_eq
        if need < 0:
            return RationalCone([], dim=n)
        found = []
        for subset in combinations(range(len(ineqs)), need):
            rows = eqs + [ineqs[i] for i in subset]
            ns = la.nullspace(rows, n) if rows else la.nullspace([], n)
            if len(ns) != 1:
                continue
            d = ns[0]
            for cand in (d, [-x for x in d]):
                if all(la.dot(u, cand) >= 0 for u in ineqs):
                    p = la.primitive(cand)
                    if p not in found:
                        found.append(p)
        found.sort()
        return RationalCone(found, dim=n)


def cone_contains(c: RationalCone, a: Sequence) -> bool:
    return c.contains(a)


@dataclass(frozen=True)
class Fan:
    """A fan given by primitive rays and maximal cones (sorted ray-index tuples).

    ``complete`` is the declared flag from interchange files; use
    :func:`is_complete` for the certified answer.
    """

    dim: int
    rays: tuple[tuple[int, ...], ...]
    cones: tuple[tuple[int, ...], ...]
    complete: bool | None = field(default=None, compare=False)

    def __post_init__(self):
        rays = tuple(tuple(int(x) for x in r) for r in self.rays)
        for r in rays:
            if len(r) != self.dim:
                raise DimensionError("ray dimension disagrees with fan dimension")
            if la.primitive(r) != r:
                raise ValueError(f"ray {r} is not primitive")
        if len(set(rays)) != len(rays):
            raise ValueError("duplicate rays")
        cones = tuple(tuple(sorted(set(int(i) for i in c))) for c in self.cones)
        for c in cones:
            for i in c:
                if not 0 <= i < len(rays):
                    raise ValueError(f"ray index {i} out of range")
        object.__setattr__(self, "rays", rays)
        object.__setattr__(self, "cones", cones)

    @classmethod
    def from_cones(cls, dim: int, cones: Iterable[Iterable[Sequence]], complete=None) -> "Fan":
        """Build a fan from cones given by ray vectors (normalized, re-indexed)."""
        rays: list[tuple[int, ...]] = []
        index: dict[tuple[int, ...], int] = {}
        out = []
        for c in cones:
            idx = []
            for r in c:
                p = la.primitive(r)
                if p not in index:
                    index[p] = len(rays)
                    rays.append(p)
                idx.append(index[p])
            out.append(tuple(sorted(set(idx))))
        # drop duplicated cones, keep first-seen order
        seen = set()
        uniq = []
        for c in out:
            if c not in seen:
                seen.add(c)
                uniq.append(c)
        return cls(dim, tuple(rays), tuple(uniq), complete)

    def cone(self, i: int) -> RationalCone:
        return self._cones[i]

    @cached_property
    def _cones(self) -> tuple[RationalCone, ...]:
        return tuple(RationalCone([self.rays[j] for j in c], dim=self.dim) for c in self.cones)

    @property
    def is_simplicial(self) -> bool:
        return all(c.is_simplicial for c in self._cones)

    @cached_property
    def is_pure_full_dimensional(self) -> bool:
        return all(c.rank == self.dim for c in self._cones)

    @cached_property
    def float_barycentric(self) -> np.ndarray | None:
        """Stacked float barycentric matrices, for prefiltering point location."""
        if not self.is_pure_full_dimensional or not self.is_simplicial:
            return None
        return np.array([[[float(x) for x in row] for row in c.barycentric] for c in self._cones])

    def canonical(self) -> frozenset:
        """Re-indexing invariant description, for equality up to relabeling."""
        return frozenset(frozenset(self.rays[i] for i in c) for c in self.cones)

    def same_as(self, other: "Fan") -> bool:
        return self.dim == other.dim and self.canonical() == other.canonical()

    @cached_property
    def _caps(self) -> tuple[np.ndarray, np.ndarray]:
        """Spherical caps (unit center, angular radius) bounding each cone."""
        centers = np.zeros((len(self.cones), self.dim))
        radii = np.zeros(len(self.cones))
        for k, c in enumerate(self.cones):
            if not c:
                radii[k] = np.pi
                continue
            units = np.array([self.rays[j] for j in c], dtype=float)
            units /= np.linalg.norm(units, axis=1)[:, None]
            s = units.sum(axis=0)
            ns = np.linalg.norm(s)
            if ns < 1e-12:
                radii[k] = np.pi
                continue
            s /= ns
            ang = np.arccos(np.clip(units @ s, -1.0, 1.0)).max()
            centers[k] = s
            radii[k] = ang if ang < np.pi / 2 - 1e-9 else np.pi
        return centers, radii

    def candidate_cones(self, points: np.ndarray) -> list[np.ndarray]:
        """Indices of cones whose bounding cap may contain each float point."""
        centers, radii = self._caps
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        norms = np.linalg.norm(pts, axis=1)
        norms[norms == 0] = 1.0
        units = pts / norms[:, None]
        ang = np.arccos(np.clip(units @ centers.T, -1.0, 1.0))
        hits = ang <= radii[None, :] + 1e-7
        out = []
        for i in range(len(pts)):
            order = np.nonzero(hits[i])[0]
            out.append(order)
        return out

    def locate(self, a: Sequence) -> int | None:
        """Index of the first maximal cone containing ``a`` (exact), or None."""
        a = as_vector(a)
        if len(a) != self.dim:
            raise DimensionError("point and fan dimensions disagree")
        if all(x == 0 for x in a):
            return 0 if self.cones else None
        cand = self.candidate_cones(np.array([float(x) for x in a]))[0]
        for k in cand:
            if self._cones[k].contains(a):
                return int(k)
        return None

    def in_support(self, a: Sequence) -> bool:
        return self.locate(a) is not None

    def adjacent_pairs(self) -> list[tuple[int, int, frozenset[int]]]:
        """Pairs of maximal cones sharing a facet, with the shared ray-index set."""
        by_facet: dict[frozenset[int], list[int]] = {}
        for k, c in enumerate(self.cones):
            cone = self._cones[k]
            for f in cone.facets():
                key = frozenset(c[i] for i in f)
                by_facet.setdefault(key, []).append(k)
        out = []
        for key, ks in by_facet.items():
            for i, j in combinations(ks, 2):
                out.append((i, j, key))
        return out

    def validate(self) -> list[str]:
        """Problems found; an empty list means a valid fan."""
        problems = []
        for k, c in enumerate(self._cones):
            if not _is_pointed(c):
                problems.append(f"cone {k} is not strictly convex")
            elif set(c.intersection(c).rays) != set(c.rays):
                problems.append(f"cone {k} has redundant generators")
        if problems:
            return problems
        centers, radii = self._caps
        for i, j in combinations(range(len(self.cones)), 2):
            ang = np.arccos(np.clip(centers[i] @ centers[j], -1.0, 1.0))
            if ang > radii[i] + radii[j] + 1e-7:
                continue
            ci, cj = self._cones[i], self._cones[j]
            inter = set(ci.intersection(cj).rays)
            common = set(self.rays[x] for x in set(self.cones[i]) & set(self.cones[j]))
            if inter != common:
                problems.append(f"cones {i} and {j} do not meet in a common face")
                continue
            for k, c in ((i, ci), (j, cj)):
                pos = frozenset(c.rays.index(r) for r in common)
                if pos and pos not in c.faces():
                    problems.append(f"shared rays of cones {i},{j} are not a face of cone {k}")
        return problems

    def refines(self, other: "Fan") -> bool:
        """True iff every maximal cone lies inside some maximal cone of ``other``."""
        for c in self.cones:
            cands = None
            for j in c:
                hits = {k for k in other.candidate_cones(np.array(self.rays[j], dtype=float))[0]
                        if other._cones[k].contains(self.rays[j])}
                cands = hits if cands is None else cands & hits
                if not cands:
                    return False
            if cands is not None and not cands:
                return False
        return True


def _is_pointed(c: RationalCone) -> bool:
    if not c.rays:
        return True
    # pointed iff no nonzero nonnegative combination of the rays vanishes;
    # equivalently the extreme rays of the cone reproduce a basis of its span
    ext = c.intersection(c).rays
    if any(tuple(-x for x in r) in ext for r in ext):
        return False
    return bool(ext) and la.rank(ext) == c.rank


def is_complete(fan: Fan) -> bool:
    """Exact completeness: full-dimensional cones whose facets are each shared twice."""
    if fan.dim < 1 or not fan.cones or not fan.is_pure_full_dimensional:
        return False
    counts: dict[frozenset[int], int] = {}
    for k, c in enumerate(fan.cones):
        for f in fan.cone(k).facets():
            key = frozenset(c[i] for i in f)
            counts[key] = counts.get(key, 0) + 1
    return all(v == 2 for v in counts.values())


def _check_same_support(f1: Fan, f2: Fan) -> None:
    if f1.dim != f2.dim:
        raise DimensionError("fans live in different dimensions")
    if is_complete(f1) and is_complete(f2):
        return
    for a, b in ((f1, f2), (f2, f1)):
        for r in a.rays:
            if not b.in_support(r):
                raise SupportMismatchError(f"ray {r} is outside the other fan's support")


def common_refinement(f1: Fan, f2: Fan) -> Fan:
    """Fan of all nonempty pairwise intersections of maximal cones."""
    _check_same_support(f1, f2)
    if f1.refines(f2):
        return f1
    if f2.refines(f1):
        return f2
    c1, r1 = f1._caps
    c2, r2 = f2._caps
    pieces: list[tuple[tuple[int, ...], ...]] = []
    chunk = 512
    for start in range(0, len(f1.cones), chunk):
        ang = np.arccos(np.clip(c1[start:start + chunk] @ c2.T, -1.0, 1.0))
        hits = ang <= r1[start:start + chunk, None] + r2[None, :] + 1e-7
        for di, j in zip(*np.nonzero(hits)):
            inter = f1.cone(start + int(di)).intersection(f2.cone(int(j)))
            if inter.rays:
                pieces.append(inter.rays)
    return _maximal_fan(f1.dim, pieces)


def _maximal_fan(dim: int, pieces: list[tuple[tuple[int, ...], ...]]) -> Fan:
    sets = []
    seen = set()
    for p in pieces:
        s = frozenset(p)
        if s not in seen:
            seen.add(s)
            sets.append(s)
    by_ray: dict[tuple[int, ...], list[int]] = {}
    for k, s in enumerate(sets):
        for r in s:
            by_ray.setdefault(r, []).append(k)
    keep = []
    for k, s in enumerate(sets):
        first = next(iter(s))
        if any(j != k and len(sets[j]) > len(s) and s < sets[j] for j in by_ray[first]):
            continue
        keep.append(k)
    ordered = [sorted(sets[k]) for k in keep]
    fan = Fan.from_cones(dim, ordered)
    return fan


def simplicialize(fan: Fan) -> Fan:
    """Stellar subdivision at barycenters of non-simplicial faces, lowest dimension first."""
    if fan.is_simplicial:
        return fan
    cones = [[fan.rays[i] for i in c] for c in fan.cones]
    for k in range(2, fan.dim + 1):
        targets: list[frozenset] = []
        for c in cones:
            cone = RationalCone(c, dim=fan.dim)
            for face in cone.faces():
                rays = frozenset(cone.rays[i] for i in face)
                if len(face) > k and la.rank(list(rays)) == k and rays not in targets:
                    targets.append(rays)
        for tau in targets:
            b = la.primitive([sum(col) for col in zip(*tau)])
            new_cones = []
            for c in cones:
                if not tau <= set(c):
                    new_cones.append(c)
                    continue
                cone = RationalCone(c, dim=fan.dim)
                for f in cone.facets():
                    frays = [cone.rays[i] for i in f]
                    if tau <= set(frays):
                        continue
                    new_cones.append(frays + [b])
            cones = new_cones
    out = Fan.from_cones(fan.dim, cones)
    return Fan(out.dim, out.rays, out.cones, fan.complete)


# Standard fans used throughout the tests and the CLI.

def projective_space(n: int) -> Fan:
    """Fan of P^n: rays e_1..e_n, -(e_1+...+e_n)."""
    rays = [tuple(int(i == j) for j in range(n)) for i in range(n)]
    rays.append(tuple(-1 for _ in range(n)))
    cones = [tuple(j for j in range(n + 1) if j != i) for i in range(n + 1)]
    return Fan(n, tuple(rays), tuple(cones), True)


def product_of_lines(n: int) -> Fan:
    """Fan of (P^1)^n: rays +-e_i, cones are the orthants."""
    rays = []
    for i in range(n):
        for s in (1, -1):
            rays.append(tuple(s * int(i == j) for j in range(n)))
    cones = []
    for signs in range(2 ** n):
        cones.append(tuple(2 * i + ((signs >> i) & 1) for i in range(n)))
    return Fan(n, tuple(rays), tuple(cones), True)


def affine_space(n: int) -> Fan:
    """Fan of A^n: the positive orthant."""
    rays = tuple(tuple(int(i == j) for j in range(n)) for i in range(n))
    return Fan(n, rays, (tuple(range(n)),), False)
