from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from tropadel._validation import DimensionError
from tropadel.lattice import (Fan, RationalCone, SupportMismatchError, affine_space, common_refinement,
                              cone_contains, is_complete, pair, product_of_lines, projective_space,
                              simplicialize)
from oracles import pairwise_intersection_count

small = st.integers(-6, 6)
rat = st.fractions(min_value=-5, max_value=5, max_denominator=7)


@pytest.mark.parametrize("m, a, expected", [((1, 0), (0, 1), 0), ((2, 3), (1, 1), 5), ((1, -1), (1, 1), 0)])
def test_pair_examples(m, a, expected):
    assert pair(m, a) == expected


def test_pair_dimension_mismatch():
    with pytest.raises(DimensionError):
        pair((1, 2), (1, 2, 3))


@given(st.lists(rat, min_size=3, max_size=3), st.lists(rat, min_size=3, max_size=3),
       st.lists(rat, min_size=3, max_size=3), rat)
def test_pair_bilinear(m1, m2, a, c):
    s = [x + c * y for x, y in zip(m1, m2)]
    assert pair(s, a) == pair(m1, a) + c * pair(m2, a)
    assert pair(a, s) == pair(a, m1) + c * pair(a, m2)


def test_pair_rejects_floats():
    with pytest.raises(TypeError):
        pair((0.5, 1), (1, 1))


@pytest.mark.parametrize("a, expected", [((2, 3), True), ((-1, 0), False), ((0, 0), True)])
def test_cone_contains_quadrant(a, expected):
    assert cone_contains(RationalCone([(1, 0), (0, 1)]), a) is expected


def test_origin_in_every_cone():
    for rays in ([(1, 2, 0)], [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)]):
        assert cone_contains(RationalCone(rays), (0,) * 3)


@given(st.lists(st.integers(0, 9), min_size=4, max_size=4))
def test_non_simplicial_membership(coeffs):
    rays = [(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)]
    c = RationalCone(rays)
    p = tuple(sum(k * r[i] for k, r in zip(coeffs, rays)) for i in range(3))
    assert c.contains(p)
    if any(coeffs):
        assert not c.contains(tuple(-x for x in p))


def test_rays_are_made_primitive():
    assert RationalCone([(2, 4), (0, 3)]).rays == ((1, 2), (0, 1))


def test_fan_rejects_non_primitive_rays():
    with pytest.raises(ValueError):
        Fan(1, ((2,),), ((0,),))


def test_refinement_of_p2_with_rotated_p2_has_six_cones(p2):
    other = Fan.from_cones(2, [[(1, 1), (-1, 0)], [(-1, 0), (0, -1)], [(0, -1), (1, 1)]])
    r = common_refinement(p2, other)
    # brute-force count of full-dimensional pairwise overlaps
    expected = pairwise_intersection_count(
        [[p2.rays[i] for i in c] for c in p2.cones], [[other.rays[i] for i in c] for c in other.cones])
    assert expected == 6
    assert len(r.cones) == 6
    assert is_complete(r)
    assert r.refines(p2) and r.refines(other)


def test_refinement_idempotent_and_commutative(p1, p2):
    assert common_refinement(p2, p2).same_as(p2)
    assert common_refinement(p1, p1).rays == p1.rays
    q = product_of_lines(2)
    assert common_refinement(p2, q).same_as(common_refinement(q, p2))


def test_refinement_support_mismatch(p2, a2):
    with pytest.raises(SupportMismatchError):
        common_refinement(p2, a2)


def test_simplicialize_square_cone():
    square = Fan.from_cones(3, [[(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)]])
    s = simplicialize(square)
    assert s.is_simplicial
    assert len(s.cones) == 4
    assert (0, 0, 1) in s.rays
    assert all(s.rays.index((0, 0, 1)) in c for c in s.cones)


def test_simplicialize_support_preserved():
    square = Fan.from_cones(3, [[(1, 0, 1), (0, 1, 1), (-1, 0, 1), (0, -1, 1)]])
    s = simplicialize(square)
    rng = np.random.default_rng(0)
    for _ in range(1000):
        a = tuple(int(x) for x in rng.integers(-5, 6, size=3))
        assert s.in_support(a) == square.in_support(a)


def test_simplicialize_fixed_points(p2):
    assert simplicialize(p2) is p2
    assert simplicialize(product_of_lines(3)).same_as(product_of_lines(3))


@pytest.mark.parametrize("fan, expected", [
    (projective_space(2), True), (affine_space(2), False), (projective_space(1), True),
    (product_of_lines(3), True), (projective_space(3), True)])
def test_is_complete(fan, expected):
    assert is_complete(fan) is expected


def test_complete_fans_cover_random_directions():
    rng = np.random.default_rng(1)
    for fan in (projective_space(2), product_of_lines(3), projective_space(3)):
        for _ in range(200):
            a = tuple(int(x) for x in rng.integers(-9, 10, size=fan.dim))
            assert fan.in_support(a)


def test_validate_flags_overlapping_cones():
    bad = Fan(2, ((1, 0), (0, 1), (1, 1)), ((0, 1), (0, 2)))
    assert bad.validate()
    assert projective_space(2).validate() == []


def test_validate_flags_lines():
    bad = Fan(1, ((1,), (-1,)), ((0, 1),))
    assert bad.validate()
