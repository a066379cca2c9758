import math
import random
from fractions import Fraction

import numpy as np
import pytest

from tropadel.adelic import (AdelicToricDivisor, BoundaryDatum, ConvergenceError, ToleranceError, boundary_norm,
                             from_oracle, green_of_adelic, verify_cauchy)
from tropadel.berkovich import emb
from tropadel.conical import (ConicalOracle, HomogeneityError, PLConical, approximate, euclidean_oracle,
                              pl_oracle, sup_ratio)
from tropadel.divisors import ToricBoundaryDivisor
from tropadel.lattice import product_of_lines, projective_space


@pytest.fixture(scope="module")
def square():
    return product_of_lines(2)


@pytest.fixture(scope="module")
def z(square):
    return BoundaryDatum(ToricBoundaryDivisor(square, [1, 1, 1, 1]))


@pytest.fixture(scope="module")
def euclid(square, z):
    return from_oracle(euclidean_oracle(2), square, z, Fraction(1, 1000))


def test_boundary_datum_needs_positive_coefficients(p1):
    with pytest.raises(ValueError):
        BoundaryDatum(ToricBoundaryDivisor(p1, [1, 0]))


def test_boundary_norm_examples(p1):
    z = BoundaryDatum(ToricBoundaryDivisor(p1, [1, 1]))
    assert boundary_norm(z.sf, z) == 1
    assert boundary_norm(PLConical(p1, [0, 0]), z) == 0
    assert boundary_norm(PLConical(p1, [1, 0]), z) == 1


def test_boundary_norm_never_infinite(square, z):
    rng = random.Random(0)
    for _ in range(20):
        f = PLConical(square, [rng.randint(-9, 9) for _ in range(4)])
        assert boundary_norm(f, z) < math.inf


def test_constant_sequence_passes(square, z):
    f = PLConical(square, [1, 2, 3, 4])
    seq = AdelicToricDivisor([f, f, f], [0, 0, 0], z)
    assert verify_cauchy(seq).passed


def test_euclidean_sequence_passes(euclid):
    rep = verify_cauchy(euclid)
    assert rep.passed
    consecutive = [euclid.pair_norm(i, i + 1) for i in range(len(euclid) - 1)]
    assert all(b <= a for a, b in zip(consecutive, consecutive[1:]))


def test_perturbed_term_fails_with_witness(euclid, z):
    terms = list(euclid.terms)
    terms[2] = terms[2] + z.sf.on_fan(terms[2].fan)
    bad = AdelicToricDivisor(terms, euclid.epsilons, z, euclid.depths)
    rep = verify_cauchy(bad)
    assert not rep.passed
    fails = rep.failures()
    assert {f.j for f in fails if f.i < 2} | {f.i for f in fails if f.i >= 2} >= {2}
    assert all(f.witness is not None for f in fails)


def test_prefix_beyond_length(euclid):
    with pytest.raises(ValueError):
        verify_cauchy(euclid, prefix=len(euclid) + 1)


def test_from_oracle_pl_single_term(square, z):
    f = PLConical(square, [2, 1, 1, 3])
    seq = from_oracle(pl_oracle(f), square, z, Fraction(1, 1000))
    assert len(seq) == 1 and seq.epsilons == [0]


def test_from_oracle_euclidean_reaches_target(euclid):
    n = len(euclid)
    assert euclid.pair_norm(n - 2, n - 1) < Fraction(1, 1000)
    assert euclid.depths[-1] <= 10
    # epsilons are exact pair norms with 25% headroom
    assert euclid.epsilons[-1] == Fraction(5, 4) * euclid.pair_norm(n - 2, n - 1)


def test_from_oracle_homogeneity_failure(square, z):
    bad = ConicalOracle(lambda a: float(np.dot(a, a)), 2, check=False)
    with pytest.raises(HomogeneityError):
        from_oracle(bad, square, z, Fraction(1, 100))


def test_from_oracle_guard(square, z):
    with pytest.raises(ConvergenceError):
        from_oracle(euclidean_oracle(2), square, z, Fraction(1, 10**9), max_depth=2)


def test_green_at_three_four(euclid):
    g = green_of_adelic(euclid, emb((3, 4), 0), Fraction(1, 100))
    assert abs(float(g.value) - 5) <= float(g.error_bound) <= 0.01


def test_green_at_origin(euclid):
    g = green_of_adelic(euclid, emb((0, 0)), Fraction(1, 100))
    assert g.value == 0 and g.error_bound == 0


def test_green_pl_is_exact(square, z):
    f = PLConical(square, [2, 1, 1, 3])
    seq = from_oracle(pl_oracle(f), square, z, Fraction(1, 1000))
    assert green_of_adelic(seq, emb((3, -4)), Fraction(1, 10**6)).value == f.eval((3, -4))


def test_green_tolerance_unreachable(euclid):
    frozen = AdelicToricDivisor(euclid.terms, euclid.epsilons, euclid.boundary, euclid.depths)
    with pytest.raises(ToleranceError):
        green_of_adelic(frozen, emb((3, 4)), Fraction(1, 10**9))


def test_green_bound_against_deeper_term(euclid, square):
    deeper, _ = approximate(euclidean_oracle(2), square, euclid.depths[-1] + 2)
    rng = random.Random(11)
    for _ in range(100):
        a = (Fraction(rng.randint(-50, 50), 7), Fraction(rng.randint(-50, 50), 3))
        g = green_of_adelic(euclid, emb(a), Fraction(1))
        assert abs(g.value - deeper.eval(a)) <= g.error_bound


def test_norm_is_a_norm(square, z):
    rng = random.Random(2)
    for _ in range(30):
        f = PLConical(square, [rng.randint(-5, 5) for _ in range(4)])
        g = PLConical(square, [rng.randint(-5, 5) for _ in range(4)])
        c = Fraction(rng.randint(-5, 5), rng.randint(1, 5))
        assert boundary_norm(f + g, z) <= boundary_norm(f, z) + boundary_norm(g, z)
        assert boundary_norm(f * c, z) == abs(c) * boundary_norm(f, z)


def test_norm_equivalence_between_boundaries(square):
    rng = random.Random(9)
    z = BoundaryDatum(ToricBoundaryDivisor(square, [1, 2, 3, 1]))
    z2 = BoundaryDatum(ToricBoundaryDivisor(square, [2, 1, 1, 5]))
    c = sup_ratio(z.sf, z2.sf)
    for _ in range(50):
        f = PLConical(square, [rng.randint(-7, 7) for _ in range(4)])
        assert boundary_norm(f, z2) <= boundary_norm(f, z) * c


def test_lazy_extension_is_deterministic(square, z):
    a = from_oracle(euclidean_oracle(2), square, z, Fraction(1, 50))
    b = from_oracle(euclidean_oracle(2), square, z, Fraction(1, 50))
    a.extend_to(a.depths[-1] + 1)
    b.extend_to(b.depths[-1] + 1)
    assert [t.ray_values for t in a.terms] == [t.ray_values for t in b.terms]
    assert a.epsilons == b.epsilons
    assert verify_cauchy(a).passed


def test_epsilons_must_be_non_increasing(square, z):
    f = PLConical(square, [1, 1, 1, 1])
    with pytest.raises(ValueError):
        AdelicToricDivisor([f, f], [0, 1], z)
