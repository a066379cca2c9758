"""Exact toric tools for boundary divisors, Berkovich monomial points,
adelic Cauchy sequences, toric intersection numbers and height slopes."""
from .adelic import (AdelicToricDivisor, BoundaryDatum, ConvergenceError, ToleranceError,
                     boundary_norm, from_oracle, green_of_adelic, verify_cauchy)
from .berkovich import (TADIC, TRIVIAL, CoefficientSpec, LaurentPoly, MonomialPoint, TRational, emb,
                        hybrid_structure_map, hybrid_triangle_check, ideal_product, ideal_sum,
                        interior_test, model_green, norm_equivalent, retract, trop, valuation_eval)
from .conical import (ConicalApproximator, ConicalOracle, PLConical, add, approximate,
                      euclidean_oracle, is_effective, minimum, scale, sup_ratio)
from .divisors import (MonomialArc, ToricBoundaryDivisor, ToricModel, arc_order, is_zero_by_arcs,
                       pullback_linear, pullback_one_param, supporting_function)
from .heights import (HomogeneousRational, SimplexFunction, SlopeRegressor, check_boundary_extension,
                      eval_mu, expected_slope, fit_slope, green_residual)
from .intersect import (NefToricDivisor, RationalPolytope, intersection_number, ma_integral,
                        mixed_volume, pair_adelic, polytope_of, volume)
from .lattice import (Fan, RationalCone, common_refinement, cone_contains, is_complete, pair,
                      simplicialize)

__version__ = "0.1.0"
