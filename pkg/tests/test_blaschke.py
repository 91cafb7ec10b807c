import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermetric.blaschke import (MultiplicitySequence, blaschke_sum, critical_points,
                                  cluster_match_error, degree_by_winding, format_complex, from_critical_points,
                                  from_zeros, match_points, parse_complex)
from hypermetric.disk_core import mobius_automorphism, pseudohyperbolic

from .conftest import random_disk_points


def test_origin_factor_and_degenerate_product():
    B = from_zeros([0])
    assert B(0.3) == pytest.approx(0.3)
    empty = from_zeros([])
    assert empty.degree == 0 and empty.is_degenerate
    assert empty(0.7) == pytest.approx(1.0)


def test_single_factor_values():
    B = from_zeros([0.5])
    assert abs(B(0.5)) < 1e-15
    assert abs(B(0.0)) == pytest.approx(0.5)
    _, d = B.evaluate(0.5)
    assert abs(d) == pytest.approx(4 / 3)


def test_monomial_value_and_derivative():
    v, d = from_zeros([0, 0]).evaluate(0.5)
    assert v == pytest.approx(0.25) and d == pytest.approx(1.0)


def test_derivative_at_a_multiple_zero_is_finite():
    v, d = from_zeros([0.3, 0.3]).evaluate(0.3)
    assert abs(v) < 1e-15 and abs(d) < 1e-14


def test_boundary_modulus_and_interior_bound(rng):
    B = from_zeros(random_disk_points(rng, 5, 0.9), rotation=np.exp(0.4j))
    t = np.linspace(0, 2 * np.pi, 64, endpoint=False)
    assert np.max(np.abs(np.abs(B(np.exp(1j * t))) - 1)) < 1e-12
    assert np.all(np.abs(B(random_disk_points(rng, 500, 0.999))) < 1)


def test_derivative_matches_finite_differences(rng):
    B = from_zeros(random_disk_points(rng, 4, 0.8))
    z = random_disk_points(rng, 20, 0.9)
    h = 1e-6
    fd = (B(z + h) - B(z - h)) / (2 * h)
    assert np.max(np.abs(B.evaluate(z)[1] - fd)) < 1e-7


def test_schwarz_pick_for_random_products(rng):
    B = from_zeros(random_disk_points(rng, 6, 0.95))
    z = random_disk_points(rng, 1000, 0.99)
    w, dw = B.evaluate(z)
    assert np.all(np.abs(dw) / (1 - np.abs(w) ** 2) <= 1 / (1 - np.abs(z) ** 2) * (1 + 1e-10))


def test_blaschke_sum_examples():
    s, verdict = blaschke_sum(lambda j: 1 - 1 / j**2, 20000)
    assert s == pytest.approx(np.pi**2 / 6, abs=1e-4)
    assert verdict == "convergent-so-far"
    s, verdict = blaschke_sum(lambda j: 1 - 1 / j, 2000)
    assert verdict == "divergent-trend"
    s, verdict = blaschke_sum([0.5, 0.25], 10)
    assert s == pytest.approx(1.25) and verdict == "convergent-so-far"


def test_blaschke_sum_partials_monotone():
    vals = [blaschke_sum(lambda j: 1 - 1 / j**1.5, n)[0] for n in (10, 100, 1000)]
    assert vals[0] <= vals[1] <= vals[2]


@pytest.mark.parametrize("zeros, expected", [
    ([0, 0], [(0, 1)]),
    ([0, 0, 0], [(0, 2)]),
])
def test_critical_points_of_monomials(zeros, expected):
    C = critical_points(from_zeros(zeros))
    assert [(round(abs(p), 12), m) for p, m in C.entries] == expected


def test_critical_point_of_squared_automorphism():
    C = critical_points(from_zeros([0.3, 0.3]))
    assert len(C) == 1 and abs(C.points[0] - 0.3) < 1e-10


@pytest.mark.parametrize("C, zeros", [
    ([0], [0, 0]),
    ([0, 0], [0, 0, 0]),
])
def test_inversion_of_monomial_critical_sets(C, zeros):
    F = from_critical_points(C)
    assert F.degree == len(zeros)
    z = np.array([0.2 + 0.1j, -0.5j])
    assert np.allclose(F(z), z ** len(zeros), atol=1e-12)


def test_inversion_single_point():
    a = 0.4
    F = from_critical_points([a])
    _, d = F.evaluate(a)
    assert abs(d) < 1e-10
    assert abs(F(0)) < 1e-15
    # the maximal function for {a} is phi_a^2 up to an automorphism
    z = np.array([0.1, -0.6j, 0.3 + 0.3j])
    lam_F = np.abs(F.evaluate(z)[1]) / (1 - np.abs(F(z)) ** 2)
    phi = mobius_automorphism(a, z)
    dphi = (a**2 - 1) / (1 - a * z) ** 2
    lam_ref = np.abs(2 * phi * dphi) / (1 - np.abs(phi) ** 4)
    assert np.allclose(lam_F, lam_ref, rtol=1e-10)


def test_inversion_normalization():
    F = from_critical_points([0.2 - 0.1j, 0.5j])
    coeffs = F.taylor_coefficients(0, 4)
    assert abs(coeffs[0]) < 1e-14
    first = coeffs[np.argmax(np.abs(coeffs) > 1e-12)]
    assert abs(first.imag) < 1e-12 and first.real > 0


@given(st.lists(st.builds(lambda r, t: r * np.exp(1j * t), st.floats(0, 0.85), st.floats(0, 6.28)),
                min_size=1, max_size=4))
@settings(max_examples=30, deadline=None)
def test_round_trip_property(points):
    C = MultiplicitySequence.from_points(points, cluster_radius=1e-3)
    F = from_critical_points(C)
    assert cluster_match_error(critical_points(F), C) < 1e-8
    assert degree_by_winding(F, 0.999) == C.total + 1


@pytest.mark.parametrize("zeros, r, expected", [([0, 0], 0.9, 2), ([0], 0.5, 1), ([0.95], 0.9, 0)])
def test_degree_by_winding(zeros, r, expected):
    assert degree_by_winding(from_zeros(zeros), r) == expected


def test_degree_by_winding_of_a_black_box():
    assert degree_by_winding(lambda z: z**3 - 0.1, 0.9) == 3


def test_multiplicity_sequence_clusters():
    C = MultiplicitySequence.from_points([0.1, 0.1 + 1e-9, 0.5j], cluster_radius=1e-6)
    assert sorted(C.multiplicities.tolist()) == [1, 2]
    assert C.total == 3


def test_complex_format_round_trip():
    for z in (0.4 + 0j, -0.3 - 0.25j, 1e-17 + 2j):
        assert parse_complex(format_complex(z)) == z


def test_triple_critical_point_is_certified_by_its_centroid():
    C = MultiplicitySequence.from_points([0.5, 0.5, 0.5])
    F = from_critical_points(C)
    found = critical_points(F, cluster_radius=1e-12).expanded()
    # round-off splits a triple root by roughly eps**(1/3)
    assert np.max(np.abs(found - 0.5)) < 1e-4
    assert cluster_match_error(found, C) < 1e-10


def test_match_points_permutation():
    a = np.array([0.1, 0.5j, -0.3])
    b = a[[2, 0, 1]]
    aligned, worst = match_points(a, b)
    assert worst == 0 and np.array_equal(aligned, b)
    assert pseudohyperbolic(0.1, 0.1) == 0
