import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermetric.disk_core import (GridField, PolarGrid, area_integrate, area_rule, circle_integrate,
                                   circle_rule, graded_area_rule, green_function_disk, green_mass,
                                   in_stolz_region, mobius_automorphism, poincare_density,
                                   pseudohyperbolic, stolz_sample)
from hypermetric.errors import (DegenerateInputError, DomainError, NonFiniteError, ParameterError,
                                SingularityError)

from .conftest import random_disk_points

disk_points = st.builds(lambda r, t: r * np.exp(1j * t),
                        st.floats(0, 0.99), st.floats(0, 2 * np.pi))


def test_mobius_examples():
    assert abs(mobius_automorphism(0.5, 0.5)) == 0
    assert mobius_automorphism(0, 0.3 + 0.2j) == pytest.approx(-(0.3 + 0.2j))


@given(disk_points, disk_points)
@settings(max_examples=200, deadline=None)
def test_mobius_is_an_involution(a, z):
    assert abs(mobius_automorphism(a, mobius_automorphism(a, z)) - z) < 1e-12


@given(disk_points, disk_points)
@settings(max_examples=100, deadline=None)
def test_mobius_preserves_the_disk(a, z):
    assert abs(mobius_automorphism(a, z)) < 1 + 1e-12


def test_mobius_errors():
    with pytest.raises(DomainError):
        mobius_automorphism(1.0, 0.2)
    # conj(a) z = 1 requires |z| > 1; the degenerate guard still fires
    with pytest.raises(DegenerateInputError):
        mobius_automorphism(0.5, 2.0)


def test_pseudohyperbolic_is_mobius_invariant(rng):
    z, w = random_disk_points(rng, 50), random_disk_points(rng, 50)
    a = 0.6j
    lhs = pseudohyperbolic(z, w)
    rhs = pseudohyperbolic(mobius_automorphism(a, z), mobius_automorphism(a, w))
    assert np.max(np.abs(lhs - rhs)) < 1e-12


def test_poincare_density():
    assert poincare_density(0) == 1.0
    assert poincare_density(0.5) == pytest.approx(4 / 3)
    with pytest.raises(DomainError):
        poincare_density(1.0)


def test_green_positive_and_symmetric(rng):
    z, xi = random_disk_points(rng, 1000, 0.99), random_disk_points(rng, 1000, 0.99)
    g = green_function_disk(z, xi)
    assert np.all(g > 0)
    assert np.max(np.abs(g - green_function_disk(xi, z))) < 1e-12


def test_green_examples():
    assert green_function_disk(0, 0.5) == pytest.approx(np.log(2))
    # scaled disk: g_R(z, xi) = g_1(z/R, xi/R)
    assert green_function_disk(0.2, -0.3j, radius=0.5) == pytest.approx(
        green_function_disk(0.4, -0.6j))
    with pytest.raises(SingularityError):
        green_function_disk(0.3, 0.3)
    with pytest.raises(DomainError):
        green_function_disk(0.3, 1.2)


def test_green_mass_matches_quadrature():
    rule = graded_area_rule(20, 512, order=12)
    val = area_integrate(lambda xi: green_function_disk(0, xi), rule)
    assert val == pytest.approx(green_mass(0), rel=1e-4)
    # the rule is graded toward the rim, not toward the log singularity
    z = 0.3 + 0.1j
    val = area_integrate(lambda xi: green_function_disk(z, xi), rule)
    assert val == pytest.approx(green_mass(z), rel=2e-3)


def test_polar_grid_invariants():
    g = PolarGrid.uniform(16, 12, r_max=0.9)
    assert g.shape == (17, 12)
    assert g.r_max == 0.9
    idx = g.node_index()
    assert np.all(idx[0] == 0) and np.all(idx[-1] == -1)
    # control cells tile the disk
    assert g.cell_areas().sum() == pytest.approx(np.pi * 0.9**2, rel=1e-12)
    with pytest.raises(ParameterError):
        PolarGrid(np.array([0.0, 0.5, 0.4]), 8)
    with pytest.raises(ParameterError):
        PolarGrid(np.linspace(0, 0.9, 5), 8, center=0.2)


def test_grid_field_rejects_nonfinite():
    g = PolarGrid.uniform(4, 8, r_max=0.5)
    vals = np.zeros(g.shape)
    vals[2, 3] = np.nan
    with pytest.raises(NonFiniteError) as info:
        GridField(g, vals)
    assert info.value.node == (2, 3)


@pytest.mark.parametrize("rule", [area_rule(64, 64), graded_area_rule(12, 64)])
def test_area_rules_sum_to_the_measure(rule):
    assert rule.weights.sum() == pytest.approx(rule.measure(), rel=1e-12)


@pytest.mark.parametrize("f, exact", [
    (lambda z: np.ones(z.shape), np.pi),
    (lambda z: np.abs(z) ** 2, np.pi / 2),
    (lambda z: np.log(1 / np.abs(z)), np.pi / 2),
])
def test_midpoint_rule_order(f, exact):
    errs = [abs(area_integrate(f, area_rule(n, 64)) - exact) for n in (16, 32, 64)]
    if errs[0] < 1e-13:
        return
    orders = np.log2(np.array(errs[:-1]) / np.array(errs[1:]))
    assert np.all(orders >= 1.8)


def test_circle_integrate_examples():
    assert circle_integrate(lambda z: np.ones(z.shape), 0.3) == pytest.approx(2 * np.pi)
    assert circle_integrate(lambda z: np.abs(z) ** 2, 0.5) == pytest.approx(2 * np.pi * 0.25)
    assert abs(circle_integrate(lambda z: z.real, 0.7)) < 1e-12
    assert circle_rule(0.5, 32).weights.sum() == pytest.approx(2 * np.pi)
    with pytest.raises(DomainError):
        circle_integrate(lambda z: z.real, 1.0)


def test_stolz_radial_samples():
    pts = stolz_sample(1, np.pi / 4, 6)
    assert np.allclose(pts, 1 - 2.0 ** -np.arange(1, 7))
    assert np.all(in_stolz_region(pts, 1, np.pi / 4))


def test_stolz_rotation_and_membership():
    a = stolz_sample(1, np.pi / 6, 8, alpha=np.pi + 0.5)
    b = stolz_sample(1j, np.pi / 6, 8, alpha=np.pi + 0.5)
    assert np.allclose(b, 1j * a)
    assert np.all(in_stolz_region(b, 1j, np.pi / 6))
    # the cone has half-angle pi/2 - delta about the inward normal
    assert in_stolz_region(np.array([0.99j]), 1, np.pi / 6)[0]
    assert not in_stolz_region(np.array([0.99j]), 1, np.pi / 3)[0]
    with pytest.raises(ParameterError):
        stolz_sample(1, 2.0, 4)
