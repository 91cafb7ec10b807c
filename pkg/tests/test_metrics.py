import numpy as np
import pytest

from hypermetric.blaschke import from_zeros
from hypermetric.errors import GuardedPointError, IndeterminateOrderError, ParameterError
from hypermetric.metrics import (ConformalDensity, ahlfors_check, compose_maps, constant,
                                 curvature_of, developing_density, developing_residual,
                                 equality_propagation_check, hyperbolic, lambda_alpha,
                                 pointwise_max, pullback, punctured_hyperbolic,
                                 random_automorphism, sample_points, scaled, seed_density,
                                 sk_check, zero_order_at)

from .conftest import random_disk_points


def square_pullback():
    return pullback(hyperbolic(), from_zeros([0, 0]))


def fd_only(lam):
    return ConformalDensity(lam.evaluator, None, lam.zero_set, "closed-form", lam.name,
                            lam.singular)


def test_hyperbolic_curvature_analytic_and_fd():
    z = sample_points(200, seed=1)
    assert np.max(np.abs(curvature_of(hyperbolic(), z) + 4)) < 1e-8
    assert np.max(np.abs(curvature_of(fd_only(hyperbolic()), z) + 4)) < 1e-4


def test_square_pullback_formula_and_curvature():
    lam = square_pullback()
    z = random_disk_points(np.random.default_rng(2), 300, 0.95)
    exact = 2 * np.abs(z) / (1 - np.abs(z) ** 4)
    assert np.max(np.abs(lam(z) - exact)) < 1e-12
    assert curvature_of(lam, 0.5) == pytest.approx(-4, abs=1e-8)
    assert curvature_of(fd_only(lam), 0.5) == pytest.approx(-4, abs=1e-4)


def test_flat_density_has_zero_curvature():
    assert curvature_of(constant(), 0.3j) == 0


def test_pullback_by_automorphism_is_an_isometry(rng):
    T = random_automorphism(rng)
    lam = pullback(hyperbolic(), T)
    z = sample_points(1000, seed=3)
    assert np.max(np.abs(lam(z) / hyperbolic()(z) - 1)) < 1e-10


@pytest.mark.parametrize("zeros", [[0.3], [0, 0.5j], [0.2 - 0.4j, 0.6, -0.1]])
def test_theorema_egregium_for_blaschke_pullbacks(zeros):
    F = from_zeros(zeros)
    lam = fd_only(pullback(hyperbolic(), F))
    report = sk_check(lam, budget=300, r_max=0.9)
    assert np.max(np.abs(report.curvature + 4)) < 1e-3


def test_pullback_zero_set_is_the_critical_set():
    lam = pullback(hyperbolic(), from_zeros([0, 0, 0]))
    assert lam.zero_set.entries == ((0j, 2),)


def test_guard_annulus():
    with pytest.raises(GuardedPointError):
        curvature_of(square_pullback(), 1e-6)


def test_sk_check_examples():
    assert sk_check(hyperbolic()).passed
    assert sk_check(hyperbolic()).max_violation == pytest.approx(0, abs=1e-8)
    assert sk_check(seed_density(from_zeros([0]))).passed
    flat = sk_check(constant())
    assert not flat.passed and flat.max_violation == pytest.approx(4)


def test_ahlfors_examples():
    lam = square_pullback()
    assert lam(0.5) * 0.75 == pytest.approx(0.8)
    assert ahlfors_check(hyperbolic())["max_ratio"] == pytest.approx(1, abs=1e-12)
    half = scaled(hyperbolic(), 0.5)
    assert ahlfors_check(half)["max_ratio"] == pytest.approx(0.5)
    # curvature of c * lambda is -4 / c**2
    assert sk_check(half).max_violation == pytest.approx(-12, abs=1e-6)


@pytest.mark.parametrize("lam", [
    hyperbolic(), square_pullback(), seed_density(from_zeros([0.4, -0.2j])),
    scaled(hyperbolic(), 0.8), pullback(hyperbolic(), from_zeros([0.5, 0.5, 0.1j])),
], ids=["hyperbolic", "square", "seed", "scaled", "blaschke"])
def test_fundamental_theorem_over_constructors(lam):
    assert sk_check(lam, budget=300).passed
    assert ahlfors_check(lam, budget=300)["passed"]


def test_punctured_families_have_curvature_minus_four():
    z = sample_points(200, seed=4, exclude=np.array([0j]), margin=1e-2)
    for lam in (punctured_hyperbolic(), lambda_alpha(-0.5)):
        assert np.max(np.abs(curvature_of(lam, z) + 4)) < 1e-8
        assert np.max(np.abs(curvature_of(fd_only(lam), z) + 4)) < 1e-3
    with pytest.raises(ParameterError):
        lambda_alpha(0.5)


def test_max_of_two_sk_densities_is_sk():
    # 0.9 lambda_D dominates near 0, so the zero of the pullback is never active
    a = scaled(hyperbolic(), 0.9)
    b = pullback(hyperbolic(), from_zeros([0, 0]))
    lam = pointwise_max(a, b)
    z = sample_points(600, seed=5, r_max=0.9)
    # keep samples whose whole stencil sees one branch of the max
    h = 2e-3
    stencil = z[:, None] + h * np.array([0, 1, -1, 1j, -1j])[None, :]
    side = a(stencil) > b(stencil)
    keep = np.all(side, axis=1) | np.all(~side, axis=1)
    assert 0 < keep.sum() < z.size
    assert sk_check(lam, samples=z[keep]).passed


@pytest.mark.parametrize("lam, z0, order, limit", [
    (square_pullback(), 0, 1, 2.0),
    (hyperbolic(), 0.3, 0, 1 / 0.91),
    (pullback(hyperbolic(), from_zeros([0, 0, 0])), 0, 2, 3.0),
])
def test_zero_order_at(lam, z0, order, limit):
    m, lim = zero_order_at(lam, z0)
    assert m == order
    assert lim == pytest.approx(limit, rel=1e-3)


def test_zero_order_matches_declared_zero_sets():
    lam = pullback(hyperbolic(), from_zeros([0.2, 0.2, 0.2, -0.5j]))
    for p, m in lam.zero_set.entries:
        assert zero_order_at(lam, p)[0] == m


def test_zero_order_rejects_fractional_slopes():
    lam = ConformalDensity(lambda z: np.abs(z) ** 0.5)
    with pytest.raises(IndeterminateOrderError):
        zero_order_at(lam, 0)


def test_developing_residual_examples(rng):
    lam = square_pullback()
    sq = from_zeros([0, 0])
    assert developing_residual(lam, sq) < 1e-12
    assert developing_residual(lam, compose_maps(random_automorphism(rng), sq)) < 1e-10
    assert developing_residual(hyperbolic(), sq) >= 0.1


def test_developing_density_is_the_hyperbolic_pullback():
    F = from_zeros([0.1, 0.4j])
    z = sample_points(50, seed=6)
    w, dw = F.evaluate(z)
    assert np.allclose(developing_density(F)(z), np.abs(dw) / (1 - np.abs(w) ** 2))


def test_equality_propagation_examples():
    lam = square_pullback()
    assert equality_propagation_check(lam, lam, 0.3)["verdict"] == "equal"
    assert equality_propagation_check(lam, hyperbolic(), 0)["verdict"] == "not-applicable"
    out = equality_propagation_check(scaled(hyperbolic(), 0.99), hyperbolic(), 0.2)
    assert out["verdict"] == "not-applicable"
    assert out["ratio_at_z0"] == pytest.approx(0.99)
