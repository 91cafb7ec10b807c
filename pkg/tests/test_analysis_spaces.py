import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from hypermetric.analysis_spaces import (GROWTH_FACTOR, a12_norm_sq, example33_k,
                                         example33_solution, fd_pde_residual, green_energy_sup,
                                         h2_norm_sq_boundary, kjgamma, littlewood_paley_check,
                                         solvability_integral, trend_verdict)
from hypermetric.blaschke import from_zeros
from hypermetric.errors import ParameterError
from hypermetric.gauss_solver import constant_k
from hypermetric.metrics import sample_points

coeffs = st.lists(st.floats(-1, 1), min_size=1, max_size=9)


def test_trend_verdict_rule():
    assert trend_verdict([1, 2, 4, 8, 16, 32]) == "divergent-trend"
    assert trend_verdict([1, 1.5, 1.6, 1.61, 1.611, 1.6111]) == "finite"
    g = GROWTH_FACTOR
    assert trend_verdict([1, g, g**2, g**3, g**4, g**5]) == "finite"


@pytest.mark.parametrize("f, exact", [
    (lambda z: np.ones(np.shape(z)), np.pi / 2),
    (lambda z: 2 * z, 2 * np.pi / 3),
])
def test_a12_examples(f, exact):
    rep = a12_norm_sq(f)
    assert rep.verdict == "finite"
    assert rep.value == pytest.approx(exact, rel=1e-10)


def test_a12_trace_is_monotone():
    rep = a12_norm_sq(lambda z: 1 / (1.2 - z))
    assert np.all(np.diff(rep.trace) >= -1e-14)


def test_a12_divergent_example():
    # k = 4 |phi|^2 with phi = (z - 1)^{-3/2}; the weight (1-|z|^2)|z-1|^{-3} is not integrable
    rep = a12_norm_sq(lambda z: (z - 1) ** -1.5, hints=(1 + 0j,))
    assert rep.verdict == "divergent-trend"


@given(coeffs)
@settings(max_examples=20, deadline=None)
def test_a12_of_derivative_matches_coefficients(c):
    a = np.asarray(c)
    n = np.arange(a.size)
    dP = np.polynomial.Polynomial(a).deriv()
    exact = np.pi * np.sum(n * a**2 / (n + 1))
    assert a12_norm_sq(lambda z: dP(z)).value == pytest.approx(exact, rel=1e-9, abs=1e-12)


@pytest.mark.parametrize("phi, exact", [
    (lambda z: z, 1.0),
    (lambda z: (0.3 - 0.4j) * np.ones(np.shape(z)), 0.25),
])
def test_h2_examples(phi, exact):
    rep = h2_norm_sq_boundary(phi)
    # the default schedule stops at r = 1 - 2^-20
    assert rep.value == pytest.approx(exact, rel=1e-5)
    assert np.all(np.diff(rep.trace) >= -1e-14)
    closed = h2_norm_sq_boundary(phi, r_schedule=[0.5, 0.9, 1.0])
    assert closed.value == pytest.approx(exact, rel=1e-12)


def test_h2_lacunary_truncations():
    for K in (4, 8, 12):
        phi = lambda z, K=K: sum(z ** (2**k) / k for k in range(1, K + 1))  # noqa: E731
        rep = h2_norm_sq_boundary(phi, r_schedule=[0.9, 0.99, 1.0], n=2 ** (K + 2))
        assert rep.value == pytest.approx(np.sum(1 / np.arange(1, K + 1) ** 2), rel=1e-10)


@pytest.mark.parametrize("phi, lhs", [
    ([0, 1], 1.0), ([0.7], 0.49), ([0, 0, 1], 1.0),
])
def test_littlewood_paley_examples(phi, lhs):
    out = littlewood_paley_check(phi)
    assert out["lhs"] == pytest.approx(lhs, rel=1e-12)
    assert out["gap"] <= 1e-8


def test_littlewood_paley_blaschke():
    out = littlewood_paley_check(from_zeros([0.3, -0.5j, 0.6 + 0.2j]))
    assert out["lhs"] == pytest.approx(1.0, rel=1e-12)
    assert out["gap"] <= 1e-8


@given(st.lists(st.floats(-1, 1), min_size=1, max_size=9))
@settings(max_examples=30, deadline=None)
def test_littlewood_paley_random_polynomials(c):
    out = littlewood_paley_check(np.asarray(c))
    assert out["lhs"] == pytest.approx(np.sum(np.square(c)), abs=1e-12)
    assert out["gap"] <= 1e-6


def test_solvability_constant_k():
    rep = solvability_integral(constant_k(4.0))
    assert rep.value == pytest.approx(2 * np.pi, rel=1e-12)
    assert rep.verdict == "finite"


@pytest.mark.parametrize("j", [1, 2])
def test_solvability_dichotomy(j):
    assert solvability_integral(kjgamma(j, 2)).verdict == "finite"
    assert solvability_integral(kjgamma(j, 1)).verdict == "divergent-trend"


def test_solvability_example33():
    assert solvability_integral(example33_k(1.5)).verdict == "divergent-trend"


def test_green_energy_examples():
    rep = green_energy_sup(constant_k(4.0), [0])
    assert rep.value == pytest.approx(2 * np.pi, rel=1e-10)
    assert green_energy_sup(constant_k(0.0), [0, 0.5]).value == 0


def test_green_energy_constant_k_closed_form():
    # iint g(z, xi) dsigma = (pi/2)(1 - |z|^2)
    zs = [0.5, -0.3j, 0.9]
    rep = green_energy_sup(constant_k(4.0), zs)
    expected = [2 * np.pi * (1 - abs(z) ** 2) for z in zs]
    assert np.allclose(rep.extra["values"], expected, rtol=1e-6)
    assert rep.value == pytest.approx(max(expected), rel=1e-6)


def test_green_energy_divergent_at_every_sample():
    rep = green_energy_sup(kjgamma(1, 1), [0, 0.5, -0.3j])
    assert rep.verdict == "divergent-trend"
    assert rep.extra["per_sample"] == ["divergent-trend"] * 3


def test_green_energy_dominates_half_the_solvability_integral():
    for k in (constant_k(4.0), kjgamma(1, 2), kjgamma(2, 2)):
        g = green_energy_sup(k, [0, 0.4]).value
        assert g >= 0.5 * solvability_integral(k).value * (1 - 1e-9)


def test_kjgamma_examples():
    for j in (1, 2, 3):
        assert kjgamma(j, 1.5)(0) == pytest.approx(1.0)
    vals = kjgamma(1, 3)(1 - np.array([1e-2, 1e-4, 1e-8]))
    assert np.all(np.diff(vals) > 0) and vals[-1] > 1e11
    with pytest.raises(ParameterError):
        kjgamma(1, 0.5)
    with pytest.raises(ParameterError):
        kjgamma(0, 2)


def test_kjgamma_is_stable_near_the_rim():
    k = kjgamma(3, 1)
    z = 1 - np.logspace(-3, -15, 13)
    v = k(z)
    assert np.all(np.isfinite(v)) and np.all(v > 0)


def test_example33():
    assert example33_k(1.5)(0) == pytest.approx(4.0)
    with pytest.raises(ParameterError):
        example33_k(1.2)
    u = example33_solution(1.5)
    z = sample_points(200, seed=7, r_max=0.9)
    assert fd_pde_residual(u, example33_k(1.5), z) <= 1e-3


def test_report_json_round_trip():
    rep = solvability_integral(kjgamma(1, 2))
    data = json.loads(json.dumps(rep.to_json()))
    assert data["verdict"] == rep.verdict and len(data["trace"]) == len(rep.trace)
