import numpy as np
import pytest

from hypermetric.analysis_spaces import green_energy_sup, kjgamma
from hypermetric.blaschke import from_zeros
from hypermetric.errors import ContractViolation, ParameterError
from hypermetric.gauss_solver import (CurvatureFunction, DirichletProblem, blaschke_squared_k,
                                      constant_k, default_schedule, discretization_estimate,
                                      exhaustion_run, pde_residual, solve_dirichlet_fd,
                                      solve_dirichlet_green, solve_radial, verify_representation)

R = 0.9


def scaled_hyperbolic_center(R):
    # a / (1 - a^2 |z|^2) with a^2 R^2 + a - 1 = 0 has curvature -4 and equals 1 on |z| = R
    a = (-1 + np.sqrt(1 + 4 * R**2)) / (2 * R**2)
    return np.log(a)


def exact_problem():
    return DirichletProblem(constant_k(4.0), -np.log(1 - R**2), radius=R)


def test_fd_exact_solution():
    sol = solve_dirichlet_fd(exact_problem(), 64, 64)
    r = np.abs(sol.u.grid.points)
    assert np.max(np.abs(sol.u.values + np.log(1 - r**2))) < 2e-3
    assert abs(sol.center_value) < 5e-4
    assert pde_residual(sol) < 1e-10


def test_fd_harmonic_case_is_the_circle_mean():
    p = DirichletProblem(constant_k(0.0), lambda z: 1 + z.real + (z * z).imag, radius=0.8)
    sol = solve_dirichlet_fd(p, 32, 64)
    assert sol.center_value == pytest.approx(1.0, abs=1e-12)


def test_fd_zero_boundary_center_value():
    sol, est = discretization_estimate(solve_dirichlet_fd, DirichletProblem(constant_k(4.0), 0.0,
                                                                            radius=R), 128, 128)
    assert sol.center_value == pytest.approx(scaled_hyperbolic_center(R), abs=max(3 * est, 1e-5))
    # log 0.6538 rounded
    assert scaled_hyperbolic_center(R) == pytest.approx(-0.4251, abs=3e-4)


def test_negative_k_is_rejected():
    k = CurvatureFunction(lambda z: -np.ones(np.shape(z)), tag="custom")
    with pytest.raises(ContractViolation):
        solve_dirichlet_fd(DirichletProblem(k, 0.0), 16, 16)


def test_green_matches_fd_within_combined_tolerance():
    p = exact_problem()
    fd, est_fd = discretization_estimate(solve_dirichlet_fd, p, 64, 64, tol=1e-10)
    gr, est_gr = discretization_estimate(solve_dirichlet_green, p, 64, 64, tol=1e-10)
    gap = np.max(np.abs(fd.u.values - gr.u.values))
    assert gap <= 2 * (est_fd + est_gr + 2e-10)


def test_green_with_zero_k_returns_the_harmonic_extension():
    p = DirichletProblem(constant_k(0.0), lambda z: z.real, radius=0.5, center=0.2j)
    sol = solve_dirichlet_green(p, 16, 32)
    assert sol.report.iterations <= 1
    pts = sol.u.grid.points
    assert np.max(np.abs(sol.u.values - pts.real)) < 1e-12


def test_representation_holds_for_the_newton_solution():
    p = exact_problem()
    sol = solve_dirichlet_fd(p, 64, 64)
    gr = solve_dirichlet_green(p, 64, 64)
    # the Green fixed point satisfies the integral equation to solver tolerance
    assert verify_representation(gr) <= 5 * 1e-10 + 1e-12
    # the FD solution satisfies it up to the gap between the two discretizations
    assert verify_representation(sol) < 5e-3


def test_uniqueness_on_blaschke_weight():
    p = DirichletProblem(blaschke_squared_k(from_zeros([0.3, -0.2j])), lambda z: 0.2 * z.real,
                         radius=0.7, center=0.1)
    fd, e1 = discretization_estimate(solve_dirichlet_fd, p, 64, 64)
    gr, e2 = discretization_estimate(solve_dirichlet_green, p, 64, 64)
    assert np.max(np.abs(fd.u.values - gr.u.values)) <= 2 * (e1 + e2 + 2e-10)


def test_monotone_in_boundary_data():
    lo = solve_dirichlet_fd(DirichletProblem(constant_k(4.0), 0.0), 32, 32)
    hi = solve_dirichlet_fd(DirichletProblem(constant_k(4.0), lambda z: 0.1 + 0.05 * z.real), 32, 32)
    assert np.all(hi.u.values >= lo.u.values)


def test_monotone_in_k():
    u4 = solve_dirichlet_fd(DirichletProblem(constant_k(4.0), 0.3), 32, 32)
    u8 = solve_dirichlet_fd(DirichletProblem(constant_k(8.0), 0.3), 32, 32)
    assert np.all(u8.u.values <= u4.u.values + 1e-14)


def test_radial_exact_profile():
    prof = solve_radial(constant_k(4.0), R, -np.log(1 - R**2))
    r = np.linspace(0, R, 50)
    assert np.max(np.abs(prof(r) + np.log(1 - r**2))) < 1e-8


def test_radial_flat_and_regression_fixture():
    assert solve_radial(constant_k(0.0), 0.5, 0.7).center_value == pytest.approx(0.7, abs=1e-12)
    prof = solve_radial(kjgamma(1, 2), 0.99, 0.0)
    # regression value from the 1-D shooting solver; Richardson extrapolation of
    # 2-D solves at 256 and 512 radial nodes gives -0.228978 as well
    assert prof.center_value == pytest.approx(-0.2289783, abs=1e-6)


def test_radial_agrees_with_fd():
    k = kjgamma(1, 2)
    prof = solve_radial(k, 0.8, 0.1)
    sol, est = discretization_estimate(solve_dirichlet_fd, DirichletProblem(k, 0.1, radius=0.8),
                                       128, 32)
    assert sol.center_value == pytest.approx(prof.center_value, abs=3 * est + 1e-6)


def test_radial_rejects_nonradial_weights():
    with pytest.raises(ParameterError):
        solve_radial(blaschke_squared_k(from_zeros([0.3])), 0.5, 0.0)


def test_exhaustion_constant_k():
    res = exhaustion_run(constant_k(4.0), 0.0, 1 - 2.0 ** -np.arange(1, 9), stop_on_verdict=False)
    assert np.all(np.diff(res.center_values) <= 0)
    expected = [scaled_hyperbolic_center(r) for r in res.radii]
    assert np.max(np.abs(res.center_values - expected)) < 1e-4
    # the limit over the whole disk; r_8 = 1 - 2^-8 is still 2.2e-3 above it
    limit = np.log((np.sqrt(5) - 1) / 2)
    assert limit == pytest.approx(-0.4812, abs=1e-4)
    assert 0 < res.center_values[-1] - limit < 3e-3
    assert res.report.monotone_flag


def test_exhaustion_dichotomy():
    fin = exhaustion_run(kjgamma(1, 2), 0.0)
    assert fin.verdict == "converged"
    assert np.all(np.isfinite(fin.center_values))
    div = exhaustion_run(kjgamma(1, 1), 0.0)
    assert div.verdict == "diverging-to-minus-infinity"
    assert div.center_values[-1] < -12


def test_exhaustion_lower_bound():
    k = kjgamma(1, 2)
    res = exhaustion_run(k, 0.0, stop_on_verdict=False, depth_schedule=default_schedule(8))
    assert np.all(res.center_values >= res.lower_bounds - 1e-10)
    energy = green_energy_sup(k, [0]).value
    assert np.all(res.center_values >= -energy / (2 * np.pi) - 1e-6)


def test_exhaustion_grid_path_is_monotone():
    k = blaschke_squared_k(from_zeros([0.2]))
    res = exhaustion_run(k, 0.0, [0.5, 0.7, 0.85])
    assert res.report.monotone_flag
    assert np.all(np.diff(res.center_values) <= 1e-10)


def test_exhaustion_schedule_must_increase():
    with pytest.raises(ParameterError):
        exhaustion_run(constant_k(4.0), 0.0, depth_schedule=[1.0, 0.5])
