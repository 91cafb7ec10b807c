"""Solvers for the Gauss curvature equation ``Laplace u = k(z) e^{2u}``.

Three discretizations are provided:

* ``solve_dirichlet_fd``: finite volumes on a polar grid, damped Newton.
* ``solve_dirichlet_green``: the integral form
  ``u = h - (1/2pi) iint g(z, xi) k e^{2u} dsigma`` by relaxed Picard
  iteration (Newton-Krylov fallback).
* ``solve_radial`` / ``exhaustion_run``: radial problems, by shooting or by a
  1-D scheme in the depth coordinate ``y = log(1 + log(1/(1-r^2)))``, which
  keeps radii like ``1 - 10^-30`` representable.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.integrate import solve_ivp
from scipy.linalg import solve_banded
from scipy.optimize import brentq

from .disk_core import TWO_PI, GridField, PolarGrid, as_complex
from .errors import (
    DomainError,
    NonConvergenceError,
    ParameterError,
    PicardNonContraction,
    SolverInconsistencyError,
)

logger = logging.getLogger(__name__)

DIVERGENCE_FLOOR = 12.0


# ---------------------------------------------------------------------------
# data types
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class CurvatureFunction:
    """Nonnegative weight ``k`` of the curvature equation.

    Parameters
    ----------
    evaluator : callable
        Vectorized ``z -> k(z)``.
    tag : str
        One of ``constant``, ``blaschke-squared``, ``kjgamma``, ``radial``,
        ``example33``, ``custom``.
    params : dict
        Parameters for reports.
    of_defect : callable, optional
        For radial ``k``: ``d -> k`` with ``d = 1 - |z|^2``, evaluated stably
        for tiny ``d``.
    depth_weight : callable, optional
        For radial ``k``: ``y -> (1 + x) (1 - r^2)^2 k`` with
        ``x = log(1/(1-r^2))`` and ``y = log(1 + x)``.  This is the weight the
        1-D depth scheme needs; it stays finite for every ``y``.
    hints : tuple of complex
        Boundary points where ``k`` is singular; quadratures grade toward them.
    """

    evaluator: Callable
    tag: str = "custom"
    params: dict = field(default_factory=dict)
    of_defect: Optional[Callable] = None
    depth_weight: Optional[Callable] = None
    hints: tuple = ()

    def __call__(self, z):
        return self.evaluator(z)

    @property
    def radial(self) -> bool:
        return self.of_defect is not None

    def to_json(self) -> dict:
        return {"tag": self.tag, "params": {k: _jsonable(v) for k, v in self.params.items()}}


def _jsonable(v):
    if isinstance(v, complex):
        from .blaschke import format_complex
        return format_complex(v)
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    return v


def constant_k(c: float = 4.0) -> CurvatureFunction:
    if c < 0:
        raise ParameterError("curvature weight must be nonnegative")
    c = float(c)

    def depth_weight(y):
        y = np.asarray(y, dtype=float)
        with np.errstate(over="ignore"):
            return c * np.exp(y - 2.0 * np.expm1(y))

    return CurvatureFunction(lambda z: np.full(np.shape(z), c), "constant", {"c": c},
                             of_defect=lambda d: np.full(np.shape(d), c),
                             depth_weight=depth_weight)


def blaschke_squared_k(B) -> CurvatureFunction:
    """``4 |B(z)|^2``, the weight of the gauge ``log(lambda/|B|)``."""

    def ev(z):
        return 4.0 * np.abs(B(as_complex(z))) ** 2

    return CurvatureFunction(ev, "blaschke-squared", {"degree": B.degree})


def radial_k(profile: Callable) -> CurvatureFunction:
    """Radial weight from ``r -> k(r)``."""

    def of_defect(d):
        return profile(np.sqrt(np.clip(1.0 - np.asarray(d, dtype=float), 0.0, None)))

    def depth_weight(y):
        y = np.asarray(y, dtype=float)
        x = np.expm1(y)
        d = np.exp(-x)
        return (1.0 + x) * d**2 * of_defect(d)

    return CurvatureFunction(lambda z: profile(np.abs(as_complex(z))), "radial", {},
                             of_defect=of_defect, depth_weight=depth_weight)


@dataclass(frozen=True)
class DirichletProblem:
    """``Laplace u = k e^{2u}`` on ``|z - center| < radius``, ``u = boundary``
    on the circle.  ``boundary`` is a constant or a vectorized function of
    the (complex) boundary point."""

    k: CurvatureFunction
    boundary: object = 0.0
    center: complex = 0.0
    radius: float = 0.9

    def __post_init__(self):
        if self.radius <= 0:
            raise ParameterError("disk radius must be positive")
        if abs(self.center) + self.radius >= 1.0:
            raise DomainError("the problem disk must sit inside the unit disk")

    def boundary_values(self, z) -> np.ndarray:
        z = as_complex(z)
        if callable(self.boundary):
            return np.asarray(self.boundary(z), dtype=float) * np.ones(z.shape)
        return np.full(z.shape, float(self.boundary))


@dataclass
class SolveReport:
    method: str
    iterations: int = 0
    residual_history: list = field(default_factory=list)
    monotone_flag: bool = True
    dichotomy: str = "undecided"
    wall_time: float = 0.0
    converged: bool = False
    tol: float = 0.0
    extra: dict = field(default_factory=dict)

    def to_json(self, include_time: bool = False) -> dict:
        out = {
            "method": self.method,
            "iterations": int(self.iterations),
            "residual_history": [float(r) for r in self.residual_history],
            "monotone_flag": bool(self.monotone_flag),
            "dichotomy": self.dichotomy,
            "converged": bool(self.converged),
            "tol": float(self.tol),
        }
        out.update({k: _jsonable(v) for k, v in self.extra.items()})
        if include_time:
            out["wall_time"] = self.wall_time
        return out


@dataclass
class Solution:
    u: GridField
    report: SolveReport
    problem: Optional[DirichletProblem] = None

    @property
    def center_value(self) -> float:
        return self.u.axis_value


# ---------------------------------------------------------------------------
# polar finite volumes
# ---------------------------------------------------------------------------


def to_vector(values: np.ndarray) -> np.ndarray:
    """Flatten grid values to the unknown vector (axis first, then rings)."""
    return np.concatenate([[values[0, 0]], values[1:, :].ravel()])


def to_values(vec: np.ndarray, grid: PolarGrid) -> np.ndarray:
    out = np.empty(grid.shape)
    out[0, :] = vec[0]
    out[1:, :] = vec[1:].reshape(grid.n_r, grid.n_theta)
    return out


def node_points(grid: PolarGrid) -> np.ndarray:
    return to_vector(grid.points)


def laplacian_matrix(grid: PolarGrid) -> sp.csr_matrix:
    """Finite-volume Laplacian on the node vector.

    Rows of the outer (Dirichlet) ring are left empty.  The matrix has
    nonnegative off-diagonals and zero row sums: an M-matrix stencil, which
    gives a discrete comparison principle.
    """
    r = grid.radii
    nt = grid.n_theta
    dt = grid.dtheta
    nr = grid.n_r
    n = 1 + nr * nt
    rows, cols, vals = [], [], []

    def idx(i, j):
        return 0 if i == 0 else 1 + (i - 1) * nt + (j % nt)

    # axis: flux through the circle of radius r1/2
    rh = 0.5 * r[1]
    coef = rh * dt / r[1] / (np.pi * rh**2)
    for j in range(nt):
        rows.append(0)
        cols.append(idx(1, j))
        vals.append(coef)
    rows.append(0)
    cols.append(0)
    vals.append(-coef * nt)

    i = np.arange(1, nr)
    rp = 0.5 * (r[i] + r[i + 1])
    rm = 0.5 * (r[i] + r[i - 1])
    area = 0.5 * (rp**2 - rm**2) * dt
    cp = rp * dt / (r[i + 1] - r[i]) / area
    cm = rm * dt / (r[i] - r[i - 1]) / area
    ca = (rp - rm) / (r[i] * dt) / area
    for a, ii in enumerate(i):
        for j in range(nt):
            me = idx(ii, j)
            nb = [(idx(ii + 1, j), cp[a]), (idx(ii - 1, j), cm[a]),
                  (idx(ii, j + 1), ca[a]), (idx(ii, j - 1), ca[a])]
            for c, v in nb:
                rows.append(me)
                cols.append(c)
                vals.append(v)
            rows.append(me)
            cols.append(me)
            vals.append(-(cp[a] + cm[a] + 2 * ca[a]))
    return sp.csr_matrix((vals, (rows, cols)), shape=(n, n))


def interior_mask(grid: PolarGrid) -> np.ndarray:
    mask = np.ones(1 + grid.n_r * grid.n_theta, dtype=bool)
    mask[1 + (grid.n_r - 1) * grid.n_theta:] = False
    return mask


def _check_k(kvec: np.ndarray):
    if np.any(~np.isfinite(kvec)):
        raise DomainError("curvature weight is not finite on the grid")
    if np.any(kvec < 0):
        raise ParameterError("curvature weight k must be nonnegative")


def newton_masked(L: sp.csr_matrix, kvec: np.ndarray, u: np.ndarray, mask: np.ndarray,
                  tol: float = 1e-10, max_iter: int = 60, max_halvings: int = 30):
    """Damped Newton for ``(L u - k e^{2u})[mask] = 0``; nodes outside
    ``mask`` are Dirichlet data.

    Returns ``(u, history, iterations)``.  Armijo backtracking on the sup
    norm of the residual, initial step 1, factor 1/2.
    """
    u = u.copy()
    Lm = L[mask]
    Lmm = Lm[:, mask].tocsc()
    km = kvec[mask]

    def resid(v):
        return Lm @ v - km * np.exp(2.0 * v[mask])

    F = resid(u)
    norm = float(np.max(np.abs(F))) if F.size else 0.0
    scale = 1.0 + float(np.max(km * np.exp(2.0 * u[mask]))) if F.size else 1.0
    # round-off floor of the stencil: rows scale like 1/h^2
    lnorm = float(abs(Lm).max()) if F.size else 0.0
    tol = max(tol, 64 * np.finfo(float).eps * lnorm * (1.0 + float(np.max(np.abs(u)))) / scale)
    history = [norm]
    it = 0
    while norm > tol * scale and it < max_iter:
        it += 1
        J = Lmm - sp.diags(2.0 * km * np.exp(2.0 * u[mask]), format="csc")
        du = spla.spsolve(J, -F)
        t = 1.0
        for _ in range(max_halvings):
            trial = u.copy()
            trial[mask] += t * du
            Ft = resid(trial)
            nt = float(np.max(np.abs(Ft)))
            if np.isfinite(nt) and nt <= (1.0 - 1e-4 * t) * norm:
                break
            t *= 0.5
        else:
            if float(np.max(np.abs(du))) < 1e-13:
                break
            raise NonConvergenceError("Newton stagnated: no decrease along the Newton direction",
                                      residual=norm, iterate=u, trace=history)
        u, F, norm = trial, Ft, nt
        scale = 1.0 + float(np.max(km * np.exp(2.0 * u[mask])))
        history.append(norm)
        if float(np.max(np.abs(t * du))) < 1e-15 * (1.0 + float(np.max(np.abs(u)))):
            break
    if norm > tol * scale and it >= max_iter:
        raise NonConvergenceError(f"Newton did not converge in {max_iter} iterations",
                                  residual=norm, iterate=u, trace=history)
    return u, history, it


def harmonic_extension(boundary: Callable, grid: PolarGrid, n_modes: int = 0) -> np.ndarray:
    """Poisson extension of boundary data to the grid nodes via its Fourier
    series ``sum c_m (r/R)^{|m|} e^{i m theta}``."""
    R = grid.r_max
    M = grid.n_theta * max(4, -(-max(n_modes, 256) // grid.n_theta))
    phi = np.arange(M) * (TWO_PI / M)
    g = np.asarray(boundary(grid.center + R * np.exp(1j * phi)), dtype=float) * np.ones(M)
    c = np.fft.fft(g) / M
    m = np.fft.fftfreq(M, 1.0 / M)
    rho = grid.radii / R
    theta = grid.angles
    keep = np.abs(m) < M // 2
    powers = rho[:, None] ** np.abs(m[keep])[None, :]
    powers[0, :] = (m[keep] == 0).astype(float)
    waves = np.exp(1j * np.outer(m[keep], theta))
    h = np.real((powers * c[keep][None, :]) @ waves)
    h[-1, :] = g[:: M // grid.n_theta]
    return h


def _problem_grid(p: DirichletProblem, n_r: int, n_theta: int) -> PolarGrid:
    return PolarGrid.uniform(n_r, n_theta, r_max=p.radius, center=p.center)


def solve_dirichlet_fd(p: DirichletProblem, n_r: int = 128, n_theta: int = 128,
                       tol: float = 1e-10, grid: Optional[PolarGrid] = None) -> Solution:
    """Finite-volume Newton solve of the Dirichlet problem ``p``."""
    t0 = time.perf_counter()
    grid = grid or _problem_grid(p, n_r, n_theta)
    pts = node_points(grid)
    kvec = np.asarray(p.k(pts), dtype=float) * np.ones(pts.size)
    _check_k(kvec)
    L = laplacian_matrix(grid)
    h = harmonic_extension(p.boundary_values, grid)
    u0 = to_vector(h)
    mask = interior_mask(grid)
    u, hist, it = newton_masked(L, kvec, u0, mask, tol)
    rep = SolveReport("fd-newton", it, hist, converged=True, tol=tol,
                      wall_time=time.perf_counter() - t0,
                      extra={"n_r": grid.n_r, "n_theta": grid.n_theta})
    rep.dichotomy = "converged"
    return Solution(GridField(grid, to_values(u, grid)), rep, p)


def pde_residual(sol: Solution) -> float:
    """``max |L_h u - k e^{2u}|`` over interior nodes, relative to
    ``1 + max k e^{2u}``."""
    grid = sol.u.grid
    L = laplacian_matrix(grid)
    u = to_vector(sol.u.values)
    kvec = np.asarray(sol.problem.k(node_points(grid)), dtype=float) * np.ones(u.size)
    mask = interior_mask(grid)
    F = (L @ u - kvec * np.exp(2 * u))[mask]
    return float(np.max(np.abs(F)) / (1.0 + np.max(kvec[mask] * np.exp(2 * u[mask]))))


# ---------------------------------------------------------------------------
# Green representation
# ---------------------------------------------------------------------------


class GreenOperator:
    """``f -> iint g(z, xi) f(xi) dsigma_xi`` at the nodes of a polar grid,
    with the disk ``|z - center| < r_max`` as domain.

    The kernel between two rings depends only on the angle difference, so the
    sum over angles is a circular convolution done with FFTs.  The
    logarithmic singularity is handled by subtracting ``f(z)`` and adding
    back ``f(z)`` times the closed-form mass ``(pi/2)(R^2 - |z - c|^2)``.
    """

    def __init__(self, grid: PolarGrid):
        self.grid = grid
        R = grid.r_max
        rho = grid.radii[1:] / R
        theta = grid.angles
        z = rho[:, None, None] * np.exp(1j * theta)[None, None, :]
        xi = rho[None, :, None] + 0j
        with np.errstate(divide="ignore", invalid="ignore"):
            K = np.log(np.abs(1.0 - np.conj(xi) * z)) - np.log(np.abs(z - xi))
        K[np.arange(rho.size), np.arange(rho.size), 0] = 0.0
        K[~np.isfinite(K)] = 0.0
        self.Khat = np.fft.fft(K, axis=2)
        areas = grid.cell_areas()
        self.w_axis = float(areas[0, 0])
        self.w_ring = areas[1:, 0]
        with np.errstate(divide="ignore"):
            self.g_axis = np.where(rho > 0, -np.log(rho), 0.0)
        self.mass = 0.5 * np.pi * (R**2 - grid.radii**2)
        self.ones_raw = self._raw(np.ones(grid.shape))

    def _raw(self, f: np.ndarray) -> np.ndarray:
        fr = f[1:, :] * self.w_ring[:, None]
        fh = np.fft.fft(fr, axis=1)
        conv = np.real(np.fft.ifft(np.einsum("ikm,km->im", self.Khat, fh), axis=1))
        out = np.empty(self.grid.shape)
        out[1:, :] = conv + self.g_axis[:, None] * self.w_axis * f[0, 0]
        out[0, :] = float(np.sum(self.g_axis[:, None] * fr))
        return out

    def apply(self, f: np.ndarray) -> np.ndarray:
        f = np.asarray(f, dtype=float)
        return self._raw(f) - f * self.ones_raw + f * self.mass[:, None]


def verify_representation(sol: Solution, p: Optional[DirichletProblem] = None,
                          op: Optional[GreenOperator] = None) -> float:
    """Max deviation of ``u`` from ``h - (1/2pi) iint g k e^{2u}`` at the
    grid nodes."""
    p = p or sol.problem
    grid = sol.u.grid
    op = op or GreenOperator(grid)
    k = np.asarray(p.k(grid.points), dtype=float) * np.ones(grid.shape)
    h = harmonic_extension(p.boundary_values, grid)
    rep = h - op.apply(k * np.exp(2 * sol.u.values)) / TWO_PI
    return float(np.max(np.abs(rep - sol.u.values)))


def solve_dirichlet_green(p: DirichletProblem, n_r: int = 64, n_theta: int = 64,
                          tol: float = 1e-10, max_iter: int = 2000, relax: bool = True,
                          fallback: bool = True, grid: Optional[PolarGrid] = None) -> Solution:
    """Picard iteration on the integral equation, started from ``u = h``.

    With ``relax`` the update is ``u + omega (T u - u)`` with
    ``omega = 2/(2 + L)`` where ``L`` bounds the Lipschitz constant of ``T``.
    Without it, three consecutive residual increases raise
    :class:`PicardNonContraction`, which ``fallback`` turns into a
    Newton-Krylov solve.
    """
    t0 = time.perf_counter()
    grid = grid or _problem_grid(p, n_r, n_theta)
    op = GreenOperator(grid)
    k = np.asarray(p.k(grid.points), dtype=float) * np.ones(grid.shape)
    _check_k(to_vector(k))
    h = harmonic_extension(p.boundary_values, grid)

    def T(u):
        return h - op.apply(k * np.exp(2 * u)) / TWO_PI

    u = h.copy()
    history = []
    increases = 0
    method = "green-picard"
    it = 0
    try:
        for it in range(1, max_iter + 1):
            Tu = T(u)
            res = float(np.max(np.abs(Tu - u)))
            history.append(res)
            if res <= tol:
                break
            if len(history) > 1 and res > history[-2]:
                increases += 1
                if increases >= 3 and not relax:
                    raise PicardNonContraction(
                        "Picard residual grew on three consecutive iterations",
                        residual=res, iterate=u, trace=history)
            else:
                increases = 0
            if relax:
                lip = float(np.max(op.apply(2 * k * np.exp(2 * u)))) / TWO_PI
                omega = 2.0 / (2.0 + lip)
            else:
                omega = 1.0
            u = u + omega * (Tu - u)
        else:
            raise NonConvergenceError("Picard iteration hit the iteration cap",
                                      residual=history[-1], iterate=u, trace=history)
    except PicardNonContraction:
        if not fallback:
            raise
        logger.info("Picard not contracting; switching to Newton-Krylov")
        method = "green-newton"
        u, extra_hist = _green_newton(h, k, op, tol)
        history.extend(extra_hist)
        it += len(extra_hist)
    rep = SolveReport(method, it, history, converged=True, tol=tol, dichotomy="converged",
                      wall_time=time.perf_counter() - t0,
                      extra={"n_r": grid.n_r, "n_theta": grid.n_theta})
    return Solution(GridField(grid, u), rep, p)


def _green_newton(h, k, op: GreenOperator, tol: float, max_iter: int = 40):
    shape = h.shape
    u = h.copy()
    hist = []
    for _ in range(max_iter):
        F = u - h + op.apply(k * np.exp(2 * u)) / TWO_PI
        res = float(np.max(np.abs(F)))
        hist.append(res)
        if res <= tol:
            return u, hist
        d = 2 * k * np.exp(2 * u)
        J = spla.LinearOperator(
            (u.size, u.size),
            matvec=lambda v: (v.reshape(shape) + op.apply(d * v.reshape(shape)) / TWO_PI).ravel(),
        )
        du, _ = spla.gmres(J, -F.ravel(), rtol=1e-12, atol=0.0, restart=60, maxiter=20)
        u = u + du.reshape(shape)
    raise NonConvergenceError("Newton-Krylov on the integral equation did not converge",
                              residual=hist[-1], iterate=u, trace=hist)


def discretization_estimate(solver: Callable, p: DirichletProblem, n_r: int, n_theta: int,
                            **kw) -> tuple[Solution, float]:
    """Solve at ``(n_r, n_theta)`` and at half resolution; return the fine
    solution and the Richardson estimate ``max|u_h - u_2h| / 3`` of its
    error (second-order schemes)."""
    fine = solver(p, n_r=n_r, n_theta=n_theta, **kw)
    coarse = solver(p, n_r=n_r // 2, n_theta=n_theta // 2, **kw)
    diff = np.max(np.abs(fine.u.values[::2, ::2] - coarse.u.values))
    est = float(diff) / 3.0
    fine.report.extra["discretization_estimate"] = est
    return fine, est


# ---------------------------------------------------------------------------
# radial problems
# ---------------------------------------------------------------------------


@dataclass
class RadialProfile:
    """Radial solution ``u(r)`` on ``[0, R]`` with a dense interpolant."""

    R: float
    c: float
    center_value: float
    r: np.ndarray
    u: np.ndarray
    report: SolveReport
    _dense: Optional[Callable] = None

    def __call__(self, r):
        r = np.asarray(r, dtype=float)
        if self._dense is not None:
            return self._dense(np.maximum(r, self.r[0]))[0]
        return np.interp(r, self.r, self.u)


def solve_radial(k: CurvatureFunction, R: float, c: float, tol: float = 1e-12,
                 r0_factor: float = 1e-8) -> RadialProfile:
    """Shooting for ``u'' + u'/r = k(r) e^{2u}``, ``u'(0) = 0``, ``u(R) = c``.

    The initial value ``s = u(0)`` is bracketed in ``[c - 2^j, c]`` (the
    solution is subharmonic, so ``u(0) <= c``) and found with ``brentq``.
    """
    if not k.radial:
        raise ParameterError("solve_radial needs a radial curvature weight")
    if not 0 < R < 1:
        raise DomainError("radius must lie in (0, 1)")
    t0 = time.perf_counter()

    def kr(r):
        return float(k.of_defect(np.array(1.0 - r * r)))

    k0 = kr(0.0)
    r0 = r0_factor * R
    cap = c + 60.0

    def shoot(s, dense=False):
        a = k0 * np.exp(2 * s)
        y0 = [s + a * r0 * r0 / 4.0, a * r0 / 2.0]

        def rhs(r, y):
            return [y[1], kr(r) * np.exp(2 * y[0]) - y[1] / r]

        def blow(r, y):
            return y[0] - cap

        blow.terminal = True
        sol = solve_ivp(rhs, (r0, R), y0, method="DOP853", rtol=tol, atol=tol,
                        events=blow, dense_output=dense)
        if sol.status == 1:
            return np.inf, sol
        return sol.y[0, -1], sol

    trace = []
    lo = c - 1.0
    for j in range(1, 64):
        val, _ = shoot(lo)
        trace.append((lo, val))
        if val < c:
            break
        lo = c - 2.0**j
    else:
        raise NonConvergenceError("shooting bracket not found", trace=trace)
    s = brentq(lambda s: shoot(s)[0] - c, lo, c, xtol=1e-15, maxiter=200)
    _, sol = shoot(s, dense=True)
    rep = SolveReport("radial-shooting", len(trace), [abs(sol.y[0, -1] - c)], converged=True,
                      tol=tol, dichotomy="converged", wall_time=time.perf_counter() - t0)
    return RadialProfile(R, c, float(s), sol.t, sol.y[0], rep, sol.sol)


# ---------------------------------------------------------------------------
# depth coordinates
# ---------------------------------------------------------------------------


def depth_of_radius(r) -> np.ndarray:
    """``y = log(1 + x)``, ``x = log(1/(1 - r^2))``."""
    r = np.asarray(r, dtype=float)
    return np.log1p(-np.log1p(-r * r))


def depth_of_defect(d) -> np.ndarray:
    """Depth for ``d = 1 - r^2`` given directly (keeps tiny defects exact)."""
    return np.log1p(-np.log(np.asarray(d, dtype=float)))


def radius_of_depth(y) -> np.ndarray:
    """Inverse of :func:`depth_of_radius`; rounds to 1.0 for deep points."""
    with np.errstate(over="ignore"):
        x = np.expm1(np.asarray(y, dtype=float))
    return np.sqrt(-np.expm1(-x))


def default_schedule(n_radial: int = 12, y_max: float = 2.0**40) -> np.ndarray:
    """Depths of ``r_n = 1 - 2^-n`` for ``n <= n_radial``, then doubling
    depths up to ``y_max``."""
    n = np.arange(1, n_radial + 1)
    d = 2.0 ** (-n) * (2.0 - 2.0 ** (-n))
    ys = list(depth_of_defect(d))
    while ys[-1] < y_max:
        ys.append(2.0 * ys[-1])
    return np.array(ys)


def depth_mesh(schedule: Sequence[float], h0: float = 0.005, y_fine: float = 8.0,
               ratio: float = 1.01) -> np.ndarray:
    """Global 1-D mesh: uniform step ``h0`` on ``[0, y_fine]``, geometric
    beyond, with every schedule depth snapped in as a node."""
    y_end = float(np.max(schedule))
    base = list(np.arange(0.0, min(y_fine, y_end) + 0.5 * h0, h0))
    y = base[-1]
    while y < y_end:
        y = y * ratio
        base.append(y)
    mesh = np.array(base)
    for s in schedule:
        j = int(np.argmin(np.abs(mesh - s)))
        mesh[j] = s
    mesh = np.unique(mesh)
    return mesh[mesh <= y_end * (1 + 1e-15)]


def _bernoulli(t):
    t = np.asarray(t, dtype=float)
    out = np.ones_like(t)
    small = np.abs(t) < 1e-8
    big = t > 700
    mid = ~small & ~big
    out[mid] = t[mid] / np.expm1(t[mid])
    out[small] = 1.0 - 0.5 * t[small]
    out[big] = t[big] * np.exp(-np.minimum(t[big], 1e300))
    return out


class DepthScheme:
    """Exponentially fitted finite differences for the radial equation in the
    depth coordinate,

    ``4 [a(y) (u_yy - u_y) + u_y] = W(y) e^{2u}``,
    ``a(y) = (1 - e^{-x}) e^{-y}``,

    i.e. ``4 [a u_yy + (1 - a) u_y] = W e^{2u}``.  Rows form an M-matrix with
    zero row sums on the global mesh, so solutions on nested sub-meshes obey
    the discrete comparison principle exactly.
    """

    def __init__(self, mesh: np.ndarray, weight: Callable):
        with np.errstate(over="ignore", divide="ignore"):
            self._build(mesh, weight)

    def _build(self, mesh: np.ndarray, weight: Callable):
        self.y = mesh
        self.weight = weight
        y = mesh
        n = y.size
        x = np.expm1(y)
        with np.errstate(over="ignore"):
            a = -np.expm1(-x) * np.exp(-y)
        b = 1.0 - a
        lower = np.zeros(n)
        upper = np.zeros(n)
        diag = np.zeros(n)
        hm = np.diff(y)
        for i in range(1, n - 1):
            h_minus, h_plus = hm[i - 1], hm[i]
            hbar = 0.5 * (h_minus + h_plus)
            qp = b[i] * h_plus / a[i] if a[i] > 0 else np.inf
            qm = b[i] * h_minus / a[i] if a[i] > 0 else np.inf
            if np.isfinite(qp) and qp < 700:
                up = a[i] / h_plus * _bernoulli(-qp)
                upd = a[i] / h_plus * _bernoulli(qp)
            else:
                up, upd = b[i], 0.0
            if np.isfinite(qm) and qm < 700:
                lo = a[i] / h_minus * _bernoulli(qm)
                lod = a[i] / h_minus * _bernoulli(-qm)
            else:
                lo, lod = 0.0, b[i]
            upper[i] = 4.0 * up / hbar
            lower[i] = 4.0 * lo / hbar
            diag[i] = -4.0 * (upd + lod) / hbar
        # axis row: finite volume on [0, h/2] of the conservative form
        h1 = y[1] - y[0]
        yh = 0.5 * h1
        flux = -np.expm1(-np.expm1(yh)) * np.exp(np.expm1(yh) - yh) / h1
        c0 = 4.0 * flux / yh
        upper[0] = c0
        diag[0] = -c0
        yq = 0.25 * h1
        w = np.asarray(weight(y), dtype=float) * np.ones(n)
        w0 = float(np.exp(np.expm1(yq)) * weight(np.array([yq]))[0])
        w = w.copy()
        w[0] = w0
        self.lower, self.diag, self.upper, self.w = lower, diag, upper, w

    def solve(self, m: int, c: float, guess: np.ndarray, tol: float = 1e-13,
              max_iter: int = 200) -> tuple[np.ndarray, list]:
        """Solve on nodes ``0..m`` with ``u[m] = c``; ``guess`` must be a
        supersolution for monotone Newton convergence."""
        u = np.array(guess[: m + 1], dtype=float)
        u[m] = c
        lo, di, up, w = self.lower[:m], self.diag[:m], self.upper[:m], self.w[:m]
        hist = []
        for _ in range(max_iter):
            e = w * np.exp(2.0 * u[:m])
            F = di * u[:m] + up * u[1:m + 1] - e
            F[1:] += lo[1:] * u[: m - 1]
            norm = float(np.max(np.abs(F)))
            hist.append(norm)
            ab = np.zeros((3, m))
            ab[0, 1:] = up[: m - 1]
            ab[1, :] = di - 2.0 * e
            ab[2, :-1] = lo[1:m]
            du = solve_banded((1, 1), ab, -F)
            u[:m] += du
            if float(np.max(np.abs(du))) <= tol * (1.0 + float(np.max(np.abs(u)))):
                break
        else:
            raise NonConvergenceError("depth-scheme Newton did not converge",
                                      residual=hist[-1], iterate=u, trace=hist)
        return u, hist

    def green_energy_bound(self, m: int) -> float:
        """``(pi/2) int_0^Y G(y) W(y) dy``: the Green potential at 0 of ``k``
        over the disk of depth ``Y = y[m]``, by the midpoint rule on the mesh
        (``G`` has an integrable log singularity at ``y = 0``)."""
        y = self.y[: m + 1]
        Y = y[-1]
        ym = 0.5 * (y[1:] + y[:-1])
        with np.errstate(over="ignore", invalid="ignore", divide="ignore"):
            x = np.expm1(ym)
            xR = np.expm1(Y)
            G = np.empty_like(ym)
            small = x < 700
            G[small] = np.exp(x[small]) * (np.log1p(-np.exp(-xR))
                                           - np.log1p(-np.exp(-x[small])))
            t = -np.expm1(ym[~small] - Y)
            dx = np.where(t > 0, -np.exp(Y) * t, 0.0)
            G[~small] = -np.expm1(dx)
        w = np.asarray(self.weight(ym), dtype=float)
        return float(0.5 * np.pi * np.sum(G * w * np.diff(y)))


@dataclass
class ExhaustionResult:
    depths: np.ndarray
    radii: np.ndarray
    center_values: np.ndarray
    profiles: list
    lower_bounds: np.ndarray
    verdict: str
    report: SolveReport
    mesh: Optional[np.ndarray] = None

    def to_json(self) -> dict:
        return {
            "depths": [float(v) for v in self.depths],
            "radii": [float(v) for v in self.radii],
            "center_values": [float(v) for v in self.center_values],
            "lower_bounds": [float(v) for v in self.lower_bounds],
            "verdict": self.verdict,
            "report": self.report.to_json(),
        }


def _verdict(values: np.ndarray, c: float, floor: float, cauchy_tol: float) -> str:
    if values[-1] < c - floor:
        return "diverging-to-minus-infinity"
    if values.size >= 3:
        inc = np.abs(np.diff(values[-3:]))
        if np.all(inc < cauchy_tol):
            return "converged"
    return "undecided"


def exhaustion_run(k: CurvatureFunction, c: float = 0.0, schedule=None, *,
                   depth_schedule=None, floor: float = DIVERGENCE_FLOOR,
                   cauchy_tol: float = 1e-6, monotone_tol: float = 1e-10,
                   stop_on_verdict: bool = True, method: str = "auto",
                   grid_theta: int = 32) -> ExhaustionResult:
    """Solve ``Laplace u = k e^{2u}``, ``u = c`` on ``|z| = r_n`` for an
    increasing schedule and classify the sequence ``u_n(0)``.

    ``schedule`` lists radii; ``depth_schedule`` lists depths ``y_n`` (use it
    for radii too close to 1 for floating point).  The default schedule is
    :func:`default_schedule`.  Radial weights use the 1-D depth scheme;
    others (or ``method="grid"``) use nested polar grids.

    Verdicts are heuristic: ``diverging-to-minus-infinity`` when
    ``u_n(0) < c - floor``, ``converged`` when the last two increments are
    below ``cauchy_tol``.
    """
    if method == "grid" or (method == "auto" and not k.radial):
        radii = np.asarray(schedule if schedule is not None else 1.0 - 2.0 ** -np.arange(1, 9))
        return _exhaustion_grid(k, c, radii, floor, cauchy_tol, monotone_tol, grid_theta)
    t0 = time.perf_counter()
    if depth_schedule is not None:
        ys = np.asarray(depth_schedule, dtype=float)
    elif schedule is not None:
        ys = depth_of_radius(np.asarray(schedule, dtype=float))
    else:
        ys = default_schedule()
    if np.any(np.diff(ys) <= 0):
        raise ParameterError("exhaustion schedule must be strictly increasing")
    mesh = depth_mesh(ys)
    scheme = DepthScheme(mesh, k.depth_weight)
    idx = [int(np.argmin(np.abs(mesh - y))) for y in ys]
    guess = np.full(mesh.size, float(c))
    centers, profiles, bounds, hist = [], [], [], []
    monotone = True
    verdict = "undecided"
    prev = None
    iters = 0
    for m in idx:
        g = guess.copy()
        if prev is not None:
            g[: prev.size] = prev
        u, h = scheme.solve(m, c, g)
        iters += len(h)
        hist.append(h[-1])
        if prev is not None:
            worst = float(np.max(u[: prev.size] - prev))
            if worst > monotone_tol:
                monotone = False
                raise SolverInconsistencyError(
                    f"exhaustion iterate increased by {worst:.3e}; discretization too coarse",
                    residual=worst)
        prev = u
        profiles.append(u)
        centers.append(u[0])
        energy = scheme.green_energy_bound(m)
        bounds.append(c - np.exp(2 * c) * energy / TWO_PI)
        verdict = _verdict(np.array(centers), c, floor, cauchy_tol)
        if stop_on_verdict and verdict != "undecided":
            break
    n_done = len(centers)
    rep = SolveReport("depth-fd", iters, hist, monotone, verdict, time.perf_counter() - t0,
                      converged=True, tol=monotone_tol,
                      extra={"floor": floor, "cauchy_tol": cauchy_tol, "c": c,
                             "mesh_nodes": int(mesh.size)})
    depths = mesh[idx[:n_done]]
    return ExhaustionResult(depths, radius_of_depth(depths), np.array(centers), profiles,
                            np.array(bounds), verdict, rep, mesh)


def _exhaustion_grid(k, c, radii, floor, cauchy_tol, monotone_tol, n_theta):
    t0 = time.perf_counter()
    radii = np.asarray(radii, dtype=float)
    if np.any(np.diff(radii) <= 0) or radii[-1] >= 1.0:
        raise ParameterError("schedule radii must increase and stay below 1")
    base = np.linspace(0.0, radii[0], 17)
    rs = list(base)
    for a, b in zip(radii[:-1], radii[1:]):
        n = max(4, int(np.ceil(8 * np.log2((1 - a) / (1 - b)))))
        # geometric toward b
        s = 1.0 - (1.0 - a) * ((1.0 - b) / (1.0 - a)) ** np.linspace(0, 1, n + 1)[1:]
        rs.extend(s)
    rs = np.array(rs)
    rs[-1] = radii[-1]
    grid = PolarGrid(rs, n_theta)
    L = laplacian_matrix(grid)
    pts = node_points(grid)
    kvec = np.asarray(k(pts), dtype=float) * np.ones(pts.size)
    _check_k(kvec)
    ring_of = np.concatenate([[0], np.repeat(np.arange(1, rs.size), n_theta)])
    u = np.full(pts.size, float(c))
    centers, fields, hist = [], [], []
    iters = 0
    prev = None
    verdict = "undecided"
    monotone = True
    for R in radii:
        m = int(np.argmin(np.abs(rs - R)))
        mask = ring_of < m
        u = np.where(ring_of >= m, c, u)
        u, h, it = newton_masked(L, kvec, u, mask, tol=1e-12)
        iters += it
        hist.append(h[-1])
        if prev is not None:
            common = ring_of < prev[1]
            worst = float(np.max(u[common] - prev[0][common]))
            if worst > monotone_tol:
                monotone = False
                raise SolverInconsistencyError(
                    f"exhaustion iterate increased by {worst:.3e}", residual=worst)
        prev = (u.copy(), m)
        fields.append(GridField(grid, to_values(u, grid)))
        centers.append(u[0])
        verdict = _verdict(np.array(centers), c, floor, cauchy_tol)
    rep = SolveReport("grid-fd", iters, hist, monotone, verdict, time.perf_counter() - t0,
                      converged=True, tol=monotone_tol, extra={"c": c})
    return ExhaustionResult(depth_of_radius(radii), radii, np.array(centers), fields,
                            np.full(radii.size, np.nan), verdict, rep)
