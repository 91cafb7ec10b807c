"""Maximal conformal pseudometrics with prescribed zeros.

The Perron sweep works in the gauge ``w = log(lambda / |B|)`` where ``B`` is
the Blaschke product with the prescribed zeros.  Because ``log |B|`` is
harmonic off its zeros, ``lambda = |B| e^w`` has curvature -4 exactly when

    Laplace w = 4 |B|^2 e^{2w},

a smooth problem without singular points.  A modification of ``lambda`` on a
disk (plain or around a zero) is then one Dirichlet solve of this equation on
the grid nodes inside the disk followed by a pointwise max.  All solves share
one global polar grid, so modifications are blocks of one discrete problem
and the discrete comparison principle makes the sweep monotone.

Also here: the boundary integral criterion, the refined Schwarz-Pick
comparison and Stolz-angle boundary probes.
"""

from __future__ import annotations

import logging
import time
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.interpolate import RectBivariateSpline

from .blaschke import (FiniteBlaschke, MultiplicitySequence, as_map, critical_points,
                       format_complex, from_critical_points, from_zeros)
from .disk_core import PolarGrid, as_complex, circle_integrate, pseudohyperbolic, stolz_sample
from .errors import ConfigurationError, DomainError, ParameterError
from .gauss_solver import interior_mask, laplacian_matrix, newton_masked, node_points, to_values
from .metrics import ConformalDensity, hyperbolic, sample_points

logger = logging.getLogger(__name__)

GRID_R_MAX = 0.99
ZERO_DISK_CAP = 0.1


def seed_metric(B: FiniteBlaschke) -> ConformalDensity:
    """``|B(z)| lambda_D(z)``: curvature at most -4 with the zeros of ``B``.

    >>> from hypermetric.blaschke import from_zeros
    >>> lam = seed_metric(from_zeros([0]))
    >>> round(float(lam(0.5)), 6)
    0.666667
    """
    base = hyperbolic()

    def ev(z):
        return np.abs(B(as_complex(z))) * base(z)

    def lap(z):
        # log|B| is harmonic off the zeros
        return base.log_laplacian(z)

    return ConformalDensity(ev, lap, B.zeros, "closed-form", "seed")


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------


@dataclass
class SweepConfig:
    """Disk cover and stopping rule of the Perron sweep.

    Attributes
    ----------
    cover : list of (center, radius)
        Plain modification disks.
    zero_disks : list of (center, radius)
        One disk per distinct zero.
    rounds : int
        Maximum number of sweep rounds.
    tol : float
        Stop when the largest pointwise update of ``log lambda`` in a round
        is at most ``tol``.
    polish : bool
        After convergence, apply one more modification on the whole grid
        disk.  Small per-round updates still leave a discrete residual of
        order ``tol / h**2``, which the curvature near a zero (where the
        weight ``4 |B|^2`` is tiny) amplifies; the closing modification
        removes it.
    """

    cover: list
    zero_disks: list = field(default_factory=list)
    rounds: int = 400
    tol: float = 1e-8
    n_r: int = 128
    n_theta: int = 256
    r_max: float = GRID_R_MAX
    polish: bool = True

    @classmethod
    def hexagonal(cls, zeros: MultiplicitySequence = MultiplicitySequence(),
                  radius: float = 0.15, overlap: float = 0.5, r_max: float = GRID_R_MAX,
                  **kw) -> "SweepConfig":
        """Hexagonal cover: neighbouring centers at distance
        ``2 radius (1 - overlap)``, centers ordered by modulus."""
        if not 0 < radius < 1 or not 0 <= overlap < 1:
            raise ParameterError("cover radius must lie in (0, 1) and overlap in [0, 1)")
        step = 2.0 * radius * (1.0 - overlap)
        n = int(np.ceil((r_max + radius) / step)) + 1
        centers = []
        for i in range(-n, n + 1):
            for j in range(-n, n + 1):
                c = step * (i + 0.5 * j) + 1j * step * (np.sqrt(3) / 2) * j
                if abs(c) < r_max + 0.5 * radius:
                    centers.append(complex(c))
        centers.sort(key=lambda c: (round(abs(c), 12), np.angle(c)))
        cover = [(c, radius) for c in centers]
        return cls(cover, zero_disk_radii(zeros), r_max=r_max, **kw)

    def to_json(self) -> dict:
        return {"n_cover": len(self.cover), "cover_radius": float(self.cover[0][1]) if self.cover else None,
                "zero_disks": [[format_complex(c), float(r)] for c, r in self.zero_disks],
                "rounds": self.rounds, "tol": self.tol, "n_r": self.n_r,
                "n_theta": self.n_theta, "r_max": self.r_max, "polish": self.polish}


def zero_disk_radii(zeros: MultiplicitySequence, cap: float = ZERO_DISK_CAP) -> list:
    """Half the separation to the nearest other zero (the smaller of the
    pseudohyperbolic and Euclidean distances), capped at ``cap``."""
    pts = zeros.points
    out = []
    for i, a in enumerate(pts):
        others = np.delete(pts, i)
        r = cap
        if others.size:
            # pseudohyperbolic distance can exceed the Euclidean one, and the
            # disks themselves are Euclidean
            sep = np.minimum(pseudohyperbolic(a, others), np.abs(a - others))
            r = min(cap, 0.5 * float(np.min(sep)))
        out.append((complex(a), r))
    return out


def check_zero_disks(zero_disks: list):
    for i, (a, ra) in enumerate(zero_disks):
        for b, rb in zero_disks[i + 1:]:
            if abs(a - b) < ra + rb:
                raise ConfigurationError(f"zero disks around {a} and {b} overlap")


def _color(disks: list, gap: float) -> list:
    """Greedy coloring: disks sharing a color are separated by ``gap``."""
    colors: list = []
    for c, r in disks:
        for group in colors:
            if all(abs(c - c2) > r + r2 + gap for c2, r2 in group):
                group.append((c, r))
                break
        else:
            colors.append([(c, r)])
    return colors


# ---------------------------------------------------------------------------
# Perron state
# ---------------------------------------------------------------------------


@dataclass
class _Discretization:
    grid: PolarGrid
    L: object
    points: np.ndarray
    absB: np.ndarray
    kvec: np.ndarray
    mask: np.ndarray
    ring: np.ndarray


def _discretize(B: FiniteBlaschke, n_r: int, n_theta: int, r_max: float) -> _Discretization:
    grid = PolarGrid.stretched(n_r, n_theta, r_max=r_max)
    pts = node_points(grid)
    absB = np.abs(B(pts))
    mask = interior_mask(grid)
    # gauge ring data log(lambda_D / |B|)
    ring = -np.log1p(-np.abs(pts[~mask]) ** 2) - np.log(absB[~mask])
    return _Discretization(grid, laplacian_matrix(grid), pts, absB, 4.0 * absB**2, mask, ring)


@dataclass
class PerronState:
    """Current density ``|B| e^w`` of the sweep on the global grid.

    ``w`` is the node vector of the gauge; ``sweep_round`` counts completed
    rounds and ``last_update_max`` is the largest pointwise increase of
    ``log lambda`` in the last round.
    """

    B: FiniteBlaschke
    w: np.ndarray
    disc: _Discretization
    sweep_round: int = 0
    last_update_max: float = np.inf

    @property
    def zero_set(self) -> MultiplicitySequence:
        return self.B.zeros

    @property
    def grid(self) -> PolarGrid:
        return self.disc.grid

    @classmethod
    def from_density(cls, lam: ConformalDensity, zero_set=None, n_r: int = 128,
                     n_theta: int = 256, r_max: float = GRID_R_MAX,
                     ring: str = "hyperbolic") -> "PerronState":
        """Sample ``lam`` on the global grid.  ``ring="hyperbolic"`` puts
        ``log lambda_D`` on the Dirichlet ring (the boundary behaviour of
        maximal metrics); ``ring="input"`` keeps the input values there."""
        zs = lam.zero_set if zero_set is None else zero_set
        if not isinstance(zs, MultiplicitySequence):
            zs = MultiplicitySequence.from_points(zs)
        B = from_zeros(zs)
        disc = _discretize(B, n_r, n_theta, r_max)
        with np.errstate(divide="ignore", invalid="ignore"):
            w = np.log(np.asarray(lam(disc.points), dtype=float)) - np.log(disc.absB)
        # at a zero node use the limit of lambda/|B| from a nearby point
        bad = ~np.isfinite(w)
        if bad.any():
            near = disc.points[bad] + 1e-7
            w[bad] = np.log(lam(near)) - np.log(np.abs(B(near)))
        if ring == "hyperbolic":
            w[~disc.mask] = disc.ring
        elif ring != "input":
            raise ParameterError("ring must be 'hyperbolic' or 'input'")
        return cls(B, w, disc)

    def values(self) -> np.ndarray:
        """Density at the nodes, grid-shaped."""
        return to_values(self.disc.absB * np.exp(self.w), self.grid)

    def field_values(self) -> np.ndarray:
        """``log lambda`` minus ``log |B|`` at the nodes, grid-shaped."""
        return to_values(self.w, self.grid)

    def density(self, name: str = "perron") -> ConformalDensity:
        return grid_density(self, name)


def _nodes_in(disc: _Discretization, disks: list) -> np.ndarray:
    sel = np.zeros(disc.points.size, dtype=bool)
    for c, r in disks:
        sel |= np.abs(disc.points - c) < r
    return sel & disc.mask


def _modify(state: PerronState, disks: list) -> tuple:
    """Solve the gauge equation on the nodes inside ``disks`` (disjoint,
    solved as one block) with the current values as Dirichlet data, then
    take the pointwise max."""
    disc = state.disc
    sel = _nodes_in(disc, disks)
    if not sel.any():
        return state, 0.0
    v, _, _ = newton_masked(disc.L, disc.kvec, state.w, sel, tol=1e-12)
    w = np.maximum(state.w, v)
    upd = float(np.max(w - state.w))
    return replace(state, w=w), upd


def modify_on_disk(state: PerronState, K: tuple) -> PerronState:
    """Modification on the disk ``K = (center, radius)``: the density on the
    nodes of ``K`` becomes ``max(lambda, e^v)`` with ``v`` the curvature -4
    solution carrying the values of ``log lambda`` on the rest of the grid.
    Nodes outside ``K`` are untouched."""
    c, r = K
    c = complex(c)
    for a in state.zero_set.points:
        if abs(a - c) < r:
            raise ConfigurationError(f"disk {K} contains the zero {a}; use modify_on_zero_disk")
    return _modify(state, [(c, float(r))])[0]


def modify_on_zero_disk(state: PerronState, j: int, radius: Optional[float] = None) -> PerronState:
    """Modification on the disk around the ``j``-th distinct zero.

    The update is ``max(lambda, |B| e^w)`` with ``Laplace w = 4 |B|^2 e^{2w}``,
    which keeps the zero of order ``m_j``.
    """
    disks = zero_disk_radii(state.zero_set)
    check_zero_disks(disks)
    if not 0 <= j < len(disks):
        raise ParameterError(f"no zero with index {j}")
    c, r = disks[j]
    if radius is not None:
        r = float(radius)
        others = [d for i, d in enumerate(disks) if i != j]
        check_zero_disks(others + [(c, r)])
    return _modify(state, [(c, r)])[0]


@dataclass
class SweepReport:
    rounds: int
    converged: bool
    update_history: list
    monotone: bool
    n_cover: int
    n_colors: int
    wall_time: float = 0.0
    discrete_residual: float = float("nan")
    polish_update: float = 0.0
    state: Optional["PerronState"] = field(default=None, repr=False)

    def to_json(self, include_time: bool = False) -> dict:
        out = {"rounds": self.rounds, "converged": self.converged,
               "update_history": [float(u) for u in self.update_history],
               "monotone": self.monotone, "n_cover": self.n_cover,
               "n_colors": self.n_colors, "discrete_residual": float(self.discrete_residual),
               "polish_update": float(self.polish_update)}
        if include_time:
            out["wall_time"] = self.wall_time
        return out


def perron_sweep(C, config: Optional[SweepConfig] = None, state: Optional[PerronState] = None):
    """Maximal curvature -4 pseudometric with zero set ``C``.

    Each round modifies the zero disks, then the cover disks grouped by
    color (disks of one color are disjoint and solved together).  Returns
    ``(density, report)``; a sweep that runs out of rounds returns the
    partial result with ``report.converged = False``.
    """
    t0 = time.perf_counter()
    if not isinstance(C, MultiplicitySequence):
        C = MultiplicitySequence.from_points(C)
    config = config or SweepConfig.hexagonal(C)
    check_zero_disks(config.zero_disks)
    if state is None:
        B = from_zeros(C)
        seed = seed_metric(B) if C.total else _scaled_hyperbolic(0.9)
        state = PerronState.from_density(seed, C, config.n_r, config.n_theta, config.r_max)
    zero_pts = C.points
    plain = [(complex(c), float(r)) for c, r in config.cover
             if not np.any(np.abs(zero_pts - c) < r)]
    hit = [(complex(c), float(r)) for c, r in config.cover
           if np.any(np.abs(zero_pts - c) < r)]
    gap = 3.0 * float(np.max(np.diff(state.grid.radii)))
    # cover disks that contain a zero are modified as zero disks (same gauge)
    zero_groups = _color(list(config.zero_disks) + hit, gap)
    groups = _color(plain, gap)
    history = []
    monotone = True
    converged = False
    for rnd in range(config.rounds):
        upd = 0.0
        before = state.w
        for group in zero_groups + groups:
            state, u = _modify(state, group)
            upd = max(upd, u)
        monotone &= bool(np.all(state.w >= before - 1e-12))
        state = replace(state, sweep_round=rnd + 1, last_update_max=upd)
        history.append(upd)
        logger.debug("sweep round %d: max update %.3e", rnd + 1, upd)
        if upd <= config.tol:
            converged = True
            break
    polish_update = 0.0
    if converged and config.polish:
        before = state.w
        state, polish_update = _modify(state, [(0j, config.r_max + 1.0)])
        monotone &= bool(np.all(state.w >= before - 1e-12))
    disc = state.disc
    F = (disc.L @ state.w - disc.kvec * np.exp(2 * state.w))[disc.mask]
    scale = 1.0 + np.max(disc.kvec[disc.mask] * np.exp(2 * state.w[disc.mask]))
    report = SweepReport(state.sweep_round, converged, history, monotone, len(config.cover),
                         len(zero_groups) + len(groups), time.perf_counter() - t0,
                         float(np.max(np.abs(F)) / scale), polish_update, state)
    if not converged:
        logger.warning("Perron sweep stopped after %d rounds (update %.2e)", state.sweep_round,
                       history[-1] if history else np.nan)
    return state.density(), report


def _scaled_hyperbolic(c: float) -> ConformalDensity:
    base = hyperbolic()
    return ConformalDensity(lambda z: c * base(z), base.log_laplacian, name=f"{c}*hyperbolic")


def discrete_maximal(C, n_r: int = 128, n_theta: int = 256, r_max: float = GRID_R_MAX) -> PerronState:
    """The limit of the sweep computed directly: one Newton solve of the
    gauge equation on the whole grid (used to cross-check the sweep)."""
    if not isinstance(C, MultiplicitySequence):
        C = MultiplicitySequence.from_points(C)
    B = from_zeros(C)
    state = PerronState.from_density(seed_metric(B), C, n_r, n_theta, r_max)
    disc = state.disc
    w, _, _ = newton_masked(disc.L, disc.kvec, state.w, disc.mask, tol=1e-12)
    return replace(state, w=w)


# ---------------------------------------------------------------------------
# grid-backed densities
# ---------------------------------------------------------------------------


def _periodic_spline(grid: PolarGrid, values: np.ndarray, pad: int = 4) -> RectBivariateSpline:
    th = grid.angles
    th_ext = np.concatenate([th[-pad:] - 2 * np.pi, th, th[:pad] + 2 * np.pi])
    v_ext = np.concatenate([values[:, -pad:], values, values[:, :pad]], axis=1)
    return RectBivariateSpline(grid.radii, th_ext, v_ext, kx=3, ky=3)


def grid_density(state: PerronState, name: str = "perron") -> ConformalDensity:
    """Density ``|B| e^w`` with ``w`` interpolated by bicubic splines in
    ``(r, theta)``.  The Laplacian of ``log lambda`` comes from the discrete
    Laplacian of ``w`` (``log |B|`` is harmonic), so curvature is checked
    against the discrete equation the grid actually solves."""
    grid = state.grid
    B = state.B
    disc = state.disc
    sw = _periodic_spline(grid, to_values(state.w, grid))
    # q = L_h w / (4 |B|^2 e^{2w}) is smooth (it equals 1 at the discrete
    # solution); interpolating q keeps the curvature accurate near zeros
    rhs = disc.kvec * np.exp(2 * state.w)
    q = np.ones_like(rhs)
    ok = disc.mask & (disc.absB > 1e-8)
    q[ok] = (disc.L @ state.w)[ok] / rhs[ok]
    sq = _periodic_spline(grid, to_values(q, grid))
    R = grid.r_max

    def _eval(spl, z):
        z = as_complex(z)
        r = np.abs(z)
        if np.any(r > R):
            raise DomainError(f"grid density is only defined on |z| <= {R}")
        th = np.mod(np.angle(z), 2 * np.pi)
        return spl.ev(r.ravel(), th.ravel()).reshape(z.shape)

    def ev(z):
        z = as_complex(z)
        return np.abs(B(z)) * np.exp(_eval(sw, z))

    def lap(z):
        z = as_complex(z)
        return 4.0 * _eval(sq, z) * (np.abs(B(z)) * np.exp(_eval(sw, z))) ** 2

    return ConformalDensity(ev, lap, B.zeros, "grid", name)


# ---------------------------------------------------------------------------
# boundary integral criterion
# ---------------------------------------------------------------------------


def boundary_integral_criterion(lam: ConformalDensity, r_schedule=None, n: int = 1024,
                                tol: float = 1e-6) -> dict:
    """``I(r) = int_0^{2pi} log(lambda/lambda_D)(r e^{it}) dt`` along the
    schedule.  Verdict ``maximal-consistent`` when ``|I|`` is nonincreasing
    and ends below ``tol``, ``not-maximal`` when it does not decrease,
    ``undecided`` otherwise."""
    if r_schedule is None:
        r_schedule = 1.0 - 2.0 ** -np.arange(1, 17)
    base = hyperbolic()
    vals = []
    for r in r_schedule:
        vals.append(float(circle_integrate(lambda z: np.log(lam(z) / base(z)), float(r), n)))
    a = np.abs(vals)
    decreasing = bool(np.all(np.diff(a) <= 1e-12 * (1 + a[:-1])))
    if decreasing and a[-1] <= tol:
        verdict = "maximal-consistent"
    elif not decreasing or a[-1] >= 0.5 * a[0]:
        verdict = "not-maximal"
    else:
        verdict = "undecided"
    return {"radii": [float(r) for r in r_schedule], "values": vals, "verdict": verdict}


# ---------------------------------------------------------------------------
# Schwarz-Pick refinement and boundary probes
# ---------------------------------------------------------------------------


def _hyperbolic_derivative(f, z):
    w, dw = f(z)
    return np.abs(dw) / (1.0 - np.abs(w) ** 2)


def _contains(big: MultiplicitySequence, small: MultiplicitySequence, tol: float = 1e-6) -> bool:
    pts, mult = big.points, big.multiplicities.copy()
    for p, m in small.entries:
        d = np.abs(pts - p)
        i = int(np.argmin(d)) if d.size else -1
        if i < 0 or d[i] > tol or mult[i] < m:
            return False
        mult[i] -= m
    return True


@dataclass
class DominanceReport:
    max_ratio: float
    witness: complex
    passed: bool
    chain_strict: bool
    tol: float
    F: FiniteBlaschke

    def to_json(self) -> dict:
        return {"max_ratio": self.max_ratio, "witness": format_complex(self.witness), "passed": self.passed,
                "chain_strict": self.chain_strict, "tol": self.tol, "F": self.F.to_json()}


def schwarz_pick_refinement(f, C_star, samples=None, budget: int = 1000, seed: int = 0,
                            tol: float = 1e-6, r_max: float = 0.95) -> DominanceReport:
    """Compare ``|f'|/(1-|f|^2)`` with ``|F'|/(1-|F|^2)`` where ``F`` is the
    maximal Blaschke product with critical set ``C_star``."""
    if not isinstance(C_star, MultiplicitySequence):
        C_star = MultiplicitySequence.from_points(C_star)
    if isinstance(f, FiniteBlaschke) and not _contains(critical_points(f), C_star):
        raise ParameterError("C_star is not contained in the critical set of f")
    F = from_critical_points(C_star)
    fm, Fm = as_map(f), as_map(F)
    if samples is None:
        samples = sample_points(budget, seed, r_max, C_star.points, 1e-3)
    z = as_complex(samples)
    top = _hyperbolic_derivative(fm, z)
    bottom = _hyperbolic_derivative(Fm, z)
    ratio = top / bottom
    k = int(np.argmax(ratio))
    chain = bool(np.all(bottom * (1.0 - np.abs(z) ** 2) < 1.0)) if C_star.total else True
    return DominanceReport(float(ratio[k]), complex(z[k]), bool(ratio[k] <= 1.0 + tol), chain,
                           tol, F)


@dataclass
class BoundaryProbeReport:
    zeta: complex
    delta: float
    samples: list
    values: list
    verdict: str
    limit: float

    def to_json(self) -> dict:
        return {"zeta": format_complex(self.zeta), "delta": self.delta,
                "samples": [format_complex(complex(s)) for s in self.samples],
                "values": [float(v) for v in self.values], "verdict": self.verdict,
                "limit": self.limit}


def boundary_probe(f, zeta, delta: float = np.pi / 4, count: int = 17, depth: float = 1e-5,
                   alpha: float = np.pi, tol: float = 1e-3) -> BoundaryProbeReport:
    """``(1-|z|^2)|f'(z)|/(1-|f(z)|^2)`` along a Stolz approach to ``zeta``.

    Samples are ``zeta (1 + r e^{i alpha})`` with ``r`` geometric from 1/2
    down to ``depth``.  Verdict ``->1`` when the last value is within
    ``tol`` of 1, ``->other`` when the last three values agree to ``tol``
    elsewhere, ``no-limit-detected`` otherwise.
    """
    if count < 1 or not 0 < depth < 0.5:
        raise ParameterError("probe needs count >= 1 and depth in (0, 1/2)")
    stolz_sample(zeta, delta, 1, alpha)  # validates zeta, delta and alpha
    r = 0.5 * (depth / 0.5) ** (np.arange(count) / max(count - 1, 1))
    pts = complex(zeta) * (1.0 + r * np.exp(1j * alpha))
    fm = as_map(f)
    vals = (1.0 - np.abs(pts) ** 2) * _hyperbolic_derivative(fm, pts)
    last = float(vals[-1])
    if abs(last - 1.0) <= tol:
        verdict = "->1"
    elif count >= 3 and np.ptp(vals[-3:]) <= tol:
        verdict = "->other"
    else:
        verdict = "no-limit-detected"
    return BoundaryProbeReport(complex(zeta), float(delta), list(pts), list(map(float, vals)),
                               verdict, last)
