"""Conformal densities on the disk, their Gauss curvature, pullbacks and the
comparison checks for curvature bounded by -4.

A density is stored as an evaluator ``z -> lambda(z)``.  Closed-form
densities may also carry the Laplacian of ``log lambda`` in closed form; the
curvature is then exact, otherwise a five-point stencil is used.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from .blaschke import FiniteBlaschke, MultiplicitySequence, as_map, critical_points
from .disk_core import as_complex, mobius_automorphism
from .errors import DomainError, GuardedPointError, IndeterminateOrderError, ParameterError

logger = logging.getLogger(__name__)

FD_STEP = 1e-3
GUARD_FACTOR = 10.0
TOL_ANALYTIC = 1e-8
TOL_FD = 1e-3


@dataclass(frozen=True)
class ConformalDensity:
    """``lambda(z) |dz|`` on (a subset of) the unit disk.

    Parameters
    ----------
    evaluator : callable
        Vectorized ``z -> lambda(z) >= 0``.
    log_laplacian : callable, optional
        Closed form of ``Laplace(log lambda)``.  When absent the curvature
        falls back to finite differences.
    zero_set : MultiplicitySequence
        Declared zeros with their orders.
    backing : {"closed-form", "grid"}
    singular : tuple of complex
        Points where ``lambda`` is infinite (punctures); samplers avoid them.
    """

    evaluator: Callable
    log_laplacian: Optional[Callable] = None
    zero_set: MultiplicitySequence = field(default_factory=MultiplicitySequence)
    backing: str = "closed-form"
    name: str = "custom"
    singular: tuple = ()

    def __call__(self, z):
        return self.evaluator(z)

    @property
    def tolerance(self) -> float:
        if self.backing == "closed-form" and self.log_laplacian is not None:
            return TOL_ANALYTIC
        return TOL_FD

    def excluded_points(self) -> np.ndarray:
        return np.concatenate([self.zero_set.points, np.asarray(self.singular, dtype=complex)])


@dataclass
class CurvatureReport:
    samples: np.ndarray
    curvature: np.ndarray
    max_violation: float
    tolerance: float

    @property
    def passed(self) -> bool:
        return self.max_violation <= self.tolerance

    def to_json(self) -> dict:
        return {
            "n_samples": int(self.samples.size),
            "max_violation": float(self.max_violation),
            "tolerance": float(self.tolerance),
            "passed": bool(self.passed),
        }


# ---------------------------------------------------------------------------
# built-in densities
# ---------------------------------------------------------------------------


def hyperbolic() -> ConformalDensity:
    """``1/(1-|z|^2)``, curvature -4."""

    def lam(z):
        z = as_complex(z)
        return 1.0 / (1.0 - np.abs(z) ** 2)

    def lap(z):
        return 4.0 * lam(z) ** 2

    return ConformalDensity(lam, lap, name="hyperbolic")


def punctured_hyperbolic() -> ConformalDensity:
    """``1/(2|w| log(1/|w|))`` on the punctured disk, curvature -4."""

    def lam(w):
        m = np.abs(as_complex(w))
        return 1.0 / (2.0 * m * np.log(1.0 / m))

    return ConformalDensity(lam, lambda w: 4.0 * lam(w) ** 2, name="punctured-hyperbolic",
                            singular=(0j,))


def lambda_alpha(alpha: float) -> ConformalDensity:
    """``(alpha+1) |w|^{-|alpha|} / (1 - |w|^{2(alpha+1)})`` for ``-1 < alpha < 0``.

    The pullback of the hyperbolic density under a branch of ``w^{alpha+1}``;
    curvature -4 on the punctured disk.
    """
    if not -1.0 < alpha < 0.0:
        raise ParameterError("lambda_alpha needs -1 < alpha < 0")
    p = alpha + 1.0

    def lam(w):
        m = np.abs(as_complex(w))
        return p * m ** (-abs(alpha)) / (-np.expm1(2.0 * p * np.log(m)))

    return ConformalDensity(lam, lambda w: 4.0 * lam(w) ** 2, name=f"lambda_alpha({alpha})",
                            singular=(0j,))


def constant(c: float = 1.0) -> ConformalDensity:
    if c <= 0:
        raise ParameterError("constant density must be positive")
    return ConformalDensity(lambda z: np.full(np.shape(z), float(c)),
                            lambda z: np.zeros(np.shape(z)), name=f"constant({c})")


def scaled(lam: ConformalDensity, c: float) -> ConformalDensity:
    """``c * lambda``; same log-Laplacian, curvature divided by ``c**2``."""
    return ConformalDensity(lambda z: c * lam(z), lam.log_laplacian, lam.zero_set,
                            lam.backing, f"{c}*{lam.name}", lam.singular)


def pointwise_max(lam: ConformalDensity, mu: ConformalDensity) -> ConformalDensity:
    zeros = [(p, m) for p, m in lam.zero_set.entries
             if p in set(mu.zero_set.points.tolist())]
    return ConformalDensity(lambda z: np.maximum(lam(z), mu(z)), None,
                            MultiplicitySequence(tuple(zeros)), "closed-form",
                            f"max({lam.name},{mu.name})")


def pullback(lam: ConformalDensity, f, zero_set: Optional[MultiplicitySequence] = None,
             name: Optional[str] = None) -> ConformalDensity:
    """``lambda(f(z)) |f'(z)|``.

    For a :class:`FiniteBlaschke` the zero set (critical points plus
    preimages of zeros of ``lambda``) is computed; for other maps it must be
    declared.  When ``lambda`` has a closed-form log-Laplacian, so does the
    pullback: ``|f'|^2 (Laplace log lambda)(f)``.
    """
    fn = as_map(f)
    if zero_set is None:
        if isinstance(f, FiniteBlaschke):
            pts = list(critical_points(f).expanded()) if f.degree >= 1 else []
            for p, m in lam.zero_set.entries:
                pts.extend(_preimages(f, p) * m)
            zero_set = MultiplicitySequence.from_points(pts, cluster_radius=1e-6)
        else:
            zero_set = MultiplicitySequence(())

    def ev(z):
        w, dw = fn(as_complex(z))
        return lam(w) * np.abs(dw)

    def lap(z):
        w, dw = fn(as_complex(z))
        return np.abs(dw) ** 2 * lam.log_laplacian(w)

    return ConformalDensity(ev, lap if lam.log_laplacian is not None else None, zero_set,
                            lam.backing, name or f"pullback({lam.name})")


def _preimages(B: FiniteBlaschke, w: complex) -> list:
    num, den = B.rational_form()
    n = max(num.size, den.size)
    num = np.concatenate([np.zeros(n - num.size), num])
    den = np.concatenate([np.zeros(n - den.size), den])
    roots = np.roots(num - w * den)
    return [complex(r) for r in roots if abs(r) < 1.0]


def developing_density(f) -> ConformalDensity:
    """``|f'|/(1-|f|^2)``, the pullback of the hyperbolic density."""
    return pullback(hyperbolic(), f)


def seed_density(B: FiniteBlaschke) -> ConformalDensity:
    """``|B(z)| / (1 - |z|^2)``: curvature at most -4, zeros those of ``B``."""
    base = hyperbolic()

    def ev(z):
        return np.abs(B(as_complex(z))) * base(z)

    return ConformalDensity(ev, None, B.zeros, "closed-form", "seed")


# ---------------------------------------------------------------------------
# curvature
# ---------------------------------------------------------------------------


def fd_step(lam: ConformalDensity, z) -> np.ndarray:
    z = as_complex(z)
    # relative truncation error for lambda_D is about 2 (h / (1 - |z|))^2
    h = np.minimum(FD_STEP, 0.005 * (1.0 - np.abs(z)))
    sing = np.asarray(lam.singular, dtype=complex)
    if sing.size:
        dist = np.min(np.abs(z[..., None] - sing), axis=-1)
        h = np.minimum(h, 0.01 * dist)
    zeros = lam.zero_set.points
    if zeros.size:
        # lambda ~ |z - z_j|^m there, and the stencil error is divided by lambda^2
        dist = np.min(np.abs(z[..., None] - zeros), axis=-1)
        h = np.minimum(h, 0.02 * dist)
    return h


def guard_radius() -> float:
    return GUARD_FACTOR * FD_STEP


def _regular_log(lam: ConformalDensity) -> Callable:
    """``log lambda - sum m_j log|z - z_j|`` over the declared zeros.

    The subtracted part is harmonic off the zeros, so both sides share a
    Laplacian, but the remainder is smooth and finite differences stay
    accurate next to a zero where ``lambda**2`` is tiny.
    """
    pts, mult = lam.zero_set.points, lam.zero_set.multiplicities

    def L(z):
        out = np.log(lam(z))
        for p, m in zip(pts, mult):
            out = out - m * np.log(np.abs(z - p))
        return out

    return L


def curvature_of(lam: ConformalDensity, z, guard: bool = True):
    """Gauss curvature ``-Laplace(log lambda) / lambda^2``."""
    z = as_complex(z)
    scalar = z.ndim == 0
    z = np.atleast_1d(z)
    if np.any(np.abs(z) >= 1.0):
        raise DomainError("curvature requested outside the unit disk")
    excl = lam.excluded_points()
    if guard and excl.size:
        dist = np.min(np.abs(z[..., None] - excl), axis=-1)
        if np.any(dist < guard_radius()):
            k = int(np.argmin(dist))
            raise GuardedPointError(f"z = {z.ravel()[k]} lies in the guard annulus of a zero")
    val = lam(z)
    if lam.log_laplacian is not None:
        lap = lam.log_laplacian(z)
    else:
        h = fd_step(lam, z)
        L = _regular_log(lam)
        lap = (L(z + h) + L(z - h) + L(z + 1j * h) + L(z - 1j * h) - 4.0 * L(z)) / h**2
    kappa = -lap / val**2
    return float(kappa[0]) if scalar else kappa


def sample_points(n: int, seed: int = 0, r_max: float = 0.95,
                  exclude: np.ndarray = np.array([], dtype=complex),
                  margin: float = 0.0) -> np.ndarray:
    """Deterministic area-uniform samples in ``|z| < r_max`` avoiding
    ``margin``-neighbourhoods of ``exclude``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < n:
        m = 2 * (n - len(out))
        z = r_max * np.sqrt(rng.random(m)) * np.exp(2j * np.pi * rng.random(m))
        if exclude.size:
            z = z[np.min(np.abs(z[:, None] - exclude[None, :]), axis=1) >= margin]
        out.extend(z.tolist())
    return np.array(out[:n], dtype=complex)


def sk_check(lam: ConformalDensity, budget: int = 1000, seed: int = 0, r_max: float = 0.95,
             tol: Optional[float] = None, samples=None) -> CurvatureReport:
    """Check ``kappa <= -4`` on samples; reports ``max(kappa + 4)``.

    Tolerance defaults to 1e-8 for closed-form curvature and 1e-3 for
    finite differences or grid data.
    """
    if samples is None:
        margin = 2.0 * guard_radius()
        samples = sample_points(budget, seed, r_max, lam.excluded_points(), margin)
    samples = as_complex(samples)
    kappa = curvature_of(lam, samples)
    tol = lam.tolerance if tol is None else tol
    viol = float(np.max(kappa + 4.0)) if samples.size else 0.0
    return CurvatureReport(samples, kappa, viol, tol)


def ahlfors_check(lam: ConformalDensity, budget: int = 1000, seed: int = 0,
                  r_max: float = 0.95, tol: float = 1e-6, samples=None) -> dict:
    """Max of ``lambda(z) (1 - |z|^2)``; at most 1 for curvature <= -4."""
    if samples is None:
        samples = sample_points(budget, seed, r_max, np.asarray(lam.singular, dtype=complex), 1e-3)
    samples = as_complex(samples)
    ratio = lam(samples) * (1.0 - np.abs(samples) ** 2)
    k = int(np.argmax(ratio))
    worst = float(ratio[k])
    return {"max_ratio": worst, "witness": complex(samples[k]), "tolerance": tol,
            "passed": worst <= 1.0 + tol}


def zero_order_at(lam: ConformalDensity, z0, k_min: int = 8, k_max: int = 16,
                  n_theta: int = 16, slope_tol: float = 0.1) -> tuple[int, float]:
    """Order of the zero of ``lambda`` at ``z0`` and the limit
    ``lambda(z) / |z - z0|^m``, from a log-log fit on circles of radius
    ``2^-k``."""
    z0 = complex(z0)
    ks = np.arange(k_min, k_max + 1)
    radii = 2.0 ** (-ks.astype(float))
    theta = np.arange(n_theta) * (2 * np.pi / n_theta)
    means = np.array([np.mean(lam(z0 + r * np.exp(1j * theta))) for r in radii])
    if np.any(means <= 0) or not np.all(np.isfinite(means)):
        raise IndeterminateOrderError("density not positive near the probe point")
    slope, _ = np.polyfit(np.log(radii), np.log(means), 1)
    m = int(round(slope))
    if abs(slope - m) > slope_tol or m < 0:
        raise IndeterminateOrderError(f"log-log slope {slope:.3f} is not an integer order")
    ratios = means / radii**m
    # first-order extrapolation r -> 0
    limit = float(2.0 * ratios[-1] - ratios[-2])
    return m, limit


def developing_residual(lam: ConformalDensity, f, samples=None, budget: int = 500,
                        seed: int = 0) -> float:
    """``max |lambda - |f'|/(1-|f|^2)| / (1 + lambda)`` over samples."""
    if samples is None:
        samples = sample_points(budget, seed, 0.95)
    samples = as_complex(samples)
    w, dw = as_map(f)(samples)
    dev = np.abs(dw) / (1.0 - np.abs(w) ** 2)
    val = lam(samples)
    return float(np.max(np.abs(val - dev) / (1.0 + val)))


def random_automorphism(rng: np.random.Generator):
    a = 0.8 * np.sqrt(rng.random()) * np.exp(2j * np.pi * rng.random())
    rot = np.exp(2j * np.pi * rng.random())

    def T(w):
        w = as_complex(w)
        val = rot * mobius_automorphism(a, w)
        der = rot * (abs(a) ** 2 - 1.0) / (1.0 - np.conj(a) * w) ** 2
        return val, der

    return T


def compose_maps(outer, inner):
    outer, inner = as_map(outer), as_map(inner)

    def fn(z):
        w, dw = inner(z)
        v, dv = outer(w)
        return v, dv * dw

    return fn


def equality_propagation_check(lam: ConformalDensity, mu: ConformalDensity, z0,
                               samples=None, tol: float = 1e-8, budget: int = 500,
                               seed: int = 0) -> dict:
    """If ``lambda <= mu`` and the ratio reaches 1 at ``z0``, check that the
    ratio equals 1 on the whole sample set."""
    z0 = complex(z0)
    if samples is None:
        samples = sample_points(budget, seed, 0.95)
    samples = as_complex(samples)
    near = z0 + 1e-6 * np.exp(2j * np.pi * np.arange(8) / 8)
    r0 = float(np.mean(lam(near) / mu(near)))
    ratio = lam(samples) / mu(samples)
    if np.max(ratio) > 1.0 + tol or abs(r0 - 1.0) > tol:
        return {"verdict": "not-applicable", "ratio_at_z0": r0,
                "max_ratio": float(np.max(ratio))}
    dev = float(np.max(np.abs(ratio - 1.0)))
    return {"verdict": "equal" if dev <= tol else "not-equal", "ratio_at_z0": r0,
            "max_deviation": dev}
