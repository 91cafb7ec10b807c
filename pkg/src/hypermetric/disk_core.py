"""Geometry, grids, Green's function and quadrature on the open unit disk.

Points are plain Python/numpy complex numbers; every function here accepts
scalars or arrays and broadcasts.  Angles are radians, tolerances absolute.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import (
    DegenerateInputError,
    DomainError,
    NonFiniteError,
    ParameterError,
    SingularityError,
)

TWO_PI = 2.0 * np.pi

#: default truncation radius of the computational disk
R_MAX_DEFAULT = 0.995


def as_complex(z) -> np.ndarray:
    return np.asarray(z, dtype=complex)


def _scalar_or_array(template, value):
    if np.ndim(template) == 0:
        return value.item() if isinstance(value, np.ndarray) else value
    return value


def mobius_automorphism(a, z):
    """Disk automorphism ``(a - z) / (1 - conj(a) z)``.

    It swaps ``a`` and ``0`` and is its own inverse.
    """
    a = as_complex(a)
    z = as_complex(z)
    if np.any(np.abs(a) >= 1.0):
        raise DomainError("mobius_automorphism needs |a| < 1")
    denom = 1.0 - np.conj(a) * z
    if np.any(np.abs(denom) < 1e-300):
        raise DegenerateInputError("mobius denominator vanishes")
    return _scalar_or_array(z, (a - z) / denom)


def pseudohyperbolic(z, w):
    """Pseudohyperbolic distance ``|z - w| / |1 - conj(w) z|``."""
    z = as_complex(z)
    w = as_complex(w)
    out = np.abs(z - w) / np.abs(1.0 - np.conj(w) * z)
    return _scalar_or_array(np.broadcast(z, w), out)


def poincare_density(z):
    """Density ``1/(1-|z|^2)`` of the curvature -4 hyperbolic metric."""
    z = as_complex(z)
    m2 = np.abs(z) ** 2
    if np.any(m2 >= 1.0):
        raise DomainError("poincare_density is defined only for |z| < 1")
    return _scalar_or_array(z, 1.0 / (1.0 - m2))


def green_function_disk(z, xi, center=0.0, radius=1.0):
    """Green's function of the disk ``|w - center| < radius``.

    Normalized so that ``g(z, xi) ~ -log|z - xi|`` at the pole, hence
    ``-Laplace g = 2 pi delta``.  For the unit disk this is
    ``log|1 - conj(xi) z| - log|z - xi|``.
    """
    if radius <= 0:
        raise ParameterError("radius must be positive")
    zl = (as_complex(z) - center) / radius
    xl = (as_complex(xi) - center) / radius
    if np.any(np.abs(zl) >= 1.0) or np.any(np.abs(xl) >= 1.0):
        raise DomainError("green_function_disk: points must lie inside the disk")
    gap = np.abs(zl - xl)
    if np.any(gap < 1e-14):
        raise SingularityError("green_function_disk: z coincides with xi")
    out = np.log(np.abs(1.0 - np.conj(xl) * zl)) - np.log(gap)
    return _scalar_or_array(np.broadcast(zl, xl), out)


def green_mass(z, center=0.0, radius=1.0):
    """Closed form of the area integral of ``g(z, .)`` over the disk."""
    zl = as_complex(z) - center
    return 0.5 * np.pi * (radius**2 - np.abs(zl) ** 2)


# ---------------------------------------------------------------------------
# grids
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class PolarGrid:
    """Tensor polar grid on the disk ``|z - center| <= r_max``.

    ``radii[0] == 0`` is the axis node (all angles represent one point) and
    ``radii[-1] == r_max`` is the Dirichlet ring, excluded from the interior.
    """

    radii: np.ndarray
    n_theta: int
    center: complex = 0.0

    def __post_init__(self):
        radii = np.asarray(self.radii, dtype=float)
        object.__setattr__(self, "radii", radii)
        if radii.ndim != 1 or radii.size < 3:
            raise ParameterError("PolarGrid needs at least three radii")
        if radii[0] != 0.0:
            raise ParameterError("PolarGrid radii must start at the axis r = 0")
        if np.any(np.diff(radii) <= 0):
            raise ParameterError("PolarGrid radii must be strictly increasing")
        if self.n_theta < 4:
            raise ParameterError("PolarGrid needs at least four angles")
        if abs(self.center) + radii[-1] >= 1.0:
            raise ParameterError("PolarGrid must sit strictly inside the unit disk")

    @classmethod
    def uniform(cls, n_r: int, n_theta: int, r_max: float = R_MAX_DEFAULT, center=0.0):
        """``n_r`` radial intervals of equal length."""
        return cls(np.linspace(0.0, r_max, n_r + 1), n_theta, complex(center))

    @classmethod
    def stretched(cls, n_r: int, n_theta: int, r_max: float = R_MAX_DEFAULT, center=0.0):
        """Radii ``r_max * sin(pi s / 2)``, clustering quadratically at the ring."""
        s = np.linspace(0.0, 1.0, n_r + 1)
        radii = r_max * np.sin(0.5 * np.pi * s)
        radii[-1] = r_max
        return cls(radii, n_theta, complex(center))

    @property
    def r_max(self) -> float:
        return float(self.radii[-1])

    @property
    def n_r(self) -> int:
        return self.radii.size - 1

    @property
    def shape(self) -> tuple[int, int]:
        return (self.radii.size, self.n_theta)

    @property
    def angles(self) -> np.ndarray:
        return np.arange(self.n_theta) * (TWO_PI / self.n_theta)

    @property
    def dtheta(self) -> float:
        return TWO_PI / self.n_theta

    @property
    def points(self) -> np.ndarray:
        """Complex node positions, shape ``(n_r + 1, n_theta)``."""
        return self.center + self.radii[:, None] * np.exp(1j * self.angles)[None, :]

    def node_index(self) -> np.ndarray:
        """Unknown index per node; the whole axis row maps to index 0.

        Dirichlet ring nodes get ``-1``.
        """
        idx = np.empty(self.shape, dtype=np.int64)
        idx[0, :] = 0
        n_int = (self.radii.size - 2) * self.n_theta
        idx[1:-1, :] = 1 + np.arange(n_int).reshape(self.radii.size - 2, self.n_theta)
        idx[-1, :] = -1
        return idx

    def cell_areas(self) -> np.ndarray:
        """Areas of the control cells around each node (axis row holds the
        axis disk once, in column 0)."""
        r = self.radii
        half = 0.5 * (r[1:] + r[:-1])
        outer = np.concatenate([half, [r[-1]]])
        inner = np.concatenate([[0.0], half])
        ring = 0.5 * (outer**2 - inner**2) * self.dtheta
        areas = np.repeat(ring[:, None], self.n_theta, axis=1)
        areas[0, :] = 0.0
        areas[0, 0] = np.pi * half[0] ** 2
        return areas


@dataclass
class GridField:
    """Real scalar field sampled at the nodes of a :class:`PolarGrid`."""

    grid: PolarGrid
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values, dtype=float)
        if values.shape != self.grid.shape:
            raise ParameterError(f"field shape {values.shape} != grid shape {self.grid.shape}")
        bad = ~np.isfinite(values)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            raise NonFiniteError(
                f"non-finite field value at node (ring {i}, angle {j})", node=(int(i), int(j))
            )
        self.values = values

    @property
    def axis_value(self) -> float:
        return float(self.values[0, 0])

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.values)))


# ---------------------------------------------------------------------------
# quadrature
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    kind: str = "area"
    radius: float = 1.0
    center: complex = 0.0
    meta: dict = field(default_factory=dict, compare=False)

    def measure(self) -> float:
        if self.kind == "area":
            return np.pi * self.radius**2
        return TWO_PI * self.radius


def _gauss_panels(edges: np.ndarray, order: int) -> tuple[np.ndarray, np.ndarray]:
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    nodes = 0.5 * (b - a) * x[None, :] + 0.5 * (b + a)
    weights = 0.5 * (b - a) * w[None, :]
    return nodes.ravel(), weights.ravel()


def area_rule(n_r: int, n_theta: int, radius: float = 1.0, center=0.0) -> QuadratureRule:
    """Midpoint in ``r`` times trapezoid in ``theta`` (second order)."""
    dr = radius / n_r
    r = (np.arange(n_r) + 0.5) * dr
    theta = np.arange(n_theta) * (TWO_PI / n_theta)
    nodes = center + (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(r * dr * (TWO_PI / n_theta), n_theta)
    return QuadratureRule(nodes, weights, "area", radius, complex(center),
                          {"rule": "midpoint", "n_r": n_r, "n_theta": n_theta})


def graded_area_rule(levels: int, n_theta: int, radius: float = 1.0, order: int = 8,
                     center=0.0) -> QuadratureRule:
    """Gauss panels on ``[0, R/2], [R/2, 3R/4], ...`` refined geometrically
    toward the rim, trapezoid in angle.  Suited to integrands carrying a
    ``1 - |z|^2`` weight."""
    edges = radius * np.concatenate([[0.0], 1.0 - 0.5 ** np.arange(1, levels + 1), [1.0]])
    r, wr = _gauss_panels(edges, order)
    theta = np.arange(n_theta) * (TWO_PI / n_theta)
    nodes = center + (r[:, None] * np.exp(1j * theta)[None, :]).ravel()
    weights = np.repeat(r * wr * (TWO_PI / n_theta), n_theta)
    return QuadratureRule(nodes, weights, "area", radius, complex(center),
                          {"rule": "graded", "levels": levels, "n_theta": n_theta})


def circle_rule(r: float, n: int, center=0.0) -> QuadratureRule:
    if not 0 < r:
        raise ParameterError("circle radius must be positive")
    theta = np.arange(n) * (TWO_PI / n)
    nodes = center + r * np.exp(1j * theta)
    weights = np.full(n, TWO_PI / n)
    return QuadratureRule(nodes, weights, "circle", r, complex(center))


def _checked_samples(f: Callable, nodes: np.ndarray) -> np.ndarray:
    vals = np.asarray(f(nodes))
    bad = ~np.isfinite(vals)
    if bad.any():
        k = int(np.argmax(bad))
        raise NonFiniteError(f"non-finite integrand at node {k} (z = {nodes[k]:.6g})", node=k)
    return vals


def area_integrate(f: Callable, rule: QuadratureRule):
    """Weighted sum of ``f`` over an area rule (raw area measure)."""
    return np.sum(_checked_samples(f, rule.nodes) * rule.weights)


def circle_integrate(f: Callable, r: float, n: int = 256, center=0.0):
    """Trapezoid approximation of ``int_0^{2 pi} f(center + r e^{it}) dt``."""
    if not 0 < r < 1:
        raise DomainError("circle_integrate needs 0 < r < 1")
    rule = circle_rule(r, n, center)
    return np.sum(_checked_samples(f, rule.nodes) * rule.weights)


# ---------------------------------------------------------------------------
# Stolz angles
# ---------------------------------------------------------------------------


def stolz_sample(zeta, delta: float, count: int, alpha: float = np.pi,
                 base: float = 0.5) -> np.ndarray:
    """Points ``zeta (1 + r e^{i alpha})`` with ``r = base**k``, ``k = 1..count``.

    ``alpha`` must lie in ``[pi/2 + delta, 3 pi/2 - delta]``; ``alpha = pi``
    is the radial approach.
    """
    if not 0 < delta < 0.5 * np.pi:
        raise ParameterError("Stolz aperture delta must lie in (0, pi/2)")
    if not (0.5 * np.pi + delta - 1e-12 <= alpha <= 1.5 * np.pi - delta + 1e-12):
        raise ParameterError("approach angle alpha outside the Stolz region")
    zeta = complex(zeta)
    if abs(abs(zeta) - 1.0) > 1e-14:
        raise DomainError("Stolz vertex must lie on the unit circle")
    r = base ** np.arange(1, count + 1)
    pts = zeta * (1.0 + r * np.exp(1j * alpha))
    keep = np.abs(pts) < 1.0
    return pts[keep]


def in_stolz_region(z, zeta, delta: float) -> np.ndarray:
    """Membership in ``{zeta (1 + r e^{i a}) : a in [pi/2+delta, 3pi/2-delta]}``."""
    w = np.conj(complex(zeta)) * as_complex(z) - 1.0
    return (np.abs(as_complex(z)) < 1.0) & (w.real <= -np.abs(w) * np.sin(delta) + 1e-15)
