"""Finite Blaschke products: evaluation, critical points and the inverse
problem of building a product from a prescribed critical set.
"""

from __future__ import annotations

import itertools
import logging
import warnings
from dataclasses import dataclass
from typing import Callable, Iterable

import mpmath
import numpy as np
from scipy.optimize import linear_sum_assignment

from .disk_core import R_MAX_DEFAULT, as_complex, pseudohyperbolic
from .errors import (
    DegenerateInputError,
    DomainError,
    NonConvergenceError,
    ParameterError,
)

logger = logging.getLogger(__name__)

CLUSTER_RADIUS = 1e-6
# double-precision roots of an m-fold critical point spread by ~eps**(1/m),
# which is above 1e-3 from m = 4 on; closer roots are recomputed in mpmath
CROWDED_SEPARATION = 0.05


@dataclass(frozen=True)
class MultiplicitySequence:
    """Distinct disk points with positive integer multiplicities."""

    entries: tuple = ()

    def __post_init__(self):
        cleaned = []
        for p, m in self.entries:
            p = complex(p)
            m = int(m)
            if m < 1:
                raise ParameterError("multiplicities must be positive integers")
            if abs(p) >= 1.0:
                raise DomainError(f"point {p} is not inside the unit disk")
            cleaned.append((p, m))
        for (p, _), (q, _) in itertools.combinations(cleaned, 2):
            if p == q:
                raise ParameterError(f"duplicate point {p}; merge it into one multiplicity")
        object.__setattr__(self, "entries", tuple(cleaned))

    @classmethod
    def from_points(cls, points: Iterable, cluster_radius: float = 0.0):
        """Collapse a list with repetitions into (point, multiplicity) pairs.

        Points closer than ``cluster_radius`` in pseudohyperbolic distance are
        merged into their mean.
        """
        groups: list[list[complex]] = []
        for p in points:
            p = complex(p)
            for g in groups:
                if p == g[0] or (cluster_radius > 0 and pseudohyperbolic(p, g[0]) < cluster_radius):
                    g.append(p)
                    break
            else:
                groups.append([p])
        return cls(tuple((complex(np.mean(g)), len(g)) for g in groups))

    @property
    def points(self) -> np.ndarray:
        return np.array([p for p, _ in self.entries], dtype=complex)

    @property
    def multiplicities(self) -> np.ndarray:
        return np.array([m for _, m in self.entries], dtype=int)

    @property
    def total(self) -> int:
        return int(sum(m for _, m in self.entries))

    def expanded(self) -> np.ndarray:
        return np.array([p for p, m in self.entries for _ in range(m)], dtype=complex)

    def __len__(self):
        return len(self.entries)

    def to_json(self) -> list:
        return [{"point": format_complex(p), "multiplicity": m} for p, m in self.entries]


def format_complex(z: complex) -> str:
    """``a+bj`` text form used in flags and reports."""
    z = complex(z)
    return f"{z.real!r}{'+' if z.imag >= 0 or np.isnan(z.imag) else '-'}{abs(z.imag)!r}j"


def parse_complex(text: str) -> complex:
    try:
        return complex(text.replace(" ", ""))
    except ValueError as exc:
        raise ParameterError(f"cannot parse complex number {text!r}") from exc


def _factor_constants(a: np.ndarray) -> np.ndarray:
    # factor c (a - z)/(1 - conj(a) z); c = conj(a)/|a|, and c = -1 at a = 0 so the factor is z
    c = -np.ones_like(a)
    nz = a != 0
    c[nz] = np.exp(-1j * np.angle(a[nz]))  # safe for subnormal a
    return c


@dataclass(frozen=True)
class FiniteBlaschke:
    rotation: complex
    zeros: MultiplicitySequence

    def __post_init__(self):
        rot = complex(self.rotation)
        if abs(abs(rot) - 1.0) > 1e-14:
            raise ParameterError("Blaschke rotation must be unimodular")
        object.__setattr__(self, "rotation", rot)

    @property
    def degree(self) -> int:
        return self.zeros.total

    @property
    def is_degenerate(self) -> bool:
        """True for the empty product (a unimodular constant)."""
        return self.degree == 0

    def __call__(self, z):
        return self.evaluate(z)[0]

    def evaluate(self, z):
        """Return ``(B(z), B'(z))``; exact product form, valid at the zeros."""
        z = as_complex(z)
        a = self.zeros.expanded()
        scalar = z.ndim == 0
        z = np.atleast_1d(z)
        if a.size == 0:
            val = np.full(z.shape, self.rotation, dtype=complex)
            der = np.zeros(z.shape, dtype=complex)
        else:
            c = _factor_constants(a)
            zz = z[..., None]
            den = 1.0 - np.conj(a) * zz
            f = c * (a - zz) / den
            fp = c * (np.abs(a) ** 2 - 1.0) / den**2
            # product rule via prefix/suffix products, fine at zeros of B
            ones = np.ones(z.shape + (1,), dtype=complex)
            prefix = np.concatenate([ones, np.cumprod(f, axis=-1)[..., :-1]], axis=-1)
            suffix = np.concatenate(
                [np.cumprod(f[..., ::-1], axis=-1)[..., ::-1][..., 1:], ones], axis=-1
            )
            val = self.rotation * prefix[..., -1] * f[..., -1]
            der = self.rotation * np.sum(prefix * suffix * fp, axis=-1)
        if scalar:
            return complex(val[0]), complex(der[0])
        return val, der

    def rational_form(self):
        """Numerator and denominator coefficient arrays (highest power first)."""
        a = self.zeros.expanded()
        c = _factor_constants(a)
        num = np.array([self.rotation * np.prod(c)], dtype=complex)
        den = np.array([1.0 + 0j])
        for ak in a:
            num = np.polymul(num, [-1.0, ak])
            den = np.polymul(den, [-np.conj(ak), 1.0])
        return num, den

    def taylor_coefficients(self, c: complex, order: int) -> np.ndarray:
        """Coefficients ``B^{(k)}(c)/k!`` for ``k = 0..order``."""
        return _taylor_at(self.zeros.expanded(), complex(c), order) * self.rotation

    def to_json(self) -> dict:
        return {
            "rotation": format_complex(self.rotation),
            "degree": self.degree,
            "zeros": self.zeros.to_json(),
        }


def _taylor_at(a: np.ndarray, c: complex, order: int) -> np.ndarray:
    # each factor k (a - z)/(1 - conj(a) z) expanded in powers of (z - c)
    out = np.zeros(order + 1, dtype=complex)
    out[0] = 1.0
    consts = _factor_constants(a)
    for ak, ck in zip(a, consts):
        D = 1.0 - np.conj(ak) * c
        geo = (np.conj(ak) / D) ** np.arange(order + 1)
        lin = np.zeros(order + 1, dtype=complex)
        lin[0] = ak - c
        if order >= 1:
            lin[1] = -1.0
        series = np.convolve(lin, geo)[: order + 1] * (ck / D)
        out = np.convolve(out, series)[: order + 1]
    return out


def from_zeros(zeros, rotation: complex = 1.0) -> FiniteBlaschke:
    """Finite Blaschke product with the given zeros.

    ``zeros`` may be a :class:`MultiplicitySequence` or a plain list of points
    (repetitions count as multiplicity).
    """
    if not isinstance(zeros, MultiplicitySequence):
        zeros = MultiplicitySequence.from_points(zeros)
    B = FiniteBlaschke(rotation, zeros)
    if B.is_degenerate:
        logger.info("empty zero set: Blaschke product is the constant %s", rotation)
    return B


# ---------------------------------------------------------------------------
# Blaschke condition
# ---------------------------------------------------------------------------


def blaschke_sum(points, horizon: int, ratio_threshold: float = 0.8):
    """Partial sum of ``1 - |z_j|`` for ``j <= horizon`` and an advisory verdict.

    ``points`` is a sequence, an iterator, or a callable ``j -> z_j``
    (``j >= 1``).  The verdict compares the last two dyadic blocks of terms:
    a ratio near 1 is the signature of harmonic-type growth.  It is a
    heuristic, never a proof.
    """
    if callable(points):
        seq = (points(j) for j in range(1, horizon + 1))
    else:
        seq = itertools.islice(iter(points), horizon)
    terms = np.array([1.0 - abs(complex(z)) for z in seq], dtype=float)
    if np.any(terms <= 0):
        raise DomainError("Blaschke sum needs points inside the unit disk")
    partial = float(np.sum(terms))
    if terms.size < horizon:
        return partial, "convergent-so-far"
    n = terms.size
    if n < 8:
        return partial, "convergent-so-far"
    csum = np.concatenate([[0.0], np.cumsum(terms)])
    last = csum[n] - csum[n // 2]
    prev = csum[n // 2] - csum[n // 4]
    ratio = last / prev if prev > 0 else 0.0
    verdict = "divergent-trend" if ratio > ratio_threshold else "convergent-so-far"
    return partial, verdict


# ---------------------------------------------------------------------------
# critical points
# ---------------------------------------------------------------------------


def _derivative_numerator(num: np.ndarray, den: np.ndarray) -> np.ndarray:
    return np.polysub(np.polymul(np.polyder(num), den), np.polymul(num, np.polyder(den)))


def _mp_roots(B: FiniteBlaschke, dps: int = 60) -> np.ndarray:
    a = B.zeros.expanded()
    with mpmath.workdps(dps):
        num = [mpmath.mpc(1)]
        den = [mpmath.mpc(1)]
        for ak in a:
            akm = mpmath.mpc(ak.real, ak.imag)
            num = _mp_polymul(num, [mpmath.mpc(-1), akm])
            den = _mp_polymul(den, [-mpmath.conj(akm), mpmath.mpc(1)])
        dnum = _mp_polyder(num)
        dden = _mp_polyder(den)
        N = _mp_polysub(_mp_polymul(dnum, den), _mp_polymul(num, dden))
        while len(N) > 1 and abs(N[0]) < mpmath.mpf(10) ** (-dps + 10):
            N = N[1:]
        if len(N) == 1:
            return np.array([], dtype=complex)
        roots = mpmath.polyroots(N, maxsteps=400, extraprec=4 * dps)
    return np.array([complex(r) for r in roots], dtype=complex)


def _mp_polymul(p, q):
    out = [mpmath.mpc(0)] * (len(p) + len(q) - 1)
    for i, pi in enumerate(p):
        for j, qj in enumerate(q):
            out[i + j] += pi * qj
    return out


def _mp_polyder(p):
    n = len(p) - 1
    return [p[i] * (n - i) for i in range(n)] or [mpmath.mpc(0)]


def _mp_polysub(p, q):
    n = max(len(p), len(q))
    p = [mpmath.mpc(0)] * (n - len(p)) + list(p)
    q = [mpmath.mpc(0)] * (n - len(q)) + list(q)
    return [x - y for x, y in zip(p, q)]


def _polish(coeffs: np.ndarray, roots: np.ndarray, steps: int = 4) -> np.ndarray:
    d = np.polyder(coeffs)
    out = roots.astype(complex)
    for _ in range(steps):
        dv = np.polyval(d, out)
        ok = np.abs(dv) > 0
        out[ok] -= np.polyval(coeffs, out[ok]) / dv[ok]
    return out


def critical_points(B: FiniteBlaschke, cluster_radius: float = CLUSTER_RADIUS) -> MultiplicitySequence:
    """Zeros of ``B'`` inside the disk, with multiplicity.

    A degree ``m`` product has exactly ``m - 1`` of them.
    """
    m = B.degree
    if m < 1:
        raise DegenerateInputError("critical points need a Blaschke product of degree >= 1")
    if m == 1:
        return MultiplicitySequence(())
    num, den = B.rational_form()
    N = _derivative_numerator(num, den)
    roots = np.roots(N).astype(complex)
    inside = roots[np.abs(roots) < 1.0]
    crowded = inside.size != m - 1 or (
        inside.size > 1
        and min(pseudohyperbolic(p, q) for p, q in itertools.combinations(inside, 2)) < CROWDED_SEPARATION
    )
    if crowded:
        roots = _mp_roots(B)
        inside = roots[np.abs(roots) < 1.0]
    else:
        inside = _polish(N, inside)
    if inside.size != m - 1:
        raise NonConvergenceError(
            f"found {inside.size} critical points inside the disk, expected {m - 1}",
            residual=float(np.max(np.abs(B.evaluate(inside)[1]))) if inside.size else None,
        )
    return MultiplicitySequence.from_points(inside, cluster_radius=cluster_radius)


def match_points(found: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float]:
    """Minimum-weight assignment in pseudohyperbolic distance.

    Returns ``found`` reordered to align with ``target`` and the worst
    matched distance.
    """
    found = np.asarray(found, dtype=complex)
    target = np.asarray(target, dtype=complex)
    if found.size != target.size:
        return found, np.inf
    if found.size == 0:
        return found, 0.0
    cost = pseudohyperbolic(found[:, None], target[None, :])
    rows, cols = linear_sum_assignment(cost)
    order = np.empty_like(rows)
    order[cols] = rows
    return found[order], float(cost[rows, cols].max())


def cluster_match_error(found, C: MultiplicitySequence) -> float:
    """Worst pseudohyperbolic distance between each target point and the
    centroid of the found points assigned to it.

    A root of multiplicity ``m`` splits under round-off into ``m`` roots
    spread by about ``eps**(1/m)``, while their centroid stays accurate to
    round-off, so multiple points are compared through centroids.
    """
    if isinstance(found, MultiplicitySequence):
        found = found.expanded()
    target = C.expanded()
    aligned, worst = match_points(found, target)
    if not np.isfinite(worst):
        return worst
    out = 0.0
    for c, _m in C.entries:
        group = aligned[target == c]
        out = max(out, float(pseudohyperbolic(group.mean(), c)))
    return out


# ---------------------------------------------------------------------------
# inverse problem
# ---------------------------------------------------------------------------


def _target_polynomial(C: MultiplicitySequence) -> np.ndarray:
    T = np.array([1.0 + 0j])
    for p in C.expanded():
        T = np.polymul(T, [1.0, -p])
    return T


def _residual(coeffs: np.ndarray, T: np.ndarray) -> np.ndarray:
    """Remainder of the derivative numerator modulo the target polynomial.

    ``coeffs`` are the lower coefficients of the monic polynomial whose roots
    are the free zeros; the remainder vanishes iff every target critical
    point is a zero of ``F'`` of the required order.
    """
    p = np.concatenate([[1.0 + 0j], coeffs])
    num = np.polymul([1.0, 0.0], p)
    den = np.conj(p[::-1])
    N = _derivative_numerator(num, den)
    _, rem = np.polydiv(N, T)
    n = T.size - 1
    rem = np.concatenate([np.zeros(max(0, n - rem.size), dtype=complex), rem])[-n:]
    return rem


def _real_residual(x: np.ndarray, T: np.ndarray) -> np.ndarray:
    n = x.size // 2
    r = _residual(x[:n] + 1j * x[n:], T)
    return np.concatenate([r.real, r.imag])


def _fd_jacobian(x: np.ndarray, T: np.ndarray, step: float = 1e-6) -> np.ndarray:
    J = np.empty((x.size, x.size))
    for k in range(x.size):
        e = np.zeros_like(x)
        e[k] = step
        J[:, k] = (_real_residual(x + e, T) - _real_residual(x - e, T)) / (2 * step)
    return J


def _newton(x0: np.ndarray, T: np.ndarray, tol: float, max_iter: int = 60):
    x = x0.copy()
    r = _real_residual(x, T)
    norm = np.linalg.norm(r, np.inf)
    history = [norm]
    for _ in range(max_iter):
        if norm <= tol:
            return x, norm, history
        J = _fd_jacobian(x, T)
        try:
            dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        except np.linalg.LinAlgError:
            break
        step = 1.0
        for _ in range(30):
            xt = x + step * dx
            n = xt.size // 2
            roots = np.roots(np.concatenate([[1.0 + 0j], xt[:n] + 1j * xt[n:]]))
            if roots.size == 0 or np.max(np.abs(roots)) < 1.0:
                rt = _real_residual(xt, T)
                nt = np.linalg.norm(rt, np.inf)
                if nt < norm or nt <= tol:
                    break
            step *= 0.5
        else:
            break
        x, r, norm = xt, rt, nt
        history.append(norm)
    return x, norm, history


def from_critical_points(C, tol: float = 1e-13, r_max: float = R_MAX_DEFAULT,
                         homotopy_steps: int = 16, certify_tol: float = 1e-8) -> FiniteBlaschke:
    """Degree ``n + 1`` Blaschke product whose critical set is ``C``.

    Normalized by ``F(0) = 0`` with a positive first nonzero Taylor
    coefficient at the origin.  Newton runs on the coefficients of the monic
    polynomial carrying the ``n`` free zeros; if it fails from the initial
    guess (free zeros at the targets) the targets are scaled ``t C`` for
    ``t = 0 -> 1``, starting from ``z^{n+1}``.
    """
    if not isinstance(C, MultiplicitySequence):
        C = MultiplicitySequence.from_points(C)
    n = C.total
    if n == 0:
        return from_zeros(MultiplicitySequence(((0j, 1),)))
    if np.any(np.abs(C.points) > r_max):
        warnings.warn(
            f"critical point beyond r_max={r_max}; the inversion is ill-conditioned",
            RuntimeWarning,
            stacklevel=2,
        )
    T = _target_polynomial(C)
    scale = max(1.0, float(np.max(np.abs(T))))

    guess = np.poly(C.expanded())[1:]
    x0 = np.concatenate([guess.real, guess.imag])
    x, norm, history = _newton(x0, T, tol * scale)
    if norm > tol * scale:
        logger.info("direct Newton stalled at %.3e; running homotopy", norm)
        x = np.zeros(2 * n)
        for t in np.linspace(0.0, 1.0, homotopy_steps + 1)[1:]:
            Ct = MultiplicitySequence(tuple((t * p, m) for p, m in C.entries))
            Tt = _target_polynomial(Ct)
            x, norm, hist = _newton(x, Tt, tol * max(1.0, float(np.max(np.abs(Tt)))))
            history.extend(hist)
        if norm > tol * scale:
            raise NonConvergenceError(
                "critical-point inversion did not converge after homotopy",
                residual=norm, iterate=x[:n] + 1j * x[n:], trace=history,
            )
    coeffs = np.concatenate([[1.0 + 0j], x[:n] + 1j * x[n:]])
    free = np.roots(coeffs)
    free = _polish_zeros(free, C)
    free = np.where(np.abs(free) < 1e-15, 0.0, free)
    F = from_zeros(MultiplicitySequence.from_points(np.concatenate([[0j], free])))
    _certify(F, C, certify_tol)
    return F


def _taylor_residual(b: np.ndarray, C: MultiplicitySequence) -> np.ndarray:
    a = np.concatenate([[0j], b])
    parts = [_taylor_at(a, c, m)[1:] for c, m in C.entries]
    r = np.concatenate(parts)
    return np.concatenate([r.real, r.imag])


def _polish_zeros(b: np.ndarray, C: MultiplicitySequence, step: float = 1e-6,
                  iters: int = 6) -> np.ndarray:
    """Newton on the free zeros themselves, residual = Taylor coefficients of
    ``F`` of orders ``1..m_j`` at each target; finite-difference Jacobian."""
    n = b.size
    if n > 1 and np.min(pseudohyperbolic(b[:, None], b[None, :]) + np.eye(n)) < 1e-4:
        return b
    x = np.concatenate([b.real, b.imag])
    r = _taylor_residual(b, C)
    for _ in range(iters):
        J = np.empty((r.size, x.size))
        for k in range(x.size):
            e = np.zeros_like(x)
            e[k] = step
            J[:, k] = (_taylor_residual(x[:n] + e[:n] + 1j * (x[n:] + e[n:]), C)
                       - _taylor_residual(x[:n] - e[:n] + 1j * (x[n:] - e[n:]), C)) / (2 * step)
        dx = np.linalg.lstsq(J, -r, rcond=None)[0]
        xt = x + dx
        bt = xt[:n] + 1j * xt[n:]
        if np.any(np.abs(bt) >= 1.0):
            break
        rt = _taylor_residual(bt, C)
        if np.linalg.norm(rt, np.inf) >= np.linalg.norm(r, np.inf):
            break
        x, r = xt, rt
    return x[:n] + 1j * x[n:]


def _certify(F: FiniteBlaschke, C: MultiplicitySequence, tol: float) -> None:
    found = critical_points(F)
    if found.total != C.total:
        raise NonConvergenceError(
            f"inverted product has {found.total} critical points, expected {C.total}"
        )
    worst = cluster_match_error(found, C)
    if worst > tol:
        raise NonConvergenceError(
            f"critical points off target by {worst:.3e} (pseudohyperbolic)", residual=worst
        )


# ---------------------------------------------------------------------------
# degree by winding number
# ---------------------------------------------------------------------------


def degree_by_winding(f, r: float, n: int = 512, max_samples: int = 1 << 20) -> int:
    """Winding number of ``t -> f(r e^{it})`` about 0.

    ``f`` is a :class:`FiniteBlaschke` or any callable on complex arrays.
    The sampling doubles until consecutive samples differ in argument by
    less than ``pi/4``.
    """
    if not 0 < r <= 1:
        raise ParameterError("winding radius must lie in (0, 1]")
    fun: Callable = f if not isinstance(f, FiniteBlaschke) else f.__call__
    while True:
        t = np.arange(n) * (2 * np.pi / n)
        vals = np.asarray(fun(r * np.exp(1j * t)), dtype=complex)
        if np.min(np.abs(vals)) < 1e-10:
            raise DegenerateInputError(f"map vanishes (nearly) on |z| = {r}; retry with another radius")
        steps = np.angle(np.roll(vals, -1) / vals)
        if np.max(np.abs(steps)) < np.pi / 4 or n >= max_samples:
            return int(round(np.sum(steps) / (2 * np.pi)))
        n *= 2


def compose(outer: FiniteBlaschke, inner: FiniteBlaschke) -> Callable:
    """``z -> (outer(inner(z)), d/dz)``, an analytic self-map with derivative."""

    def fn(z):
        w, dw = inner.evaluate(z)
        v, dv = outer.evaluate(w)
        return v, dv * dw

    return fn


def as_map(f) -> Callable:
    """Normalize a map to a callable returning ``(value, derivative)``."""
    if isinstance(f, FiniteBlaschke):
        return f.evaluate
    return f
