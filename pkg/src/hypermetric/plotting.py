"""Deterministic SVG heatmaps of polar grid fields and densities."""

from __future__ import annotations

import io
import logging
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402
import numpy as np  # noqa: E402
from matplotlib.colors import LogNorm, Normalize  # noqa: E402

from .disk_core import GridField, PolarGrid  # noqa: E402
from .errors import ContractViolation, DegenerateInputError, ParameterError  # noqa: E402
from .metrics import ConformalDensity  # noqa: E402

logger = logging.getLogger(__name__)

STYLE = {
    "svg.hashsalt": "hypermetric",
    "svg.fonttype": "path",
    "font.size": 9,
    "axes.titlesize": 10,
    "image.cmap": "viridis",
}


def _field_from_density(lam: ConformalDensity, n: int = 64, r_max: float = 0.95) -> GridField:
    grid = PolarGrid.uniform(n, n, r_max=r_max)
    vals = np.asarray(lam(grid.points), dtype=float)
    return GridField(grid, vals)


def render_heatmap(field, path, scale: str = "linear", title: str = "",
                   label: str = "value") -> Path:
    """Write an SVG heatmap of a grid field (or a density sampled on a
    64 x 64 polar grid) with a colorbar.  Output bytes depend only on the
    inputs."""
    if scale not in ("linear", "log"):
        raise ParameterError("scale must be 'linear' or 'log'")
    if isinstance(field, ConformalDensity):
        field = _field_from_density(field)
    if not isinstance(field, GridField):
        raise ContractViolation("render_heatmap needs a GridField or a ConformalDensity")
    vals = np.asarray(field.values, dtype=float)
    if vals.size == 0:
        raise DegenerateInputError("empty grid")
    grid = field.grid
    if scale == "log":
        pos = vals[vals > 0]
        if pos.size == 0:
            raise DegenerateInputError("log scale needs positive values")
        norm = LogNorm(vmin=float(pos.min()), vmax=float(pos.max()))
        vals = np.where(vals > 0, vals, pos.min())
    else:
        lo, hi = float(vals.min()), float(vals.max())
        norm = Normalize(vmin=lo, vmax=hi if hi > lo else lo + 1.0)

    # cell edges in (theta, r); close the periodic seam
    r = grid.radii
    r_edges = np.concatenate([[0.0], 0.5 * (r[1:] + r[:-1]), [r[-1]]])
    th = grid.angles
    th_edges = np.concatenate([th - 0.5 * grid.dtheta, [th[-1] + 0.5 * grid.dtheta]])
    T, Rr = np.meshgrid(th_edges, r_edges)
    X = grid.center.real + Rr * np.cos(T)
    Y = grid.center.imag + Rr * np.sin(T)

    path = Path(path)
    with plt.rc_context(STYLE):
        fig, ax = plt.subplots(figsize=(4.8, 4.0))
        mesh = ax.pcolormesh(X, Y, vals, norm=norm, shading="flat", rasterized=True)
        ax.add_patch(plt.Circle((0, 0), 1.0, fill=False, lw=0.6, color="0.3"))
        ax.set_aspect("equal")
        ax.set_xlim(-1.02, 1.02)
        ax.set_ylim(-1.02, 1.02)
        ax.set_xlabel("Re z")
        ax.set_ylabel("Im z")
        if title:
            ax.set_title(title)
        fig.colorbar(mesh, ax=ax, label=label)
        buf = io.BytesIO()
        fig.savefig(buf, format="svg", metadata={"Date": None}, dpi=100)
        plt.close(fig)
    try:
        path.write_bytes(buf.getvalue())
    except OSError as exc:
        raise OSError(f"cannot write heatmap to {path}: {exc}") from exc
    logger.info("wrote %s", path)
    return path


def write_field_csv(field: GridField, path) -> Path:
    """Columnar CSV ``r,theta,value`` with a header row (axis node once)."""
    grid = field.grid
    path = Path(path)
    lines = ["r,theta,value"]
    lines.append(f"{0.0!r},{0.0!r},{float(field.values[0, 0])!r}")
    th = grid.angles
    for i in range(1, grid.radii.size):
        for j in range(grid.n_theta):
            lines.append(f"{float(grid.radii[i])!r},{float(th[j])!r},{float(field.values[i, j])!r}")
    try:
        path.write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write field CSV to {path}: {exc}") from exc
    return path
