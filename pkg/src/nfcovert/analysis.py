"""Numerical probes of the near-field cascade geometry and power heat maps.

The cascade-coherence probe quantifies how far two users' equivalent channels
through the surface are from orthogonal and from collinear; the ratio
dispersion measures how close a transmit vector comes to the amplitude
condition under which pure phase alignment focuses the beam; the heat map
samples received power for a single-antenna probe over an xy-region.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from .channel import ArrayGeometry, near_field_rows


@dataclass
class HeatmapGrid:
    """Normalized received power over a rectangular xy-region.

    `values[iy, ix]` belongs to the point (xs[ix], ys[iy]); for a nonzero
    field the maximum is exactly 1. An all-zero field skips normalization and
    carries the flag instead.
    """

    x0: float
    x1: float
    y0: float
    y1: float
    nx: int
    ny: int
    values: np.ndarray
    zero_field: bool = False

    @property
    def xs(self) -> np.ndarray:
        return np.linspace(self.x0, self.x1, self.nx)

    @property
    def ys(self) -> np.ndarray:
        return np.linspace(self.y0, self.y1, self.ny)

    def value_at(self, x: float, y: float) -> float:
        """Power of the grid cell nearest to (x, y)."""
        ix = int(np.argmin(np.abs(self.xs - x)))
        iy = int(np.argmin(np.abs(self.ys - y)))
        return float(self.values[iy, ix])


def equivalent_channel_inner_product(h1: np.ndarray, h2: np.ndarray,
                                     v: np.ndarray, G: np.ndarray):
    """Inner product and coherence of two cascades through the surface.

    Returns (|h1^H Theta G G^H Theta^H h2|, coherence in [0, 1]) where the
    coherence normalizes by the cascade norms; 1 means collinear cascades,
    0 orthogonal ones.
    """
    x1 = G.conj().T @ (v.conj() * h1)
    x2 = G.conj().T @ (v.conj() * h2)
    inner = abs(complex(np.vdot(x1, x2)))
    denom = float(np.linalg.norm(x1) * np.linalg.norm(x2))
    coherence = inner / denom if denom > 0 else 0.0
    return inner, float(min(1.0, coherence))


def focusing_ratio_dispersion(h1: np.ndarray, G: np.ndarray,
                              w: np.ndarray) -> float:
    """Coefficient of variation of |a_n|^2 / |b_n| with a = G w and
    b = diag(h1^H) G w.

    Zero means the amplitude condition for beam focusing holds exactly;
    entries with b_n = 0 are excluded (with a warning).
    """
    a = G @ w
    b = h1.conj() * a
    keep = np.abs(b) > 0.0
    if not np.all(keep):
        warnings.warn(f"excluded {int(np.sum(~keep))} entries with zero reference "
                      "amplitude from the ratio dispersion", RuntimeWarning,
                      stacklevel=2)
    if not np.any(keep):
        raise ValueError("all reference amplitudes are zero; dispersion undefined")
    ratios = np.abs(a[keep]) ** 2 / np.abs(b[keep])
    mean = float(np.mean(ratios))
    if mean == 0.0:
        return 0.0
    return float(np.std(ratios) / mean)


def heatmap(ris: ArrayGeometry, carrier_hz: float, G: np.ndarray,
            v: np.ndarray, W_RF: np.ndarray, W_BB: np.ndarray,
            region=(0.5, 25.0, 0.5, 25.0), nx: int = 200, ny: int = 200,
            chunk: int = 2048) -> HeatmapGrid:
    """Received power of a single-antenna probe over an xy-grid.

    Per grid point p the power is ||h(p)^H Theta G W_RF W_BB||^2 with h(p)
    the spherical-wave probe channel; the map is normalized to its maximum
    unless the whole field is zero (then flagged instead).
    """
    x0, x1, y0, y1 = region
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    t = v[:, None] * (G @ (W_RF @ W_BB))       # (N, L)

    xx, yy = np.meshgrid(xs, ys)               # (ny, nx)
    points = np.stack([xx.ravel(), yy.ravel(), np.zeros(nx * ny)], axis=1)
    power = np.empty(nx * ny)
    for start in range(0, points.shape[0], chunk):
        rows = near_field_rows(ris, points[start:start + chunk], carrier_hz)
        power[start:start + chunk] = np.sum(np.abs(rows @ t) ** 2, axis=1)
    values = power.reshape(ny, nx)

    peak = float(values.max())
    if peak <= 0.0:
        return HeatmapGrid(x0, x1, y0, y1, nx, ny, values, zero_field=True)
    return HeatmapGrid(x0, x1, y0, y1, nx, ny, values / peak)


def far_field_heatmap(ris: ArrayGeometry, carrier_hz: float, gain: float,
                      G: np.ndarray, v: np.ndarray, W_RF: np.ndarray,
                      W_BB: np.ndarray, region=(0.5, 25.0, 0.5, 25.0),
                      nx: int = 200, ny: int = 200) -> HeatmapGrid:
    """Planar-wave variant of `heatmap`: probe rows are surface steering
    vectors at each point's azimuth with one fixed amplitude gain, so the
    pattern depends on angle only."""
    from .channel import upa_response  # local import avoids a cycle at module load

    x0, x1, y0, y1 = region
    xs = np.linspace(x0, x1, nx)
    ys = np.linspace(y0, y1, ny)
    t = v[:, None] * (G @ (W_RF @ W_BB))
    lam = 299_792_458.0 / carrier_hz

    xx, yy = np.meshgrid(xs, ys)
    az = np.arctan2(yy.ravel(), xx.ravel())
    power = np.empty(az.size)
    for i, a in enumerate(az):
        row = gain * upa_response(a, 0.0, ris.n_y, ris.n_z, ris.spacing_m, lam)
        power[i] = float(np.sum(np.abs(row @ t) ** 2))
    values = power.reshape(ny, nx)
    peak = float(values.max())
    if peak <= 0.0:
        return HeatmapGrid(x0, x1, y0, y1, nx, ny, values, zero_field=True)
    return HeatmapGrid(x0, x1, y0, y1, nx, ny, values / peak)


def write_heatmap_csv(grid: HeatmapGrid, path: str):
    """Dense CSV: `# x0,x1,y0,y1,nx,ny` header then ny rows of nx powers."""
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(f"# {grid.x0},{grid.x1},{grid.y0},{grid.y1},{grid.nx},{grid.ny}\n")
        for iy in range(grid.ny):
            fh.write(",".join(format(x, ".10e") for x in grid.values[iy]) + "\n")


def read_heatmap_csv(path: str) -> HeatmapGrid:
    with open(path, "r", encoding="utf-8") as fh:
        header = fh.readline()
        if not header.startswith("#"):
            raise ValueError("heat-map CSV must start with the extent header")
        x0, x1, y0, y1, nx, ny = (float(tok) for tok in header[1:].strip().split(","))
        values = np.loadtxt(fh, delimiter=",", ndmin=2)
    grid = HeatmapGrid(x0, x1, y0, y1, int(nx), int(ny), values,
                       zero_field=bool(values.max() <= 0.0))
    return grid
