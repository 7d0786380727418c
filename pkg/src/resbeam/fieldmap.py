"""Spatial power-density maps and aperture phase maps."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .geometry import ArrayLayout, CarrierSpec, _angles, element_gain

XOZ = "xOz"
XOY = "xOy"
APERTURE = "aperture"


@dataclass
class FieldGrid:
    plane: str
    axes: tuple  # (first-axis coords, second-axis coords)
    values: np.ndarray  # shape (len(axes[0]), len(axes[1]))
    mask: np.ndarray | None = None  # True where a point was too close to a source

    @property
    def shape(self):
        return self.values.shape


def grid_points(plane, a, b, offset=0.0):
    """3-D sample points for a plane.  ``xOz``: (x, z) at y=offset; ``xOy``: (x, y) at z=offset."""
    A, B = np.meshgrid(np.asarray(a, float), np.asarray(b, float), indexing="ij")
    if plane == XOZ:
        pts = np.stack([A, np.full_like(A, offset), B], axis=-1)
    elif plane == XOY:
        pts = np.stack([A, B, np.full_like(A, offset)], axis=-1)
    else:
        raise ValueError(f"unknown plane {plane!r}")
    return pts.reshape(-1, 3)


def radiated_field(layout: ArrayLayout, field, points, carrier: CarrierSpec, chunk=2048):
    """Coherent field at ``points`` from the array, seen by a unit-gain isotropic probe."""
    field = np.asarray(field)
    lam = carrier.wavelength
    k = carrier.wavenumber
    out = np.empty(points.shape[0], dtype=np.complex128)
    for start in range(0, points.shape[0], chunk):
        p = points[start:start + chunk]
        d = p[:, None, :] - layout.element_positions[None, :, :]
        L = np.linalg.norm(d, axis=2)
        hit = L == 0
        # a probe sitting on an element gets nothing from it
        L = np.where(hit, 1.0, L)
        th, ph = _angles(d / L[..., None], layout.normal, layout.u_axis, layout.v_axis)
        g = np.where(hit, 0.0, element_gain(layout.pattern, th, ph))
        h = lam / (4 * np.pi) / L * np.sqrt(g) * np.exp(1j * k * L)
        out[start:start + chunk] = h @ field
    return out


def sample_power(layout: ArrayLayout, field, plane, a, b, carrier: CarrierSpec, offset=0.0,
                 normalize=True) -> FieldGrid:
    """Power density on a plane, normalized to its maximum.

    Points closer than a quarter wavelength to any element are masked out
    (returned as NaN with ``mask`` set).
    """
    pts = grid_points(plane, a, b, offset)
    dmin = np.min(np.linalg.norm(pts[:, None, :] - layout.element_positions[None, :, :], axis=2), axis=1)
    mask = dmin < carrier.wavelength / 4
    val = np.abs(radiated_field(layout, field, pts, carrier)) ** 2
    val[mask] = np.nan
    if normalize:
        peak = np.nanmax(val)
        if peak > 0:
            val = val / peak
    shape = (len(a), len(b))
    return FieldGrid(plane, (np.asarray(a, float), np.asarray(b, float)), val.reshape(shape),
                     mask.reshape(shape))


def phase_map(layout: ArrayLayout, field) -> FieldGrid:
    """Per-element phase on the array grid, wrapped to ``(-pi, pi]``."""
    ph = np.angle(np.asarray(field)).reshape(layout.rows, layout.cols)
    ph = np.where(ph == -np.pi, np.pi, ph)
    iu = (np.arange(layout.rows) - (layout.rows - 1) / 2) * layout.spacing
    iv = (np.arange(layout.cols) - (layout.cols - 1) / 2) * layout.spacing
    return FieldGrid(APERTURE, (iu, iv), ph)


def phase_center(grid: FieldGrid):
    """Center ``(u0, v0)`` of the isophase circles of an aperture phase map.

    The phase is unwrapped along both grid axes and fitted with
    ``a (u^2 + v^2) + b u + c v + d``; the circles' common center is
    ``(-b / 2a, -c / 2a)``.
    """
    ph = np.unwrap(np.unwrap(grid.values, axis=1), axis=0)
    U, V = np.meshgrid(grid.axes[0], grid.axes[1], indexing="ij")
    A = np.stack([U.ravel() ** 2 + V.ravel() ** 2, U.ravel(), V.ravel(), np.ones(U.size)], axis=1)
    coef, *_ = np.linalg.lstsq(A, ph.ravel(), rcond=None)
    a, b, c, _ = coef
    return -b / (2 * a), -c / (2 * a)


def write_grid_csv(grid: FieldGrid, path, header=None):
    """Matrix CSV: first row is the second-axis coordinates, first column the first-axis ones."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header)
        w = csv.writer(fh)
        w.writerow([grid.plane] + [f"{v:.11e}" for v in grid.axes[1]])
        for coord, row in zip(grid.axes[0], grid.values):
            w.writerow([f"{coord:.11e}"] + [f"{v:.11e}" for v in row])
