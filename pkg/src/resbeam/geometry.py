"""Planar array layouts, pairwise link geometry and element gain patterns.

Every array carries a local frame ``(u, v, n)``: ``n`` is the boresight normal,
``u`` and ``v`` span the aperture.  Elevation ``theta`` is measured from ``n``
and azimuth ``phi`` from ``u``, so a BS facing +z and an MT facing -z share
the same ``u = +x`` axis.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy import constants

from .errors import DegenerateGeometryError, InvalidParameterError

SPEED_OF_LIGHT = constants.c

ISOTROPIC = "isotropic"
MICROSTRIP = "microstrip"

# Patch width and resonant length, in wavelengths.  Half-wave dimensions put the
# E-plane null exactly at grazing incidence.
_PATCH_WIDTH = 0.5
_PATCH_LENGTH = 0.5


@dataclass(frozen=True)
class CarrierSpec:
    f_c: float = 30e9
    W: float = 500e6
    c: float = SPEED_OF_LIGHT

    def __post_init__(self):
        if not self.f_c > 0:
            raise InvalidParameterError(f"carrier frequency must be positive, got {self.f_c}")
        if not self.W > 0:
            raise InvalidParameterError(f"bandwidth must be positive, got {self.W}")
        if not self.c > 0:
            raise InvalidParameterError(f"propagation speed must be positive, got {self.c}")

    @property
    def wavelength(self) -> float:
        return self.c / self.f_c

    @property
    def wavenumber(self) -> float:
        return 2.0 * np.pi / self.wavelength


@dataclass(frozen=True)
class AntennaPattern:
    kind: str = MICROSTRIP
    peak_gain: float = np.pi

    def __post_init__(self):
        if self.kind not in (ISOTROPIC, MICROSTRIP):
            raise InvalidParameterError(f"unknown antenna pattern {self.kind!r}")
        if not self.peak_gain > 0:
            raise InvalidParameterError("peak gain must be positive")


@dataclass(frozen=True, eq=False)
class ArrayLayout:
    rows: int
    cols: int
    spacing: float
    center: np.ndarray
    normal: np.ndarray
    pattern: AntennaPattern = field(default_factory=AntennaPattern)
    u_axis: np.ndarray = None
    v_axis: np.ndarray = None
    element_positions: np.ndarray = None

    @property
    def size(self) -> int:
        return self.rows * self.cols

    @property
    def local_coords(self) -> np.ndarray:
        """Element offsets from the center along ``(u, v)``, shape ``(size, 2)``."""
        rel = self.element_positions - self.center
        return np.stack([rel @ self.u_axis, rel @ self.v_axis], axis=1)

    @property
    def center_index(self) -> int:
        """Index of the element nearest the array center (upper-middle for even grids)."""
        return (self.rows // 2) * self.cols + self.cols // 2

    def index(self, row: int, col: int) -> int:
        return row * self.cols + col


def _frame(normal):
    n = np.asarray(normal, dtype=float)
    ref = np.array([1.0, 0.0, 0.0])
    if abs(n @ ref) > 0.9:
        ref = np.array([0.0, 1.0, 0.0])
    u = ref - (ref @ n) * n
    u /= np.linalg.norm(u)
    v = np.cross(n, u)
    return u, v


def build_planar_array(rows, cols, spacing, center=(0.0, 0.0, 0.0), normal=(0.0, 0.0, 1.0),
                       pattern=None) -> ArrayLayout:
    """Rectangular ``rows x cols`` grid with pitch ``spacing`` centered on ``center``.

    Rows run along the local ``u`` axis and columns along ``v``; element ``(i, j)``
    has flat index ``i * cols + j``.
    """
    if int(rows) != rows or int(cols) != cols or rows < 1 or cols < 1:
        raise InvalidParameterError(f"rows and cols must be positive integers, got {rows}x{cols}")
    if not spacing > 0:
        raise InvalidParameterError(f"element spacing must be positive, got {spacing}")
    n = np.asarray(normal, dtype=float)
    if n.shape != (3,) or not np.isclose(np.linalg.norm(n), 1.0, atol=1e-9):
        raise InvalidParameterError("normal must be a unit 3-vector")
    n = n / np.linalg.norm(n)
    c = np.asarray(center, dtype=float)
    if c.shape != (3,):
        raise InvalidParameterError("center must be a 3-vector")
    u, v = _frame(n)
    rows, cols = int(rows), int(cols)
    iu = (np.arange(rows) - (rows - 1) / 2.0) * spacing
    iv = (np.arange(cols) - (cols - 1) / 2.0) * spacing
    gu, gv = np.meshgrid(iu, iv, indexing="ij")
    pos = c + gu.reshape(-1, 1) * u + gv.reshape(-1, 1) * v
    return ArrayLayout(rows, cols, float(spacing), c, n, pattern or AntennaPattern(), u, v, pos)


def subarrays(layout: ArrayLayout, split_rows: int, split_cols: int) -> list[ArrayLayout]:
    """Partition a layout into ``split_rows x split_cols`` contiguous sub-grids."""
    if layout.rows % split_rows or layout.cols % split_cols:
        raise InvalidParameterError(
            f"{layout.rows}x{layout.cols} grid does not split evenly into {split_rows}x{split_cols}")
    r, c = layout.rows // split_rows, layout.cols // split_cols
    coords = layout.local_coords
    out = []
    for a in range(split_rows):
        for b in range(split_cols):
            idx = [layout.index(a * r + i, b * c + j) for i in range(r) for j in range(c)]
            off = coords[idx].mean(axis=0)
            center = layout.center + off[0] * layout.u_axis + off[1] * layout.v_axis
            out.append(build_planar_array(r, c, layout.spacing, center, layout.normal, layout.pattern))
    return out


def element_gain(pattern: AntennaPattern, theta, phi):
    """Linear gain of one element toward ``(theta, phi)`` in its local frame.

    The microstrip pattern is the two-slot cavity model of a rectangular patch,
    scaled so that broadside equals ``peak_gain``.  Angles behind the ground plane
    (``theta > pi/2``) radiate nothing.
    """
    theta = np.asarray(theta, dtype=float)
    phi = np.asarray(phi, dtype=float)
    front = np.cos(theta) >= -1e-12
    if pattern.kind == ISOTROPIC:
        return np.broadcast_to(np.float64(pattern.peak_gain), np.broadcast(theta, phi).shape).copy()
    st, ct = np.sin(theta), np.cos(theta)
    sp, cp = np.sin(phi), np.cos(phi)
    width_term = np.sinc(_PATCH_WIDTH * st * sp)  # np.sinc(x) = sin(pi x)/(pi x)
    length_term = np.cos(np.pi * _PATCH_LENGTH * st * cp)
    e_theta = width_term * length_term * cp
    e_phi = -width_term * length_term * ct * sp
    g = pattern.peak_gain * (e_theta ** 2 + e_phi ** 2)
    return np.where(front, g, 0.0)


def _angles(direction, normal, u, v):
    """Elevation/azimuth of unit ``direction`` rows in the frame ``(u, v, normal)``."""
    cos_t = np.clip(direction @ normal, -1.0, 1.0)
    theta = np.arccos(cos_t)
    phi = np.arctan2(direction @ v, direction @ u)
    return theta, phi


def pair_geometry(tx: ArrayLayout, rx: ArrayLayout, rx_slice=slice(None)):
    """Distances and angles for every (rx, tx) pair, each shaped ``(n_rx, n_tx)``.

    Returns ``L, theta_t, phi_t, theta_r, phi_r``.
    """
    d = rx.element_positions[rx_slice, None, :] - tx.element_positions[None, :, :]
    L = np.linalg.norm(d, axis=2)
    if np.any(L <= 0.0):
        raise DegenerateGeometryError("transmit and receive elements coincide")
    unit = d / L[..., None]
    theta_t, phi_t = _angles(unit, tx.normal, tx.u_axis, tx.v_axis)
    theta_r, phi_r = _angles(-unit, rx.normal, rx.u_axis, rx.v_axis)
    return L, theta_t, phi_t, theta_r, phi_r


def link_geometry(tx: ArrayLayout, tx_index: int, rx: ArrayLayout, rx_index: int):
    """Distance and departure/arrival angles for one element pair.

    Returns ``(L, (theta_t, phi_t), (theta_r, phi_r))``.
    """
    if not 0 <= tx_index < tx.size or not 0 <= rx_index < rx.size:
        raise InvalidParameterError("element index out of range")
    d = rx.element_positions[rx_index] - tx.element_positions[tx_index]
    L = float(np.linalg.norm(d))
    if L == 0.0:
        raise DegenerateGeometryError("transmit and receive elements coincide")
    unit = d / L
    tt, pt = _angles(unit, tx.normal, tx.u_axis, tx.v_axis)
    tr, pr = _angles(-unit, rx.normal, rx.u_axis, rx.v_axis)
    return L, (float(tt), float(pt)), (float(tr), float(pr))
