"""Free-space channel matrices, thermal noise and field propagation."""
from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np
from scipy import constants

from .errors import InvalidParameterError
from .geometry import ArrayLayout, CarrierSpec, element_gain, pair_geometry

BOLTZMANN = constants.k
T0 = 290.0

# Stage identifiers used to key the noise generator.
STAGE_MT_RX = 0
STAGE_MT_PC = 1
STAGE_BS_RX = 2
STAGE_BS_PC = 3
STAGE_BS_PA = 4


@dataclass(frozen=True)
class ChannelParams:
    """Path-loss model.  ``friis=True`` forces ``alpha = 2``, ``beta = lambda^2 / 16 pi^2``."""

    friis: bool = True
    alpha: float = 2.0
    beta: float | None = None
    Z0: float = 50.0

    def __post_init__(self):
        if not self.Z0 > 0:
            raise InvalidParameterError("characteristic impedance must be positive")
        if not self.friis:
            if self.alpha < 2:
                raise InvalidParameterError("path-loss exponent must be >= 2")
            if self.beta is None or not self.beta > 0:
                raise InvalidParameterError("scaling factor beta must be positive")

    def resolved(self, carrier: CarrierSpec) -> tuple[float, float]:
        """``(alpha, beta)`` actually used for ``carrier``."""
        if self.friis:
            return 2.0, carrier.wavelength ** 2 / (16.0 * np.pi ** 2)
        return self.alpha, self.beta


@dataclass(frozen=True)
class NoiseParams:
    F_c: float = 3.0
    F_p: float = 6.0
    F_a: float = 5.0
    F_d: float = 7.0
    T0: float = T0
    seed: int = 0
    enabled: bool = True

    def __post_init__(self):
        for name in ("F_c", "F_p", "F_a", "F_d"):
            if getattr(self, name) < 0:
                raise InvalidParameterError(f"noise figure {name} must be >= 0 dB")


def noise_variance(F_dB, W, Z0, T=T0):
    """Complex noise variance ``2 Z0 k T F W`` in V^2 for a stage with noise figure ``F_dB``."""
    if not W > 0:
        raise InvalidParameterError("bandwidth must be positive")
    return 2.0 * Z0 * BOLTZMANN * T * 10.0 ** (F_dB / 10.0) * W


def field_power(s, Z0):
    """Total power ``sum |s|^2 / 2 Z0`` of a field vector, in W."""
    s = np.asarray(s)
    return float(np.vdot(s, s).real) / (2.0 * Z0)


def element_powers(s, Z0):
    return np.abs(s) ** 2 / (2.0 * Z0)


class NoiseSource:
    """Replayable circular Gaussian noise keyed by (seed, run, iteration, stage).

    Each draw builds a fresh generator from the key, so any single draw can be
    reproduced without replaying the ones before it.
    """

    def __init__(self, seed=0, run=0):
        self.seed = int(seed)
        self.run = int(run)

    def draw(self, variance, size, iteration, stage):
        rng = np.random.default_rng([self.seed, self.run, int(iteration), int(stage)])
        scale = np.sqrt(variance / 2.0)
        return scale * (rng.standard_normal(size) + 1j * rng.standard_normal(size))


def build_channel_matrix(tx: ArrayLayout, rx: ArrayLayout, carrier: CarrierSpec,
                         params: ChannelParams | None = None, chunk: int = 256) -> np.ndarray:
    """Complex gain matrix of shape ``(rx.size, tx.size)``.

    Entry ``[m, n] = sqrt(beta) L^(-alpha/2) sqrt(G_t G_r) exp(j 2 pi L / lambda)``
    with both gains evaluated at that pair's own departure and arrival angles.
    """
    params = params or ChannelParams()
    alpha, beta = params.resolved(carrier)
    k = carrier.wavenumber
    H = np.empty((rx.size, tx.size), dtype=np.complex128)
    for start in range(0, rx.size, chunk):
        sl = slice(start, min(start + chunk, rx.size))
        L, tt, pt, tr, pr = pair_geometry(tx, rx, sl)
        gain = element_gain(tx.pattern, tt, pt) * element_gain(rx.pattern, tr, pr)
        amp = np.sqrt(beta) * L ** (-alpha / 2.0) * np.sqrt(gain)
        H[sl] = amp * np.exp(1j * k * L)
    return H


def propagate(H, s_t, noise=None):
    """Received field ``H s_t + n``; ``noise`` is a pre-drawn vector or None."""
    H = np.asarray(H)
    s_t = np.asarray(s_t)
    if H.ndim != 2 or s_t.shape != (H.shape[1],):
        raise InvalidParameterError(
            f"cannot propagate a field of shape {s_t.shape} through a {H.shape} channel")
    out = H @ s_t
    if noise is not None:
        out = out + noise
    return out


def write_channel_csv(H, path):
    """Dump ``H`` as ``row, col, re, im`` records."""
    H = np.asarray(H)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["row", "col", "re", "im"])
        for (r, c), v in np.ndenumerate(H):
            w.writerow([r, c, f"{v.real:.11e}", f"{v.imag:.11e}"])
