"""Downlink SNR and spectral efficiency at the MT's communication element."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import BOLTZMANN, T0
from .errors import InvalidParameterError

SNR_FLOOR_DB = -np.inf

LITERAL = "literal"
ATTENUATED = "attenuated"


@dataclass(frozen=True)
class CommsParams:
    m_c: int | None = None  # None: element nearest the array center
    F_d: float = 7.0
    Delta: float = 3.0
    bs_noise: str = LITERAL

    def __post_init__(self):
        if self.bs_noise not in (LITERAL, ATTENUATED):
            raise InvalidParameterError(f"unknown BS noise treatment {self.bs_noise!r}")


def bs_noise_variance(G_a, sigma_c2, sigma_p2, sigma_a2):
    """Per-element BS output noise: receive and conjugator noise amplified, plus PA noise."""
    if min(G_a, sigma_c2, sigma_p2, sigma_a2) < 0:
        raise InvalidParameterError("gains and variances must be non-negative")
    return G_a * sigma_c2 + G_a * sigma_p2 + sigma_a2


def snr(p_center, alpha_pd, sigma_BS2, sigma_c2, F_d, W, Z0, T=T0):
    """Downlink SNR in dB of the communication element."""
    if p_center < 0:
        raise InvalidParameterError("received power must be non-negative")
    demod = 2.0 * Z0 * BOLTZMANN * T * 10.0 ** (F_d / 10.0) * W
    num = (1.0 - alpha_pd) * 2.0 * Z0 * p_center
    den = (1.0 - alpha_pd) * sigma_BS2 + sigma_c2 + demod
    if num == 0:
        return SNR_FLOOR_DB
    return float(10.0 * np.log10(num / den))


def spectral_efficiency(snr_dB, Delta_dB):
    """Shannon spectral efficiency in bps/Hz after a loss factor ``Delta_dB``."""
    out = np.log2(1.0 + 10.0 ** (0.1 * (np.asarray(snr_dB, dtype=float) - Delta_dB)))
    return float(out) if out.ndim == 0 else out
