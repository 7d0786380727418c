"""Per-element circuit stages: limiter, phase shifter, conjugating mixer, PA, divider.

Stages operate on complex baseband field vectors in volts.  Noise, when wanted,
is passed in pre-drawn so every stage stays a pure function.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import field_power
from .errors import InvalidParameterError


@dataclass(frozen=True)
class LimiterParams:
    v_m: float = float(np.sqrt(0.2))
    per_element: bool = False

    def __post_init__(self):
        if not self.v_m > 0:
            raise InvalidParameterError("limiter amplitude v_m must be positive")


@dataclass(frozen=True)
class ConjugatorParams:
    v_LO: float = 2.0
    phi_LO: float = 0.0

    def __post_init__(self):
        if not self.v_LO > 0:
            raise InvalidParameterError("LO amplitude must be positive")

    @property
    def amplitude_gain(self) -> float:
        return self.v_LO / 2.0


@dataclass(frozen=True)
class AmplifierParams:
    G0_dB: float = 20.0
    P_sat: float = 20.0
    smoothness: float = 3.0
    phi_a: float = np.pi / 6

    def __post_init__(self):
        if not self.G0_dB > 0:
            raise InvalidParameterError("small-signal gain must be positive in dB")
        if not self.P_sat > 0:
            raise InvalidParameterError("saturated power must be positive")
        if not self.smoothness > 0:
            raise InvalidParameterError("knee parameter must be positive")

    @property
    def G0(self) -> float:
        return 10.0 ** (self.G0_dB / 10.0)


@dataclass(frozen=True)
class DividerParams:
    """Power split at the MT.  ``alpha_pd = 0`` switches the return path off."""

    alpha_pd: float = 0.02

    def __post_init__(self):
        if not 0.0 <= self.alpha_pd < 1.0:
            raise InvalidParameterError(
                f"divider feedback ratio must lie in [0, 1), got {self.alpha_pd}")


def limit(s, p: LimiterParams):
    """Scale ``s`` so no element exceeds ``v_m``; returns ``(out, alpha_l)``.

    In the default uniform mode a single ratio is applied to every element.
    The per-element mode clips each amplitude on its own and reports the
    smallest ratio used.
    """
    s = np.asarray(s)
    amp = np.abs(s)
    peak = amp.max() if amp.size else 0.0
    if peak == 0.0:
        return s.copy(), 1.0
    if p.per_element:
        ratio = np.minimum(1.0, p.v_m / np.maximum(amp, np.finfo(float).tiny))
        return s * ratio, float(ratio.min())
    alpha_l = min(1.0, p.v_m / peak)
    return s * alpha_l, alpha_l


def shift_phase(s, phi_s):
    return np.asarray(s) * np.exp(1j * phi_s)


def conjugate(s, p: ConjugatorParams, noise=None):
    """Heterodyne phase conjugation: ``(v_LO/2) e^{j phi_LO} conj(s) + n_p``."""
    out = p.amplitude_gain * np.exp(1j * p.phi_LO) * np.conj(np.asarray(s))
    if noise is not None:
        out = out + noise
    return out


def pa_output_power(P_in, p: AmplifierParams):
    """Aggregate AM/AM curve ``G0 P / (1 + (G0 P / P_sat)^q)^(1/q)``."""
    P_in = np.asarray(P_in, dtype=float)
    x = p.G0 * P_in / p.P_sat
    q = p.smoothness
    with np.errstate(divide="ignore", over="ignore"):
        # below the knee: x / (1 + x^q)^(1/q); above it: (1 + x^-q)^(-1/q), both exact forms
        low = x * np.exp(-np.log1p(np.minimum(x, 1.0) ** q) / q)
        high = np.exp(-np.log1p(np.maximum(x, 1.0) ** -q) / q)
    return p.P_sat * np.where(x <= 1.0, low, high)


def pa_gain(P_in, p: AmplifierParams):
    """Linear power gain at total drive ``P_in``; small-signal gain at zero drive."""
    P_in = np.asarray(P_in, dtype=float)
    safe = np.where(P_in > 0, P_in, 1.0)
    return np.where(P_in > 0, pa_output_power(safe, p) / safe, p.G0)


def amplify(s, p: AmplifierParams, Z0=50.0, noise=None):
    """Apply one aggregate PA gain set by the total input power of the array.

    Returns ``(out, G_applied)``.  Noise is added after amplification.
    """
    s = np.asarray(s)
    G = float(pa_gain(field_power(s, Z0), p))
    out = np.sqrt(G) * np.exp(1j * p.phi_a) * s
    if noise is not None:
        out = out + noise
    return out, G


def divide(s, p: DividerParams):
    """Split into ``(feedback, payload)`` with power fractions ``alpha_pd`` and ``1 - alpha_pd``."""
    s = np.asarray(s)
    return np.sqrt(p.alpha_pd) * s, np.sqrt(1.0 - p.alpha_pd) * s
