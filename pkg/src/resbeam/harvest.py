"""RF-to-DC conversion with a voltage-doubler rectifier per MT element.

The single-diode output-voltage equation

    I0(b * sqrt(8 R_g P_acc)) = (1 + V0 / (R_L I_s)) * exp((1 + (R_g + R_s) / R_L) * b * V0),
    b = q / (n0 k T),

is applied to the doubler by substituting ``R_g -> 2 R_g`` and ``R_L -> R_L / 2``.
The Bessel argument reaches the hundreds at tens of milliwatts, so both sides
are compared in log space with the exponentially scaled ``i0e``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import constants
from scipy.optimize import brentq
from scipy.special import i0e

from .errors import InvalidParameterError, SolverFailureError


@dataclass(frozen=True)
class HarvestParams:
    eta_z: float = 0.95
    R_L: float = 100.0
    R_g: float = 50.0
    R_s: float = 25.0
    I_s: float = 1e-6
    n0: float = 1.05
    T: float = 290.0
    doubler: bool = True

    def __post_init__(self):
        for name in ("R_L", "R_g", "R_s", "I_s", "n0", "T"):
            if not getattr(self, name) > 0:
                raise InvalidParameterError(f"{name} must be positive")
        if not 0 < self.eta_z <= 1:
            raise InvalidParameterError("matching efficiency must lie in (0, 1]")

    @property
    def thermal_factor(self) -> float:
        return constants.e / (self.n0 * constants.k * self.T)

    @property
    def circuit(self) -> tuple[float, float]:
        """``(R_g, R_L)`` as seen by the single-diode equation."""
        if self.doubler:
            return 2.0 * self.R_g, self.R_L / 2.0
        return self.R_g, self.R_L


@dataclass
class DcReport:
    per_element_V0: np.ndarray
    per_element_eta_con: np.ndarray
    P_dc: float


def log_i0(x):
    x = np.abs(np.asarray(x, dtype=float))
    # series below 1e-2 avoids cancellation between log(i0e) and |x|
    x2 = x * x
    small = x2 / 4.0 - x2 ** 2 / 64.0 + x2 ** 3 / 576.0
    return np.where(x < 1e-2, small, np.log(i0e(x)) + x)


def _sides(V0, P_acc, p: HarvestParams):
    b = p.thermal_factor
    R_g, R_L = p.circuit
    lhs = log_i0(b * np.sqrt(8.0 * R_g * P_acc))
    rhs = np.log1p(V0 / (R_L * p.I_s)) + (1.0 + (R_g + p.R_s) / R_L) * b * V0
    return lhs, rhs


def diode_residual(V0, P_inc, p: HarvestParams) -> float:
    """Relative mismatch of the diode equation at ``V0``, measured on the larger side."""
    lhs, rhs = _sides(V0, p.eta_z * P_inc, p)
    # |A - B| / max(A, B) with A = e^lhs, B = e^rhs
    return float(-np.expm1(-abs(lhs - rhs)))


def solve_doubler(P_inc, p: HarvestParams | None = None) -> float:
    """Rectifier DC output voltage ``V0`` for incident RF power ``P_inc`` (W)."""
    p = p or HarvestParams()
    if P_inc < 0:
        raise InvalidParameterError("incident power must be non-negative")
    P_acc = p.eta_z * P_inc
    if P_acc == 0:
        return 0.0
    b = p.thermal_factor
    R_g, R_L = p.circuit
    slope = (1.0 + (R_g + p.R_s) / R_L) * b
    target = float(log_i0(b * np.sqrt(8.0 * R_g * P_acc)))

    def f(v):
        return np.log1p(v / (R_L * p.I_s)) + slope * v - target

    hi = target / slope
    if not (f(0.0) <= 0.0 <= f(hi)):
        raise SolverFailureError(f"diode equation root not bracketed for P_inc={P_inc}")
    if f(hi) == 0.0:
        return hi
    v = brentq(f, 0.0, hi, xtol=1e-300, rtol=8.9e-16, maxiter=500)
    # one Newton polish against the analytic derivative
    df = 1.0 / (R_L * p.I_s + v) + slope
    v_new = v - f(v) / df
    if 0.0 <= v_new <= hi and abs(f(v_new)) <= abs(f(v)):
        v = v_new
    return float(v)


def conversion_efficiency(V0, P_acc, R_L) -> float:
    """``V0^2 / (R_L P_acc)``, zero when no power is accepted."""
    if P_acc <= 0:
        return 0.0
    return V0 * V0 / (R_L * P_acc)


def dc_output(received, alpha_pd, p: HarvestParams | None = None, m_c: int = 0) -> DcReport:
    """Total DC power delivered to the load from per-element received powers.

    Each element's payload ``(1 - alpha_pd) p_r`` feeds its rectifier; the
    communication element ``m_c`` is left out of the DC sum.
    """
    p = p or HarvestParams()
    received = np.asarray(received, dtype=float)
    if not 0 <= m_c < received.size:
        raise InvalidParameterError("communication element index out of range")
    V = np.zeros(received.size)
    eta = np.zeros(received.size)
    total = 0.0
    for m, pr in enumerate(received):
        P_inc = (1.0 - alpha_pd) * pr
        if P_inc <= 0:
            continue
        V[m] = solve_doubler(P_inc, p)
        eta[m] = conversion_efficiency(V[m], p.eta_z * P_inc, p.R_L)
        if m != m_c:
            total += eta[m] * p.eta_z * P_inc
    return DcReport(V, eta, total)
