"""Round-trip resonance iteration between the BS and MT arrays.

One iteration ``k`` sends the BS field to the MT, splits off the feedback branch,
conjugates it back toward the BS, and passes what arrives through the BS chain
(limiter, phase shifter, conjugator, PA) to produce the next BS field.
"""
from __future__ import annotations

import csv
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.sparse.linalg import svds

from . import circuits
from .channel import (STAGE_BS_PA, STAGE_BS_PC, STAGE_BS_RX, STAGE_MT_PC, STAGE_MT_RX,
                      ChannelParams, NoiseParams, NoiseSource, build_channel_matrix,
                      field_power, noise_variance, propagate)
from .circuits import AmplifierParams, ConjugatorParams, DividerParams, LimiterParams
from .errors import InvalidParameterError, NumericalDivergenceError
from .geometry import ArrayLayout, CarrierSpec

LEDGER_COLUMNS = ("run", "k", "P_BS", "P_MT", "eta_cT", "iota", "gamma", "residual")


@dataclass
class Scenario:
    bs: ArrayLayout
    mt: ArrayLayout
    carrier: CarrierSpec = field(default_factory=CarrierSpec)
    channel: ChannelParams = field(default_factory=ChannelParams)
    noise: NoiseParams = field(default_factory=NoiseParams)
    limiter: LimiterParams = field(default_factory=LimiterParams)
    # None selects the value that cancels the constant loop phase
    phi_s: float | None = None
    bs_conjugator: ConjugatorParams = field(default_factory=ConjugatorParams)
    amplifier: AmplifierParams = field(default_factory=AmplifierParams)
    divider: DividerParams = field(default_factory=DividerParams)
    mt_conjugator: ConjugatorParams = field(default_factory=ConjugatorParams)
    runs: int = 20
    max_iter: int = 1500
    conv_threshold: float = 1e-3
    conv_consecutive: int = 3
    residual_tol: float = 1e-3
    floor_margin_db: float = 10.0
    _H: np.ndarray | None = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        if not self.conv_threshold > 0:
            raise InvalidParameterError("convergence threshold must be positive")
        if self.max_iter < 1:
            raise InvalidParameterError("max_iter must be >= 1")
        if self.runs < 1:
            raise InvalidParameterError("runs must be >= 1")
        if self.conv_consecutive < 1:
            raise InvalidParameterError("conv_consecutive must be >= 1")

    @property
    def H(self) -> np.ndarray:
        """BS-to-MT channel, shape ``(M, N)``.  The return channel is its transpose."""
        if self._H is None:
            self._H = build_channel_matrix(self.bs, self.mt, self.carrier, self.channel)
        return self._H

    @property
    def Z0(self) -> float:
        return self.channel.Z0

    @property
    def shifter_phase(self) -> float:
        if self.phi_s is not None:
            return self.phi_s
        # the shifter sits before the BS conjugator, so its phase enters the loop negated
        return (self.amplifier.phi_a + self.bs_conjugator.phi_LO - self.mt_conjugator.phi_LO)

    @property
    def center_distance(self) -> float:
        return float(np.linalg.norm(self.mt.center - self.bs.center))

    def variance(self, F_dB) -> float:
        return noise_variance(F_dB, self.carrier.W, self.Z0, self.noise.T0)

    @property
    def sigma_c2(self):
        return self.variance(self.noise.F_c)

    @property
    def sigma_p2(self):
        return self.variance(self.noise.F_p)

    @property
    def sigma_a2(self):
        return self.variance(self.noise.F_a)

    def with_mt(self, mt: ArrayLayout) -> "Scenario":
        return replace(self, mt=mt, _H=None)


@dataclass
class EngineState:
    k: int
    s_bs_out: np.ndarray
    s_mt: np.ndarray | None = None
    G_a: float = float("nan")
    history: list = field(default_factory=list)
    # BS field that produced ``s_mt``
    s_bs_tx: np.ndarray | None = None

    @property
    def P_BS(self):
        return self.history[-1]["P_BS"] if self.history else None


@dataclass(frozen=True)
class GainLossLedger:
    iota: float
    gamma: float


@dataclass
class ResonanceReport:
    converged: bool
    iterations: int
    eta_cT: float
    eta_cR: float
    P_BS: float
    P_MT: float
    self_reproduction_residual: float
    time_to_converge: float
    noise_floor: float
    G_a: float
    stop_reason: str
    # first iteration at which the power criterion held (None if it never did)
    settled_iterations: int | None = None
    state: EngineState = field(repr=False, default=None)

    @property
    def history(self):
        return self.state.history if self.state is not None else []


class _Draws:
    """Noise vectors for one iteration, or ``None`` when noise is off."""

    def __init__(self, source: NoiseSource | None, iteration: int):
        self.src = source
        self.it = iteration

    def __call__(self, stage, variance, size):
        if self.src is None:
            return None
        return self.src.draw(variance, size, self.it, stage)


def _noise_source(scenario, run, noise):
    if noise is None:
        noise = scenario.noise.enabled
    return NoiseSource(scenario.noise.seed, run) if noise else None


def _bs_chain(r, scenario: Scenario, draw: _Draws):
    """Limiter, shifter, conjugator and PA; returns ``(s_out, G_a, alpha_l)``."""
    n = r.shape[0]
    u, alpha_l = circuits.limit(r, scenario.limiter)
    u = circuits.shift_phase(u, scenario.shifter_phase)
    u = circuits.conjugate(u, scenario.bs_conjugator, draw(STAGE_BS_PC, scenario.sigma_p2, n))
    out, G = circuits.amplify(u, scenario.amplifier, scenario.Z0,
                              draw(STAGE_BS_PA, scenario.sigma_a2, n))
    return out, G, alpha_l


def noise_floor_power(scenario: Scenario) -> float:
    """Expected BS radiated power when only thermal noise circulates (small signal)."""
    g = scenario.bs_conjugator.amplitude_gain ** 2
    per = (scenario.amplifier.G0 * g * scenario.sigma_c2 + scenario.amplifier.G0 * scenario.sigma_p2
           + scenario.sigma_a2)
    return scenario.bs.size * per / (2.0 * scenario.Z0)


def initialize(scenario: Scenario, run: int = 0, noise: bool | None = None,
               s_bs_out=None) -> EngineState:
    """Start state: thermal noise pushed once through the BS chain.

    ``s_bs_out`` overrides the start field (useful with noise off).
    """
    if s_bs_out is not None:
        s = np.asarray(s_bs_out, dtype=np.complex128)
        if s.shape != (scenario.bs.size,):
            raise InvalidParameterError("start field does not match the BS element count")
        return EngineState(0, s.copy())
    src = _noise_source(scenario, run, noise)
    draw = _Draws(src, 0)
    n = scenario.bs.size
    r = draw(STAGE_BS_RX, scenario.sigma_c2, n)
    if r is None:
        r = np.zeros(n, dtype=np.complex128)
    s, G, _ = _bs_chain(r, scenario, draw)
    return EngineState(0, s, G_a=G)


def step(state: EngineState, scenario: Scenario, run: int = 0, noise: bool | None = None
         ) -> EngineState:
    """Advance one full round trip and append a ledger row."""
    src = _noise_source(scenario, run, noise)
    draw = _Draws(src, state.k + 1)
    H = scenario.H
    Z0 = scenario.Z0
    M, N = H.shape

    P_BS = field_power(state.s_bs_out, Z0)
    s_mt = propagate(H, state.s_bs_out, draw(STAGE_MT_RX, scenario.sigma_c2, M))
    P_MT = field_power(s_mt, Z0)
    feedback, _ = circuits.divide(s_mt, scenario.divider)
    t = circuits.conjugate(feedback, scenario.mt_conjugator, draw(STAGE_MT_PC, scenario.sigma_p2, M))
    P_mt_tx = field_power(t, Z0)
    r_clean = H.T @ t
    P_bs_rx = field_power(r_clean, Z0)
    r = r_clean
    n_rx = draw(STAGE_BS_RX, scenario.sigma_c2, N)
    if n_rx is not None:
        r = r + n_rx
    s_next, G, alpha_l = _bs_chain(r, scenario, draw)
    P_next = field_power(s_next, Z0)

    if not (np.isfinite(P_next) and np.isfinite(P_MT)) or P_next > 10.0 * scenario.amplifier.P_sat:
        raise NumericalDivergenceError(
            f"BS power left the physical range at iteration {state.k + 1} (P_BS={P_next!r})")

    eta_cT = P_MT / P_BS if P_BS > 0 else 0.0
    eta_cR = P_bs_rx / P_mt_tx if P_mt_tx > 0 else 0.0
    alpha_mt = alpha_mt_of(scenario)
    loop = alpha_mt * eta_cR * eta_cT
    if state.s_mt is not None and np.any(state.s_mt):
        residual = float(np.linalg.norm(s_mt - state.s_mt) / np.linalg.norm(state.s_mt))
    else:
        residual = float("nan")
    mc = scenario.mt.center_index
    row = {
        "k": state.k,
        "P_BS": P_BS,
        "P_MT": P_MT,
        "eta_cT": eta_cT,
        "eta_cR": eta_cR,
        "iota": (1.0 - loop) * P_BS,
        "gamma": P_next - loop * P_BS,
        "P_BS_next": P_next,
        "residual": residual,
        "G_a": G,
        "alpha_l": alpha_l,
        "p_center": float(np.abs(s_mt[mc]) ** 2 / (2.0 * Z0)),
    }
    return EngineState(state.k + 1, s_next, s_mt, G, state.history + [row], state.s_bs_out)


def alpha_mt_of(scenario: Scenario) -> float:
    """Power factor of the MT return path: divider then conjugator."""
    return scenario.divider.alpha_pd * scenario.mt_conjugator.amplitude_gain ** 2


def gain_loss(state: EngineState, k: int | None = None) -> GainLossLedger:
    """Power loss ``iota[k]`` and gain ``gamma[k]`` of a recorded iteration."""
    if not state.history:
        raise InvalidParameterError("no iteration recorded yet")
    row = state.history[-1 if k is None else k]
    return GainLossLedger(row["iota"], row["gamma"])


def loop_gain_threshold(scenario: Scenario) -> float:
    """Smallest one-way efficiency for which the small-signal round trip gains power."""
    g = (scenario.divider.alpha_pd * scenario.mt_conjugator.amplitude_gain ** 2
         * scenario.bs_conjugator.amplitude_gain ** 2 * scenario.amplifier.G0)
    if g <= 0:
        return float("inf")
    return g ** -0.5


def fixed_point_residual(state: EngineState, scenario: Scenario) -> float:
    """Relative change of the MT field under one further noise-free round trip."""
    if state.s_mt is None:
        return float("inf")
    nxt = propagate(scenario.H, state.s_bs_out)
    denom = np.linalg.norm(state.s_mt)
    if denom == 0:
        return float("inf")
    return float(np.linalg.norm(nxt - state.s_mt) / denom)


def run_to_convergence(scenario: Scenario, run: int = 0, noise: bool | None = None,
                       state: EngineState | None = None) -> ResonanceReport:
    """Iterate until the MT power settles and the field reproduces itself.

    Stops when the relative MT power change stays below ``conv_threshold`` for
    ``conv_consecutive`` iterations and either (a) one noise-free round trip
    changes the MT field by less than ``residual_tol`` or (b) the BS is still
    within ``floor_margin_db`` of the thermal floor, i.e. noise is circulating
    without a resonance.  ``converged`` is true only in case (a).

    ``settled_iterations`` is the first iteration at which the power criterion
    held, the usual convergence count; ``iterations`` counts every round trip
    run, including those spent letting near-degenerate modes die out.
    """
    if state is None:
        state = initialize(scenario, run, noise)
    use_noise = scenario.noise.enabled if noise is None else noise
    floor = noise_floor_power(scenario) if use_noise else 0.0
    margin = 10.0 ** (scenario.floor_margin_db / 10.0)
    consecutive = 0
    reason = "max_iter"
    residual = float("inf")
    prev_pmt = None
    settled = None
    for _ in range(scenario.max_iter):
        state = step(state, scenario, run, noise)
        row = state.history[-1]
        if prev_pmt is not None:
            change = abs(row["P_MT"] - prev_pmt) / max(prev_pmt, 1e-300)
            consecutive = consecutive + 1 if change < scenario.conv_threshold else 0
        prev_pmt = row["P_MT"]
        if consecutive >= scenario.conv_consecutive:
            if settled is None:
                settled = state.k
            if row["P_BS_next"] <= floor * margin:
                reason = "noise_floor"
                break
            residual = fixed_point_residual(state, scenario)
            if residual < scenario.residual_tol:
                reason = "resonance"
                break
    else:
        residual = fixed_point_residual(state, scenario)
    row = state.history[-1]
    converged = reason == "resonance"
    counted = settled if converged else state.k
    return ResonanceReport(
        converged=converged,
        iterations=state.k,
        eta_cT=row["eta_cT"],
        eta_cR=row["eta_cR"],
        P_BS=row["P_BS"],
        P_MT=row["P_MT"],
        self_reproduction_residual=residual,
        time_to_converge=counted * 2.0 * scenario.center_distance / scenario.carrier.c,
        noise_floor=noise_floor_power(scenario),
        G_a=row["G_a"],
        stop_reason=reason,
        settled_iterations=settled,
        state=state,
    )


def mode_efficiency(scenario: Scenario, tol: float = 1e-12) -> float:
    """BS-to-MT efficiency of the dominant round-trip mode (noise-free).

    The round trip maps the BS field through ``H^H H``, so the loop settles on
    the top right singular vector of ``H`` and its one-way efficiency is the
    largest singular value squared.  This is what the loop would reach if the
    amplifier had unlimited headroom.
    """
    H = scenario.H
    if min(H.shape) == 1:
        return float(np.linalg.norm(H) ** 2)
    # fixed start vector keeps ARPACK deterministic
    v0 = np.ones(min(H.shape), dtype=H.dtype)
    s = svds(H, k=1, tol=tol, v0=v0, return_singular_vectors=False)
    return float(s[0] ** 2)


def write_ledger_csv(reports, path, header=None):
    """Write per-iteration ledgers for a list of ``(run, ResonanceReport)`` pairs."""
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header)
        w = csv.writer(fh)
        w.writerow(LEDGER_COLUMNS)
        for run, rep in reports:
            for row in rep.history:
                w.writerow([run, row["k"]] + [f"{row[c]:.11e}" for c in LEDGER_COLUMNS[2:]])
