"""Single-shot retro-directive beamforming (RD-BFS) for comparison with the loop.

One MT element sends a pilot; every BS element conjugates the phase it hears
and re-radiates with a configurable total power.
"""
from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .channel import NoiseSource, STAGE_BS_RX, build_channel_matrix, field_power
from .engine import Scenario
from .errors import DegeneratePilotError, InvalidParameterError
from .geometry import AntennaPattern, ISOTROPIC
from .report import LinkReport, summarize

MATCHED = "matched"
UNIFORM = "uniform"


@dataclass(frozen=True)
class RdbfsConfig:
    pilot_index: int | None = None  # None: MT element nearest the center
    P_total: float = 20.0
    pilot_power: float = 1e-3
    taper: str = MATCHED
    isotropic_pilot: bool = True
    noise: bool = False

    def __post_init__(self):
        if not self.P_total > 0:
            raise InvalidParameterError("RD-BFS total power must be positive")
        if not self.pilot_power > 0:
            raise InvalidParameterError("pilot power must be positive")
        if self.taper not in (MATCHED, UNIFORM):
            raise InvalidParameterError(f"unknown taper {self.taper!r}")


def pilot_response(scenario: Scenario, config: RdbfsConfig) -> np.ndarray:
    """Field each BS element receives from the pilot element, shape ``(N,)``."""
    m = scenario.mt.center_index if config.pilot_index is None else config.pilot_index
    if not 0 <= m < scenario.mt.size:
        raise InvalidParameterError("pilot index out of range")
    mt = scenario.mt
    if config.isotropic_pilot:
        mt = replace(mt, pattern=AntennaPattern(ISOTROPIC, 1.0))
        H_up = build_channel_matrix(mt, scenario.bs, scenario.carrier, scenario.channel)[:, m]
    else:
        H_up = scenario.H[m, :]
    amp = np.sqrt(2.0 * scenario.Z0 * config.pilot_power)
    r = H_up * amp
    if config.noise:
        r = r + NoiseSource(scenario.noise.seed, 0).draw(scenario.sigma_c2, r.size, 0, STAGE_BS_RX)
    return r


def rdbfs_weights(scenario: Scenario, config: RdbfsConfig) -> np.ndarray:
    """BS radiated field for the baseline, scaled to ``P_total``."""
    r = pilot_response(scenario, config)
    if not np.any(np.abs(r) > 0):
        raise DegeneratePilotError("no pilot power reached the BS")
    w = np.conj(r)
    if config.taper == UNIFORM:
        w = np.exp(1j * np.angle(w))
    return w * np.sqrt(config.P_total / field_power(w, scenario.Z0))


def rdbfs_link(scenario: Scenario, config: RdbfsConfig | None = None, hp=None, cp=None) -> LinkReport:
    """Efficiency and harvest/communication figures of the one-shot baseline."""
    config = config or RdbfsConfig()
    s_bs = rdbfs_weights(scenario, config)
    s_mt = scenario.H @ s_bs
    return summarize(scenario, "rd-bfs", s_mt, s_bs, hp=hp, cp=cp)
