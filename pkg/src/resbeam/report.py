"""Link-level summary shared by the resonant loop and the beamforming baseline."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from . import comms, harvest
from .channel import element_powers
from .engine import ResonanceReport, Scenario

LINK_COLUMNS = ("system", "converged", "iterations", "time_to_converge", "eta_cT", "P_BS", "P_MT",
                "P_dc", "eta_con_peak", "snr_db", "spectral_efficiency")


@dataclass
class LinkReport:
    system: str
    converged: bool
    iterations: int
    time_to_converge: float
    eta_cT: float
    P_BS: float
    P_MT: float
    P_dc: float
    eta_con_peak: float
    snr_db: float
    spectral_efficiency: float
    mt_field: np.ndarray = field(default=None, repr=False)
    bs_field: np.ndarray = field(default=None, repr=False)

    def row(self) -> dict:
        return {c: getattr(self, c) for c in LINK_COLUMNS}


def center_element(scenario: Scenario, cp: comms.CommsParams) -> int:
    return scenario.mt.center_index if cp.m_c is None else cp.m_c


def link_snr(scenario: Scenario, p_center, G_a, cp: comms.CommsParams | None = None,
             H_row=None) -> float:
    """SNR at the communication element for a given received power and PA gain."""
    cp = cp or comms.CommsParams()
    sigma_bs = comms.bs_noise_variance(G_a, scenario.sigma_c2, scenario.sigma_p2, scenario.sigma_a2)
    if cp.bs_noise == comms.ATTENUATED:
        if H_row is None:
            H_row = scenario.H[center_element(scenario, cp)]
        sigma_bs = sigma_bs * float(np.sum(np.abs(H_row) ** 2))
    return comms.snr(p_center, scenario.divider.alpha_pd, sigma_bs, scenario.sigma_c2, cp.F_d,
                     scenario.carrier.W, scenario.Z0, scenario.noise.T0)


def summarize(scenario: Scenario, system: str, mt_field, bs_field, *, converged=True, iterations=0,
              time_to_converge=0.0, G_a=None, hp: harvest.HarvestParams | None = None,
              cp: comms.CommsParams | None = None) -> LinkReport:
    """Build a LinkReport from the field arriving at the MT and the field the BS radiated."""
    hp = hp or harvest.HarvestParams()
    cp = cp or comms.CommsParams()
    Z0 = scenario.Z0
    p_r = element_powers(mt_field, Z0)
    P_MT = float(p_r.sum())
    P_BS = float(np.sum(element_powers(bs_field, Z0)))
    m_c = center_element(scenario, cp)
    dc = harvest.dc_output(p_r, scenario.divider.alpha_pd, hp, m_c)
    G = scenario.amplifier.G0 if G_a is None else G_a
    snr_db = link_snr(scenario, float(p_r[m_c]), G, cp)
    return LinkReport(
        system=system,
        converged=bool(converged),
        iterations=int(iterations),
        time_to_converge=float(time_to_converge),
        eta_cT=P_MT / P_BS if P_BS > 0 else 0.0,
        P_BS=P_BS,
        P_MT=P_MT,
        P_dc=dc.P_dc,
        eta_con_peak=float(dc.per_element_eta_con.max()) if dc.per_element_eta_con.size else 0.0,
        snr_db=snr_db,
        spectral_efficiency=comms.spectral_efficiency(snr_db, cp.Delta),
        mt_field=np.asarray(mt_field),
        bs_field=np.asarray(bs_field),
    )


def from_resonance(scenario: Scenario, rep: ResonanceReport, hp=None, cp=None) -> LinkReport:
    st = rep.state
    its = rep.settled_iterations if rep.converged else rep.iterations
    return summarize(scenario, "rf-rbs", st.s_mt, st.s_bs_tx, converged=rep.converged,
                     iterations=its, time_to_converge=rep.time_to_converge,
                     G_a=rep.G_a, hp=hp, cp=cp)
