"""Serving several mobile targets from one BS by time or frequency division."""
from __future__ import annotations

import csv
import json
import math
from dataclasses import asdict, dataclass

import numpy as np

from .errors import CapacityExceededError, InfeasiblePlanError


@dataclass(frozen=True)
class Demand:
    mt_id: str
    priority: float
    requested: float  # W


@dataclass
class TdmaPlan:
    T_f: float
    T_res: float
    slots: list  # [(mt_id, T_ON)]
    avg_powers: list


@dataclass
class FdmaPlan:
    bands: list  # [(band_id, f_c, P_BS)]
    P_total: float


def proportional_slots(demands, T_f):
    """Default policy: frame share proportional to ``priority * requested``."""
    w = np.array([max(d.priority, 0.0) * max(d.requested, 0.0) for d in demands], dtype=float)
    if w.sum() <= 0:
        raise InfeasiblePlanError("every demand has zero weight")
    return T_f * w / w.sum()


def average_power(T_on, T_res, T_f, eta_c, P_BS):
    """Mean power delivered to one MT over a frame; nothing arrives before resonance forms."""
    return max(T_on - T_res, 0.0) / T_f * eta_c * P_BS


def allocate_tdma(demands, T_f, T_res, per_link, policy=proportional_slots) -> TdmaPlan:
    """Split a frame of length ``T_f`` among MTs.

    ``per_link`` holds one ``(eta_c, P_BS)`` pair per demand.  The policy may be
    any callable ``(demands, T_f) -> slot lengths``; its output is scaled down if
    it would overrun the frame.
    """
    demands = list(demands)
    if not demands:
        raise InfeasiblePlanError("no demands to schedule")
    if not T_f > T_res or T_res < 0:
        raise InfeasiblePlanError(f"frame length {T_f} does not exceed resonance time {T_res}")
    if len(per_link) != len(demands):
        raise InfeasiblePlanError("need one link figure per demand")
    slots = np.maximum(np.asarray(policy(demands, T_f), dtype=float), 0.0)
    total = math.fsum(slots)
    if total > T_f:
        slots = slots * (T_f / total)
    while math.fsum(slots) > T_f:
        slots = slots * (1.0 - 1e-15)
    avg = [average_power(t, T_res, T_f, eta, p) for t, (eta, p) in zip(slots, per_link)]
    return TdmaPlan(T_f, T_res, [(d.mt_id, float(t)) for d, t in zip(demands, slots)], avg)


def allocate_fdma(P_total, band_demands, n_bands=4, band_frequencies=None) -> FdmaPlan:
    """Divide ``P_total`` among frequency bands in proportion to demand.

    ``band_demands`` is a sequence of ``(band_id, demand)``; at most ``n_bands``
    targets fit, one per band.
    """
    band_demands = list(band_demands)
    if not band_demands:
        raise InfeasiblePlanError("no band demands")
    if len(band_demands) > n_bands:
        raise CapacityExceededError(
            f"{len(band_demands)} targets but only {n_bands} frequency bands available")
    d = np.array([max(v, 0.0) for _, v in band_demands], dtype=float)
    if d.sum() <= 0:
        raise InfeasiblePlanError("every band demand is zero")
    share = d / d.sum()
    powers = P_total * share
    # put the rounding residue on the largest band so the sum is exact
    i = int(np.argmax(powers))
    powers[i] = P_total - math.fsum(np.delete(powers, i))
    freqs = band_frequencies or [None] * len(band_demands)
    return FdmaPlan([(bid, f, float(p)) for (bid, _), f, p in zip(band_demands, freqs, powers)],
                    float(P_total))


def write_tdma_csv(plan: TdmaPlan, path, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header)
        w = csv.writer(fh)
        w.writerow(["mt_id", "T_on", "P_avg"])
        for (mt, t), p in zip(plan.slots, plan.avg_powers):
            w.writerow([mt, f"{t:.11e}", f"{p:.11e}"])


def write_fdma_csv(plan: FdmaPlan, path, header=None):
    with open(path, "w", newline="") as fh:
        if header:
            fh.write(header)
        w = csv.writer(fh)
        w.writerow(["band_id", "f_c", "P_BS"])
        for bid, f, p in plan.bands:
            w.writerow([bid, "" if f is None else f"{f:.11e}", f"{p:.11e}"])


def plan_to_json(plan) -> str:
    return json.dumps(asdict(plan), sort_keys=True, indent=2)
