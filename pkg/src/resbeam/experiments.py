"""Experiment sweeps that drive the engine and write CSV + JSON outputs.

Each experiment returns a table and a dict of headline metrics; ``run_experiment``
writes ``<name>.csv`` (prefixed by ``#`` lines carrying the config hash and seed)
and ``<name>.json`` (hash, seed, headline metrics and the full normalized config).
Sweep points are independent and are farmed out to a process pool.
"""
from __future__ import annotations

import json
import math
import os
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import config as cfg
from . import fieldmap
from .baseline import rdbfs_link, rdbfs_weights
from .comms import spectral_efficiency
from .engine import LEDGER_COLUMNS, loop_gain_threshold, mode_efficiency, run_to_convergence
from .geometry import subarrays
from .multiaccess import Demand, allocate_fdma, allocate_tdma
from .report import from_resonance, link_snr


@dataclass
class Table:
    columns: tuple
    rows: list
    headline: dict


def default_jobs() -> int:
    return len(os.sched_getaffinity(0)) if hasattr(os, "sched_getaffinity") else os.cpu_count() or 1


def _pmap(fn, tasks, jobs):
    tasks = list(tasks)
    if jobs is None:
        jobs = default_jobs()
    if jobs <= 1 or len(tasks) <= 1:
        return [fn(t) for t in tasks]
    with ProcessPoolExecutor(max_workers=min(jobs, len(tasks))) as pool:
        return list(pool.map(fn, tasks))


def _grid(start, stop, step):
    n = int(math.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + i * step, 12) for i in range(n)]


def _mean(xs):
    xs = [x for x in xs if x is not None and math.isfinite(x)]
    return float(np.mean(xs)) if xs else float("nan")


def _fmt(v):
    if isinstance(v, bool):
        return "1" if v else "0"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return f"{float(v):.11e}"
    return str(v)


def _jsonable(v):
    if isinstance(v, dict):
        return {str(k): _jsonable(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_jsonable(x) for x in v]
    if isinstance(v, (bool, np.bool_)):
        return bool(v)
    if isinstance(v, (int, np.integer)):
        return int(v)
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else None
    return v


# ---------------------------------------------------------------- workers


def link_point(task):
    """Monte Carlo over noise runs at one geometry, plus the one-shot baseline.

    ``task`` is ``(config, mt_position, bs_side, mt_side)``.
    """
    c, pos, bs_side, mt_side = task
    sc = cfg.build_scenario(c, mt_position=pos, bs_side=bs_side, mt_side=mt_side)
    hp, cp = cfg.harvest_params(c), cfg.comms_params(c)
    links, iters, times = [], [], []
    for run in range(sc.runs):
        rep = run_to_convergence(sc, run)
        link = from_resonance(sc, rep, hp, cp)
        links.append(link)
        if rep.converged:
            iters.append(rep.settled_iterations)
            times.append(rep.time_to_converge)
    conv = [lk for lk in links if lk.converged]
    P_match = _mean([lk.P_BS for lk in conv]) if conv else sc.amplifier.P_sat
    base = rdbfs_link(sc, cfg.rdbfs_params(c, P_match), hp, cp)
    return {
        "converged_fraction": len(conv) / len(links),
        "mean_iterations": _mean(iters),
        "std_iterations": float(np.std(iters)) if iters else float("nan"),
        "time_to_converge": _mean(times),
        "eta_cT": _mean([lk.eta_cT for lk in links]),
        "P_BS": _mean([lk.P_BS for lk in links]),
        "P_MT": _mean([lk.P_MT for lk in links]),
        "P_dc": _mean([lk.P_dc for lk in links]),
        "snr_db": _mean([lk.snr_db for lk in links]),
        "spectral_efficiency": _mean([lk.spectral_efficiency for lk in links]),
        "rdbfs_eta_cT": base.eta_cT,
        "rdbfs_P_BS": base.P_BS,
        "rdbfs_P_dc": base.P_dc,
        "rdbfs_snr_db": base.snr_db,
        "rdbfs_spectral_efficiency": base.spectral_efficiency,
    }


def _trajectory(task):
    c, pos, run = task
    sc = cfg.build_scenario(c, mt_position=pos)
    rep = run_to_convergence(sc, run)
    cp = cfg.comms_params(c)
    snr = [link_snr(sc, row["p_center"], row["G_a"], cp) for row in rep.history]
    return rep.history, snr, rep.converged, rep.settled_iterations if rep.converged else rep.iterations


def resonance_boundary(c, bs_side, mt_side, method="mode", tol=0.01, lo=None, hi=None):
    """Largest on-axis distance that still sustains resonance.

    ``mode``: where the dominant round-trip mode's one-way efficiency meets the
    loop-gain threshold (noise-free).  ``engine``: where run 0 of the full loop
    stops converging.
    """
    def ok(d):
        sc = cfg.build_scenario(c, mt_position=(0.0, 0.0, d), bs_side=bs_side, mt_side=mt_side)
        if method == "mode":
            return mode_efficiency(sc) >= loop_gain_threshold(sc)
        return run_to_convergence(sc, 0).converged

    lo = lo or 0.25
    while not ok(lo):
        lo *= 0.5
        if lo < 1e-2:
            return float("nan")
    hi = hi or 2.0 * lo
    while ok(hi):
        lo, hi = hi, 2.0 * hi
        if hi > 1e3:
            return float("inf")
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if ok(mid):
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def _boundary_task(task):
    c, scaling, bs_side, mt_side = task
    d = resonance_boundary(c, bs_side, mt_side, c["sweep.scaling_method"], c["sweep.distance_tol"])
    return scaling, bs_side, mt_side, d


def _band_task(task):
    c, sub, pos = task
    sc = cfg.build_scenario(c, mt_position=pos)
    sc = replace(sc, bs=sub, _H=None)
    reps = [run_to_convergence(sc, run) for run in range(sc.runs)]
    return _mean([r.eta_cT for r in reps]), sum(r.converged for r in reps) / len(reps)


# ------------------------------------------------------------ experiments


def iterations_vs_distance(c, jobs=None) -> Table:
    tasks = [(c, (0.0, 0.0, z), s, s) for s in c["sweep.sizes"] for z in c["sweep.distances"]]
    res = _pmap(link_point, tasks, jobs)
    cols = ("size", "z", "converged_fraction", "mean_iterations", "std_iterations", "eta_cT",
            "time_to_converge")
    rows, head = [], {}
    for (_, pos, s, _), r in zip(tasks, res):
        rows.append([s, pos[2], r["converged_fraction"], r["mean_iterations"], r["std_iterations"],
                     r["eta_cT"], r["time_to_converge"]])
        head.setdefault(f"{s}x{s}", {})[f"{pos[2]:g}"] = r["mean_iterations"]
    return Table(cols, rows, {"mean_iterations": head})


def iteration_dynamics(c, jobs=None) -> Table:
    x, y, _ = c["mt.position"]
    tasks = [(c, (x, y, z), 0) for z in c["sweep.dynamics_distances"]]
    res = _pmap(_trajectory, tasks, jobs)
    cols = ("z",) + LEDGER_COLUMNS[1:]
    rows, head = [], {}
    for (_, pos, _), (hist, _, conv, k) in zip(tasks, res):
        for row in hist:
            rows.append([pos[2]] + [row[col] for col in LEDGER_COLUMNS[1:]])
        head[f"{pos[2]:g}"] = {"converged": conv, "iterations": k,
                               "P_BS": hist[-1]["P_BS"], "eta_cT": hist[-1]["eta_cT"]}
    return Table(cols, rows, head)


_SWEEP_COLS = ("converged_fraction", "mean_iterations", "eta_cT", "P_BS", "P_MT", "P_dc",
               "snr_db", "spectral_efficiency", "rdbfs_eta_cT", "rdbfs_P_dc")


def _positional_sweep(c, positions, coord, jobs):
    tasks = [(c, p, None, None) for p in positions]
    res = _pmap(link_point, tasks, jobs)
    rows = [[p[coord]] + [r[k] for k in _SWEEP_COLS] for p, r in zip(positions, res)]
    return res, rows


def sweep_z(c, jobs=None) -> Table:
    x, y, _ = c["mt.position"]
    zs = _grid(c["sweep.z_start"], c["sweep.z_stop"], c["sweep.z_step"])
    res, rows = _positional_sweep(c, [(x, y, z) for z in zs], 2, jobs)
    conv = [z for z, r in zip(zs, res) if r["converged_fraction"] > 0.5]
    gap = [r["eta_cT"] - r["rdbfs_eta_cT"] for r in res if r["converged_fraction"] > 0.5]
    return Table(("z",) + _SWEEP_COLS, rows, {
        "max_converged_z": max(conv) if conv else None,
        "peak_eta_gain_over_rdbfs": max(gap) if gap else None,
    })


def sweep_x(c, jobs=None) -> Table:
    xs = _grid(c["sweep.x_start"], c["sweep.x_stop"], c["sweep.x_step"])
    res, rows = _positional_sweep(c, [(x, 0.0, c["sweep.x_z"]) for x in xs], 0, jobs)
    conv = [x for x, r in zip(xs, res) if r["converged_fraction"] > 0.5]
    return Table(("x",) + _SWEEP_COLS, rows, {
        "converged_x_range": [min(conv), max(conv)] if conv else None,
    })


def _converged_fields(c):
    sc = cfg.build_scenario(c)
    rep = run_to_convergence(sc, 0)
    bs_field = rep.state.s_bs_tx
    return sc, rep, bs_field


def spatial_maps(c, jobs=None) -> Table:
    sc, rep, f_res = _converged_fields(c)
    P = rep.P_BS if rep.converged else sc.amplifier.P_sat
    f_base = rdbfs_weights(sc, cfg.rdbfs_params(c, P))
    z_mt = sc.mt.center[2]
    xz = cfg.grid_axis(c["maps.xoz_x"])
    zz = cfg.grid_axis(c["maps.xoz_z"] or [0.05, z_mt - 0.05, 96])
    xy_x, xy_y = cfg.grid_axis(c["maps.xoy_x"]), cfg.grid_axis(c["maps.xoy_y"])
    rows, head = [], {"converged": rep.converged}
    for system, f in (("rf-rbs", f_res), ("rd-bfs", f_base)):
        g = fieldmap.sample_power(sc.bs, f, fieldmap.XOZ, xz, zz, sc.carrier)
        i, j = np.unravel_index(np.nanargmax(g.values), g.shape)
        head[system] = {"xoz_peak_x": xz[i], "xoz_peak_z": zz[j]}
        rows += [[system, g.plane, a, b, g.values[p, q]]
                 for p, a in enumerate(xz) for q, b in enumerate(zz)]
        g = fieldmap.sample_power(sc.bs, f, fieldmap.XOY, xy_x, xy_y, sc.carrier,
                                  offset=z_mt - c["maps.xoy_offset"])
        rows += [[system, g.plane, a, b, g.values[p, q]]
                 for p, a in enumerate(xy_x) for q, b in enumerate(xy_y)]
    return Table(("system", "plane", "a", "b", "power"), rows, head)


def phase_maps(c, jobs=None) -> Table:
    sc, rep, f_bs = _converged_fields(c)
    rows, head = [], {"converged": rep.converged}
    for name, layout, f in (("bs", sc.bs, f_bs), ("mt", sc.mt, rep.state.s_mt)):
        g = fieldmap.phase_map(layout, f)
        u0, v0 = fieldmap.phase_center(g)
        center = layout.center + u0 * layout.u_axis + v0 * layout.v_axis
        head[f"{name}_phase_center"] = [float(center[0]), float(center[1])]
        for i, u in enumerate(g.axes[0]):
            for j, v in enumerate(g.axes[1]):
                rows.append([name, i, j, u, v, g.values[i, j]])
    return Table(("array", "row", "col", "u", "v", "phase"), rows, head)


def snr_vs_iterations(c, jobs=None) -> Table:
    sc = cfg.build_scenario(c)
    tasks = [(c, tuple(c["mt.position"]), run) for run in range(sc.runs)]
    res = _pmap(_trajectory, tasks, jobs)
    K = max(len(r[1]) for r in res)
    # runs that stopped early hold their last value
    snr = np.array([s + [s[-1]] * (K - len(s)) for _, s, _, _ in res])
    C = spectral_efficiency(snr, c["comms.Delta"])
    rows = [[k, float(np.mean(snr[:, k])), float(np.mean(C[:, k]))] for k in range(K)]
    return Table(("k", "snr_db", "spectral_efficiency"), rows,
                 {"final_snr_db": rows[-1][1], "final_spectral_efficiency": rows[-1][2]})


def snr_vs_z(c, jobs=None) -> Table:
    x, y, _ = c["mt.position"]
    zs = _grid(c["sweep.z_start"], c["sweep.z_stop"], c["sweep.z_step"])
    res = _pmap(link_point, [(c, (x, y, z), None, None) for z in zs], jobs)
    cols = ("z", "converged_fraction", "snr_db", "spectral_efficiency", "rdbfs_snr_db",
            "rdbfs_spectral_efficiency")
    rows = [[z] + [r[k] for k in cols[1:]] for z, r in zip(zs, res)]
    conv = [r for r in res if r["converged_fraction"] > 0.5]
    return Table(cols, rows, {
        "min_converged_snr_db": min(r["snr_db"] for r in conv) if conv else None,
        "min_converged_spectral_efficiency":
            min(r["spectral_efficiency"] for r in conv) if conv else None,
    })


def max_distance_vs_size(c, jobs=None) -> Table:
    m = c["mt.rows"]
    tasks = [(c, "bs", s, m) for s in c["sweep.scaling_sizes"]]
    tasks += [(c, "both", s, s) for s in c["sweep.scaling_sizes"]]
    res = _pmap(_boundary_task, tasks, jobs)
    sp_bs, sp_mt = c["bs.spacing"], c["mt.spacing"]
    rows = [[sc, b, mm, b * sp_bs, mm * sp_mt, d] for sc, b, mm, d in res]
    head = {}
    for scaling in ("bs", "both"):
        pts = [(r[3], r[5]) for r in rows if r[0] == scaling and math.isfinite(r[5])]
        if len(pts) >= 2:
            x, y = np.array(pts).T
            slope, icpt = np.polyfit(x, y, 1)
            r2 = 1.0 - np.sum((y - (slope * x + icpt)) ** 2) / np.sum((y - y.mean()) ** 2)
            expo = np.polyfit(np.log(x), np.log(y), 1)[0]
            head[scaling] = {"linear_r2": float(r2), "log_log_exponent": float(expo)}
    return Table(("scaling", "bs_side", "mt_side", "bs_length", "mt_length", "max_distance"),
                 rows, head)


def tdma(c, jobs=None) -> Table:
    pos = [tuple(p) for p in c["multiaccess.positions"]]
    res = _pmap(link_point, [(c, p, None, None) for p in pos], jobs)
    T_res = c["multiaccess.T_res"]
    if T_res is None:
        T_res = max((r["time_to_converge"] for r in res if math.isfinite(r["time_to_converge"])),
                    default=0.0)
    demands = [Demand(f"mt{i}", pr, rq) for i, (pr, rq) in
               enumerate(zip(c["multiaccess.priorities"], c["multiaccess.requested"]))]
    plan = allocate_tdma(demands, c["multiaccess.T_f"], T_res,
                         [(r["eta_cT"], r["P_BS"]) for r in res])
    rows = [[d.mt_id, p[0], p[1], p[2], d.priority, d.requested, r["eta_cT"], r["P_BS"], t, pa]
            for d, p, r, (_, t), pa in zip(demands, pos, res, plan.slots, plan.avg_powers)]
    return Table(("mt_id", "x", "y", "z", "priority", "requested", "eta_cT", "P_BS", "T_on",
                  "P_avg"), rows, {"T_f": plan.T_f, "T_res": T_res,
                                   "total_P_avg": float(sum(plan.avg_powers))})


def fdma(c, jobs=None) -> Table:
    sc = cfg.build_scenario(c)
    n = c["multiaccess.n_bands"]
    k = int(round(math.sqrt(n)))
    split = (k, n // k) if k * (n // k) == n else (1, n)
    subs = subarrays(sc.bs, *split)
    dem = c["multiaccess.band_demands"]
    d = c["multiaccess.band_distance"]
    tasks = [(c, sub, tuple(sub.center + np.array([0.0, 0.0, d]))) for sub in subs[:len(dem)]]
    res = _pmap(_band_task, tasks, jobs)
    P_total = c["multiaccess.P_total"] or sc.amplifier.P_sat
    f0, W = c["carrier.f_c"], c["carrier.W"]
    freqs = [f0 + (i - (len(dem) - 1) / 2) * W for i in range(len(dem))]
    plan = allocate_fdma(P_total, [(f"band{i}", v) for i, v in enumerate(dem)], n, freqs)
    rows = [[bid, f, dm, eta, cf, p, eta * p]
            for (bid, f, p), dm, (eta, cf) in zip(plan.bands, dem, res)]
    return Table(("band_id", "f_c", "demand", "eta_cT", "converged_fraction", "P_BS", "P_MT"),
                 rows, {"P_total": plan.P_total, "total_P_MT": float(sum(r[-1] for r in rows))})


EXPERIMENTS = {
    "iterations-vs-distance": (iterations_vs_distance, "mean iterations to resonance vs distance"),
    "iteration-dynamics": (iteration_dynamics, "per-iteration power and gain/loss ledger"),
    "sweep-z": (sweep_z, "efficiency, power and DC output vs on-axis distance"),
    "sweep-x": (sweep_x, "efficiency, power and DC output vs lateral offset"),
    "spatial-maps": (spatial_maps, "normalized power density on the xOz and xOy planes"),
    "phase-maps": (phase_maps, "aperture phase of the converged BS and MT fields"),
    "snr-vs-iterations": (snr_vs_iterations, "SNR and spectral efficiency per iteration"),
    "snr-vs-z": (snr_vs_z, "SNR and spectral efficiency vs distance"),
    "max-distance-vs-size": (max_distance_vs_size, "maximum working distance vs array size"),
    "tdma": (tdma, "time-division plan over several MTs"),
    "fdma": (fdma, "frequency-division plan over BS sub-arrays"),
}


def write_outputs(name, table: Table, c, out_dir):
    """Write ``<name>.csv`` and ``<name>.json``; returns the summary dict."""
    os.makedirs(out_dir, exist_ok=True)
    h = cfg.config_hash(c)
    csv_path = os.path.join(out_dir, f"{name}.csv")
    with open(csv_path, "w", newline="") as fh:
        fh.write(f"# experiment={name}\n# config_hash={h}\n# seed={c['seed']}\n")
        fh.write(",".join(table.columns) + "\n")
        for row in table.rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")
    summary = {
        "experiment": name,
        "config_hash": h,
        "seed": c["seed"],
        "headline": _jsonable(table.headline),
        "files": [f"{name}.csv"],
        "config": _jsonable(c),
    }
    with open(os.path.join(out_dir, f"{name}.json"), "w") as fh:
        json.dump(summary, fh, sort_keys=True, indent=2, allow_nan=False)
        fh.write("\n")
    return summary


def run_experiment(name, config, out_dir, jobs=None) -> dict:
    if name not in EXPERIMENTS:
        raise KeyError(name)
    c = cfg.validate_config(config)
    table = EXPERIMENTS[name][0](c, jobs)
    return write_outputs(name, table, c, out_dir)
