"""Scenario configuration: flat dotted keys in a YAML file, SI units.

Every key has a default; an empty file reproduces the reference parameter set
(30 GHz carrier, 500 MHz bandwidth, 40x40 arrays at half-wavelength spacing,
2 m apart).  ``validate_config`` fills defaults and reports every violated
constraint with its key path.  See ``docs/config.md`` for the full schema.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import replace

import numpy as np
import yaml

from .baseline import RdbfsConfig
from .channel import ChannelParams, NoiseParams
from .circuits import AmplifierParams, ConjugatorParams, DividerParams, LimiterParams
from .comms import ATTENUATED, LITERAL, CommsParams
from .engine import Scenario
from .errors import ConfigError, InvalidParameterError
from .geometry import ISOTROPIC, MICROSTRIP, AntennaPattern, CarrierSpec, build_planar_array
from .harvest import HarvestParams


def _pos(x):
    return x > 0


def _nonneg(x):
    return x >= 0


def _prob(x):
    return 0 <= x < 1


def _any(x):
    return True


def _int_pos(x):
    return x >= 1


def _vec3(x):
    return len(x) == 3


def _vec3_list(x):
    return len(x) >= 1 and all(len(p) == 3 for p in x)


def _nonempty(x):
    return len(x) >= 1


def _pos_list(x):
    return len(x) >= 1 and all(v > 0 for v in x)


def _sizes(x):
    return len(x) >= 1 and all(isinstance(v, int) and v >= 1 for v in x)


FLOAT, INT, BOOL, STR, VEC, VECS, FLOATS, INTS = ("float", "int", "bool", "str", "vec", "vecs",
                                                  "floats", "ints")

# key: (default, kind, check, constraint text, nullable)
SCHEMA = {
    "seed": (0, INT, _nonneg, "must be a non-negative integer", False),
    "carrier.f_c": (30e9, FLOAT, _pos, "must be > 0 Hz", False),
    "carrier.W": (500e6, FLOAT, _pos, "must be > 0 Hz", False),
    "bs.rows": (40, INT, _int_pos, "must be >= 1", False),
    "bs.cols": (40, INT, _int_pos, "must be >= 1", False),
    "bs.spacing": (None, FLOAT, _pos, "must be > 0 m (omit for half a wavelength)", True),
    "bs.pattern": (MICROSTRIP, STR, lambda s: s in (MICROSTRIP, ISOTROPIC),
                   f"must be {MICROSTRIP!r} or {ISOTROPIC!r}", False),
    "bs.peak_gain": (math.pi, FLOAT, _pos, "must be > 0", False),
    "mt.rows": (40, INT, _int_pos, "must be >= 1", False),
    "mt.cols": (40, INT, _int_pos, "must be >= 1", False),
    "mt.spacing": (None, FLOAT, _pos, "must be > 0 m (omit for half a wavelength)", True),
    "mt.pattern": (MICROSTRIP, STR, lambda s: s in (MICROSTRIP, ISOTROPIC),
                   f"must be {MICROSTRIP!r} or {ISOTROPIC!r}", False),
    "mt.peak_gain": (math.pi, FLOAT, _pos, "must be > 0", False),
    "mt.position": ([0.0, 0.0, 2.0], VEC, _vec3, "must be [x, y, z] in m", False),
    "channel.friis": (True, BOOL, _any, "", False),
    "channel.alpha": (2.0, FLOAT, _pos, "path-loss exponent must be > 0", False),
    "channel.beta": (None, FLOAT, _pos, "must be > 0 (omit for the free-space value)", True),
    "channel.Z0": (50.0, FLOAT, _pos, "must be > 0 ohm", False),
    "noise.enabled": (True, BOOL, _any, "", False),
    "noise.F_c": (3.0, FLOAT, _nonneg, "noise figure must be >= 0 dB", False),
    "noise.F_p": (6.0, FLOAT, _nonneg, "noise figure must be >= 0 dB", False),
    "noise.F_a": (5.0, FLOAT, _nonneg, "noise figure must be >= 0 dB", False),
    "noise.F_d": (7.0, FLOAT, _nonneg, "noise figure must be >= 0 dB", False),
    "noise.T0": (290.0, FLOAT, _pos, "must be > 0 K", False),
    "limiter.v_m": (math.sqrt(0.2), FLOAT, _pos, "must be > 0 V", False),
    "limiter.per_element": (False, BOOL, _any, "", False),
    "shifter.phi_s": (None, FLOAT, _any, "", True),
    "conjugator.v_LO": (2.0, FLOAT, _pos, "must be > 0 V", False),
    "conjugator.bs_phi_LO": (0.0, FLOAT, _any, "", False),
    "conjugator.mt_phi_LO": (0.0, FLOAT, _any, "", False),
    "amplifier.G0_dB": (20.0, FLOAT, _any, "", False),
    "amplifier.P_sat": (20.0, FLOAT, _pos, "must be > 0 W", False),
    "amplifier.smoothness": (3.0, FLOAT, _pos, "must be > 0", False),
    "amplifier.phi_a": (math.pi / 6, FLOAT, _any, "", False),
    "divider.alpha_pd": (0.02, FLOAT, _prob, "power feedback ratio must lie in [0, 1)", False),
    "engine.runs": (20, INT, _int_pos, "must be >= 1", False),
    "engine.max_iter": (1500, INT, _int_pos, "must be >= 1", False),
    "engine.conv_threshold": (1e-3, FLOAT, _pos, "must be > 0", False),
    "engine.conv_consecutive": (3, INT, _int_pos, "must be >= 1", False),
    "engine.residual_tol": (1e-3, FLOAT, _pos, "must be > 0", False),
    "engine.floor_margin_db": (10.0, FLOAT, _nonneg, "must be >= 0 dB", False),
    "harvest.eta_z": (0.95, FLOAT, lambda x: 0 < x <= 1, "must lie in (0, 1]", False),
    "harvest.R_L": (100.0, FLOAT, _pos, "must be > 0 ohm", False),
    "harvest.R_g": (50.0, FLOAT, _pos, "must be > 0 ohm", False),
    "harvest.R_s": (25.0, FLOAT, _nonneg, "must be >= 0 ohm", False),
    "harvest.I_s": (1e-6, FLOAT, _pos, "must be > 0 A", False),
    "harvest.n0": (1.05, FLOAT, _pos, "must be > 0", False),
    "harvest.T": (290.0, FLOAT, _pos, "must be > 0 K", False),
    "harvest.doubler": (True, BOOL, _any, "", False),
    "comms.m_c": (None, INT, _nonneg, "must be a valid MT element index", True),
    "comms.Delta": (3.0, FLOAT, _nonneg, "must be >= 0 dB", False),
    "comms.bs_noise": (LITERAL, STR, lambda s: s in (LITERAL, ATTENUATED),
                       f"must be {LITERAL!r} or {ATTENUATED!r}", False),
    "baseline.P_total": (None, FLOAT, _pos, "must be > 0 W (omit to match the loop)", True),
    "baseline.pilot_power": (1e-3, FLOAT, _pos, "must be > 0 W", False),
    "baseline.taper": ("matched", STR, lambda s: s in ("matched", "uniform"),
                       "must be 'matched' or 'uniform'", False),
    "sweep.distances": ([1.0, 1.5, 2.0, 2.5, 3.0, 3.2, 3.4], FLOATS, _pos_list,
                        "must be a list of positive distances", False),
    "sweep.sizes": ([40, 50], INTS, _sizes, "must be a list of array side counts", False),
    "sweep.z_start": (1.0, FLOAT, _pos, "must be > 0 m", False),
    "sweep.z_stop": (4.0, FLOAT, _pos, "must be > 0 m", False),
    "sweep.z_step": (0.2, FLOAT, _pos, "must be > 0 m", False),
    "sweep.x_start": (-0.5, FLOAT, _any, "", False),
    "sweep.x_stop": (0.5, FLOAT, _any, "", False),
    "sweep.x_step": (0.1, FLOAT, _pos, "must be > 0 m", False),
    "sweep.x_z": (2.0, FLOAT, _pos, "must be > 0 m", False),
    "sweep.dynamics_distances": ([2.0, 3.0], FLOATS, _pos_list, "must be positive distances",
                                 False),
    "sweep.scaling_sizes": ([30, 40, 50, 60], INTS, _sizes, "must be a list of side counts", False),
    "sweep.scaling_method": ("mode", STR, lambda s: s in ("mode", "engine"),
                             "must be 'mode' or 'engine'", False),
    "sweep.distance_tol": (0.01, FLOAT, _pos, "must be > 0 m", False),
    "maps.xoz_x": ([-0.3, 0.3, 61], FLOATS, lambda v: len(v) == 3 and v[2] >= 2,
                   "must be [start, stop, count]", False),
    "maps.xoz_z": (None, FLOATS, lambda v: len(v) == 3 and v[2] >= 2,
                   "must be [start, stop, count] (omit to span the link)", True),
    "maps.xoy_x": ([-0.3, 0.3, 61], FLOATS, lambda v: len(v) == 3 and v[2] >= 2,
                   "must be [start, stop, count]", False),
    "maps.xoy_y": ([-0.3, 0.3, 61], FLOATS, lambda v: len(v) == 3 and v[2] >= 2,
                   "must be [start, stop, count]", False),
    "maps.xoy_offset": (0.05, FLOAT, _pos, "must be > 0 m", False),
    "multiaccess.T_f": (1e-3, FLOAT, _pos, "must be > 0 s", False),
    "multiaccess.T_res": (None, FLOAT, _nonneg, "must be >= 0 s (omit to use the slowest link)",
                          True),
    "multiaccess.positions": ([[0.0, 0.0, 1.5], [0.3, 0.0, 2.0], [-0.3, 0.0, 2.5]], VECS,
                              _vec3_list, "must be a list of [x, y, z] positions", False),
    "multiaccess.priorities": ([1.0, 1.0, 1.0], FLOATS, _nonempty, "must be a list", False),
    "multiaccess.requested": ([1.0, 1.0, 1.0], FLOATS, _nonempty, "must be a list", False),
    "multiaccess.P_total": (None, FLOAT, _pos, "must be > 0 W (omit for the PA saturation power)",
                            True),
    "multiaccess.n_bands": (4, INT, _int_pos, "must be >= 1", False),
    "multiaccess.band_demands": ([1.0, 1.0, 1.0, 1.0], FLOATS, _nonempty, "must be a list",
                                 False),
    "multiaccess.band_distance": (1.0, FLOAT, _pos, "must be > 0 m", False),
}


def _coerce(value, kind):
    """Convert a YAML value to the schema kind or raise TypeError."""
    if kind == BOOL:
        if not isinstance(value, bool):
            raise TypeError("expected true or false")
        return value
    if kind == INT:
        if isinstance(value, bool) or not isinstance(value, (int, float)) or value != int(value):
            raise TypeError("expected an integer")
        return int(value)
    if kind == FLOAT:
        if isinstance(value, str):
            # YAML 1.1 reads exponent literals without a dot (1e-6) as strings
            try:
                value = float(value)
            except ValueError:
                raise TypeError("expected a number") from None
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            raise TypeError("expected a number")
        v = float(value)
        if not math.isfinite(v):
            raise TypeError("expected a finite number")
        return v
    if kind == STR:
        if not isinstance(value, str):
            raise TypeError("expected a string")
        return value
    if kind in (FLOATS, VEC):
        if not isinstance(value, (list, tuple)):
            raise TypeError("expected a list of numbers")
        return [_coerce(v, FLOAT) for v in value]
    if kind == INTS:
        if not isinstance(value, (list, tuple)):
            raise TypeError("expected a list of integers")
        return [_coerce(v, INT) for v in value]
    if kind == VECS:
        if not isinstance(value, (list, tuple)):
            raise TypeError("expected a list of [x, y, z]")
        return [_coerce(v, VEC) for v in value]
    raise AssertionError(kind)


def _flatten(d, prefix=""):
    out = {}
    for k, v in d.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            out.update(_flatten(v, key + "."))
        else:
            out[key] = v
    return out


def defaults() -> dict:
    return validate_config({})


def validate_config(config: dict | None) -> dict:
    """Fill defaults, coerce to SI floats/ints and check every constraint.

    Nested mappings are accepted and flattened to dotted keys.  Raises
    ``ConfigError`` listing ``"key: problem"`` strings.
    """
    raw = _flatten(dict(config or {}))
    problems = []
    out = {}
    for key in raw:
        if key not in SCHEMA:
            problems.append(f"{key}: unknown key")
    for key, (default, kind, check, text, nullable) in SCHEMA.items():
        value = raw.get(key, default)
        if value is None:
            if not nullable:
                problems.append(f"{key}: must not be null")
            out[key] = None
            continue
        try:
            v = _coerce(value, kind)
        except TypeError as exc:
            problems.append(f"{key}: {exc}")
            continue
        if not check(v):
            problems.append(f"{key}: {text}")
            continue
        out[key] = v
    if not problems:
        lam = CarrierSpec(out["carrier.f_c"], out["carrier.W"]).wavelength
        for side in ("bs", "mt"):
            if out[f"{side}.spacing"] is None:
                out[f"{side}.spacing"] = lam / 2
        problems.extend(_cross_checks(out))
    if problems:
        raise ConfigError(problems)
    return out


def _cross_checks(c):
    problems = []
    if c["sweep.z_stop"] < c["sweep.z_start"]:
        problems.append("sweep.z_stop: must be >= sweep.z_start")
    if c["sweep.x_stop"] < c["sweep.x_start"]:
        problems.append("sweep.x_stop: must be >= sweep.x_start")
    if c["mt.position"][2] <= 0:
        problems.append("mt.position: MT must sit in front of the BS (z > 0)")
    if c["comms.m_c"] is not None and c["comms.m_c"] >= c["mt.rows"] * c["mt.cols"]:
        problems.append("comms.m_c: must be a valid MT element index")
    n = len(c["multiaccess.positions"])
    for key in ("multiaccess.priorities", "multiaccess.requested"):
        if len(c[key]) != n:
            problems.append(f"{key}: needs one entry per multiaccess.positions item")
        elif any(v < 0 for v in c[key]):
            problems.append(f"{key}: entries must be >= 0")
    if len(c["multiaccess.band_demands"]) > c["multiaccess.n_bands"]:
        problems.append("multiaccess.band_demands: more targets than multiaccess.n_bands")
    if c["multiaccess.T_res"] is not None and not c["multiaccess.T_f"] > c["multiaccess.T_res"]:
        problems.append("multiaccess.T_f: frame must be longer than multiaccess.T_res")
    for key in ("maps.xoz_x", "maps.xoz_z", "maps.xoy_x", "maps.xoy_y"):
        if c[key] is not None and c[key][2] != int(c[key][2]):
            problems.append(f"{key}: count must be an integer")
    for group, make in (("scenario", build_scenario), ("harvest", harvest_params),
                        ("comms", comms_params)):
        try:
            make(c)
        except InvalidParameterError as exc:
            problems.append(f"{group}: {exc}")
    return problems


def load_config(path) -> dict:
    """Read a YAML file; an output summary JSON is accepted and its embedded config used."""
    with open(path) as fh:
        text = fh.read()
    try:
        data = json.loads(text)
    except ValueError:
        try:
            data = yaml.safe_load(text)
        except yaml.YAMLError as exc:
            raise ConfigError([f"{path}: not valid YAML ({exc})"]) from None
    if data is None:
        return {}
    if not isinstance(data, dict):
        raise ConfigError([f"{path}: top level must be a mapping"])
    if "config" in data and "config_hash" in data:
        data = data["config"]
    return data


def config_hash(config: dict) -> str:
    """SHA-256 of the canonical JSON form of a normalized config."""
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _layout(c, side, center, normal):
    pattern = AntennaPattern(c[f"{side}.pattern"], c[f"{side}.peak_gain"])
    return build_planar_array(c[f"{side}.rows"], c[f"{side}.cols"], c[f"{side}.spacing"], center,
                              normal, pattern)


def build_scenario(c: dict, mt_position=None, bs_side=None, mt_side=None) -> Scenario:
    """Scenario from a normalized config; optional overrides for sweeps."""
    if bs_side is not None:
        c = {**c, "bs.rows": bs_side, "bs.cols": bs_side}
    if mt_side is not None:
        c = {**c, "mt.rows": mt_side, "mt.cols": mt_side}
    pos = c["mt.position"] if mt_position is None else mt_position
    bs = _layout(c, "bs", (0.0, 0.0, 0.0), (0.0, 0.0, 1.0))
    mt = _layout(c, "mt", tuple(pos), (0.0, 0.0, -1.0))
    return Scenario(
        bs=bs,
        mt=mt,
        carrier=CarrierSpec(c["carrier.f_c"], c["carrier.W"]),
        channel=ChannelParams(c["channel.friis"], c["channel.alpha"], c["channel.beta"],
                              c["channel.Z0"]),
        noise=NoiseParams(c["noise.F_c"], c["noise.F_p"], c["noise.F_a"], c["noise.F_d"],
                          c["noise.T0"], c["seed"], c["noise.enabled"]),
        limiter=LimiterParams(c["limiter.v_m"], c["limiter.per_element"]),
        phi_s=c["shifter.phi_s"],
        bs_conjugator=ConjugatorParams(c["conjugator.v_LO"], c["conjugator.bs_phi_LO"]),
        amplifier=AmplifierParams(c["amplifier.G0_dB"], c["amplifier.P_sat"],
                                  c["amplifier.smoothness"], c["amplifier.phi_a"]),
        divider=DividerParams(c["divider.alpha_pd"]),
        mt_conjugator=ConjugatorParams(c["conjugator.v_LO"], c["conjugator.mt_phi_LO"]),
        runs=c["engine.runs"],
        max_iter=c["engine.max_iter"],
        conv_threshold=c["engine.conv_threshold"],
        conv_consecutive=c["engine.conv_consecutive"],
        residual_tol=c["engine.residual_tol"],
        floor_margin_db=c["engine.floor_margin_db"],
    )


def harvest_params(c) -> HarvestParams:
    return HarvestParams(c["harvest.eta_z"], c["harvest.R_L"], c["harvest.R_g"], c["harvest.R_s"],
                         c["harvest.I_s"], c["harvest.n0"], c["harvest.T"], c["harvest.doubler"])


def comms_params(c) -> CommsParams:
    return CommsParams(c["comms.m_c"], c["noise.F_d"], c["comms.Delta"], c["comms.bs_noise"])


def rdbfs_params(c, P_total) -> RdbfsConfig:
    P = c["baseline.P_total"] if c["baseline.P_total"] is not None else P_total
    return RdbfsConfig(P_total=P, pilot_power=c["baseline.pilot_power"], taper=c["baseline.taper"])


def grid_axis(spec):
    start, stop, count = spec
    return np.linspace(start, stop, int(count))


def with_noise_seed(scenario: Scenario, seed: int) -> Scenario:
    return replace(scenario, noise=replace(scenario.noise, seed=seed))
