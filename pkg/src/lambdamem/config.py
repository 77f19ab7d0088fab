"""Config-file serialization for systems, schedules and run settings.

Configs are hierarchical JSON with explicit unit suffixes (`_rad_per_s`,
`_s`, `_m`, `_K`) and complex numbers as `[re, im]` pairs. Loading a saved
config reproduces every coupling entry bit-exactly (floats round-trip via
repr). Derived quantities and the conventions behind them are echoed under
"derived" so no physical number used by the engine is hidden.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .errors import ConfigError, SchemaVersionError
from .model import (KAPPA_CONVENTION, CavityParams, CouplingSet,
                    EnsembleParams, LevelScheme, RelaxationParams, SystemSpec,
                    derive_cavity, homogeneous_linewidth)
from .schedule import ControlPulse, PulseSchedule, SignalPulse

SCHEMA_VERSION = 1


def _c2pair(z: complex) -> list[float]:
    return [float(np.real(z)), float(np.imag(z))]


def _pair2c(v) -> complex:
    if not (isinstance(v, (list, tuple)) and len(v) == 2):
        raise ConfigError(f"expected a [re, im] pair, got {v!r}")
    return complex(float(v[0]), float(v[1]))


def _matrix_to_cfg(m: np.ndarray, excited: tuple[int, ...]) -> dict:
    out = {}
    for j in range(m.shape[0]):
        for c, k in enumerate(excited):
            if m[j, c] != 0:
                out[f"{j + 1},{k}"] = _c2pair(m[j, c])
    return out


def _matrix_from_cfg(d: dict, n_excited: int, excited: tuple[int, ...]) -> np.ndarray:
    m = np.zeros((3, n_excited), complex)
    for key, pair in d.items():
        try:
            j_s, k_s = key.split(",")
            j, k = int(j_s), int(k_s)
        except ValueError as exc:
            raise ConfigError(f"bad coupling key '{key}'") from exc
        if not (1 <= j <= 3) or k not in excited:
            raise ConfigError(f"coupling key '{key}' out of range")
        m[j - 1, excited.index(k)] = _pair2c(pair)
    return m


def _mask_to_cfg(mask: np.ndarray, excited: tuple[int, ...]) -> list[list[int]]:
    rows, cols = np.nonzero(mask)
    return [[int(j + 1), int(excited[c])] for j, c in zip(rows, cols)]


def _mask_from_cfg(entries, n_excited: int, excited: tuple[int, ...]) -> np.ndarray:
    mask = np.zeros((3, n_excited), bool)
    for j, k in entries:
        mask[int(j) - 1, excited.index(int(k))] = True
    return mask


def spec_to_cfg(spec: SystemSpec) -> dict:
    """Serialize a SystemSpec into a plain config mapping."""
    lv = spec.levels
    cav = spec.cavity
    rel = spec.relaxation
    cfg = {
        "name": spec.name,
        "levels": {
            "n_ground": lv.n_ground,
            "excited_indices": list(lv.excited_indices),
            "delta_rad_per_s": lv.delta,
            "omega22_rad_per_s": lv.omega22,
            "omega33_rad_per_s": lv.omega33,
            "detunings_rad_per_s": {str(k): lv.detunings[k]
                                    for k in lv.excited_indices},
        },
        "couplings": {
            "table_units": spec.table_units,
            "cavity_rad_per_s": _matrix_to_cfg(spec.couplings.cavity,
                                               lv.excited_indices),
            "control_rad_per_s": _matrix_to_cfg(spec.couplings.control,
                                                lv.excited_indices),
            "desired_cavity": _mask_to_cfg(spec.couplings.desired_cavity,
                                           lv.excited_indices),
            "desired_control": _mask_to_cfg(spec.couplings.desired_control,
                                            lv.excited_indices),
            "inactive": [list(e) for e in spec.inactive_couplings],
        },
        "cavity": {
            "wavelength_m": cav.wavelength,
            "refractive_index": cav.refractive_index,
            "quality_factor": cav.quality_factor,
            "volume_scale": cav.volume_scale,
            "dipole_moment_Cm": cav.dipole_moment,
        },
        "relaxation": {
            "gamma_s_rad_per_s": rel.gamma_s,
            "gamma_e_rad_per_s": rel.gamma_e,
            "temperature_K": rel.temperature,
            "gamma0_rad_per_s": rel.gamma0,
            "c_coeff_per_K5": rel.c_coeff,
            "r_rate_per_s": rel.r_rate,
            "gamma_r_rad_per_s": rel.gamma_r,
        },
        "ensemble": {
            "n_emitters": spec.ensemble.n_emitters,
            "population_closure": spec.ensemble.population_closure,
        },
        "include_level1": spec.include_level1,
        "dropped_pairs": [list(p) for p in spec.dropped_pairs],
        "provenance": spec.provenance,
    }
    if cav.volume_m3 is not None:
        cfg["cavity"]["volume_m3"] = cav.volume_m3
    if cav.kappa_rad_per_s is not None:
        cfg["cavity"]["kappa_rad_per_s"] = cav.kappa_rad_per_s
    if rel.gamma_d_override is not None:
        cfg["relaxation"]["gamma_d_rad_per_s"] = rel.gamma_d_override
    derived = derive_cavity(cav, spec.ensemble.n_emitters, rel.gamma_r)
    cfg["derived"] = {
        "kappa_convention": KAPPA_CONVENTION,
        "omega_c_rad_per_s": derived.omega_c,
        "kappa_rad_per_s": derived.kappa,
        "mode_volume_m3": derived.volume,
        "g_c_rad_per_s": derived.g_c,
        "cooperativity": derived.cooperativity,
        "homogeneous_linewidth_rad_per_s": homogeneous_linewidth(rel),
        "gamma_d_rad_per_s": rel.gamma_d,
    }
    return cfg


def spec_from_cfg(cfg: dict) -> SystemSpec:
    """Rebuild a SystemSpec from a config mapping."""
    try:
        lv_cfg = cfg["levels"]
        excited = tuple(int(k) for k in lv_cfg["excited_indices"])
        levels = LevelScheme(
            excited_indices=excited,
            delta=float(lv_cfg["delta_rad_per_s"]),
            omega22=float(lv_cfg["omega22_rad_per_s"]),
            omega33=float(lv_cfg["omega33_rad_per_s"]),
            detunings={int(k): float(v)
                       for k, v in lv_cfg["detunings_rad_per_s"].items()},
            n_ground=int(lv_cfg.get("n_ground", 3)),
        )
        cp_cfg = cfg["couplings"]
        couplings = CouplingSet(
            cavity=_matrix_from_cfg(cp_cfg["cavity_rad_per_s"],
                                    levels.n_excited, excited),
            control=_matrix_from_cfg(cp_cfg["control_rad_per_s"],
                                     levels.n_excited, excited),
            desired_cavity=_mask_from_cfg(cp_cfg["desired_cavity"],
                                          levels.n_excited, excited),
            desired_control=_mask_from_cfg(cp_cfg["desired_control"],
                                           levels.n_excited, excited),
        )
        cav_cfg = cfg["cavity"]
        cavity = CavityParams(
            wavelength=float(cav_cfg["wavelength_m"]),
            refractive_index=float(cav_cfg["refractive_index"]),
            quality_factor=float(cav_cfg["quality_factor"]),
            volume_scale=float(cav_cfg["volume_scale"]),
            dipole_moment=float(cav_cfg["dipole_moment_Cm"]),
            volume_m3=(float(cav_cfg["volume_m3"])
                       if "volume_m3" in cav_cfg else None),
            kappa_rad_per_s=(float(cav_cfg["kappa_rad_per_s"])
                             if "kappa_rad_per_s" in cav_cfg else None),
        )
        rel_cfg = cfg["relaxation"]
        relax = RelaxationParams(
            gamma_s=float(rel_cfg["gamma_s_rad_per_s"]),
            gamma_e=float(rel_cfg["gamma_e_rad_per_s"]),
            temperature=float(rel_cfg["temperature_K"]),
            gamma0=float(rel_cfg["gamma0_rad_per_s"]),
            c_coeff=float(rel_cfg["c_coeff_per_K5"]),
            r_rate=float(rel_cfg["r_rate_per_s"]),
            gamma_r=float(rel_cfg["gamma_r_rad_per_s"]),
            gamma_d_override=(float(rel_cfg["gamma_d_rad_per_s"])
                              if "gamma_d_rad_per_s" in rel_cfg else None),
        )
        ens = EnsembleParams(
            n_emitters=int(cfg["ensemble"]["n_emitters"]),
            population_closure=cfg["ensemble"].get("population_closure",
                                                   "fixed"),
        )
        return SystemSpec(
            name=cfg.get("name", "custom"),
            levels=levels,
            couplings=couplings,
            cavity=cavity,
            relaxation=relax,
            ensemble=ens,
            include_level1=bool(cfg.get("include_level1", True)),
            dropped_pairs=tuple((int(j), int(k))
                                for j, k in cfg.get("dropped_pairs", [])),
            inactive_couplings=tuple(
                (str(m), int(j), int(k))
                for m, j, k in cfg["couplings"].get("inactive", [])),
            table_units=cfg["couplings"].get("table_units", "angular"),
            provenance=cfg.get("provenance", {}),
        )
    except KeyError as exc:
        raise ConfigError(f"config missing key {exc}") from exc


def schedule_to_cfg(sched: PulseSchedule) -> dict:
    cfg = {
        "signal": {"shape": sched.signal.shape,
                   "t_fwhm_s": sched.signal.t_fwhm,
                   "center_s": sched.signal.center},
        "control1": _pulse_to_cfg(sched.control1),
        "control2": _pulse_to_cfg(sched.control2),
        "storage_time_s": sched.storage_time,
        "t_end_s": sched.t_end,
    }
    if sched.retrieval_window_start is not None:
        cfg["retrieval_window_start_s"] = sched.retrieval_window_start
    return cfg


def _pulse_to_cfg(p: ControlPulse) -> dict:
    return {"amp": p.amp, "shape": p.shape, "center_s": p.center,
            "width_s": p.width, "edge_s": p.edge}


def _pulse_from_cfg(d: dict) -> ControlPulse:
    return ControlPulse(amp=float(d["amp"]), center=float(d["center_s"]),
                        width=float(d["width_s"]),
                        edge=float(d.get("edge_s", 5e-9)),
                        shape=d.get("shape", "flattop"))


def schedule_from_cfg(cfg: dict) -> PulseSchedule:
    try:
        sig_cfg = cfg["signal"]
        signal = SignalPulse(t_fwhm=float(sig_cfg["t_fwhm_s"]),
                             center=float(sig_cfg["center_s"]),
                             shape=sig_cfg.get("shape", "gaussian"))
        return PulseSchedule(
            signal=signal,
            control1=_pulse_from_cfg(cfg["control1"]),
            control2=_pulse_from_cfg(cfg["control2"]),
            storage_time=float(cfg["storage_time_s"]),
            t_end=float(cfg["t_end_s"]),
            retrieval_window_start=(float(cfg["retrieval_window_start_s"])
                                    if "retrieval_window_start_s" in cfg
                                    else None),
        )
    except KeyError as exc:
        raise ConfigError(f"schedule config missing key {exc}") from exc


def full_cfg(spec: SystemSpec, sched: PulseSchedule,
             run: dict | None = None) -> dict:
    """Complete run config: system + schedule + numerical settings."""
    cfg = {
        "schema_version": SCHEMA_VERSION,
        "system": spec_to_cfg(spec),
        "schedule": schedule_to_cfg(sched),
        "run": {"rtol": 1e-8, "atol": 1e-10, "window": "retrieval"},
    }
    if run:
        cfg["run"].update(run)
    return cfg


def parse_full_cfg(cfg: dict) -> tuple[SystemSpec, PulseSchedule, dict]:
    version = cfg.get("schema_version", SCHEMA_VERSION)
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"config schema version {version} unsupported "
            f"(expected {SCHEMA_VERSION})")
    if "system" not in cfg or "schedule" not in cfg:
        raise ConfigError("config needs 'system' and 'schedule' sections")
    return (spec_from_cfg(cfg["system"]), schedule_from_cfg(cfg["schedule"]),
            dict(cfg.get("run", {})))


def save_cfg(cfg: dict, path) -> None:
    with open(path, "w") as fh:
        json.dump(cfg, fh, indent=2, sort_keys=True)
        fh.write("\n")


def load_cfg(path) -> dict:
    with open(path) as fh:
        try:
            return json.load(fh)
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{path}: {exc}") from exc


def apply_override(cfg: dict, key: str, raw_value: str) -> None:
    """Apply one `--set dotted.key=value` override in place.

    Values parse as JSON first (numbers, lists, booleans), falling back to a
    bare string. Intermediate mappings are created as needed; list indices
    are not supported (coupling entries are addressed by their "j,k" keys).
    """
    node: Any = cfg
    parts = key.split(".")
    if not all(parts):
        raise ConfigError(f"bad override key '{key}'")
    for part in parts[:-1]:
        if not isinstance(node, dict):
            raise ConfigError(f"override '{key}': '{part}' is not a section")
        node = node.setdefault(part, {})
    if not isinstance(node, dict):
        raise ConfigError(f"override '{key}' does not address a config entry")
    try:
        value = json.loads(raw_value)
    except json.JSONDecodeError:
        value = raw_value
    node[parts[-1]] = value
