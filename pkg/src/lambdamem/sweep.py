"""Deterministic parameter-sweep engine over full or reduced models.

Axes address the run config through dotted parameter paths:

  couplings.G.<j>.<k>[.scale]      cavity coupling entry (set or multiply)
  couplings.Omega.<j>.<k>[.scale]  control coupling entry
  levels.detunings.<k>[.scale]     excited-level detuning
  reduced.term_scale.<i>           Eq.-term scale, reduced model only
  schedule.storage_time_s          moves the retrieval pulse consistently
  <any.dotted.cfg.key>[.scale]     generic config leaf

A trailing `.scale` multiplies the base value (the usual study scales a
coupling from zero to its original value); otherwise the value is
assigned. Grid points are evaluated independently, failures are recorded in
the status column, and rows are emitted in lexicographic axis order no
matter how execution interleaves.
"""

from __future__ import annotations

import copy
import csv
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .config import (SCHEMA_VERSION, apply_override, load_cfg,
                     parse_full_cfg, save_cfg)
from .errors import ConfigError, InvalidInputError, SchemaVersionError
from .model import CouplingSet, SystemSpec
from .reduced import ReducedParams, TermMask, reduced_protocol

MODEL_FULL = "full_numeric"
MODEL_REDUCED = "reduced"


@dataclass(frozen=True)
class SweepAxis:
    path: str
    values: tuple[float, ...]

    def __post_init__(self):
        if not self.values:
            raise InvalidInputError(f"axis '{self.path}' has no values")


@dataclass(frozen=True)
class SweepPlan:
    base_cfg: dict
    axes: tuple[SweepAxis, ...]
    model: str = MODEL_FULL
    outputs: tuple[str, ...] = ("E", "F")
    term_mask_terms: tuple[int, ...] = ()   # reduced only; empty = full mask

    def __post_init__(self):
        if self.model not in (MODEL_FULL, MODEL_REDUCED):
            raise InvalidInputError(f"unknown sweep model '{self.model}'")
        if not self.axes or len(self.axes) > 2:
            raise InvalidInputError("sweeps take one or two axes")
        if not set(self.outputs) <= {"E", "F"}:
            raise InvalidInputError("outputs must be a subset of {E, F}")
        # every path must resolve against the base config
        probe = copy.deepcopy(self.base_cfg)
        for ax in self.axes:
            _apply_path(probe, ax.path, ax.values[0], self.model)

    @classmethod
    def from_cfg(cls, cfg: dict) -> "SweepPlan":
        try:
            plan_cfg = cfg["plan"]
            axes = tuple(SweepAxis(path=a["path"],
                                   values=tuple(float(v) for v in a["values"]))
                         for a in plan_cfg["axes"])
            return cls(base_cfg=cfg["base"], axes=axes,
                       model=plan_cfg.get("model", MODEL_FULL),
                       outputs=tuple(plan_cfg.get("outputs", ["E", "F"])),
                       term_mask_terms=tuple(plan_cfg.get("term_mask", [])))
        except KeyError as exc:
            raise ConfigError(f"sweep plan missing key {exc}") from exc

    def to_cfg(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "plan": {
                "axes": [{"path": ax.path, "values": list(ax.values)}
                         for ax in self.axes],
                "model": self.model,
                "outputs": list(self.outputs),
                "term_mask": list(self.term_mask_terms),
            },
            "base": self.base_cfg,
        }


def _coupling_key(path_parts: list[str]) -> tuple[str, str]:
    which = "cavity_rad_per_s" if path_parts[1] == "G" else "control_rad_per_s"
    return which, f"{int(path_parts[2])},{int(path_parts[3])}"


def _apply_path(cfg: dict, path: str, value: float, model: str) -> dict:
    """Apply one axis assignment to a full run config, in place."""
    parts = path.split(".")
    scale = parts[-1] == "scale"
    if scale:
        parts = parts[:-1]
    if parts[0] == "couplings" and len(parts) == 4 and \
            parts[1] in ("G", "Omega"):
        which, key = _coupling_key(parts)
        j, k = int(parts[2]), int(parts[3])
        excited = cfg["system"]["levels"]["excited_indices"]
        if not (1 <= j <= 3) or k not in excited:
            raise ConfigError(f"axis '{path}': coupling ({j},{k}) out of range")
        table = cfg["system"]["couplings"][which]
        base = table.get(key, [0.0, 0.0])
        if scale:
            table[key] = [base[0] * value, base[1] * value]
        else:
            table[key] = [float(value), 0.0]
        return cfg
    if parts[0] == "levels" and parts[1] == "detunings" and len(parts) == 3:
        det = cfg["system"]["levels"]["detunings_rad_per_s"]
        key = str(int(parts[2]))
        if key not in det:
            raise ConfigError(f"axis '{path}': no excited level {key}")
        det[key] = det[key] * value if scale else float(value)
        return cfg
    if parts[0] == "reduced" and parts[1] == "term_scale" and len(parts) == 3:
        if model != MODEL_REDUCED:
            raise ConfigError(f"axis '{path}' needs the reduced model")
        cfg.setdefault("reduced", {}).setdefault("term_scales", {})[
            str(int(parts[2]))] = float(value)
        return cfg
    if path == "schedule.storage_time_s":
        sched = cfg["schedule"]
        old = float(sched["storage_time_s"])
        new = old * value if scale else float(value)
        shift = new - old
        sched["storage_time_s"] = new
        sched["control2"]["center_s"] = float(sched["control2"]["center_s"]) + shift
        sched["t_end_s"] = float(sched["t_end_s"]) + shift
        if "retrieval_window_start_s" in sched:
            sched["retrieval_window_start_s"] = \
                float(sched["retrieval_window_start_s"]) + shift
        return cfg
    # generic dotted leaf
    node = cfg
    for part in parts[:-1]:
        if not isinstance(node, dict) or part not in node:
            raise ConfigError(f"axis path '{path}' does not resolve")
        node = node[part]
    leaf = parts[-1]
    if not isinstance(node, dict) or leaf not in node:
        raise ConfigError(f"axis path '{path}' does not resolve")
    node[leaf] = node[leaf] * value if scale else float(value)
    return cfg


def scale_coupling(spec: SystemSpec, pair: tuple[int, int], factor: float,
                   which: str = "G") -> SystemSpec:
    """Copy of the spec with one coupling entry multiplied by `factor`."""
    from dataclasses import replace

    if factor < 0:
        raise InvalidInputError("scale factor must be >= 0")
    j, k = pair
    if not (1 <= j <= spec.levels.n_ground) or \
            k not in spec.levels.excited_indices:
        raise InvalidInputError(f"coupling index ({j},{k}) out of range")
    col = spec.levels.column(k)
    G = spec.couplings.cavity.copy()
    Om = spec.couplings.control.copy()
    if which == "G":
        G[j - 1, col] *= factor
    elif which == "Omega":
        Om[j - 1, col] *= factor
    else:
        raise InvalidInputError("which must be 'G' or 'Omega'")
    return replace(spec, couplings=CouplingSet(
        G, Om, spec.couplings.desired_cavity, spec.couplings.desired_control))


@dataclass
class SweepResult:
    plan: SweepPlan
    axis_names: tuple[str, ...]
    rows: list[tuple]          # (*axis values, efficiency, fidelity, status)
    schema_version: int = SCHEMA_VERSION
    timing: dict = field(default_factory=dict)

    def grid_shape(self) -> tuple[int, ...]:
        return tuple(len(ax.values) for ax in self.plan.axes)

    def efficiencies(self) -> np.ndarray:
        e = np.array([r[-3] for r in self.rows], float)
        return e.reshape(self.grid_shape())

    def fidelities(self) -> np.ndarray:
        f = np.array([r[-2] for r in self.rows], float)
        return f.reshape(self.grid_shape())


def _evaluate_point(plan: SweepPlan, assignments) -> tuple[float, float, str]:
    from .dynamics import noise_run, run_protocol
    from .metrics import apparent_fidelity, efficiency

    cfg = copy.deepcopy(plan.base_cfg)
    for ax, value in assignments:
        _apply_path(cfg, ax.path, value, plan.model)
    spec, sched, run_cfg = parse_full_cfg(cfg)
    rtol = float(run_cfg.get("rtol", 1e-8))
    atol = float(run_cfg.get("atol", 1e-10))
    window = run_cfg.get("window", "retrieval")
    want_f = "F" in plan.outputs
    if plan.model == MODEL_REDUCED:
        params = ReducedParams.from_system(spec)
        mask = TermMask.full() if not plan.term_mask_terms else \
            TermMask.only(*plan.term_mask_terms)
        for term_s, sc in cfg.get("reduced", {}).get("term_scales", {}).items():
            mask = mask.scaled(int(term_s), float(sc))
        run = reduced_protocol(params, sched, mask, rtol=rtol, atol=atol,
                               warn_adiabatic=False)
        e = efficiency(run, window)
        f = apparent_fidelity(reduced_protocol(
            params, sched, mask, with_input=False, rtol=rtol, atol=atol,
            warn_adiabatic=False)) if want_f else float("nan")
    else:
        run = run_protocol(spec, sched, rtol=rtol, atol=atol)
        e = efficiency(run, window)
        f = apparent_fidelity(noise_run(spec, sched, rtol=rtol, atol=atol)) \
            if want_f else float("nan")
    return e, f, "ok"


def sweep(plan: SweepPlan, jobs: int = 1) -> SweepResult:
    """Evaluate the grid; failed points get a status, never abort the sweep."""
    t_start = time.time()
    grids = [ax.values for ax in plan.axes]
    index_grid = list(np.ndindex(*[len(g) for g in grids]))

    def one(idx):
        assignments = [(plan.axes[d], grids[d][idx[d]])
                       for d in range(len(grids))]
        values = tuple(grids[d][idx[d]] for d in range(len(grids)))
        try:
            e, f, status = _evaluate_point(plan, assignments)
        except Exception as exc:    # per-point isolation by design
            e, f, status = float("nan"), float("nan"), \
                f"error: {type(exc).__name__}: {exc}"
        return values + (e, f, status)

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            rows = list(pool.map(one, index_grid))
    else:
        rows = [one(idx) for idx in index_grid]
    names = tuple(ax.path for ax in plan.axes)
    return SweepResult(plan=plan, axis_names=names, rows=rows,
                       timing={"wall_s": time.time() - t_start,
                               "points": len(rows), "jobs": jobs})


def persist(result: SweepResult, path) -> None:
    """CSV body plus a JSON sidecar `<path>.plan.json` with full provenance."""
    path = str(path)
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow([f"axis{i + 1}" for i in range(len(result.axis_names))]
                   + ["efficiency", "fidelity", "status"])
        for row in result.rows:
            *vals, status = row
            w.writerow([repr(float(v)) for v in vals] + [status])
    sidecar = {
        "schema_version": result.schema_version,
        "axis_names": list(result.axis_names),
        "plan": result.plan.to_cfg(),
        "timing": result.timing,
    }
    save_cfg(sidecar, path + ".plan.json")


def load(path) -> SweepResult:
    """Rebuild a SweepResult from persist() output, bit-exactly."""
    path = str(path)
    sidecar = load_cfg(path + ".plan.json")
    version = sidecar.get("schema_version")
    if version != SCHEMA_VERSION:
        raise SchemaVersionError(
            f"sweep file schema version {version} unsupported "
            f"(expected {SCHEMA_VERSION})")
    plan = SweepPlan.from_cfg(sidecar["plan"])
    rows = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader)
        n_axes = len(header) - 3
        for rec in reader:
            vals = tuple(float(x) for x in rec[:n_axes + 2])
            rows.append(vals + (rec[-1],))
    return SweepResult(plan=plan,
                       axis_names=tuple(sidecar["axis_names"]),
                       rows=rows, schema_version=version,
                       timing=dict(sidecar.get("timing", {})))
