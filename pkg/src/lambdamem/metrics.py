"""Scalar figures of merit and the storage-time scan driver."""

from __future__ import annotations

import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .gridmath import simpson_uniform, window_slice

REGIME_BOUNDARY_TOL = 1e-6

WINDOW_RETRIEVAL = "retrieval"
WINDOW_TOTAL = "total"


@dataclass(frozen=True)
class MetricsResult:
    """Efficiency/fidelity summary of one protocol + noise pair."""

    efficiency: float
    fidelity: float
    noise_energy: float
    window: str
    regime: str
    f_value: float

    def as_dict(self) -> dict:
        return {"efficiency": self.efficiency, "fidelity": self.fidelity,
                "noise_energy": self.noise_energy, "window": self.window,
                "regime": self.regime, "f_value": self.f_value}


def efficiency(run, window: str = WINDOW_RETRIEVAL) -> float:
    """Time-integrated output energy for the unit-energy input.

    window "retrieval" starts at the retrieval-pulse onset; "total"
    integrates the whole record.
    """
    if run.is_noise_run:
        raise InvalidInputError("efficiency needs a signal run, got a noise run")
    if abs(run.input_energy - 1.0) > 1e-6:
        raise InvalidInputError(
            f"input energy {run.input_energy!r} is not unit-normalized")
    if window not in (WINDOW_RETRIEVAL, WINDOW_TOTAL):
        raise InvalidInputError(f"unknown window '{window}'")
    start = run.schedule.retrieval_start if window == WINDOW_RETRIEVAL else None
    sl = window_slice(run.t, start)
    return simpson_uniform(np.abs(run.a_out[sl]) ** 2, run.dt)


def noise_energy(noise_run) -> float:
    """Total output energy of a zero-input run."""
    if not noise_run.is_noise_run:
        raise InvalidInputError("expected a noise run (zero input)")
    return simpson_uniform(np.abs(noise_run.a_out) ** 2, noise_run.dt)


def apparent_fidelity(noise_run) -> float:
    """1 minus the zero-input output energy, clamped into [0, 1]."""
    n = noise_energy(noise_run)
    f = 1.0 - n
    if f < 0.0:
        warnings.warn(f"noise energy {n:.3g} exceeds 1; apparent fidelity "
                      "clamped to 0", stacklevel=2)
        return 0.0
    return f


def classify_regime(omega_peak: float, linewidth: float) -> tuple[str, float]:
    """EIT/ATS classification by f = Omega / Gamma(T)."""
    if linewidth <= 0:
        raise InvalidInputError("linewidth must be positive")
    f = abs(omega_peak) / linewidth
    if abs(f - 1.0) <= REGIME_BOUNDARY_TOL:
        return "boundary", f
    return ("EIT" if f < 1.0 else "ATS"), f


def summarize(run, noise, window: str = WINDOW_RETRIEVAL) -> MetricsResult:
    """Bundle efficiency, fidelity and the operating regime."""
    from .model import homogeneous_linewidth

    spec = run.spec
    e = efficiency(run, window)
    n = noise_energy(noise)
    f_fid = apparent_fidelity(noise)
    entries = spec.effective_couplings()[1][spec.couplings.desired_control]
    om_desired = abs(entries[0]) if entries.size else 0.0
    peak = om_desired * max(run.schedule.control1.amp, run.schedule.control2.amp)
    regime, f_val = classify_regime(peak, homogeneous_linewidth(spec.relaxation))
    return MetricsResult(efficiency=e, fidelity=f_fid, noise_energy=n,
                         window=window, regime=regime, f_value=f_val)


@dataclass
class StorageScan:
    """Efficiency/fidelity versus storage time, plus the oscillation period."""

    storage_times: np.ndarray
    efficiencies: np.ndarray
    fidelities: np.ndarray
    measured_period: float        # nan when no oscillation is resolved
    candidate_period_over: float  # pi / delta
    candidate_period_under: float # delta / pi, kept for comparison only

    def rows(self):
        for i in range(len(self.storage_times)):
            yield (self.storage_times[i], self.efficiencies[i],
                   self.fidelities[i])


def dominant_period(x: np.ndarray, values: np.ndarray) -> float:
    """Dominant oscillation period of values(x) by zero-padded FFT peak.

    x must be uniform. Returns nan when the series is flat.
    """
    x = np.asarray(x, float)
    v = np.asarray(values, float)
    if len(x) < 4:
        return float("nan")
    dx = x[1] - x[0]
    if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0.0):
        raise InvalidInputError("dominant_period needs a uniform scan grid")
    centered = v - v.mean()
    if np.max(np.abs(centered)) < 1e-12 * max(1.0, np.max(np.abs(v))):
        return float("nan")
    npad = 8 * len(v)
    spec = np.abs(np.fft.rfft(centered, n=npad))
    freqs = np.fft.rfftfreq(npad, dx)
    k = int(np.argmax(spec[1:])) + 1
    # quadratic interpolation around the peak bin
    if 1 <= k < len(spec) - 1:
        y0, y1, y2 = spec[k - 1], spec[k], spec[k + 1]
        denom = y0 - 2.0 * y1 + y2
        shift = 0.5 * (y0 - y2) / denom if denom != 0.0 else 0.0
        shift = float(np.clip(shift, -0.5, 0.5))
    else:
        shift = 0.0
    f_peak = freqs[k] + shift * (freqs[1] - freqs[0])
    return 1.0 / f_peak if f_peak > 0 else float("nan")


def storage_time_scan(spec, base_schedule, storage_times, *,
                      window: str = WINDOW_RETRIEVAL, with_fidelity: bool = True,
                      jobs: int = 1, rtol: float = 1e-8, atol: float = 1e-10,
                      jit: bool = True) -> StorageScan:
    """Rerun the protocol for each storage time; results keep input order."""
    from .dynamics import noise_run, run_protocol

    storage_times = np.asarray(storage_times, float)
    if np.any(storage_times < 0):
        raise InvalidInputError("storage times must be >= 0")

    def one(ts: float):
        sched = base_schedule.with_storage_time(ts)
        run = run_protocol(spec, sched, rtol=rtol, atol=atol, jit=jit)
        e = efficiency(run, window)
        if with_fidelity:
            f = apparent_fidelity(noise_run(spec, sched, rtol=rtol, atol=atol,
                                            jit=jit))
        else:
            f = float("nan")
        return e, f

    if jobs > 1:
        with ThreadPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(one, storage_times))
    else:
        results = [one(ts) for ts in storage_times]
    eff = np.array([r[0] for r in results])
    fid = np.array([r[1] for r in results])
    delta = spec.levels.delta
    period = dominant_period(storage_times, eff) if len(storage_times) >= 4 \
        else float("nan")
    return StorageScan(storage_times=storage_times, efficiencies=eff,
                       fidelities=fid, measured_period=period,
                       candidate_period_over=np.pi / delta if delta > 0 else np.inf,
                       candidate_period_under=delta / np.pi)


def scan_to_csv(scan: StorageScan, path) -> None:
    """CSV schema: t_storage_s, efficiency, fidelity."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["t_storage_s", "efficiency", "fidelity"])
        for ts, e, f in scan.rows():
            w.writerow([repr(float(ts)), repr(float(e)), repr(float(f))])
