"""Signal and control pulse timing for the storage/retrieval protocol."""

from __future__ import annotations

from dataclasses import dataclass, replace

import numpy as np

from .errors import InvalidInputError

SHAPE_FLATTOP = 0
SHAPE_GAUSSIAN = 1

_SHAPE_CODES = {"flattop": SHAPE_FLATTOP, "gaussian": SHAPE_GAUSSIAN}


@dataclass(frozen=True)
class SignalPulse:
    """Gaussian input pulse, normalized to unit energy on the output grid.

    t_fwhm is the intensity FWHM of |a_in(t)|^2.
    """

    t_fwhm: float
    center: float
    shape: str = "gaussian"

    def __post_init__(self):
        if self.t_fwhm <= 0:
            raise InvalidInputError("signal width must be positive")
        if self.shape != "gaussian":
            raise InvalidInputError("only gaussian input pulses are supported")

    @property
    def sigma(self) -> float:
        # |a_in|^2 = exp(-(t-t0)^2/sigma^2) has FWHM 2*sigma*sqrt(ln 2)
        return self.t_fwhm / (2.0 * np.sqrt(np.log(2.0)))

    def amplitude_unnormalized(self, t: np.ndarray | float) -> np.ndarray | float:
        return np.exp(-((t - self.center) ** 2) / (2.0 * self.sigma ** 2))

    def analytic_norm(self) -> float:
        # integral of exp(-(t-t0)^2/sigma^2) dt
        return np.sqrt(self.sigma * np.sqrt(np.pi))


@dataclass(frozen=True)
class ControlPulse:
    """One control pulse: dimensionless amplitude times a unit envelope.

    Flat-top envelopes rise and fall over raised-cosine edges of length
    `edge` inside the total `width`; gaussian envelopes read `width` as the
    FWHM.
    """

    amp: float
    center: float
    width: float
    edge: float = 5e-9
    shape: str = "flattop"

    def __post_init__(self):
        if self.width <= 0:
            raise InvalidInputError("control width must be positive")
        if self.shape not in _SHAPE_CODES:
            raise InvalidInputError(f"unknown control shape '{self.shape}'")
        if self.shape == "flattop" and self.width < 2 * self.edge:
            raise InvalidInputError("flat-top width must cover both edges")

    @property
    def shape_code(self) -> int:
        return _SHAPE_CODES[self.shape]

    @property
    def onset(self) -> float:
        if self.shape == "flattop":
            return self.center - 0.5 * self.width
        return self.center - 2.0 * self.width     # gaussian support, 4 sigma-ish

    def envelope(self, t: np.ndarray | float) -> np.ndarray | float:
        """Unit-height envelope (no amp factor)."""
        t_arr = np.atleast_1d(np.asarray(t, float))
        if self.shape == "gaussian":
            sig = self.width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
            env = np.exp(-((t_arr - self.center) ** 2) / (2.0 * sig ** 2))
        else:
            t_on = self.center - 0.5 * self.width
            t_off = self.center + 0.5 * self.width
            env = np.zeros_like(t_arr)
            rising = (t_arr >= t_on) & (t_arr < t_on + self.edge)
            env[rising] = 0.5 * (1.0 - np.cos(np.pi * (t_arr[rising] - t_on) / self.edge))
            flat = (t_arr >= t_on + self.edge) & (t_arr <= t_off - self.edge)
            env[flat] = 1.0
            falling = (t_arr > t_off - self.edge) & (t_arr <= t_off)
            env[falling] = 0.5 * (1.0 - np.cos(np.pi * (t_off - t_arr[falling]) / self.edge))
        return env[0] if np.isscalar(t) or np.ndim(t) == 0 else env


@dataclass(frozen=True)
class PulseSchedule:
    """Full protocol timing: signal, two control pulses, storage interval."""

    signal: SignalPulse
    control1: ControlPulse
    control2: ControlPulse
    storage_time: float
    t_end: float
    retrieval_window_start: float | None = None

    def __post_init__(self):
        if self.storage_time < 0:
            raise InvalidInputError("storage time must be >= 0")
        expected = self.control1.center + self.storage_time
        if abs(self.control2.center - expected) > 1e-15 + 1e-12 * abs(expected):
            raise InvalidInputError(
                "control2 center must equal control1 center + storage time")
        if self.t_end <= self.control2.center:
            raise InvalidInputError("t_end must extend past the retrieval pulse")

    @property
    def retrieval_start(self) -> float:
        """Start of the retrieval integration window (control2 onset by default)."""
        if self.retrieval_window_start is not None:
            return self.retrieval_window_start
        return self.control2.onset

    def with_storage_time(self, t_s: float) -> "PulseSchedule":
        """Same protocol with the retrieval pulse moved to a new storage time."""
        shift = t_s - self.storage_time
        c2 = replace(self.control2, center=self.control2.center + shift)
        rws = (None if self.retrieval_window_start is None
               else self.retrieval_window_start + shift)
        return replace(self, control2=c2, storage_time=t_s,
                       t_end=self.t_end + shift, retrieval_window_start=rws)

    def control_scale(self, t: np.ndarray | float) -> np.ndarray | float:
        """amp1*env1(t) + amp2*env2(t), the factor applied to the Rabi matrix."""
        return (self.control1.amp * self.control1.envelope(t)
                + self.control2.amp * self.control2.envelope(t))


def standard_schedule(t_fwhm: float, storage_time: float, amp1: float, amp2: float,
                      control1_width: float, control2_width: float,
                      edge: float = 5e-9, signal_center: float | None = None,
                      control1_delay: float = 0.0, tail: float | None = None,
                      shape: str = "flattop") -> PulseSchedule:
    """Build the usual protocol: control1 covering the signal, control2 after t_s.

    control1_delay shifts control1's center relative to the signal center.
    """
    sig_sigma = t_fwhm / (2.0 * np.sqrt(np.log(2.0)))
    if signal_center is None:
        signal_center = max(6.0 * sig_sigma, 0.5 * control1_width + edge + 1e-9)
    signal = SignalPulse(t_fwhm=t_fwhm, center=signal_center)
    c1 = ControlPulse(amp=amp1, center=signal_center + control1_delay,
                      width=control1_width, edge=edge, shape=shape)
    c2 = ControlPulse(amp=amp2, center=c1.center + storage_time,
                      width=control2_width, edge=edge, shape=shape)
    if tail is None:
        tail = max(3.0 * t_fwhm, control2_width)
    t_end = c2.center + 0.5 * control2_width + tail
    return PulseSchedule(signal=signal, control1=c1, control2=c2,
                         storage_time=storage_time, t_end=t_end)
