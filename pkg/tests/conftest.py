from dataclasses import replace

import numpy as np
import pytest

from lambdamem.presets import nv4_preset, nv_preset, nv_schedule, rb_preset, \
    rb_schedule
from lambdamem.reduced import ReducedParams, amplification_rate
from lambdamem.schedule import (ControlPulse, PulseSchedule, SignalPulse,
                                standard_schedule)


def constant_control_schedule(t_end, amp=1.0, edge=2e-9):
    """Control scale exactly `amp` over the whole [0, t_end] span."""
    c1 = ControlPulse(amp=amp, center=t_end / 2,
                      width=t_end + 6 * edge, edge=edge)
    c2 = ControlPulse(amp=0.0, center=t_end / 2,
                      width=t_end + 6 * edge, edge=edge)
    sig = SignalPulse(t_fwhm=t_end / 8, center=t_end / 2)
    return PulseSchedule(signal=sig, control1=c1, control2=c2,
                         storage_time=0.0, t_end=t_end,
                         retrieval_window_start=0.0)


def draw_reduced_params(rng, t_span=500e-9, max_efolds=10.0):
    """Random reduced parameters with bounded mixing growth over t_span."""
    mag = lambda lo, hi: 10.0 ** rng.uniform(np.log10(lo), np.log10(hi))
    phase = lambda: np.exp(1j * rng.uniform(0, 2 * np.pi))
    p = ReducedParams(
        n_emitters=rng.integers(10, 1000),
        g29=mag(1e8, 3e9) * phase(), om39=mag(1e7, 1e9) * phase(),
        g38=mag(1e8, 3e9) * phase(), om28=mag(1e7, 1e9) * phase(),
        delta8=rng.uniform(-3e9, 3e9), delta=mag(1e5, 3e7),
        kappa=mag(1e10, 1e12), gamma_d=mag(1e6, 1e8),
        gamma_e=mag(1e7, 1e9), gamma_s=0.0)
    b = amplification_rate(p)
    c_rate = abs(b) / np.hypot(p.gamma_opt, p.delta8)
    target = rng.uniform(0.3, 1.0) * max_efolds / t_span
    return replace(p, om28=p.om28 * target / c_rate)


@pytest.fixture(scope="session")
def nv():
    return nv_preset()


@pytest.fixture(scope="session")
def nv4():
    return nv4_preset()


@pytest.fixture(scope="session")
def rb():
    return rb_preset()


@pytest.fixture(scope="session")
def nv_sched():
    return nv_schedule()


@pytest.fixture(scope="session")
def rb_sched():
    return rb_schedule()


@pytest.fixture(scope="session")
def short_sched():
    """Compact protocol for structural tests that do not target Fig-2 scale."""
    return standard_schedule(t_fwhm=17.3e-9, storage_time=80e-9,
                             amp1=4.3, amp2=6.0,
                             control1_width=36e-9, control2_width=20e-9,
                             control1_delay=15e-9, signal_center=60e-9)


@pytest.fixture()
def rng():
    return np.random.default_rng(20260810)
