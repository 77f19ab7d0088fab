"""Ensemble Lambda-system optical memory simulator.

Models a cavity-coupled emitter ensemble with every desired and undesired
level coupling, integrates the semi-classical storage/retrieval protocol,
and quantifies how unwanted couplings drive mixing amplification: apparent
efficiencies above one while the zero-input output stays dark.
"""

__version__ = "0.1.0"

from .dynamics import MemoryRun, build_rhs, noise_run, run_protocol
from .errors import (ConfigError, DivergenceError, InvalidInputError,
                     SchemaVersionError, SingularParametersError,
                     StiffnessError)
from .metrics import (MetricsResult, apparent_fidelity, classify_regime,
                      efficiency, noise_energy, storage_time_scan, summarize)
from .model import (CavityParams, CouplingSet, EnsembleParams, LevelScheme,
                    RelaxationParams, SystemSpec, couplings_from_dipoles,
                    derive_cavity, homogeneous_linewidth)
from .presets import nv4_preset, nv_preset, nv_schedule, rb_preset, rb_schedule
from .reduced import (ReducedParams, TermMask, amplification_rate, audit,
                      growth_exponents, reduced_protocol, two_level_oracle)
from .schedule import ControlPulse, PulseSchedule, SignalPulse, standard_schedule
from .sweep import SweepPlan, SweepResult, load, persist, scale_coupling, sweep

__all__ = [
    "MemoryRun", "build_rhs", "noise_run", "run_protocol",
    "ConfigError", "DivergenceError", "InvalidInputError",
    "SchemaVersionError", "SingularParametersError", "StiffnessError",
    "MetricsResult", "apparent_fidelity", "classify_regime", "efficiency",
    "noise_energy", "storage_time_scan", "summarize",
    "CavityParams", "CouplingSet", "EnsembleParams", "LevelScheme",
    "RelaxationParams", "SystemSpec", "couplings_from_dipoles",
    "derive_cavity", "homogeneous_linewidth",
    "nv4_preset", "nv_preset", "nv_schedule", "rb_preset", "rb_schedule",
    "ReducedParams", "TermMask", "amplification_rate", "audit",
    "growth_exponents", "reduced_protocol", "two_level_oracle",
    "ControlPulse", "PulseSchedule", "SignalPulse", "standard_schedule",
    "SweepPlan", "SweepResult", "load", "persist", "scale_coupling", "sweep",
]
