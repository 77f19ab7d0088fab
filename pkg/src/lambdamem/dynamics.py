"""Semi-classical equations of motion and the storage/retrieval protocol.

The dynamical state is the complex vector
    [a, sigma'_23, (sigma'_21, sigma'_31,) sigma'_jk ...]
holding the cavity amplitude, the ground coherences and every retained
optical coherence. Populations enter through the fixed closure: level 2
holds all N emitters, every other population is zero. Products of two
dynamical quantities (a or a* with a coherence) are evaluated with current
mean values.

With the drive factors
    f_jk(t) = a G_jk p_j(t) + Omega_jk(t) q_j(t),
    p = (e^{+i w22 t}, 1, e^{+i delta t}),  q = (e^{+i w33 t}, e^{-i delta t}, 1),
the equations integrated here are

    d sigma'_23 = -gs*s23 - i sum_k [ f_2k conj(s3k) - conj(f_3k) s2k ]
    d sigma'_21 = -gs*s21 - i sum_k [ f_2k conj(s1k) - conj(f_1k) s2k ]
    d sigma'_31 = -gs*s31 - i sum_k [ f_3k conj(s1k) - conj(f_1k) s3k ]
    d sigma'_2k = -(i Dk + go)*s2k + i [ f_1k s21 + f_2k N + f_3k s23 ]
    d sigma'_3k = -(i Dk + go)*s3k + i [ f_1k s31 + f_2k conj(s23) ]
    d sigma'_1k = -(i Dk + go)*s1k + i [ f_2k conj(s21) + f_3k conj(s31) ]
    d a         = -kappa a + sqrt(2 kappa) a_in
                  + i sum_k [ conj(G_1k) s1k e^{-i w22 t}
                            + conj(G_2k) s2k + conj(G_3k) s3k e^{-i delta t} ]

with gs the spin broadening, go = gamma_d + gamma_e the optical damping,
and Omega_jk(t) the control matrix scaled by amp1*env1(t) + amp2*env2(t).
The output field is a_out(t) = sqrt(2 kappa) a(t) - a_in(t).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInputError
from .gridmath import simpson_uniform
from .integrate import HAVE_NUMBA, IntegratorStats, make_integrator
from .model import SystemSpec
from .schedule import PulseSchedule

PHASE_SAMPLES_PER_PERIOD = 20
MAX_GRID_SAMPLES = 8_000_000


def _envelope_fn(t, shape, center, width, edge):
    """Unit control envelope; shape 0 = flat-top raised-cosine, 1 = gaussian."""
    if shape == 1:
        sig = width / (2.0 * np.sqrt(2.0 * np.log(2.0)))
        arg = (t - center) / sig
        return np.exp(-0.5 * arg * arg)
    t_on = center - 0.5 * width
    t_off = center + 0.5 * width
    if t <= t_on or t >= t_off:
        return 0.0
    if t < t_on + edge:
        return 0.5 * (1.0 - np.cos(np.pi * (t - t_on) / edge))
    if t > t_off - edge:
        return 0.5 * (1.0 - np.cos(np.pi * (t_off - t) / edge))
    return 1.0


def _make_full_rhs(envelope):
    def rhs(t, y, out, args):
        (G1, G2, G3, O1, O2, O3, Delta, delta, om22, om33, kappa, sqrt2k,
         gamma_g, gamma_opt, npop, s1i, s2i, s3i, i23, i21, i31,
         ain_amp, ain_t0, ain_sigma,
         c1_amp, c1_center, c1_width, c1_edge, c1_shape,
         c2_amp, c2_center, c2_width, c2_edge, c2_shape) = args

        a = y[0]
        ac = np.conj(a)
        s23 = y[i23]
        s21 = y[i21] if i21 >= 0 else 0.0 + 0.0j
        s31 = y[i31] if i31 >= 0 else 0.0 + 0.0j

        ctrl = (c1_amp * envelope(t, c1_shape, c1_center, c1_width, c1_edge)
                + c2_amp * envelope(t, c2_shape, c2_center, c2_width, c2_edge))
        arg = (t - ain_t0) / ain_sigma
        a_in = ain_amp * np.exp(-0.5 * arg * arg)

        e_pd = np.exp(1j * delta * t)       # e^{+i delta t}
        e_md = np.conj(e_pd)
        e_p22 = np.exp(1j * om22 * t)
        e_p33 = np.exp(1j * om33 * t)
        e_m22 = np.conj(e_p22)

        ds23 = -gamma_g * s23
        ds21 = -gamma_g * s21
        ds31 = -gamma_g * s31
        da = -kappa * a + sqrt2k * a_in

        K = Delta.shape[0]
        for c in range(K):
            s1k = y[s1i[c]] if s1i[c] >= 0 else 0.0 + 0.0j
            s2k = y[s2i[c]] if s2i[c] >= 0 else 0.0 + 0.0j
            s3k = y[s3i[c]] if s3i[c] >= 0 else 0.0 + 0.0j

            f1 = a * G1[c] * e_p22 + ctrl * O1[c] * e_p33
            f2 = a * G2[c] + ctrl * O2[c] * e_md
            f3 = a * G3[c] * e_pd + ctrl * O3[c]

            ds23 += -1j * (f2 * np.conj(s3k) - np.conj(f3) * s2k)
            if i21 >= 0:
                ds21 += -1j * (f2 * np.conj(s1k) - np.conj(f1) * s2k)
                ds31 += -1j * (f3 * np.conj(s1k) - np.conj(f1) * s3k)

            damp = 1j * Delta[c] + gamma_opt
            if s2i[c] >= 0:
                out[s2i[c]] = -damp * s2k + 1j * (f1 * s21 + f2 * npop
                                                  + f3 * s23)
            if s3i[c] >= 0:
                out[s3i[c]] = -damp * s3k + 1j * (f1 * s31
                                                  + f2 * np.conj(s23))
            if s1i[c] >= 0:
                out[s1i[c]] = -damp * s1k + 1j * (f2 * np.conj(s21)
                                                  + f3 * np.conj(s31))

            da += 1j * (np.conj(G1[c]) * s1k * e_m22 + np.conj(G2[c]) * s2k
                        + np.conj(G3[c]) * s3k * e_md)

        out[0] = da
        out[i23] = ds23
        if i21 >= 0:
            out[i21] = ds21
        if i31 >= 0:
            out[i31] = ds31

    return rhs


_full_rhs_py = _make_full_rhs(_envelope_fn)
if HAVE_NUMBA:
    import numba

    _envelope_nb = numba.njit(cache=True)(_envelope_fn)
    _full_rhs_nb = numba.njit(_make_full_rhs(_envelope_nb))
else:                                    # pragma: no cover
    _full_rhs_nb = None

_INTEGRATORS: dict[bool, object] = {}


def _get_integrator(jit: bool = True):
    jit = jit and HAVE_NUMBA
    if jit not in _INTEGRATORS:
        rhs = _full_rhs_nb if jit else _full_rhs_py
        _INTEGRATORS[jit] = make_integrator(rhs, jit=jit)
    return _INTEGRATORS[jit]


@dataclass(frozen=True)
class StateLayout:
    """Index map from physical labels to state-vector slots."""

    labels: tuple[str, ...]
    i23: int
    i21: int                      # -1 when the level-1 block is off
    i31: int
    s1_idx: np.ndarray            # per excited column; -1 when not retained
    s2_idx: np.ndarray
    s3_idx: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.labels)


def state_layout(spec: SystemSpec) -> StateLayout:
    """Assign state indices for every retained dynamical variable."""
    labels = ["a", "sigma23"]
    i23 = 1
    if spec.include_level1:
        labels += ["sigma21", "sigma31"]
        i21, i31 = 2, 3
    else:
        i21 = i31 = -1
    K = spec.levels.n_excited
    dropped = set(spec.dropped_pairs)
    idx = {1: np.full(K, -1, np.int64), 2: np.full(K, -1, np.int64),
           3: np.full(K, -1, np.int64)}
    ground_rows = (2, 3, 1) if spec.include_level1 else (2, 3)
    for j in ground_rows:
        for c, k in enumerate(spec.levels.excited_indices):
            if (j, k) in dropped:
                continue
            idx[j][c] = len(labels)
            labels.append(f"sigma{j}{k}")
    return StateLayout(tuple(labels), i23, i21, i31, idx[1], idx[2], idx[3])


def zero_input_dark(spec: SystemSpec) -> bool:
    """Structural test: is the zero-input run identically zero?

    Under the fixed closure the only population-pumped coherences are the
    sigma'_2k with a live control entry. The zero state stays an exact
    solution iff none of them can reach the cavity or another coherence
    without a cavity photon: their G entry and their partner control
    entries (same k, other ground rows) must all vanish.
    """
    G, Om = spec.effective_couplings()
    for c in range(spec.levels.n_excited):
        k = spec.levels.excited_indices[c]
        if (2, k) in spec.dropped_pairs or Om[1, c] == 0:
            continue
        if G[1, c] != 0 or Om[2, c] != 0:
            return False
        if spec.include_level1 and Om[0, c] != 0:
            return False
    return True


def fastest_phase(spec: SystemSpec) -> float:
    """Fastest retained angular rate: max(|w22|, |w33|, 2 delta, |D_k|, kappa)."""
    rates = [spec.cavity.kappa, 2.0 * spec.levels.delta]
    if spec.include_level1:
        rates += [abs(spec.levels.omega22), abs(spec.levels.omega33)]
    dropped = set(spec.dropped_pairs)
    for k in spec.levels.excited_indices:
        if all((j, k) in dropped for j in (1, 2, 3)):
            continue
        rates.append(abs(spec.levels.detunings[k]))
    return max(rates)


def output_grid(spec: SystemSpec, schedule: PulseSchedule,
                output_dt: float | None = None) -> np.ndarray:
    """Uniform output grid resolving the fastest retained phase 20x."""
    if output_dt is None:
        output_dt = 2.0 * np.pi / fastest_phase(spec) / PHASE_SAMPLES_PER_PERIOD
    n = int(np.ceil(schedule.t_end / output_dt)) + 1
    if n > MAX_GRID_SAMPLES:
        raise InvalidInputError(
            f"output grid needs {n} samples to resolve the fastest retained "
            "phase; drop the stiff coherences or override output_dt")
    return np.linspace(0.0, schedule.t_end, n)


@dataclass
class MemoryRun:
    """One integrated protocol: output field, trajectory, bookkeeping."""

    t: np.ndarray                 # uniform output grid [s]
    a_out: np.ndarray             # complex output field on t
    a_in: np.ndarray              # complex input field on t (zero for noise)
    state_t: np.ndarray           # trajectory sample times (strided subgrid)
    state: np.ndarray             # (len(state_t), dim) complex
    state_labels: tuple[str, ...]
    is_noise_run: bool
    input_energy: float
    stats: IntegratorStats
    spec: SystemSpec
    schedule: PulseSchedule

    @property
    def dt(self) -> float:
        return self.t[1] - self.t[0]


def _build_args(spec: SystemSpec, schedule: PulseSchedule, layout: StateLayout,
                ain_amp: complex):
    G, Om = spec.effective_couplings()
    lv = spec.levels
    kappa = spec.cavity.kappa
    relax = spec.relaxation
    gamma_opt = relax.gamma_d + relax.gamma_e
    sig = schedule.signal
    c1, c2 = schedule.control1, schedule.control2
    return (np.ascontiguousarray(G[0]), np.ascontiguousarray(G[1]),
            np.ascontiguousarray(G[2]), np.ascontiguousarray(Om[0]),
            np.ascontiguousarray(Om[1]), np.ascontiguousarray(Om[2]),
            lv.detuning_array(), float(lv.delta), float(lv.omega22),
            float(lv.omega33), float(kappa), float(np.sqrt(2.0 * kappa)),
            float(relax.gamma_s), float(gamma_opt),
            float(spec.ensemble.n_emitters),
            layout.s1_idx, layout.s2_idx, layout.s3_idx,
            np.int64(layout.i23), np.int64(layout.i21), np.int64(layout.i31),
            complex(ain_amp), float(sig.center), float(sig.sigma),
            float(c1.amp), float(c1.center), float(c1.width), float(c1.edge),
            np.int64(c1.shape_code),
            float(c2.amp), float(c2.center), float(c2.width), float(c2.edge),
            np.int64(c2.shape_code))


def build_rhs(spec: SystemSpec, schedule: PulseSchedule,
              with_input: bool = True, input_scale: complex = 1.0):
    """Time-dependent derivative function y, t -> dy/dt plus its layout.

    The returned callable is the plain-Python form of the same equations the
    fast integrator runs; it exists for validation and inspection.
    """
    layout = state_layout(spec)
    grid = output_grid(spec, schedule)
    amp = input_scale * _input_amplitude(schedule, grid) if with_input else 0.0
    args = _build_args(spec, schedule, layout, amp)

    def rhs(y: np.ndarray, t: float) -> np.ndarray:
        y = np.asarray(y, complex)
        if y.shape != (layout.dim,):
            raise InvalidInputError(f"state must have shape ({layout.dim},)")
        out = np.empty_like(y)
        _full_rhs_py(float(t), y, out, args)
        return out

    return rhs, layout


def _input_amplitude(schedule: PulseSchedule, grid: np.ndarray) -> float:
    """Scale making the discrete signal energy exactly one on the grid."""
    vals = schedule.signal.amplitude_unnormalized(grid)
    energy = simpson_uniform(np.abs(vals) ** 2, grid[1] - grid[0])
    if energy <= 0.0:
        raise InvalidInputError("signal pulse has no support on the grid")
    return 1.0 / np.sqrt(energy)


def _run(spec: SystemSpec, schedule: PulseSchedule, *, with_input: bool,
         rtol: float, atol: float, output_dt: float | None,
         store_trajectory: bool, trajectory_samples: int,
         input_scale: complex, jit: bool) -> MemoryRun:
    layout = state_layout(spec)
    grid = output_grid(spec, schedule, output_dt)
    dt = grid[1] - grid[0]
    if with_input:
        amp = input_scale * _input_amplitude(schedule, grid)
    else:
        amp = 0.0
    args = _build_args(spec, schedule, layout, amp)
    max_step = 2.0 * np.pi / fastest_phase(spec) / PHASE_SAMPLES_PER_PERIOD
    if output_dt is not None:
        max_step = min(max_step, dt)
    stride = 1
    if not store_trajectory or trajectory_samples > 0:
        want = trajectory_samples if trajectory_samples > 0 else 2000
        stride = max(1, (len(grid) - 1) // want)
    y0 = np.zeros(layout.dim, complex)
    integrator = _get_integrator(jit)
    y_sel, y_traj, stats = integrator(
        grid, y0, rtol=rtol, atol=atol, max_step=max_step,
        sel_idx=np.array([0], np.int64), traj_stride=stride, args=args)

    a = y_sel[:, 0]
    a_in = amp * schedule.signal.amplitude_unnormalized(grid) \
        if with_input else np.zeros_like(grid, dtype=complex)
    a_out = np.sqrt(2.0 * spec.cavity.kappa) * a - a_in
    in_energy = simpson_uniform(np.abs(a_in) ** 2, dt) if with_input else 0.0
    state_t = grid[::stride][:y_traj.shape[0]]
    return MemoryRun(t=grid, a_out=a_out, a_in=a_in, state_t=state_t,
                     state=y_traj if store_trajectory else y_traj[:0],
                     state_labels=layout.labels,
                     is_noise_run=not with_input, input_energy=in_energy,
                     stats=stats, spec=spec, schedule=schedule)


def run_protocol(spec: SystemSpec, schedule: PulseSchedule, *,
                 rtol: float = 1e-8, atol: float = 1e-10,
                 output_dt: float | None = None, store_trajectory: bool = False,
                 trajectory_samples: int = 2000, input_scale: complex = 1.0,
                 jit: bool = True) -> MemoryRun:
    """Integrate the full storage/retrieval protocol from a zero state."""
    return _run(spec, schedule, with_input=True, rtol=rtol, atol=atol,
                output_dt=output_dt, store_trajectory=store_trajectory,
                trajectory_samples=trajectory_samples,
                input_scale=input_scale, jit=jit)


def noise_run(spec: SystemSpec, schedule: PulseSchedule, *,
              rtol: float = 1e-8, atol: float = 1e-10,
              output_dt: float | None = None, store_trajectory: bool = False,
              trajectory_samples: int = 2000, jit: bool = True) -> MemoryRun:
    """Identical protocol with the input field turned off."""
    return _run(spec, schedule, with_input=False, rtol=rtol, atol=atol,
                output_dt=output_dt, store_trajectory=store_trajectory,
                trajectory_samples=trajectory_samples, input_scale=0.0,
                jit=jit)


def export_csv(run: MemoryRun, path, include_state: bool = False,
               include_input: bool = False, stride: int | None = None) -> None:
    """Write the field series as CSV: t_s, re_a_out, im_a_out, abs2_a_out.

    include_input appends abs2_a_in; include_state appends the trajectory
    columns (rows then follow the trajectory subgrid).
    """
    import csv

    if include_state and run.state.size == 0:
        raise InvalidInputError("run was made without store_trajectory")
    if stride is None:
        stride = max(1, (len(run.t) - 1) // 20000) if not include_state else 1
    if include_state:
        t = run.state_t
        full_stride = max(1, (len(run.t) - 1) // max(1, len(run.state_t) - 1)) \
            if len(run.state_t) > 1 else 1
        a_out = run.a_out[::full_stride][:len(t)]
        a_in = run.a_in[::full_stride][:len(t)]
    else:
        t = run.t[::stride]
        a_out = run.a_out[::stride]
        a_in = run.a_in[::stride]
    header = ["t_s", "re_a_out", "im_a_out", "abs2_a_out"]
    if include_input:
        header.append("abs2_a_in")
    if include_state:
        for lab in run.state_labels:
            header += [f"re_{lab}", f"im_{lab}"]
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(header)
        for i in range(len(t)):
            row = [repr(float(t[i])), repr(float(a_out[i].real)),
                   repr(float(a_out[i].imag)),
                   repr(float(abs(a_out[i]) ** 2))]
            if include_input:
                row.append(repr(float(abs(a_in[i]) ** 2)))
            if include_state:
                for c in range(run.state.shape[1]):
                    row += [repr(float(run.state[i, c].real)),
                            repr(float(run.state[i, c].imag))]
            w.writerow(row)
