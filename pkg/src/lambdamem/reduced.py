"""Semi-analytical 4-level model with per-term toggles and rate formulas.

The slow variable is the collective ground coherence u(t) = sigma'_32(t)
(its conjugate is sigma'_23). After adiabatic elimination of the cavity and
the optical coherences, u obeys a sum of eight terms; each can be masked or
continuously scaled. Term indices:

  1  du/dt itself (always on)
  2  spin-broadening damping            gamma_s * u
  3  desired write drive                sqrt(2k) N G29* Om39 a_in / alpha
  4  cavity-broadened readout damping   k |Om39|^2 u / alpha
  5  desired saturation                 |G29|^2 |beta|^2 u / (Gamma alpha^2)
  6  unwanted saturation                |G38|^2 |beta|^2 u / ((Gamma - i D8) alpha^2)
  7  unwanted write drive               e^{2i d t} sqrt(2k) N Gamma G38 Om28* a_in
                                           / ((Gamma - i D8) alpha)
  8  mixing gain (conjugate coupling)   e^{2i d t} N G38 Om28* Om39 G29* conj(u)
                                           / ((Gamma - i D8) alpha)

with beta(t) = sqrt(2k) Gamma a_in(t) - Om39(t) G29* conj(u), alpha =
Gamma kappa + |G29|^2 N and Gamma = gamma_d + gamma_e. Terms 2-7 enter the
derivative with a minus sign, term 8 with a plus sign.

Output reconstruction (used by reduced_protocol): the eliminated cavity
amplitude is a(t) = beta(t)/alpha. Derivation: setting the fast derivatives
to zero, sigma'_29 = i(a G29 N + Om39 conj(u))/Gamma and
0 = -kappa a + sqrt(2k) a_in + i G29* sigma'_29, which solves to
a (kappa + |G29|^2 N / Gamma) = sqrt(2k) a_in - G29* Om39 conj(u) / Gamma,
i.e. a = beta/alpha. The output follows from a_out = sqrt(2k) a - a_in; in
particular a_out = [(kappa Gamma - |G29|^2 N) a_in
- sqrt(2k) G29* Om39 conj(u)] / alpha.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from .errors import InvalidInputError, SingularParametersError
from .gridmath import simpson_uniform
from .integrate import HAVE_NUMBA, IntegratorStats, make_integrator
from .model import SystemSpec
from .schedule import PulseSchedule

N_TERMS = 8


@dataclass(frozen=True)
class ReducedParams:
    """Couplings and rates of the 4-level semi-analytical model [rad/s]."""

    n_emitters: float
    g29: complex
    om39: complex
    g38: complex
    om28: complex
    delta8: float
    delta: float
    kappa: float
    gamma_d: float
    gamma_e: float
    gamma_s: float = 0.0

    def __post_init__(self):
        for name in ("kappa", "gamma_d", "gamma_e", "gamma_s"):
            if getattr(self, name) < 0:
                raise InvalidInputError(f"{name} must be >= 0")

    @property
    def gamma_opt(self) -> float:
        return self.gamma_d + self.gamma_e

    @property
    def alpha(self) -> float:
        return self.gamma_opt * self.kappa + abs(self.g29) ** 2 * self.n_emitters

    @classmethod
    def from_system(cls, spec: SystemSpec, spectator: int | None = None
                    ) -> "ReducedParams":
        """Extract the desired Lambda plus one spectator channel from a spec.

        The spectator defaults to the excited level with the strongest
        |G_ctl,k * Om_sig,k| product among the non-resonant levels.
        """
        j_sig, j_ctl, k0 = spec.desired_lambda()
        G, Om = spec.effective_couplings()
        lv = spec.levels
        col0 = lv.column(k0)
        if spectator is None:
            best, spectator = -1.0, None
            for k in lv.excited_indices:
                if k == k0:
                    continue
                c = lv.column(k)
                score = abs(G[j_ctl - 1, c] * Om[j_sig - 1, c])
                if score > best:
                    best, spectator = score, k
            if spectator is None:
                raise InvalidInputError("no spectator excited level available")
        col8 = lv.column(spectator)
        return cls(n_emitters=spec.ensemble.n_emitters,
                   g29=G[j_sig - 1, col0], om39=Om[j_ctl - 1, col0],
                   g38=G[j_ctl - 1, col8], om28=Om[j_sig - 1, col8],
                   delta8=lv.detunings[spectator], delta=lv.delta,
                   kappa=spec.cavity.kappa,
                   gamma_d=spec.relaxation.gamma_d,
                   gamma_e=spec.relaxation.gamma_e,
                   gamma_s=spec.relaxation.gamma_s)


@dataclass(frozen=True)
class TermMask:
    """Boolean switches plus continuous scales for the eight terms.

    Term 1 (the derivative itself) is always enabled. The effective weight
    of term i is enabled[i] * scale[i]; Fig.-style sweeps scale one term
    from 0 to 1 with the rest fixed.
    """

    enabled: tuple[bool, ...] = (True,) * N_TERMS
    scales: tuple[float, ...] = (1.0,) * N_TERMS

    def __post_init__(self):
        if len(self.enabled) != N_TERMS or len(self.scales) != N_TERMS:
            raise InvalidInputError(f"term mask needs {N_TERMS} entries")
        if not self.enabled[0] or self.scales[0] != 1.0:
            raise InvalidInputError("term 1 is always enabled at unit scale")

    @classmethod
    def only(cls, *terms: int) -> "TermMask":
        """Mask enabling just the listed terms (term 1 implied)."""
        on = tuple(i == 0 or (i + 1) in terms for i in range(N_TERMS))
        return cls(enabled=on)

    @classmethod
    def full(cls) -> "TermMask":
        return cls()

    def without(self, *terms: int) -> "TermMask":
        on = tuple(e and (i + 1) not in terms
                   for i, e in enumerate(self.enabled))
        return TermMask(enabled=on, scales=self.scales)

    def scaled(self, term: int, value: float) -> "TermMask":
        if not 2 <= term <= N_TERMS:
            raise InvalidInputError("only terms 2..8 can be rescaled")
        sc = list(self.scales)
        sc[term - 1] = value
        return TermMask(enabled=self.enabled, scales=tuple(sc))

    def weights(self) -> np.ndarray:
        return np.array([e * s for e, s in zip(self.enabled, self.scales)],
                        float)


def _reduced_rhs_factory(envelope):
    def rhs(t, y, out, args):
        (g29c, om39, g38, om28c, delta8, delta, kappa, sqrt2k, gamma_opt,
         gamma_s, npop, alpha, w2, w3, w4, w5, w6, w7, w8,
         ain_amp, ain_t0, ain_sigma,
         c1_amp, c1_center, c1_width, c1_edge, c1_shape,
         c2_amp, c2_center, c2_width, c2_edge, c2_shape) = args

        u = y[0]
        v = np.conj(u)
        ctrl = (c1_amp * envelope(t, c1_shape, c1_center, c1_width, c1_edge)
                + c2_amp * envelope(t, c2_shape, c2_center, c2_width, c2_edge))
        arg = (t - ain_t0) / ain_sigma
        a_in = ain_amp * np.exp(-0.5 * arg * arg)

        om39_t = ctrl * om39
        om28c_t = ctrl * om28c                  # conj(Om28) * ctrl
        denom8 = gamma_opt - 1j * delta8
        phase = np.exp(2j * delta * t)
        beta = sqrt2k * gamma_opt * a_in - om39_t * g29c * v

        du = 0.0 + 0.0j
        if w2 != 0.0:
            du -= w2 * gamma_s * u
        if w3 != 0.0:
            du -= w3 * sqrt2k * npop * g29c * om39_t * a_in / alpha
        if w4 != 0.0:
            du -= w4 * kappa * abs(om39_t) ** 2 * u / alpha
        bb = beta * np.conj(beta)
        if w5 != 0.0:
            du -= w5 * abs(g29c) ** 2 * bb * u / (gamma_opt * alpha * alpha)
        if w6 != 0.0:
            du -= w6 * abs(g38) ** 2 * bb * u / (denom8 * alpha * alpha)
        if w7 != 0.0:
            du -= w7 * phase * sqrt2k * npop * gamma_opt * g38 * om28c_t \
                * a_in / (denom8 * alpha)
        if w8 != 0.0:
            du += w8 * phase * npop * g38 * om28c_t * om39_t * g29c * v \
                / (denom8 * alpha)
        out[0] = du

    return rhs


from .dynamics import _envelope_fn  # noqa: E402  (shared envelope shapes)

_reduced_rhs_py = _reduced_rhs_factory(_envelope_fn)
if HAVE_NUMBA:
    import numba

    from .dynamics import _envelope_nb

    _reduced_rhs_nb = numba.njit(_reduced_rhs_factory(_envelope_nb))
else:                                     # pragma: no cover
    _reduced_rhs_nb = None

_INTEGRATORS: dict[bool, object] = {}


def _get_integrator(jit: bool = True):
    jit = jit and HAVE_NUMBA
    if jit not in _INTEGRATORS:
        rhs = _reduced_rhs_nb if jit else _reduced_rhs_py
        _INTEGRATORS[jit] = make_integrator(rhs, jit=jit)
    return _INTEGRATORS[jit]


def _pack_args(params: ReducedParams, mask: TermMask, sched: PulseSchedule,
               ain_amp: complex):
    alpha = params.alpha
    if alpha <= 0.0:
        raise SingularParametersError("alpha = Gamma*kappa + |G29|^2 N is zero")
    w = mask.weights()
    sig = sched.signal
    c1, c2 = sched.control1, sched.control2
    return (complex(np.conj(params.g29)), complex(params.om39),
            complex(params.g38), complex(np.conj(params.om28)),
            float(params.delta8), float(params.delta), float(params.kappa),
            float(np.sqrt(2.0 * params.kappa)), float(params.gamma_opt),
            float(params.gamma_s), float(params.n_emitters), float(alpha),
            float(w[1]), float(w[2]), float(w[3]), float(w[4]), float(w[5]),
            float(w[6]), float(w[7]),
            complex(ain_amp), float(sig.center), float(sig.sigma),
            float(c1.amp), float(c1.center), float(c1.width), float(c1.edge),
            np.int64(c1.shape_code),
            float(c2.amp), float(c2.center), float(c2.width), float(c2.edge),
            np.int64(c2.shape_code))


def reduced_rhs(params: ReducedParams, mask: TermMask, sched: PulseSchedule,
                with_input: bool = True):
    """Plain-Python derivative sigma32, t -> d sigma32/dt (for validation)."""
    grid = _reduced_grid(params, sched)
    amp = _input_amp(sched, grid) if with_input else 0.0
    args = _pack_args(params, mask, sched, amp)

    def rhs(sigma32: complex, t: float) -> complex:
        y = np.array([sigma32], complex)
        out = np.empty_like(y)
        _reduced_rhs_py(float(t), y, out, args)
        return complex(out[0])

    return rhs


def _input_amp(sched: PulseSchedule, grid: np.ndarray) -> float:
    vals = sched.signal.amplitude_unnormalized(grid)
    energy = simpson_uniform(np.abs(vals) ** 2, grid[1] - grid[0])
    if energy <= 0:
        raise InvalidInputError("signal pulse has no support on the grid")
    return 1.0 / np.sqrt(energy)


def _reduced_grid(params: ReducedParams, sched: PulseSchedule,
                  output_dt: float | None = None) -> np.ndarray:
    if output_dt is None:
        amp_max = max(sched.control1.amp, sched.control2.amp)
        om = abs(params.om39) * amp_max
        gamma_r = params.kappa * om ** 2 / params.alpha
        b = abs(amplification_rate(params)) * amp_max ** 2
        c_rate = b / np.sqrt(params.gamma_opt ** 2 + params.delta8 ** 2)
        fastest = max(2.0 * params.delta, gamma_r, c_rate, 1e6)
        output_dt = min(2.0 * np.pi / fastest / 20.0,
                        sched.signal.sigma / 10.0,
                        min(sched.control1.edge, sched.control2.edge) / 8.0)
    n = int(np.ceil(sched.t_end / output_dt)) + 1
    n = min(n, 4_000_000)
    return np.linspace(0.0, sched.t_end, n)


@dataclass
class ReducedRun:
    """Reduced-model protocol output (duck-compatible with MemoryRun)."""

    t: np.ndarray
    a_out: np.ndarray
    a_in: np.ndarray
    sigma32: np.ndarray
    is_noise_run: bool
    input_energy: float
    stats: IntegratorStats
    params: ReducedParams
    mask: TermMask
    schedule: PulseSchedule

    @property
    def dt(self) -> float:
        return self.t[1] - self.t[0]


def check_adiabatic(params: ReducedParams, sched: PulseSchedule) -> list[str]:
    """Adiabatic-elimination validity warnings (empty list when clean)."""
    notes = []
    amp_max = max(sched.control1.amp, sched.control2.amp)
    drive = max(amp_max * abs(params.om39),
                abs(params.g29) * np.sqrt(params.n_emitters))
    if drive > 0.5 * params.kappa:
        notes.append(
            f"coupling rate {drive:.3g} exceeds kappa/2 = "
            f"{0.5 * params.kappa:.3g}; cavity elimination is marginal")
    bandwidth = 2.0 * np.pi / min(sched.control1.edge, sched.control2.edge,
                                  sched.signal.sigma)
    if bandwidth > 0.5 * params.gamma_opt:
        notes.append(
            f"pulse bandwidth {bandwidth:.3g} exceeds (gamma_d+gamma_e)/2 = "
            f"{0.5 * params.gamma_opt:.3g}; optical elimination is marginal")
    return notes


def reduced_protocol(params: ReducedParams, sched: PulseSchedule,
                     mask: TermMask | None = None, *, with_input: bool = True,
                     initial_sigma32: complex = 0.0, rtol: float = 1e-9,
                     atol: float = 1e-12, output_dt: float | None = None,
                     warn_adiabatic: bool = True, jit: bool = True
                     ) -> ReducedRun:
    """Integrate the masked reduced model through the protocol."""
    if mask is None:
        mask = TermMask.full()
    if warn_adiabatic:
        for note in check_adiabatic(params, sched):
            warnings.warn(note, stacklevel=2)
    grid = _reduced_grid(params, sched, output_dt)
    dt = grid[1] - grid[0]
    amp = _input_amp(sched, grid) if with_input else 0.0
    args = _pack_args(params, mask, sched, amp)
    integrator = _get_integrator(jit)
    y0 = np.array([initial_sigma32], complex)
    y_sel, _, stats = integrator(grid, y0, rtol=rtol, atol=atol,
                                 max_step=dt, args=args)
    u = y_sel[:, 0]
    a_in = amp * sched.signal.amplitude_unnormalized(grid) if with_input \
        else np.zeros_like(grid, dtype=complex)
    ctrl = sched.control_scale(grid)
    om39_t = ctrl * params.om39
    beta = (np.sqrt(2.0 * params.kappa) * params.gamma_opt * a_in
            - om39_t * np.conj(params.g29) * np.conj(u))
    a_out = np.sqrt(2.0 * params.kappa) * beta / params.alpha - a_in
    energy = simpson_uniform(np.abs(a_in) ** 2, dt) if with_input else 0.0
    return ReducedRun(t=grid, a_out=a_out, a_in=a_in, sigma32=u,
                      is_noise_run=not with_input, input_energy=energy,
                      stats=stats, params=params, mask=mask, schedule=sched)


def amplification_rate(params: ReducedParams) -> complex:
    """Four-wave-mixing rate b = N G29* Om39 G38 Om28* / alpha."""
    alpha = params.alpha
    if alpha <= 0.0:
        raise SingularParametersError("alpha = Gamma*kappa + |G29|^2 N is zero")
    return (params.n_emitters * np.conj(params.g29) * params.om39
            * params.g38 * np.conj(params.om28) / alpha)


def growth_exponents(b: complex, gamma_opt: float, delta8: float,
                     delta: float) -> tuple[complex, complex]:
    """Exponents lambda_pm = i*delta +- sqrt(|b|^2/(Gamma^2+D8^2) - delta^2).

    Principal square root; Re(lambda_plus) > 0 flags amplification. These
    are the eigenvalues (shifted by i*delta) of the phase-rotated pair
    (sigma'_32, sigma'_23) coupled at rate c = b/(Gamma - i D8).
    """
    radicand = abs(b) ** 2 / (gamma_opt ** 2 + delta8 ** 2) - delta ** 2
    root = np.sqrt(complex(radicand))
    return 1j * delta + root, 1j * delta - root


def two_level_oracle(params: ReducedParams, t: float | np.ndarray,
                     sigma32_0: complex = 1.0, amp: float = 1.0):
    """Exact matrix-exponential solution of the bare mixing pair.

    Solves du/dt = e^{2 i delta t} c conj(u) (terms {1, 8} with constant
    control scale `amp`) via the phase rotation u = e^{i delta t} w and
    w' = M w on (w, conj(w)). Independent of the adaptive integrator.
    """
    b = amplification_rate(params) * amp * amp
    c = b / (params.gamma_opt - 1j * params.delta8)
    M = np.array([[-1j * params.delta, c],
                  [np.conj(c), 1j * params.delta]], complex)
    w0 = np.array([sigma32_0, np.conj(sigma32_0)], complex)
    ts = np.atleast_1d(np.asarray(t, float))
    out = np.empty(len(ts), complex)
    for i, ti in enumerate(ts):
        w = expm(M * ti) @ w0
        out[i] = np.exp(1j * params.delta * ti) * w[0]
    return out[0] if np.ndim(t) == 0 else out


@dataclass(frozen=True)
class AuditChannel:
    """One spectator amplification channel of the risk report."""

    excited_index: int
    g_coupling: complex           # signal-field coupling on the control ground
    om_coupling: complex          # control-field coupling on the signal ground
    detuning: float
    b_rate: complex
    growth_exponent: complex      # lambda_plus at peak control scale
    mitigation_ratio: float       # |G Om| / |Delta_k|
    flagged: bool


@dataclass(frozen=True)
class AuditReport:
    lambda_levels: tuple[int, int, int]       # (signal gnd, control gnd, excited)
    protocol_duration: float
    control_scale: float
    channels: tuple[AuditChannel, ...]        # ranked, strongest first

    def as_dict(self) -> dict:
        return {
            "lambda_levels": list(self.lambda_levels),
            "protocol_duration_s": self.protocol_duration,
            "control_scale": self.control_scale,
            "growth_uses_abs_b": True,
            "channels": [{
                "excited_index": ch.excited_index,
                "g_rad_per_s": [ch.g_coupling.real, ch.g_coupling.imag],
                "omega_rad_per_s": [ch.om_coupling.real, ch.om_coupling.imag],
                "detuning_rad_per_s": ch.detuning,
                "abs_b_rad_per_s": abs(ch.b_rate),
                "re_lambda_plus_per_s": ch.growth_exponent.real,
                "mitigation_ratio": ch.mitigation_ratio,
                "flagged": ch.flagged,
            } for ch in self.channels],
        }


def audit(spec: SystemSpec, schedule: PulseSchedule | None = None,
          protocol_duration: float | None = None) -> AuditReport:
    """Rank every spectator excited level by its mixing-gain risk.

    Channels whose growth exponent times the protocol duration exceeds one
    are flagged. The control scale is the peak schedule amplitude (1 when
    no schedule is given).
    """
    j_sig, j_ctl, k0 = spec.desired_lambda()
    if protocol_duration is None:
        if schedule is None:
            raise InvalidInputError(
                "audit needs a schedule or an explicit protocol_duration")
        protocol_duration = schedule.t_end
    amp = 1.0 if schedule is None else max(schedule.control1.amp,
                                           schedule.control2.amp)
    G, Om = spec.effective_couplings()
    lv = spec.levels
    col0 = lv.column(k0)
    base = ReducedParams(n_emitters=spec.ensemble.n_emitters,
                         g29=G[j_sig - 1, col0], om39=Om[j_ctl - 1, col0],
                         g38=0.0, om28=0.0, delta8=0.0, delta=lv.delta,
                         kappa=spec.cavity.kappa,
                         gamma_d=spec.relaxation.gamma_d,
                         gamma_e=spec.relaxation.gamma_e,
                         gamma_s=spec.relaxation.gamma_s)
    channels = []
    for k in lv.excited_indices:
        if k == k0:
            continue
        c = lv.column(k)
        g_k = G[j_ctl - 1, c]
        om_k = Om[j_sig - 1, c]
        if g_k == 0 and om_k == 0:
            continue
        from dataclasses import replace as _rep

        p_k = _rep(base, g38=g_k, om28=om_k, delta8=lv.detunings[k])
        b_k = amplification_rate(p_k) * amp * amp
        lam_p, _ = growth_exponents(b_k, p_k.gamma_opt, p_k.delta8, p_k.delta)
        dk = abs(lv.detunings[k])
        ratio = abs(g_k * om_k) / dk if dk > 0 else float("inf")
        channels.append(AuditChannel(
            excited_index=k, g_coupling=complex(g_k),
            om_coupling=complex(om_k), detuning=lv.detunings[k],
            b_rate=b_k, growth_exponent=lam_p, mitigation_ratio=ratio,
            flagged=bool(lam_p.real * protocol_duration > 1.0)))
    channels.sort(key=lambda ch: (abs(ch.b_rate), ch.growth_exponent.real),
                  reverse=True)
    return AuditReport(lambda_levels=(j_sig, j_ctl, k0),
                       protocol_duration=protocol_duration,
                       control_scale=amp, channels=tuple(channels))


def audit_csv(report: AuditReport, path) -> None:
    """CSV schema: channel_k, abs_b, re_lambda_plus, ratio, flagged."""
    import csv

    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["channel_k", "abs_b", "re_lambda_plus", "ratio", "flagged"])
        for ch in report.channels:
            w.writerow([ch.excited_index, repr(abs(ch.b_rate)),
                        repr(ch.growth_exponent.real),
                        repr(ch.mitigation_ratio), int(ch.flagged)])
