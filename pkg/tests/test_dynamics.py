import numpy as np
import pytest
from dataclasses import replace

from lambdamem.dynamics import (build_rhs, export_csv, fastest_phase,
                                noise_run, output_grid, run_protocol,
                                state_layout, zero_input_dark)
from lambdamem.errors import InvalidInputError
from lambdamem.gridmath import simpson_uniform
from lambdamem.metrics import efficiency
from lambdamem.model import CouplingSet
from lambdamem.presets import nv4_preset, nv_preset
from lambdamem.schedule import standard_schedule


def zero_couplings(spec):
    shape = spec.couplings.cavity.shape
    coup = CouplingSet(np.zeros(shape, complex), np.zeros(shape, complex),
                       np.zeros(shape, bool), np.zeros(shape, bool))
    return replace(spec, couplings=coup, dropped_pairs=(),
                   inactive_couplings=())


def hand_nv_rhs(spec, sched, amp_in):
    """Independent transcription of the nine-level equation set.

    Valid for the level-1-disabled configuration with all optical pairs
    retained: state = [a, s23, s24..s29, s34..s39] (j = 2 row then j = 3 row).
    """
    G, Om = spec.effective_couplings()
    lv = spec.levels
    Delta = lv.detuning_array()
    kappa = spec.cavity.kappa
    gs = spec.relaxation.gamma_s
    go = spec.relaxation.gamma_d + spec.relaxation.gamma_e
    npop = spec.ensemble.n_emitters
    delta = lv.delta
    K = lv.n_excited

    def rhs(y, t):
        a = y[0]
        s23 = y[1]
        s2 = y[2:2 + K]
        s3 = y[2 + K:2 + 2 * K]
        ctrl = sched.control_scale(t)
        a_in = amp_in * sched.signal.amplitude_unnormalized(t)
        emd = np.exp(-1j * delta * t)
        epd = np.exp(1j * delta * t)
        out = np.zeros_like(y)
        ds23 = -gs * s23
        da = -kappa * a + np.sqrt(2 * kappa) * a_in
        for c in range(K):
            G2, G3 = G[1, c], G[2, c]
            O2, O3 = ctrl * Om[1, c], ctrl * Om[2, c]
            sk3 = np.conj(s3[c])
            ds23 += -1j * (a * G2 * sk3 + O2 * sk3 * emd
                           - np.conj(O3) * s2[c]
                           - np.conj(a) * np.conj(G3) * s2[c] * emd)
            out[2 + c] = (-(1j * Delta[c] + go) * s2[c]
                          + 1j * a * G3 * s23 * epd
                          + 1j * a * G2 * npop
                          + 1j * O2 * npop * emd
                          + 1j * O3 * s23)
            out[2 + K + c] = (-(1j * Delta[c] + go) * s3[c]
                              + 1j * a * G2 * np.conj(s23)
                              + 1j * O2 * np.conj(s23) * emd)
            da += 1j * (np.conj(G2) * s2[c] + np.conj(G3) * s3[c] * emd)
        out[0] = da
        out[1] = ds23
        return out

    return rhs


def hand_nv4_rhs(spec, sched, amp_in):
    """Independent transcription of the simplified 4-level equations.

    State = [a, s23, s28, s29, s39]; sigma'_38 absent.
    """
    G, Om = spec.effective_couplings()
    lv = spec.levels
    g29 = G[1, lv.column(9)]
    g38 = G[2, lv.column(8)]
    om39 = Om[2, lv.column(9)]
    om28 = Om[1, lv.column(8)]
    d8 = lv.detunings[8]
    kappa = spec.cavity.kappa
    gs = spec.relaxation.gamma_s
    go = spec.relaxation.gamma_d + spec.relaxation.gamma_e
    npop = spec.ensemble.n_emitters
    delta = lv.delta

    def rhs(y, t):
        a, s23, s28, s29, s39 = y
        ctrl = sched.control_scale(t)
        a_in = amp_in * sched.signal.amplitude_unnormalized(t)
        emd = np.exp(-1j * delta * t)
        epd = np.exp(1j * delta * t)
        O39 = ctrl * om39
        O28 = ctrl * om28
        ds28 = (-(1j * d8 + go) * s28 + 1j * a * g38 * s23 * epd
                + 1j * O28 * npop * emd)
        ds29 = -go * s29 + 1j * a * g29 * npop + 1j * O39 * s23
        ds23 = (-gs * s23 - 1j * a * g29 * np.conj(s39)
                + 1j * np.conj(O39) * s29
                + 1j * np.conj(a) * np.conj(g38) * s28 * emd)
        ds39 = -go * s39 + 1j * a * g29 * np.conj(s23)
        da = -kappa * a + np.sqrt(2 * kappa) * a_in + 1j * np.conj(g29) * s29
        return np.array([da, ds23, ds28, ds29, ds39])

    return rhs


class TestRhsValidationContract:
    def test_nine_level_matches_hand_transcription(self, rng):
        # level-1 block disabled, every pair retained, all couplings live
        spec = nv_preset(include_level1=False, far_branch="retained",
                         cross_couplings="active", keep_sigma38=True)
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=100e-9,
                                  amp1=4.3, amp2=6.0, control1_width=36e-9,
                                  control2_width=20e-9)
        built, layout = build_rhs(spec, sched)
        assert layout.dim == 14
        # hand layout matches the builder's ordering: a, s23, j=2 row, j=3 row
        assert layout.labels[2:8] == tuple(f"sigma2{k}" for k in range(4, 10))
        assert layout.labels[8:14] == tuple(f"sigma3{k}" for k in range(4, 10))
        from lambdamem.dynamics import _input_amplitude
        amp = _input_amplitude(sched, output_grid(spec, sched))
        hand = hand_nv_rhs(spec, sched, amp)
        times = rng.uniform(0, sched.t_end, 100)
        worst = 0.0
        for t in times:
            y = (rng.normal(size=14) + 1j * rng.normal(size=14)) \
                * 10.0 ** rng.uniform(-2, 2, 14)
            f1 = built(y, t)
            f2 = hand(y, t)
            rel = np.max(np.abs(f1 - f2)) / max(np.max(np.abs(f2)), 1e-300)
            worst = max(worst, rel)
        assert worst <= 1e-12

    def test_four_level_matches_reference_equations(self, rng):
        spec = nv4_preset()
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=100e-9,
                                  amp1=4.3, amp2=6.0, control1_width=36e-9,
                                  control2_width=20e-9)
        built, layout = build_rhs(spec, sched)
        assert layout.labels == ("a", "sigma23", "sigma28", "sigma29",
                                 "sigma39")
        from lambdamem.dynamics import _input_amplitude
        amp = _input_amplitude(sched, output_grid(spec, sched))
        hand = hand_nv4_rhs(spec, sched, amp)
        for t in rng.uniform(0, sched.t_end, 100):
            y = (rng.normal(size=5) + 1j * rng.normal(size=5)) \
                * 10.0 ** rng.uniform(-2, 2, 5)
            f1 = built(y, t)
            f2 = hand(y, t)
            rel = np.max(np.abs(f1 - f2)) / max(np.max(np.abs(f2)), 1e-300)
            assert rel <= 1e-12

    def test_no_sources_means_zero_rhs(self, nv):
        spec = zero_couplings(nv)
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=100e-9,
                                  amp1=0.0, amp2=0.0, control1_width=30e-9,
                                  control2_width=30e-9)
        rhs, layout = build_rhs(spec, sched, with_input=False)
        y = np.zeros(layout.dim, complex)
        assert np.all(rhs(y, 50e-9) == 0)

    def test_pure_damping_example(self, nv4):
        # only sigma'_29 populated, couplings off: decays at gamma_d + gamma_e
        spec = zero_couplings(nv4)
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=100e-9,
                                  amp1=0.0, amp2=0.0, control1_width=30e-9,
                                  control2_width=30e-9)
        rhs, layout = build_rhs(spec, sched, with_input=False)
        y = np.zeros(layout.dim, complex)
        i29 = layout.labels.index("sigma29")
        y[i29] = 1.0
        dy = rhs(y, 10e-9)
        go = spec.relaxation.gamma_d + spec.relaxation.gamma_e
        assert dy[i29] == pytest.approx(-go, rel=1e-14)
        others = [i for i in range(layout.dim) if i != i29 and i != 0]
        assert all(dy[i] == 0 for i in others)


class TestStateLayout:
    def test_nv_default_layout(self, nv):
        layout = state_layout(nv)
        # far branch spectator + sigma38 dropped: 8 optical pairs with level 1
        assert layout.dim == 1 + 3 + 8

    def test_dropped_pairs_excluded(self, nv4):
        layout = state_layout(nv4)
        assert "sigma38" not in layout.labels

    def test_fastest_phase_ignores_dropped(self, nv):
        # far-branch detunings (1.5e12) are dropped; kappa dominates
        assert fastest_phase(nv) == pytest.approx(nv.cavity.kappa)

    def test_grid_resolves_fastest_phase(self, nv, nv_sched):
        grid = output_grid(nv, nv_sched)
        dt = grid[1] - grid[0]
        assert dt <= 2 * np.pi / fastest_phase(nv) / 20


@pytest.fixture(scope="module")
def empty_run(nv):
    spec = zero_couplings(nv)
    sched = standard_schedule(t_fwhm=17.3e-9, storage_time=60e-9,
                              amp1=4.3, amp2=6.0, control1_width=30e-9,
                              control2_width=20e-9)
    return run_protocol(spec, sched, rtol=1e-9, atol=1e-12)


class TestAllPass:
    def test_input_is_unit_normalized(self, empty_run):
        assert empty_run.input_energy == pytest.approx(1.0, abs=1e-9)

    def test_total_output_energy_unity(self, empty_run):
        E = efficiency(empty_run, "total")
        assert abs(E - 1.0) < 1e-6

    def test_nothing_stored_so_retrieval_window_empty(self, empty_run):
        assert efficiency(empty_run, "retrieval") < 1e-8

    @pytest.mark.parametrize("lam", [2.0 * np.exp(0.7j),
                                     0.5 * np.exp(-2.3j)])
    def test_linearity_exact_for_empty_cavity(self, nv, lam):
        spec = zero_couplings(nv)
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=60e-9,
                                  amp1=4.3, amp2=6.0, control1_width=30e-9,
                                  control2_width=20e-9)
        base = run_protocol(spec, sched, rtol=1e-10, atol=1e-13)
        scaled = run_protocol(spec, sched, rtol=1e-10, atol=1e-13,
                              input_scale=lam)
        ref = lam * base.a_out
        rel = np.max(np.abs(scaled.a_out - ref)) / np.max(np.abs(ref))
        assert rel < 1e-8


class TestZeroNoise:
    def test_simplified_four_level_exactly_dark(self, nv4, short_sched):
        run = noise_run(nv4, short_sched)
        assert np.max(np.abs(run.a_out)) < 1e-14
        assert run.is_noise_run

    def test_rb_exactly_dark(self, rb, rb_sched):
        run = noise_run(rb, rb_sched)
        assert np.max(np.abs(run.a_out)) < 1e-14

    def test_all_controls_off_dark(self, nv):
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=80e-9,
                                  amp1=0.0, amp2=0.0, control1_width=30e-9,
                                  control2_width=30e-9, signal_center=60e-9)
        run = noise_run(nv, sched)
        assert np.max(np.abs(run.a_out)) == 0.0

    def test_structural_darkness_predicts_measurement(self, nv, nv4, rb):
        # the predicate matches the measured outcomes on all presets
        assert zero_input_dark(nv)
        assert zero_input_dark(nv4)
        assert zero_input_dark(rb)
        assert not zero_input_dark(nv_preset(cross_couplings="active"))

    def test_active_cross_couplings_are_noisy(self, short_sched):
        # the recorded-by-default entries genuinely pump noise when active
        spec = nv_preset(cross_couplings="active")
        run = noise_run(spec, short_sched)
        from lambdamem.metrics import noise_energy
        assert noise_energy(run) > 0.01

    def test_desired_only_linearity_documented_bound(self, nv):
        # conj-free chains dominate without the mixing pair; the residual
        # bilinear a*sigma products break complex linearity only weakly
        spec = nv.desired_only()
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=80e-9,
                                  amp1=4.3, amp2=6.0, control1_width=36e-9,
                                  control2_width=20e-9, control1_delay=15e-9,
                                  signal_center=60e-9)
        lam = 0.5 * np.exp(-1.1j)
        base = run_protocol(spec, sched)
        scaled = run_protocol(spec, sched, input_scale=lam)
        ref = lam * base.a_out
        rel = np.max(np.abs(scaled.a_out - ref)) / np.max(np.abs(ref))
        assert rel < 0.05


class TestGridRefinement:
    def test_halving_grid_changes_energy_below_1e4(self, nv4, short_sched):
        run1 = run_protocol(nv4, short_sched)
        run2 = run_protocol(nv4, short_sched, output_dt=run1.dt / 2)
        e1 = efficiency(run1, "total")
        e2 = efficiency(run2, "total")
        assert abs(e2 - e1) / e1 < 1e-4


class TestExportCsv:
    def test_schema_and_roundtrip(self, nv4, short_sched, tmp_path):
        import csv

        run = run_protocol(nv4, short_sched, store_trajectory=True,
                           trajectory_samples=200)
        path = tmp_path / "run.csv"
        export_csv(run, path, include_input=True)
        with open(path) as fh:
            rows = list(csv.reader(fh))
        assert rows[0] == ["t_s", "re_a_out", "im_a_out", "abs2_a_out",
                           "abs2_a_in"]
        t0, re0, im0, a2, _ = (float(x) for x in rows[1])
        assert a2 == pytest.approx(re0 ** 2 + im0 ** 2, rel=1e-12, abs=1e-300)

    def test_state_columns_on_request(self, nv4, short_sched, tmp_path):
        import csv

        run = run_protocol(nv4, short_sched, store_trajectory=True,
                           trajectory_samples=100)
        path = tmp_path / "state.csv"
        export_csv(run, path, include_state=True)
        with open(path) as fh:
            header = next(csv.reader(fh))
        assert "re_sigma23" in header and "im_a" in header

    def test_state_requires_trajectory(self, nv4, short_sched, tmp_path):
        run = run_protocol(nv4, short_sched)
        with pytest.raises(InvalidInputError):
            export_csv(run, tmp_path / "x.csv", include_state=True)
