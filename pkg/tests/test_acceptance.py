"""Acceptance suite: every release criterion at its stated tolerance.

Each test prints one PASS/FAIL line (run with `pytest -s` to see them all).
Criteria 1-5 are exact-oracle checks; 6-11 reproduce the headline system
numbers at desk scale.
"""

from dataclasses import replace

import numpy as np
import pytest

from conftest import constant_control_schedule, draw_reduced_params
from lambdamem.dynamics import noise_run, run_protocol
from lambdamem.metrics import (apparent_fidelity, dominant_period, efficiency,
                               noise_energy)
from lambdamem.model import CouplingSet
from lambdamem.presets import nv4_preset, nv_preset, nv_schedule, rb_preset, \
    rb_schedule
from lambdamem.reduced import (ReducedParams, TermMask, growth_exponents,
                               amplification_rate, reduced_protocol,
                               two_level_oracle)
from lambdamem.schedule import standard_schedule
from lambdamem.sweep import scale_coupling


def report(num: int, description: str, ok: bool, detail: str = "") -> None:
    status = "PASS" if ok else "FAIL"
    line = f"[{status}] criterion {num}: {description}"
    if detail:
        line += f"  ({detail})"
    print(line)


@pytest.fixture(scope="module")
def nv_run_noise(nv, nv_sched):
    run = run_protocol(nv, nv_sched)
    noise = noise_run(nv, nv_sched)
    return run, noise


@pytest.fixture(scope="module")
def nv_delta0(nv):
    lv = replace(nv.levels, delta=0.0, omega33=nv.levels.omega22)
    return replace(nv, levels=lv)


class TestExactOracleSuite:
    def test_1_amplification_equation_fidelity(self):
        rng = np.random.default_rng(11)
        t_end = 500e-9
        sched = constant_control_schedule(t_end)
        worst = 0.0
        for _ in range(50):
            p = draw_reduced_params(rng, t_end)
            run = reduced_protocol(p, sched, TermMask.only(8),
                                   with_input=False, initial_sigma32=1.0,
                                   rtol=1e-10, atol=1e-13,
                                   warn_adiabatic=False)
            oracle = two_level_oracle(p, run.t, sigma32_0=1.0)
            rel = np.max(np.abs(run.sigma32 - oracle)) \
                / np.max(np.abs(oracle))
            worst = max(worst, rel)
        ok = worst <= 1e-6
        report(1, "mixing-equation integration matches the 2x2 "
               "matrix-exponential oracle over 50 draws", ok,
               f"worst rel err {worst:.2e} <= 1e-6")
        assert ok

    def test_2_growth_exponent_identities(self):
        rng = np.random.default_rng(22)
        worst_sum = worst_prod = 0.0
        for _ in range(50):
            b = (rng.normal() + 1j * rng.normal()) * 10 ** rng.uniform(12, 17)
            gamma = 10 ** rng.uniform(7, 10)
            d8 = rng.uniform(-5e9, 5e9)
            delta = 10 ** rng.uniform(5, 8)
            lam_p, lam_m = growth_exponents(b, gamma, d8, delta)
            c2 = abs(b) ** 2 / (gamma ** 2 + d8 ** 2)
            scale = delta ** 2 + c2
            worst_sum = max(worst_sum,
                            abs(lam_p + lam_m - 2j * delta)
                            / max(delta, np.sqrt(c2)))
            worst_prod = max(worst_prod, abs(lam_p * lam_m + c2) / scale)
        # delta = 0 reduction is exact
        b0, g0, d80 = 3.7e15, 1.05e9, 1.6e9
        lam_p, _ = growth_exponents(b0, g0, d80, 0.0)
        red_exact = lam_p == abs(b0) / np.hypot(g0, d80)
        ok = worst_sum <= 1e-12 and worst_prod <= 1e-12 and red_exact
        report(2, "growth-exponent sum/product identities at 1e-12 and "
               "exact delta=0 reduction", ok,
               f"sum {worst_sum:.1e}, prod {worst_prod:.1e}")
        assert ok

    def test_3_empty_cavity_all_pass(self, nv):
        shape = nv.couplings.cavity.shape
        empty = replace(nv, couplings=CouplingSet(
            np.zeros(shape, complex), np.zeros(shape, complex),
            np.zeros(shape, bool), np.zeros(shape, bool)),
            dropped_pairs=(), inactive_couplings=())
        sched = standard_schedule(t_fwhm=17.3e-9, storage_time=60e-9,
                                  amp1=4.3, amp2=6.0, control1_width=30e-9,
                                  control2_width=20e-9)
        run = run_protocol(empty, sched, rtol=1e-9, atol=1e-12)
        err = abs(efficiency(run, "total") - 1.0)
        ok = err < 1e-6
        report(3, "empty-cavity total output energy equals input energy",
               ok, f"|E-1| = {err:.2e} < 1e-6")
        assert ok

    def test_4_structural_zero_noise(self, nv4, short_sched):
        run = noise_run(nv4, short_sched)
        peak = np.max(np.abs(run.a_out))
        fid = apparent_fidelity(run)
        ok = peak < 1e-14 and fid == 1.0
        report(4, "simplified 4-level noise run is identically dark, "
               "apparent fidelity exactly one", ok,
               f"max|a_n| = {peak:.1e}, F = {fid}")
        assert ok

    def test_5_product_symmetry(self, nv):
        params = ReducedParams.from_system(nv)
        sched = nv_schedule(amp2=1.5)
        es = []
        for x in (1.0, 0.1, 0.5, 2.0):
            p = replace(params, g38=params.g38 * x, om28=params.om28 / x)
            run = reduced_protocol(p, sched, TermMask.only(8),
                                   initial_sigma32=1.0,
                                   warn_adiabatic=False)
            es.append(efficiency(run))
        spread = max(abs(e - es[0]) / es[0] for e in es[1:])
        ok = spread < 1e-6
        report(5, "mixing-term efficiency invariant under "
               "(x G38, Om28 / x)", ok, f"spread {spread:.2e} < 1e-6")
        assert ok


class TestHeadlineNumbers:
    def test_6_full_nv_amplification_with_dark_noise(self, nv_run_noise):
        run, noise = nv_run_noise
        e = efficiency(run)
        n = noise_energy(noise)
        f = apparent_fidelity(noise)
        ok = (e > 1.0) and (1.5 <= e <= 3.5) and f >= 0.99 and n < 0.01
        report(6, "full NV system: E > 1 in [1.5, 3.5] targeting 2.5, "
               "F >= 0.99, noise < 0.01", ok,
               f"E = {e:.3f}, F = {f:.6f}, noise = {n:.2e}")
        assert ok

    def test_7_either_coupling_removed_kills_gain(self, nv, nv_sched):
        e_g = efficiency(run_protocol(scale_coupling(nv, (3, 8), 0.0, "G"),
                                      nv_sched))
        e_o = efficiency(run_protocol(
            scale_coupling(nv, (2, 8), 0.0, "Omega"), nv_sched))
        ok = e_g < 1.0 and e_o < 1.0
        report(7, "removing either G38 or Omega28 drops E below one", ok,
               f"E(G38=0) = {e_g:.4f}, E(Om28=0) = {e_o:.4f}")
        assert ok

    def test_8a_delta_zero_plateau(self, nv_delta0, nv_sched):
        es = [efficiency(run_protocol(nv_delta0,
                                      nv_sched.with_storage_time(ts)))
              for ts in (155e-9, 455e-9, 650e-9)]
        spread = (max(es) - min(es)) / np.mean(es)
        ok = spread < 1e-3 and 1.6 <= np.mean(es) <= 2.6
        report(8, "delta = 0: efficiency constant in storage time, value "
               "in [1.6, 2.6] targeting 2.09", ok,
               f"E = {np.mean(es):.4f}, spread {spread:.1e}")
        assert ok

    def test_8b_oscillation_period(self, nv, nv_sched):
        delta = nv.levels.delta
        period_expected = np.pi / delta
        ts = np.linspace(60e-9, 60e-9 + 2 * period_expected, 16)
        es = np.array([efficiency(run_protocol(
            nv, nv_sched.with_storage_time(t))) for t in ts])
        measured = dominant_period(ts, es)
        rel = abs(measured - period_expected) / period_expected
        ok = rel < 0.05
        report(8, "delta != 0: efficiency oscillates with period pi/delta "
               "within 5%", ok,
               f"measured {measured * 1e9:.1f} ns vs pi/delta = "
               f"{period_expected * 1e9:.1f} ns; inverse candidate "
               f"delta/pi = {delta / np.pi:.3g}")
        assert ok

    def test_9_reduced_term_study(self, nv):
        params = ReducedParams.from_system(nv)
        sched = nv_schedule(amp2=1.5, control2_width=60e-9)
        run_no8 = reduced_protocol(params, sched, TermMask.full().without(8),
                                   warn_adiabatic=False)
        run_138 = reduced_protocol(params, sched, TermMask.only(3, 8),
                                   warn_adiabatic=False)
        e_no8 = efficiency(run_no8)
        e_138 = efficiency(run_138)
        fids = []
        for mask in (TermMask.full().without(8), TermMask.only(3, 8),
                     TermMask.full()):
            fids.append(apparent_fidelity(reduced_protocol(
                params, sched, mask, with_input=False,
                warn_adiabatic=False)))
        ok = e_no8 < 1.0 and e_138 > 1.0 and all(f == 1.0 for f in fids)
        report(9, "reduced model: no-term-8 stays below one, terms {1,3,8} "
               "amplify, fidelity one throughout", ok,
               f"E(no 8) = {e_no8:.4f}, E(1,3,8) = {e_138:.3f}, "
               f"F = {fids}")
        assert ok

    def test_10_rb_memory(self, rb, rb_sched):
        e_on = efficiency(run_protocol(rb, rb_sched))
        f = apparent_fidelity(noise_run(rb, rb_sched))
        rb_off = rb_preset(include_unwanted=False)
        e_off = efficiency(run_protocol(rb_off, rb_sched))
        ok = e_on > 1.0 and f == 1.0 and e_off < 1.0
        report(10, "Rb system: unwanted pair amplifies (E > 1, F = 1), "
               "zeroing it restores E < 1", ok,
               f"E_on = {e_on:.3f}, F = {f}, E_off = {e_off:.2e}")
        assert ok

    def test_11_desired_only_below_unity(self, nv, nv_sched):
        ideal = nv.desired_only()
        es = [efficiency(run_protocol(ideal, nv_sched.with_storage_time(ts)))
              for ts in (155e-9, 455e-9, 801e-9)]
        ok = all(e < 1.0 for e in es)
        report(11, "desired-couplings-only NV stays below unit efficiency "
               "for all storage times", ok,
               "E = " + ", ".join(f"{e:.4f}" for e in es))
        assert ok
