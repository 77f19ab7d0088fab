"""Command-line interface.

Exit codes: 0 success, 1 validation/config error, 2 numerical failure,
3 I/O error. Every command that runs physics echoes its effective config
(including derived quantities and conventions) next to the output file.
"""

from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from . import __version__
from .config import (apply_override, full_cfg, load_cfg, parse_full_cfg,
                     save_cfg, schedule_to_cfg, spec_to_cfg)
from .dynamics import export_csv, noise_run, run_protocol
from .errors import (ConfigError, DivergenceError, InvalidInputError,
                     SchemaVersionError, StiffnessError)
from .metrics import (apparent_fidelity, efficiency, noise_energy,
                      scan_to_csv, storage_time_scan, summarize)
from .presets import (nv4_preset, nv_preset, nv_schedule, rb_preset,
                      rb_schedule)
from .reduced import ReducedParams, amplification_rate, audit, audit_csv, \
    growth_exponents
from .sweep import SweepPlan, persist, sweep

EXIT_OK = 0
EXIT_VALIDATION = 1
EXIT_NUMERICAL = 2
EXIT_IO = 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):          # usage problems are validation errors
        raise ConfigError(f"{message}\n{self.format_usage()}")


def _build_parser() -> _Parser:
    p = _Parser(prog="lambdamem",
                description="Ensemble Lambda-memory simulator with full "
                            "unwanted-coupling dynamics")
    p.add_argument("--version", action="version", version=__version__)
    sub = p.add_subparsers(dest="command", required=True)

    def add_common(sp, with_jobs=False):
        sp.add_argument("--config", required=True, help="run config (JSON)")
        sp.add_argument("--set", action="append", default=[], metavar="K=V",
                        help="override a config key (dotted path)")
        sp.add_argument("--out", required=True, help="output CSV path")
        sp.add_argument("--verbose", "-v", action="store_true")
        if with_jobs:
            sp.add_argument("--jobs", type=int, default=1)

    sp = sub.add_parser("preset", help="write a built-in system config")
    sp.add_argument("name", choices=["nv", "nv4", "rb"])
    sp.add_argument("--out", required=True)
    sp.add_argument("--desired-only", action="store_true",
                    help="zero all unwanted couplings (ideal memory)")
    sp.add_argument("--cross-couplings", choices=["recorded", "active"],
                    default="recorded")
    sp.add_argument("--far-branch", choices=["spectator", "retained"],
                    default="spectator")

    sp = sub.add_parser("run", help="integrate the storage/retrieval protocol")
    add_common(sp)
    sp.add_argument("--with-input", action="store_true",
                    help="append the |a_in|^2 column")
    sp.add_argument("--with-state", action="store_true",
                    help="append trajectory columns")
    sp.add_argument("--metrics", action="store_true",
                    help="also run the noise twin and write <out>.metrics.json")

    sp = sub.add_parser("noise", help="same protocol with zero input")
    add_common(sp)

    sp = sub.add_parser("scan-storage", help="efficiency vs storage time")
    add_common(sp, with_jobs=True)
    sp.add_argument("--ts-start", type=float, required=True, metavar="SEC")
    sp.add_argument("--ts-stop", type=float, required=True, metavar="SEC")
    sp.add_argument("--ts-points", type=int, required=True)
    sp.add_argument("--no-fidelity", action="store_true")

    sp = sub.add_parser("sweep", help="run a sweep plan")
    sp.add_argument("--plan", required=True, help="sweep plan config (JSON)")
    sp.add_argument("--set", action="append", default=[], metavar="K=V")
    sp.add_argument("--out", required=True)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--verbose", "-v", action="store_true")

    sp = sub.add_parser("rate", help="four-wave-mixing rate and exponents")
    sp.add_argument("--config", required=True)
    sp.add_argument("--set", action="append", default=[], metavar="K=V")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--out", help="write report here instead of stdout")

    sp = sub.add_parser("audit", help="rank spectator amplification channels")
    sp.add_argument("--config", required=True)
    sp.add_argument("--set", action="append", default=[], metavar="K=V")
    sp.add_argument("--format", choices=["json", "csv"], default="json")
    sp.add_argument("--out", help="write report here instead of stdout")
    return p


def _load_effective(path: str, overrides: list[str]):
    cfg = load_cfg(path)
    for item in overrides:
        if "=" not in item:
            raise ConfigError(f"--set needs KEY=VALUE, got '{item}'")
        key, _, value = item.partition("=")
        apply_override(cfg, key, value)
    return parse_full_cfg(cfg)


def _echo_config(spec, sched, run_cfg, out_path) -> None:
    cfg = full_cfg(spec, sched, run_cfg)
    save_cfg(cfg, str(out_path) + ".config.json")


def _cmd_preset(args) -> int:
    if args.name == "nv":
        spec = nv_preset(cross_couplings=args.cross_couplings,
                         far_branch=args.far_branch,
                         desired_only=args.desired_only)
        sched = nv_schedule()
    elif args.name == "nv4":
        spec = nv4_preset()
        spec = spec.desired_only() if args.desired_only else spec
        sched = nv_schedule()
    else:
        spec = rb_preset(include_unwanted=not args.desired_only)
        sched = rb_schedule()
    save_cfg(full_cfg(spec, sched), args.out)
    print(f"wrote {args.name} preset to {args.out}")
    return EXIT_OK


def _run_settings(run_cfg: dict) -> dict:
    return {"rtol": float(run_cfg.get("rtol", 1e-8)),
            "atol": float(run_cfg.get("atol", 1e-10))}


def _cmd_run(args) -> int:
    spec, sched, run_cfg = _load_effective(args.config, args.set)
    settings = _run_settings(run_cfg)
    run = run_protocol(spec, sched, store_trajectory=args.with_state,
                       **settings)
    export_csv(run, args.out, include_state=args.with_state,
               include_input=args.with_input)
    _echo_config(spec, sched, run_cfg, args.out)
    window = run_cfg.get("window", "retrieval")
    e = efficiency(run, window)
    if args.metrics:
        noise = noise_run(spec, sched, **settings)
        summary = summarize(run, noise, window)
        with open(str(args.out) + ".metrics.json", "w") as fh:
            json.dump({"metrics": summary.as_dict(),
                       "config": full_cfg(spec, sched, run_cfg)}, fh, indent=2)
        print(f"E = {e:.6g}, F = {summary.fidelity:.6g}, "
              f"noise = {summary.noise_energy:.3g} ({summary.regime}, "
              f"f = {summary.f_value:.3g})")
    else:
        print(f"E = {e:.6g} ({window} window); wrote {args.out}")
    if args.verbose:
        print(f"integrator: {run.stats.as_dict()}")
    return EXIT_OK


def _cmd_noise(args) -> int:
    spec, sched, run_cfg = _load_effective(args.config, args.set)
    run = noise_run(spec, sched, **_run_settings(run_cfg))
    export_csv(run, args.out)
    _echo_config(spec, sched, run_cfg, args.out)
    n = noise_energy(run)
    print(f"noise energy = {n:.6g}, apparent fidelity = "
          f"{apparent_fidelity(run):.6g}; wrote {args.out}")
    return EXIT_OK


def _cmd_scan(args) -> int:
    spec, sched, run_cfg = _load_effective(args.config, args.set)
    ts = np.linspace(args.ts_start, args.ts_stop, args.ts_points)
    scan = storage_time_scan(spec, sched, ts,
                             window=run_cfg.get("window", "retrieval"),
                             with_fidelity=not args.no_fidelity,
                             jobs=args.jobs, **_run_settings(run_cfg))
    scan_to_csv(scan, args.out)
    _echo_config(spec, sched, run_cfg, args.out)
    report = {
        "measured_period_s": scan.measured_period,
        "candidate_pi_over_delta_s": scan.candidate_period_over,
        "candidate_delta_over_pi": scan.candidate_period_under,
    }
    with open(str(args.out) + ".period.json", "w") as fh:
        json.dump(report, fh, indent=2)
    print(f"wrote {args.out}; measured period = {scan.measured_period:.4g} s "
          f"(pi/delta = {scan.candidate_period_over:.4g} s)")
    return EXIT_OK


def _cmd_sweep(args) -> int:
    cfg = load_cfg(args.plan)
    for item in args.set:
        key, _, value = item.partition("=")
        apply_override(cfg, key, value)
    plan = SweepPlan.from_cfg(cfg)
    result = sweep(plan, jobs=args.jobs)
    persist(result, args.out)
    failed = sum(1 for r in result.rows if r[-1] != "ok")
    print(f"wrote {len(result.rows)} rows to {args.out} "
          f"({failed} failed points)")
    return EXIT_OK


def _reduced_from_args(args):
    spec, sched, _ = _load_effective(args.config, args.set)
    return ReducedParams.from_system(spec), spec, sched


def _emit_report(payload: dict, rows: list[list], header: list[str],
                 args) -> None:
    if args.format == "json":
        text = json.dumps(payload, indent=2) + "\n"
    else:
        import io

        buf = io.StringIO()
        import csv as _csv

        w = _csv.writer(buf)
        w.writerow(header)
        w.writerows(rows)
        text = buf.getvalue()
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


def _cmd_rate(args) -> int:
    params, spec, sched = _reduced_from_args(args)
    amp = max(sched.control1.amp, sched.control2.amp)
    b = amplification_rate(params) * amp * amp
    lam_p, lam_m = growth_exponents(b, params.gamma_opt, params.delta8,
                                    params.delta)
    payload = {
        "system": spec.name,
        "control_scale": amp,
        "b_rad_per_s": [b.real, b.imag],
        "abs_b_rad_per_s": abs(b),
        "lambda_plus_per_s": [lam_p.real, lam_p.imag],
        "lambda_minus_per_s": [lam_m.real, lam_m.imag],
        "amplifying": bool(lam_p.real > 0),
    }
    _emit_report(payload, [[abs(b), lam_p.real, lam_p.imag]],
                 ["abs_b", "re_lambda_plus", "im_lambda_plus"], args)
    return EXIT_OK


def _cmd_audit(args) -> int:
    spec, sched, _ = _load_effective(args.config, args.set)
    report = audit(spec, sched)
    if args.format == "csv" and args.out:
        audit_csv(report, args.out)
        return EXIT_OK
    rows = [[ch.excited_index, abs(ch.b_rate), ch.growth_exponent.real,
             ch.mitigation_ratio, int(ch.flagged)] for ch in report.channels]
    _emit_report(report.as_dict(), rows,
                 ["channel_k", "abs_b", "re_lambda_plus", "ratio", "flagged"],
                 args)
    return EXIT_OK


_COMMANDS = {
    "preset": _cmd_preset,
    "run": _cmd_run,
    "noise": _cmd_noise,
    "scan-storage": _cmd_scan,
    "sweep": _cmd_sweep,
    "rate": _cmd_rate,
    "audit": _cmd_audit,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
        return _COMMANDS[args.command](args)
    except (ConfigError, SchemaVersionError, InvalidInputError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except (StiffnessError, DivergenceError, FloatingPointError,
            OverflowError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
