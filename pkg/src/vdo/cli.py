"""Command-line front end: sessions, calibration, scaling sweeps, and the
brute-force suites, emitting machine-readable reports.

Exit status is 0 iff every asserted threshold passes. Same flags and seed
give a byte-identical report.
"""

from __future__ import annotations

import argparse
import sys
from fractions import Fraction

from .adversaries import AdversarySpec
from .bench import (
    GeneralTrialSpec,
    LabelTrialSpec,
    OracleTrialSpec,
    Report,
    accept_rate,
    calibrate,
    general_trial,
    label_trial,
    measure_scaling,
    median_of,
    oracle_trial,
    run_trials,
    trial_seed,
)
from .bruteforce import run_brute_force_suite


def parse_dist_spec(text: str) -> tuple:
    """Distribution flag grammar: uniform | point:<x> | random:<spread> |
    two-level | shift:<base>:<delta> | file:<path>."""
    parts = text.split(":")
    kind = parts[0]
    if kind == "uniform":
        return ("uniform",)
    if kind == "two-level":
        return ("two-level",)
    if kind == "point":
        return ("point", int(parts[1]) if len(parts) > 1 else 1)
    if kind == "random":
        return ("random", float(parts[1]) if len(parts) > 1 else 1.0)
    if kind == "shift":
        if len(parts) < 3:
            raise argparse.ArgumentTypeError("shift needs a base spec and a delta")
        return ("shift", parse_dist_spec(":".join(parts[1:-1])), str(Fraction(parts[-1])))
    if kind == "file":
        return ("file", ":".join(parts[1:]))
    raise argparse.ArgumentTypeError(f"bad distribution spec: {text}")


def parse_adversary(name: str, params: list[str]) -> AdversarySpec:
    if name in (None, "", "honest"):
        return AdversarySpec("honest")
    if name == "far-commit":
        return AdversarySpec("far-commit")
    if name == "inconsistent-opening":
        return AdversarySpec("inconsistent-opening", (Fraction(params[0]) if params else Fraction(1, 100),))
    if name == "selective-refusal":
        blocked = tuple(int(p) for p in params) or (1,)
        return AdversarySpec("selective-refusal", (blocked,))
    if name == "backend-swap":
        reveal = parse_dist_spec(params[0]) if params else ("uniform",)
        return AdversarySpec("backend-swap", (reveal,))
    raise argparse.ArgumentTypeError(f"unknown adversary: {name}")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="vdo", description=__doc__)
    p.add_argument(
        "--mode",
        required=True,
        choices=[
            "oracle-session",
            "label-invariant",
            "general-argument",
            "calibrate",
            "scaling",
            "brute-force",
        ],
    )
    p.add_argument("--n", type=int, default=1024)
    p.add_argument("--grains", type=int, default=None)
    p.add_argument("--eps", type=Fraction, default=None)
    p.add_argument("--delta-c", type=Fraction, default=None)
    p.add_argument("--delta-f", type=Fraction, default=None)
    p.add_argument("--kappa", type=int, default=128)
    p.add_argument("--seed", type=int, default=2024)
    p.add_argument("--trials", type=int, default=50)
    p.add_argument("--property", dest="property_name", default="uniformity")
    p.add_argument("--property-param", action="append", default=[])
    p.add_argument("--adversary", default="honest")
    p.add_argument("--adversary-param", action="append", default=[])
    p.add_argument("--backend", default="full-reveal", choices=["full-reveal", "spot-check"])
    p.add_argument("--d-dist", type=parse_dist_spec, default=("uniform",))
    p.add_argument("--q-dist", type=parse_dist_spec, default=None)
    p.add_argument("--target", type=parse_dist_spec, default=("uniform",))
    p.add_argument("--out", default=None)
    p.add_argument("--jobs", type=int, default=None)
    p.add_argument("--assert-accept-rate", type=Fraction, default=None)
    p.add_argument("--assert-reject-rate", type=Fraction, default=None)
    return p


def _rate_checks(report: Report, rows: list[dict], args) -> None:
    rate = accept_rate(rows)
    report.summary("trials", len(rows))
    report.summary("accept_rate", f"{float(rate):.4f}")
    for key in ("d_samples", "q_probes", "bytes"):
        if rows and key in rows[0]:
            report.summary(f"median_{key}", median_of(rows, key))
    if args.assert_accept_rate is not None:
        report.check(
            f"accept_rate>={float(args.assert_accept_rate):.2f}",
            rate >= args.assert_accept_rate,
        )
    if args.assert_reject_rate is not None:
        report.check(
            f"reject_rate>={float(args.assert_reject_rate):.2f}",
            (1 - rate) >= args.assert_reject_rate,
        )


def cmd_oracle_session(args) -> Report:
    report = Report("oracle-session")
    eps = args.eps or Fraction(1, 4)
    q_spec = args.q_dist or args.d_dist
    adv = parse_adversary(args.adversary, args.adversary_param)
    for k, v in (
        ("n", args.n), ("eps", eps), ("seed", args.seed), ("trials", args.trials),
        ("d_dist", args.d_dist), ("q_dist", q_spec), ("adversary", adv.strategy),
    ):
        report.config(k, v)
    specs = [
        OracleTrialSpec(
            args.n, eps, args.d_dist, q_spec, trial_seed(args.seed, i),
            grains=args.grains, adversary=adv, kappa=args.kappa,
        )
        for i in range(args.trials)
    ]
    rows = run_trials(oracle_trial, specs, args.jobs)
    for i, row in enumerate(rows):
        report.trial(i, row)
    _rate_checks(report, rows, args)
    return report


def cmd_label_invariant(args) -> Report:
    report = Report("label-invariant")
    dc = args.delta_c if args.delta_c is not None else Fraction(1, 20)
    df = args.delta_f if args.delta_f is not None else Fraction(9, 20)
    q_spec = args.q_dist or ("uniform",)
    adv = parse_adversary(args.adversary, args.adversary_param)
    for k, v in (
        ("n", args.n), ("delta_c", dc), ("delta_f", df), ("seed", args.seed),
        ("trials", args.trials), ("property", args.property_name),
        ("d_dist", args.d_dist), ("q_dist", q_spec), ("adversary", adv.strategy),
    ):
        report.config(k, v)
    specs = [
        LabelTrialSpec(
            args.n, dc, df, args.property_name, tuple(args.property_param),
            args.d_dist, q_spec, trial_seed(args.seed, i),
            grains=args.grains, adversary=adv,
        )
        for i in range(args.trials)
    ]
    rows = run_trials(label_trial, specs, args.jobs)
    for i, row in enumerate(rows):
        report.trial(i, row)
    _rate_checks(report, rows, args)
    return report


def cmd_general_argument(args) -> Report:
    report = Report("general-argument")
    dc = args.delta_c if args.delta_c is not None else Fraction(0)
    df = args.delta_f if args.delta_f is not None else Fraction(3, 5)
    q_spec = args.q_dist or args.d_dist
    adv = parse_adversary(args.adversary, args.adversary_param)
    for k, v in (
        ("n", args.n), ("delta_c", dc), ("delta_f", df), ("seed", args.seed),
        ("trials", args.trials), ("backend", args.backend), ("target", args.target),
        ("d_dist", args.d_dist), ("q_dist", q_spec), ("adversary", adv.strategy),
    ):
        report.config(k, v)
    specs = [
        GeneralTrialSpec(
            args.n, dc, df, args.target, args.d_dist, q_spec, args.backend,
            trial_seed(args.seed, i), grains=args.grains, adversary=adv,
        )
        for i in range(args.trials)
    ]
    rows = run_trials(general_trial, specs, args.jobs)
    for i, row in enumerate(rows):
        report.trial(i, row)
    _rate_checks(report, rows, args)
    return report


def cmd_calibrate(args) -> Report:
    report = Report("calibrate")
    report.config("n", args.n)
    report.config("trials", args.trials)
    report.config("seed", args.seed)
    cons, history = calibrate(
        n=args.n, trials=args.trials, seed=args.seed, jobs=args.jobs
    )
    for row in history:
        report.trial(
            row["c"],
            {
                "c": row["c"],
                "accept_rate": f"{float(row['accept_rate']):.4f}",
                "reject_rate": f"{float(row['reject_rate']):.4f}",
            },
        )
    report.summary("chosen_c_id", cons.c_id)
    report.summary("chosen_c_unif", cons.c_unif)
    report.summary("constants", cons.to_text().replace("\n", "; "))
    report.check("calibration-found", cons is not None)
    if args.out:
        with open(args.out + ".constants", "w", encoding="utf-8") as fh:
            fh.write(cons.to_text())
    return report


def cmd_scaling(args) -> Report:
    report = Report("scaling")
    report.config("seed", args.seed)
    report.config("trials", args.trials)
    sc = measure_scaling(trials=args.trials, seed=args.seed, jobs=args.jobs)
    for n, row in sorted(sc.per_n.items()):
        report.trial(n, {"n": n, **{k: row[k] for k in sorted(row)}})
    for a, b, dr, br in sc.n_ratios:
        report.summary(f"ratio_{a}_to_{b}_d_samples", f"{dr:.3f}")
        report.summary(f"ratio_{a}_to_{b}_bytes", f"{br:.3f}")
        report.check(f"d_ratio_{a}_{b}_in_band", sc.n_band[0] <= dr <= sc.n_band[1])
        report.check(f"byte_ratio_{a}_{b}_in_band", sc.n_band[0] <= br <= sc.n_band[1])
    report.summary("eps_halving_d_ratio", f"{sc.eps_ratio:.3f}")
    report.check("eps_ratio_in_band", sc.eps_band[0] <= sc.eps_ratio <= sc.eps_band[1])
    return report


def cmd_brute_force(args) -> Report:
    report = Report("brute-force")
    out = run_brute_force_suite()
    for name, res in out.items():
        if isinstance(res, dict):
            report.trial(0, {"suite": name, **{k: v for k, v in res.items() if k != "violations"}})
            report.check(name, bool(res["ok"]))
    return report


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handlers = {
        "oracle-session": cmd_oracle_session,
        "label-invariant": cmd_label_invariant,
        "general-argument": cmd_general_argument,
        "calibrate": cmd_calibrate,
        "scaling": cmd_scaling,
        "brute-force": cmd_brute_force,
    }
    report = handlers[args.mode](args)
    text = report.to_text()
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    sys.stdout.write(text)
    return 0 if report.passed else 1


if __name__ == "__main__":
    raise SystemExit(main())
