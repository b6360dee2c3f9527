"""Command-line interface.

Subcommands: ``suite`` (replicated simulation experiment), ``real``
(inference on the embedded real dataset), ``oracle-check`` (sampler vs
exact enumeration on tiny instances) and ``convergence`` (two-start-mode
comparison).  Exit codes: 0 on success, 2 on argument/validation failure,
1 when a check subcommand finds a failing comparison.
"""

from __future__ import annotations

import argparse
import sys

from .chain import trace_to_csv
from .harness import (
    REAL_DATA_SAMPLES,
    convergence_protocol,
    default_sample_count,
    oracle_check,
    run_real_data,
    run_suite,
)
from .model import NAMED_PRIORS
from .kernel import active_kernel
from .report import emit_report

ORACLE_TOLERANCE_NATS = 0.15


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="veinfer",
        description="Simulation and Bayesian inference for vaccine-effectiveness estimators.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_suite = sub.add_parser("suite", help="run a replicated simulation experiment")
    p_suite.add_argument("--prior", choices=NAMED_PRIORS, default="wide_open")
    p_suite.add_argument("--n", type=int, default=1000, help="patients per replication")
    p_suite.add_argument("--reps", type=int, default=20)
    p_suite.add_argument("--samples", type=int, default=None,
                         help="posterior samples per replication (default: matched to --n)")
    p_suite.add_argument("--seed", type=int, default=0, help="base seed; replication i uses seed+i")
    p_suite.add_argument("--out", default=None, help="output file (default: suite_<prior>_<n>.<fmt>)")
    p_suite.add_argument("--format", choices=("csv", "json", "svg"), default="csv")

    p_real = sub.add_parser("real", help="posterior inference on the real dataset")
    p_real.add_argument("--assumption", type=int, choices=(1, 2, 3), required=True)
    p_real.add_argument("--samples", type=int, default=REAL_DATA_SAMPLES)
    p_real.add_argument("--seed", type=int, default=0)
    p_real.add_argument("--prior", choices=NAMED_PRIORS, default="wide_open")
    p_real.add_argument("--out", default=None, help="optional report file")
    p_real.add_argument("--format", choices=("csv", "json", "svg"), default="csv")

    p_oracle = sub.add_parser("oracle-check", help="sampler vs exact posterior on tiny instances")
    p_oracle.add_argument("--seed", type=int, default=0)
    p_oracle.add_argument("--instances", type=int, default=10)
    p_oracle.add_argument("--chain-samples", type=int, default=56_000)
    p_oracle.add_argument("--oracle-draws", type=int, default=200_000)

    p_conv = sub.add_parser("convergence", help="compare chains started from prior vs truth")
    p_conv.add_argument("--prior", choices=NAMED_PRIORS, default="wide_open")
    p_conv.add_argument("--n", type=int, default=1000)
    p_conv.add_argument("--seed", type=int, default=0)
    p_conv.add_argument("--samples", type=int, default=20_000)
    p_conv.add_argument("--trace-out", default=None,
                        help="write the from-prior chain's trace CSV here")
    return parser


def _cmd_suite(args) -> int:
    n_samples = args.samples if args.samples is not None else default_sample_count(args.n)
    records, summary = run_suite(args.prior, args.n, reps=args.reps,
                                 n_samples=n_samples, base_seed=args.seed)
    out = args.out or f"suite_{args.prior}_{args.n}.{args.format}"
    emit_report(records, summary, args.format, out)
    print(f"suite prior={args.prior} n={args.n} reps={args.reps} samples={n_samples} "
          f"seed={args.seed} kernel={active_kernel().KERNEL_NAME}")
    print(f"  runs with TNCC more accurate: {summary.n_t1_better}/{summary.n_runs}")
    print(f"  sd of TNCC error:  {summary.sd_t1_error:.3f} nats")
    print(f"  sd of crude error: {summary.sd_t2_error:.3f} nats")
    print(f"  mean 95% CI width: {summary.mean_ci_width:.3f} nats")
    print(f"  mean hospitalised: {summary.mean_n_hosp:.1f}")
    print(f"  wrote {out}")
    return 0


def _cmd_real(args) -> int:
    record = run_real_data(args.assumption, n_samples=args.samples,
                           seed=args.seed, prior=args.prior)
    print(f"real-data assumption {args.assumption} (prior={args.prior}, "
          f"samples={args.samples}, seed={args.seed})")
    print(f"  T1 (TNCC)  = {record.t1:+.3f} nats")
    print(f"  T2 (crude) = {record.t2:+.3f} nats")
    print(f"  T0 95% credible interval: ({record.c2_5:+.3f}, {record.c97_5:+.3f}), "
          f"width {record.c97_5 - record.c2_5:.3f} nats")
    print(f"  E1 = {record.e1:.1f}%  E2 = {record.e2:.1f}%  "
          f"E 95% credible interval: ({record.e_c2_5:.1f}%, {record.e_c97_5:.1f}%)")
    print(f"  N_hosp = {record.n_hosp}")
    if args.out:
        emit_report([record], None, args.format, args.out)
        print(f"  wrote {args.out}")
    return 0


def _cmd_oracle_check(args) -> int:
    results = oracle_check(seed=args.seed, n_instances=args.instances,
                           chain_samples=args.chain_samples,
                           oracle_draws=args.oracle_draws)
    worst = 0.0
    for r in results:
        worst = max(worst, r["diff_c2_5"], r["diff_c97_5"])
        print(f"instance {r['instance']} ({r['prior']}, {r['n_individuals']} individuals): "
              f"gibbs ({r['gibbs_c2_5']:+.3f}, {r['gibbs_c97_5']:+.3f})  "
              f"oracle ({r['oracle_c2_5']:+.3f}, {r['oracle_c97_5']:+.3f})  "
              f"diffs ({r['diff_c2_5']:.3f}, {r['diff_c97_5']:.3f})")
    ok = worst <= ORACLE_TOLERANCE_NATS
    print(f"worst centile difference: {worst:.3f} nats "
          f"({'PASS' if ok else 'FAIL'} at {ORACLE_TOLERANCE_NATS})")
    return 0 if ok else 1


def _cmd_convergence(args) -> int:
    report, trace_a, _ = convergence_protocol(args.prior, args.n, args.seed, args.samples)
    print(f"convergence prior={args.prior} n={args.n} seed={args.seed} samples={args.samples}")
    for line in report.lines():
        print("  " + line)
    if args.trace_out:
        trace_to_csv(trace_a, args.trace_out)
        print(f"  wrote {args.trace_out}")
    return 0 if report.passed else 1


def main(argv=None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    handlers = {
        "suite": _cmd_suite,
        "real": _cmd_real,
        "oracle-check": _cmd_oracle_check,
        "convergence": _cmd_convergence,
    }
    try:
        return handlers[args.command](args)
    except (ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
