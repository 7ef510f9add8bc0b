"""Command-line entry point with the three experiment subcommands."""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from .config import ConfigError, parse_config
from .experiments import run_hmm, run_multimodal, run_oracle_check


def _add_common(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--seed", type=int, default=None, help="run seed (non-negative)")
    parser.add_argument("--chains", type=int, default=None, help="number of chains N")
    parser.add_argument("--sweeps", type=int, default=None, help="number of sweeps")
    parser.add_argument("--out", type=str, default=None, help="output directory")
    parser.add_argument("--config", type=str, default=None, help="key=value config file")
    parser.add_argument(
        "--parallel",
        action=argparse.BooleanOptionalAction,
        default=None,
        help="evaluate candidate densities on worker threads (bit-identical output)",
    )
    parser.add_argument("--diag-every", type=int, default=None, dest="diag_every")
    parser.add_argument("--d-min", type=float, default=None, dest="d_min")
    parser.add_argument("--d-max", type=float, default=None, dest="d_max")
    parser.add_argument(
        "--center-on-proposer",
        action=argparse.BooleanOptionalAction,
        default=None,
        dest="center_on_proposer",
        help="alternative cross-proposal centered on the proposing chain",
    )


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="interchain",
        description="Interacting parallel MCMC experiments and exact-kernel checks.",
    )
    sub = parser.add_subparsers(dest="experiment", required=True)

    multi = sub.add_parser("multimodal", help="three-mode mixture benchmark")
    _add_common(multi)
    multi.add_argument(
        "--snapshots",
        type=str,
        default=None,
        dest="snapshot_sweeps",
        help="comma-separated sweeps at which to dump chain positions",
    )

    hmm = sub.add_parser("hmm", help="state-space sampler comparison")
    _add_common(hmm)
    hmm.add_argument("--self-step", type=float, default=None, dest="self_step")
    hmm.add_argument(
        "--data-seed",
        type=int,
        default=None,
        dest="data_seed",
        help="seed for the shared dataset and reference (defaults to --seed)",
    )
    hmm.add_argument("--ref-chains", type=int, default=None, dest="ref_chains")
    hmm.add_argument("--ref-sweeps", type=int, default=None, dest="ref_sweeps")
    hmm.add_argument(
        "--indep-proposal",
        choices=("prior", "rw"),
        default=None,
        dest="indep_proposal",
        help="per-component proposal of the independent baseline",
    )
    hmm.add_argument("--indep-sweeps", type=int, default=None, dest="indep_sweeps")
    hmm.add_argument(
        "--indep-diag-every", type=int, default=None, dest="indep_diag_every"
    )
    hmm.add_argument("--horizon", type=int, default=None)

    oracle = sub.add_parser("oracle-check", help="exact kernel invariance checks")
    _add_common(oracle)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    overrides = {k: v for k, v in vars(args).items() if k not in ("experiment", "config")}
    try:
        cfg = parse_config(args.experiment, path=args.config, overrides=overrides)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    if args.experiment == "multimodal":
        summary = run_multimodal(cfg)
        occ = ", ".join(f"{p:.3f}" for p in summary["final_occupancy"])
        print(f"final mode occupancy: ({occ})")
        print(f"mean acceptance rate: {summary['mean_acceptance_rate']:.3f}")
        print(f"outputs in {summary['out']}")
        return 0

    if args.experiment == "hmm":
        summary = run_hmm(cfg)
        print(
            "interacting: epsilon "
            f"{summary['interacting_final_epsilon']:.4f} after "
            f"{summary['interacting_cpu_seconds']:.2f} cpu-s"
        )
        print(
            "independent: epsilon "
            f"{summary['independent_final_epsilon']:.4f} after "
            f"{summary['independent_cpu_seconds']:.2f} cpu-s"
        )
        print(f"outputs in {summary['out']}")
        return 0

    rows = run_oracle_check(cfg)
    lines = []
    all_ok = True
    for name, value, bound, direction, passed in rows:
        status = "pass" if passed else "FAIL"
        all_ok = all_ok and passed
        lines.append(f"{status}  {name}: {value:.3e} (must be {direction} {bound:g})")
    print("\n".join(lines))
    if args.out is not None:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        (out / "oracle_report.txt").write_text("\n".join(lines) + "\n", encoding="ascii")
    return 0 if all_ok else 1


if __name__ == "__main__":
    raise SystemExit(main())
