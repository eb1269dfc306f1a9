"""``irs-hho`` command line.

Subcommands: sweep, diff, converge, timing, oracle, sanity.  Options come
from ``--config`` (JSON mirroring ``ExperimentConfig``) and are overridden by
flags.  Exit codes: 0 success, 2 configuration error, 3 oracle check failed.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

import numpy as np

from . import experiments as ex

EXIT_CONFIG = 2
EXIT_ORACLE = 3


def _floats(text):
    return [float(v) for v in text.split(",") if v.strip()]


def _seeds(text):
    """``"5"`` means seeds 0..4; a comma list is taken literally."""
    if "," in text:
        return [int(v) for v in text.split(",") if v.strip()]
    return list(range(int(text)))


def _grid(text):
    """``"40x250,80x500"`` -> [(40, 250), (80, 500)]."""
    pairs = []
    for item in text.split(","):
        q, t = item.lower().split("x")
        pairs.append((int(q), int(t)))
    return pairs


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON file with ExperimentConfig fields")
    common.add_argument("--out", help="output directory")
    common.add_argument("--seeds", type=_seeds, help="seed count or comma-separated seed list")
    common.add_argument("--pop", type=int, dest="Q", help="HHO population size Q")
    common.add_argument("--iters", type=int, dest="T", help="HHO iterations T")
    common.add_argument("--d-list", type=_floats, dest="d_list", help="comma-separated AP-user distances (m)")
    common.add_argument("--schemes", type=lambda s: s.split(","), help="comma-separated subset of no-irs,ao,hho")
    common.add_argument("--jobs", type=int, help="worker processes for sweep cells")
    common.add_argument("-v", "--verbose", action="store_true")

    parser = argparse.ArgumentParser(prog="irs-hho", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    sub.add_parser("sweep", parents=[common], help="SNR of every scheme versus AP-user distance")

    p = sub.add_parser("diff", parents=[common], help="per-distance SNR difference between two schemes")
    p.add_argument("--input", help="sweep CSV (default <out>/sweep.csv)")
    p.add_argument("-a", "--scheme-a", default="hho")
    p.add_argument("-b", "--scheme-b", default="ao")

    p = sub.add_parser("converge", parents=[common], help="HHO best-so-far fitness per iteration")
    p.add_argument("--d", type=float, default=50.0, help="AP-user distance (m)")

    p = sub.add_parser("timing", parents=[common], help="HHO wall time over a (Q, T) grid")
    p.add_argument("--grid", type=_grid, default=_grid("40x250,40x500,40x1000,80x250,80x500,80x1000,"
                                                        "160x250,160x500,160x1000"))
    p.add_argument("--d", type=float, default=50.0)
    p.add_argument("--batch", action="store_true", help="evaluate the population as one block")

    p = sub.add_parser("oracle", parents=[common], help="M=1 check against closed-form and brute-force optima")
    p.add_argument("--n-list", type=lambda s: tuple(int(v) for v in s.split(",")), default=(2, 4, 6))
    p.add_argument("--instances", type=int, default=10)
    p.add_argument("--levels", type=int, default=64, help="phase grid levels for brute force")

    p = sub.add_parser("sanity", parents=[common], help="HHO on sphere and Rastrigin")
    p.add_argument("--dim", type=int, default=30)
    return parser


def load_config(args) -> ex.ExperimentConfig:
    config = ex.ExperimentConfig.from_json(args.config) if args.config else ex.ExperimentConfig()
    overrides = {k: getattr(args, k) for k in ("out", "seeds", "Q", "T", "d_list", "schemes", "jobs")}
    config = config.replace(**overrides)
    config.validate()
    return config


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        config = load_config(args)
        os.makedirs(config.out, exist_ok=True)
    except (ValueError, OSError) as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    out = lambda name: os.path.join(config.out, name)  # noqa: E731
    try:
        if args.command == "sweep":
            records = ex.sweep_distance(config, out("sweep.csv"))
            print(f"wrote {len(records)} records to {out('sweep.csv')}")
        elif args.command == "diff":
            rows = ex.difference_report(args.input or out("sweep.csv"), args.scheme_a, args.scheme_b,
                                        out(f"diff_{args.scheme_a}_vs_{args.scheme_b}.csv"))
            for d, mean, std, n in rows:
                print(f"d={d:6.1f} m  {args.scheme_a}-{args.scheme_b} = {mean:+.3f} dB (std {std:.3f}, n={n})")
        elif args.command == "converge":
            traces = ex.convergence_run(config, args.d, path=out(f"converge_d{args.d:g}.csv"))
            for s, tr in traces.items():
                mid = tr[min(499, len(tr) - 1)]
                print(f"seed {s}: final {tr[-1]:.6g}, iteration-500/final {mid / tr[-1]:.4f}")
        elif args.command == "timing":
            rows = ex.timing_run(config, args.grid, args.d, batch=args.batch, path=out("timing.csv"))
            r2 = ex.linear_fit_r2([q * t for q, t, _, _ in rows], [w for *_, w in rows])
            print(f"R^2 of wall time on Q*T: {r2:.4f}")
        elif args.command == "oracle":
            if config.M != 1 and args.config:
                raise ex.ConfigError("oracle check requires M = 1")
            settings = ex.OracleSettings(n_list=args.n_list, instances=args.instances,
                                         seeds=len(config.seeds), Q=args.Q or 50, T=args.T or 500,
                                         phase_levels=args.levels, wrap_phases=config.wrap_phases)
            rows, passed = ex.oracle_check(settings, out("oracle.csv"))
            worst = min(r["hho_median_ratio"] for r in rows)
            print(f"{len(rows)} instances; worst HHO median ratio {worst:.6f}; "
                  f"worst brute-force ratio {min(r['brute_ratio'] for r in rows):.6f}; "
                  f"max AO deviation {max(abs(r['ao_ratio'] - 1) for r in rows):.2e}")
            print("oracle check " + ("passed" if passed else "FAILED"))
            if not passed:
                return EXIT_ORACLE
        elif args.command == "sanity":
            n_seeds = len(args.seeds) if args.seeds else 20
            rows = ex.hho_sanity(args.dim, args.Q or 30, args.T or 500, n_seeds, path=out("sanity.csv"))
            for name in ex.SANITY_FUNCTIONS:
                sel = [r for r in rows if r["function"] == name]
                rate = np.mean([r["success"] for r in sel])
                print(f"{name}: success {rate:.0%}, median gap {np.median([r['gap'] for r in sel]):.3g}")
    except ex.ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    return 0


def main():
    sys.exit(run())


if __name__ == "__main__":
    main()
