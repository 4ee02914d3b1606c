"""Command-line interface.

Four subcommands:

- ``verify``: run the structural verification suite and print one
  ``CHECK <name> PASS|FAIL ...`` line per check; exit 1 on any FAIL.
- ``learn``: run one experiment batch (config file and/or flags) and
  emit the records CSV.
- ``bench``: run the active-vs-passive label-complexity comparison
  over an eps grid and print a summary table.
- ``capacity``: tabulate the capacity curve for one distribution.

Set MARGINLEARN_WORKERS to bound worker parallelism (default: the
number of logical processors).
"""

from __future__ import annotations

import argparse
import statistics
import sys
from typing import Dict, List, Optional

from .analysis import estimate_dis_coefficient
from .distributions import RandomStream
from .geometry import unit_vector
from .harness import (
    ExperimentConfig,
    WORKERS_ENV,
    load_config,
    parse_dist_descriptor,
    records_to_csv,
    run_experiment,
    run_verification_suite,
    write_records,
)

_DEFAULT_VERIFY_DISTS = "gaussian,ball,mixture:1"
_DEFAULT_BENCH_EPS = "0.1,0.05,0.025,0.0125"
_DEFAULT_CAPACITY_GRID = (0.005, 0.01, 0.02, 0.04, 0.08, 0.16, 0.24)


def _common_flags() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=None, help="base seed (default 0)")
    common.add_argument("--out", default=None, help="output file path")
    common.add_argument("--dist", default=None, help="distribution descriptor(s), comma-separated")
    common.add_argument("--dim", default=None, help="dimension(s), comma-separated")
    common.add_argument("--eps", default=None, help="target error(s), comma-separated")
    common.add_argument("--delta", type=float, default=None, help="failure probability")
    common.add_argument("--noise", default=None, help="none | massart:<eta> | tsybakov:<a>:<tau>")
    common.add_argument("--level", choices=("quick", "full"), default="quick", help="sample-size level")
    return common


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="marginlearn",
        description="Margin-based active learning of halfspaces: experiments and verification.",
        epilog=f"Environment: {WORKERS_ENV} bounds worker parallelism (default: cpu count).",
    )
    common = _common_flags()
    sub = parser.add_subparsers(dest="command", required=True)

    p_verify = sub.add_parser("verify", parents=[common], help="run the verification suite")
    p_verify.set_defaults(func=_cmd_verify)

    p_learn = sub.add_parser("learn", parents=[common], help="run one experiment batch")
    p_learn.add_argument("--config", default=None, help="flat key = value config file")
    p_learn.add_argument("--learner", choices=("active", "passive", "active_noise"), default=None)
    p_learn.add_argument("--seeds", default=None, help="comma-separated seed list")
    p_learn.add_argument("--whiten", action=argparse.BooleanOptionalAction, default=None)
    p_learn.add_argument("--affine", default=None, help="text file with a d x d matrix")
    p_learn.add_argument("--c1", type=float, default=None, help="band prefactor override")
    p_learn.add_argument("--c2", type=float, default=None, help="label budget prefactor override")
    p_learn.add_argument("--c-r", type=float, default=None, help="search radius prefactor override")
    p_learn.add_argument("--c-eps", type=float, default=None, help="hinge scale prefactor override")
    p_learn.add_argument("--rounds", type=int, default=None, help="round count override")
    p_learn.add_argument("--cap-factor", type=float, default=None, help="unlabeled cap override")
    p_learn.add_argument("--c3", type=float, default=None, help="passive budget prefactor")
    p_learn.set_defaults(func=_cmd_learn)

    p_bench = sub.add_parser("bench", parents=[common], help="active vs passive label complexity")
    p_bench.add_argument("--seeds", default=None, help="comma-separated seed list")
    p_bench.add_argument("--c3", type=float, default=None, help="passive budget prefactor")
    p_bench.set_defaults(func=_cmd_bench)

    p_cap = sub.add_parser("capacity", parents=[common], help="tabulate the capacity curve")
    p_cap.set_defaults(func=_cmd_capacity)
    return parser


def _split_list(text: str) -> List[str]:
    return [part.strip() for part in text.split(",") if part.strip()]


def _cmd_verify(args) -> int:
    seed = 0 if args.seed is None else args.seed
    names = _split_list(args.dist or _DEFAULT_VERIFY_DISTS)
    if args.dim is not None:
        dims = [int(v) for v in _split_list(args.dim)]
    else:
        dims = [2, 8] if args.level == "full" else [2]
    dist_list = [parse_dist_descriptor(name, d) for name in names for d in dims]
    report = run_verification_suite(dist_list, args.level, RandomStream(seed), out_path=args.out)
    sys.stdout.write(report.to_text())
    return 0 if report.all_passed else 1


def _learn_overrides(args) -> Dict[str, object]:
    overrides: Dict[str, object] = {}
    for key in ("learner", "dist", "dim", "eps", "noise", "affine", "out"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = value
    for key in ("delta", "c1", "c2", "c_r", "c_eps", "rounds", "cap_factor", "c3"):
        value = getattr(args, key)
        if value is not None:
            overrides[key] = str(value)
    if args.whiten is not None:
        overrides["whiten"] = "true" if args.whiten else "false"
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    elif args.seed is not None:
        overrides["seeds"] = str(args.seed)
    return overrides


def _cmd_learn(args) -> int:
    overrides = _learn_overrides(args)
    if args.config is not None:
        config = load_config(args.config, overrides)
    else:
        config = ExperimentConfig.from_mapping(overrides)
    records = run_experiment(config)
    if config.out is not None:
        for r in records:
            print(
                f"seed={r.seed} labels={r.labels} unlabeled={r.unlabeled} "
                f"error={r.error:.4g} wall_ms={r.wall_ms:.0f}"
            )
        print(f"wrote {len(records)} records to {config.out}")
    else:
        sys.stdout.write(records_to_csv(records))
    return 0 if len(records) == len(config.seeds) else 1


def _cmd_bench(args) -> int:
    dist = (args.dist or "gaussian").strip()
    dim = int(args.dim) if args.dim is not None else 5
    delta = args.delta if args.delta is not None else 0.1
    eps_grid = [float(v) for v in _split_list(args.eps or _DEFAULT_BENCH_EPS)]
    if args.seeds is not None:
        seeds = tuple(int(v) for v in _split_list(args.seeds))
    else:
        base = 0 if args.seed is None else args.seed
        seeds = tuple(range(base, base + 5))
    all_records = []
    full = True
    medians: Dict[str, List[float]] = {"active": [], "passive": []}
    for eps in eps_grid:
        for learner in ("active", "passive"):
            config = ExperimentConfig(
                learner=learner,
                dist=dist,
                dim=dim,
                eps=eps,
                delta=delta,
                seeds=seeds,
                c3=args.c3 if args.c3 is not None else 40.0,
            )
            records = run_experiment(config)
            full = full and len(records) == len(seeds)
            all_records.extend(records)
            medians[learner].append(statistics.median(r.labels for r in records))
    print(f"# bench {dist} d={dim} delta={delta:g} seeds={len(seeds)}")
    print("eps,active_median_labels,passive_median_labels,passive_over_active")
    for i, eps in enumerate(eps_grid):
        act, pas = medians["active"][i], medians["passive"][i]
        print(f"{eps:g},{act:g},{pas:g},{pas / act:.2f}")
    if args.out is not None:
        write_records(all_records, args.out)
        print(f"wrote {len(all_records)} records to {args.out}")
    return 0 if full else 1


def _cmd_capacity(args) -> int:
    dist_name = (args.dist or "gaussian").strip()
    dim = int(args.dim) if args.dim is not None else 8
    seed = 0 if args.seed is None else args.seed
    n = 200_000 if args.level == "quick" else 1_000_000
    dist = parse_dist_descriptor(dist_name, dim)
    rng = RandomStream(seed)
    w_star = unit_vector(rng.child(1).generator().standard_normal(dim))
    curve = estimate_dis_coefficient(w_star, dist, _DEFAULT_CAPACITY_GRID, n, rng.child(2))
    lines = ["r,value,half_width,n"]
    for r, est in curve.points:
        lines.append(f"{r!r},{est.value!r},{est.half_width!r},{est.n}")
    text = "\n".join(lines) + "\n"
    sys.stdout.write(text)
    print(f"# sup capacity over grid = {curve.sup_value:.4g}", file=sys.stderr)
    if args.out is not None:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    return 0


def main(argv: Optional[List[str]] = None) -> int:
    parser = _build_parser()
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    raise SystemExit(main())
