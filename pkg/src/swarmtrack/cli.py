"""Command-line interface: run / sweep / verify / replay.

``run`` executes one configuration, ``sweep`` a grid of configurations,
``verify`` re-checks frozen subproblem records against the suboptimality
bounds, and ``replay`` scores coordination methods on frozen subproblems.
Exit status is nonzero iff a verification check fails.
"""

import argparse
import csv
import glob
import os
import sys
from dataclasses import replace

from .bounds import compute_costs, verify_assignment_bound, verify_distributed_bound
from .coordination import CoordinationMethod
from .harness import (
    config_from_values,
    parse_config_file,
    redundancy_rows,
    replay_subproblems,
    run_sweep,
    write_metrics,
    _CONFIG_KEYS,
)
from .records import IntegrityError, SubproblemRecord

VERIFY_COLUMNS = ("record", "check", "holds", "lhs", "rhs", "slack")


def _add_config_flags(parser):
    parser.add_argument("--config", help="key = value config file")
    for key, conv in _CONFIG_KEYS.items():
        if conv in (int, float):
            parser.add_argument(f"--{key.replace('_', '-')}", type=conv, dest=key)
        elif conv is str:
            parser.add_argument(f"--{key.replace('_', '-')}", dest=key)
        else:  # boolean-ish
            parser.add_argument(
                f"--{key.replace('_', '-')}",
                dest=key,
                choices=("true", "false"),
            )


def _config_from_args(args):
    values = {}
    if args.config:
        cfg = parse_config_file(args.config)
        values = {
            k: getattr(cfg, k)
            for k in _CONFIG_KEYS
            if k not in ("method", "n_d", "robot_range", "target_range")
            and hasattr(cfg, k)
        }
        values["method"] = cfg.method.label
        values["robot_range"] = cfg.method.robot_range
        values["target_range"] = cfg.method.target_range
        for optional in ("sparse_threshold", "mcts_time_ms"):
            if getattr(cfg, optional) is None:
                values.pop(optional, None)
    for key, conv in _CONFIG_KEYS.items():
        raw = getattr(args, key, None)
        if raw is None:
            continue
        values[key] = _CONFIG_KEYS[key](raw) if isinstance(raw, str) else raw
    return config_from_values(values)


def _load_records(paths):
    files = []
    for p in paths:
        if os.path.isdir(p):
            files.extend(sorted(glob.glob(os.path.join(p, "*.json"))))
        else:
            files.append(p)
    return [SubproblemRecord.load(f) for f in files]


def cmd_run(args) -> int:
    cfg = _config_from_args(args)
    metrics, records, failures = run_sweep(
        [cfg], workers=args.workers, records_dir=args.records_dir
    )
    rows = [m.to_row() for m in metrics]
    write_metrics(args.metrics, rows)
    for f in failures:
        print(f"FAILED trial: {f}", file=sys.stderr)
    print(f"wrote {len(rows)} trial rows to {args.metrics}")
    if records:
        print(f"wrote {len(records)} subproblem records to {args.records_dir}")
    return 1 if failures else 0


def cmd_sweep(args) -> int:
    configs = parse_grid_file(args.grid)
    metrics, records, failures = run_sweep(
        configs, workers=args.workers, records_dir=args.records_dir
    )
    rows = [m.to_row() for m in metrics]
    if args.redundancy and records:
        rows.extend(redundancy_rows(records))
    write_metrics(args.metrics, rows)
    for f in failures:
        print(f"FAILED trial: {f}", file=sys.stderr)
    print(
        f"wrote {len(rows)} rows to {args.metrics} "
        f"({len(records)} records, {len(failures)} failures)"
    )
    return 1 if failures else 0


def cmd_verify(args) -> int:
    records = _load_records(args.records)
    rows = []
    failed = False
    for rec in records:
        name = f"{rec.method}_t{rec.trial_index}e{rec.epoch}"
        try:
            rec.check_integrity()
            rows.append(
                {"record": name, "check": "integrity", "holds": True,
                 "lhs": rec.logged_value, "rhs": rec.logged_value, "slack": 0.0}
            )
        except IntegrityError as exc:
            failed = True
            rows.append(
                {"record": name, "check": "integrity", "holds": False,
                 "lhs": "", "rhs": "", "slack": ""}
            )
            print(f"{name}: {exc}", file=sys.stderr)
            continue

        costs = compute_costs(rec)
        for i, (gp, se) in enumerate(zip(costs.plan, costs.plan_se)):
            ok = gp >= -3.0 * se - 1e-9
            failed |= not ok
            rows.append(
                {"record": name, "check": f"plan_cost_nonneg_robot{i}",
                 "holds": ok, "lhs": -3.0 * se, "rhs": gp, "slack": gp + 3.0 * se}
            )

        from .bounds import PlanningInstance

        instance = PlanningInstance.from_record(rec)
        if instance.exact_feasible():
            assignment = verify_assignment_bound(instance)
            rows.append(
                {"record": name, "check": "assignment_bound",
                 "holds": assignment.holds,
                 "lhs": assignment.lhs, "rhs": assignment.rhs,
                 "slack": assignment.slack}
            )
            distributed = verify_distributed_bound(instance)
            rows.append(
                {"record": name, "check": "distributed_bound_costs",
                 "holds": distributed.costs_bound.holds,
                 "lhs": distributed.costs_bound.lhs,
                 "rhs": distributed.costs_bound.rhs,
                 "slack": distributed.costs_bound.slack}
            )
            rows.append(
                {"record": name, "check": "distributed_bound_weights",
                 "holds": distributed.weights_bound.holds,
                 "lhs": distributed.weights_bound.lhs,
                 "rhs": distributed.weights_bound.rhs,
                 "slack": distributed.weights_bound.slack}
            )
            failed |= not (assignment.holds and distributed.holds)

    with open(args.out, "w", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=VERIFY_COLUMNS)
        writer.writeheader()
        writer.writerows(rows)
    print(f"wrote {len(rows)} verification rows to {args.out}")
    if failed:
        print("verification FAILED", file=sys.stderr)
    return 1 if failed else 0


def cmd_replay(args) -> int:
    records = _load_records(args.records)
    methods = [CoordinationMethod.parse(m) for m in args.methods.split(",")]
    rows = replay_subproblems(
        records, methods, planner=args.planner, m_ref=args.m_ref
    )
    write_metrics(args.out, rows)
    print(f"wrote {len(rows)} replay rows to {args.out}")
    return 0


def parse_grid_file(path):
    """Grid files look like config files but values may be comma-separated
    lists; the sweep is the cross product over list-valued keys."""
    import itertools

    lists = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            key, _, raw = line.partition("=")
            key, raw = key.strip(), raw.strip()
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            lists[key] = [
                _CONFIG_KEYS[key](part.strip()) for part in raw.split(",")
            ]
    keys = sorted(lists)
    configs = []
    for combo in itertools.product(*(lists[k] for k in keys)):
        configs.append(config_from_values(dict(zip(keys, combo))))
    return configs


def build_parser():
    parser = argparse.ArgumentParser(
        prog="swarmtrack",
        description="Multi-robot target-tracking simulation and analysis",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="run one configuration")
    _add_config_flags(p_run)
    p_run.add_argument("--metrics", default="metrics.csv")
    p_run.add_argument("--records-dir", default=None)
    p_run.add_argument("--workers", type=int, default=1)
    p_run.set_defaults(func=cmd_run)

    p_sweep = sub.add_parser("sweep", help="run a grid of configurations")
    p_sweep.add_argument("--grid", required=True, help="grid config file")
    p_sweep.add_argument("--metrics", default="metrics.csv")
    p_sweep.add_argument("--records-dir", default=None)
    p_sweep.add_argument("--workers", type=int, default=1)
    p_sweep.add_argument(
        "--redundancy", action="store_true",
        help="append redundancy rows computed from logged records",
    )
    p_sweep.set_defaults(func=cmd_sweep)

    p_verify = sub.add_parser("verify", help="verify bounds on records")
    p_verify.add_argument("records", nargs="+", help="record files or dirs")
    p_verify.add_argument("--out", default="verify.csv")
    p_verify.set_defaults(func=cmd_verify)

    p_replay = sub.add_parser("replay", help="score methods on records")
    p_replay.add_argument("records", nargs="+", help="record files or dirs")
    p_replay.add_argument(
        "--methods", default="sequential,rsp2,rsp4,rsp8,myopic,random"
    )
    p_replay.add_argument("--planner", default="exhaustive")
    p_replay.add_argument("--m-ref", type=int, default=64)
    p_replay.add_argument("--out", default="replay.csv")
    p_replay.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
