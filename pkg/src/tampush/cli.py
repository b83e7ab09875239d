"""Command-line entry point orchestrating the pipeline end to end.

Subcommands: plan, collect, process, train, eval, report.  Exit codes are
fixed for scripting: 0 ok, 1 input error, 2 timeout, 3 unsolvable.
A JSON config file (--config) supplies defaults; explicit flags override
the config.  Every artifact carries the producing configuration hash.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from . import config
from .assets import default_domain, default_streams, fixture_text
from .bcq import BCQConfig, train_bcq
from .checkpoints import policy_from_checkpoint, save_series
from .dataset import Dataset, DatasetError, read_dataset, write_dataset
from .demos import build_dataset, collect, process_records, stats_report
from .evaluation import EvalConfig, EvalResult, evaluate_policy, prepare_instances
from .gcbc import TrainConfig, train_gcbc
from .pddl import ParseError, parse_domain, parse_problem, parse_streams
from .planner import plan_to_text
from .reporting import ReportError, merge_results, results_table, write_results
from .scene import scene_from_problem
from .simulator import SimConfig
from .streams import solve_adaptive

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_TIMEOUT = 2
EXIT_UNSOLVABLE = 3


def _sim_config(args) -> SimConfig:
    kwargs = {}
    if getattr(args, "no_noise", False):
        kwargs.update(sigma_rot=0.0, sigma_slip=0.0)
    return SimConfig(**kwargs)


def cmd_plan(args) -> int:
    try:
        domain = parse_domain(Path(args.domain).read_text())
        streams = parse_streams(Path(args.streams).read_text(), domain)
        problem = parse_problem(Path(args.problem).read_text(), domain)
        scene = scene_from_problem(problem)
    except (ParseError, OSError, KeyError) as exc:
        print(f"{args.problem}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    result = solve_adaptive(
        domain, streams, problem, budget=args.budget, seed=args.seed, scene=scene,
    )
    if result.status == "timeout":
        print(f"timeout after {result.stats.elapsed:.1f}s "
              f"({result.stats.sampler_calls} sampler calls)", file=sys.stderr)
        return EXIT_TIMEOUT
    if result.status == "unsolvable":
        print("unsolvable", file=sys.stderr)
        return EXIT_UNSOLVABLE
    lines = [f"{s.signature} [1]" for s in result.plan.steps]
    text = "\n".join(lines) + ("\n" if lines else "")
    if args.out:
        Path(args.out).write_text(text)
    sys.stdout.write(text)
    return EXIT_OK


def cmd_collect(args) -> int:
    sim_cfg = _sim_config(args)
    records, stats = collect(
        args.n, args.seed, sim_cfg=sim_cfg, budget=args.budget, workers=args.workers,
    )
    if not records:
        print("no demonstrations collected", file=sys.stderr)
        return EXIT_INPUT
    dataset = build_dataset(
        records, sim_cfg, root_seed=args.seed, split_seed=args.split_seed,
        collect_stats=stats,
    )
    write_dataset(dataset, args.out)
    sys.stdout.write(stats_report(dataset))
    return EXIT_OK


def cmd_process(args) -> int:
    try:
        raw = read_dataset(args.input)
    except (DatasetError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    processed = process_records(raw.records, max_len=args.max_horizon)
    sim_cfg = SimConfig(**raw.manifest["sim_config"])
    dataset = build_dataset(
        processed, sim_cfg, root_seed=raw.manifest["root_seed"],
        split_seed=args.split_seed, gamma=args.gamma,
        intra_relabel=args.intra_relabel,
    )
    dataset.manifest["collect"] = raw.manifest.get("collect", {})
    if dataset.manifest["n_kept"] == 0:
        print("all demonstrations were discarded by processing", file=sys.stderr)
        return EXIT_INPUT
    write_dataset(dataset, args.out)
    sys.stdout.write(stats_report(dataset))
    return EXIT_OK


def cmd_train(args) -> int:
    try:
        dataset = read_dataset(args.dataset)
    except (DatasetError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    if dataset.manifest["n_kept"] == 0:
        print("dataset has no kept records", file=sys.stderr)
        return EXIT_INPUT
    log_lines = []
    log = log_lines.append
    if args.algo == "bcq":
        cfg = BCQConfig(epochs=args.epochs, checkpoint_every=args.checkpoint_every,
                        batch_size=args.batch_size, lr=args.lr, seed=args.seed,
                        gamma=dataset.manifest.get("gamma", 0.99))
        result = train_bcq(dataset, cfg, log=log)
    else:
        cfg = TrainConfig(epochs=args.epochs, checkpoint_every=args.checkpoint_every,
                          batch_size=args.batch_size, lr=args.lr, seed=args.seed)
        result = train_gcbc(dataset, cfg, recurrent=(args.algo == "gcbc-rnn"), log=log)
    for ck in result.checkpoints:
        ck.spec["sim_config_hash"] = dataset.manifest["sim_config_hash"]
        ck.spec["dataset_records"] = dataset.manifest["n_kept"]
    out = Path(args.out)
    paths = save_series(out, result, args.algo)
    (out / "training-log.txt").write_text("\n".join(log_lines) + "\n")
    print(f"wrote {len(paths)} checkpoints to {out}")
    return EXIT_OK


def cmd_eval(args) -> int:
    sim_cfg = _sim_config(args)
    cfg = EvalConfig(
        n_instances=args.instances, n_seeds=args.seeds,
        instance_seed=args.instance_seed, rollout_seed=args.rollout_seed,
        budget=args.budget,
    )
    if args.policy == "subroutine":
        policy = None
        sim_hash = sim_cfg.digest()
        label = "subroutine"
    else:
        try:
            policy = policy_from_checkpoint(args.policy)
        except Exception as exc:  # noqa: BLE001 - surface as input error
            print(str(exc), file=sys.stderr)
            return EXIT_INPUT
        spec, _ = policy.spec(), None
        sim_hash = sim_cfg.digest()
        ck_hash = spec.get("sim_config_hash") if isinstance(spec, dict) else None
        if ck_hash and ck_hash != sim_hash:
            print(f"sim config mismatch: checkpoint {ck_hash} vs current {sim_hash}",
                  file=sys.stderr)
            return EXIT_INPUT
        label = Path(args.policy).stem
    instances, discarded = prepare_instances(cfg.n_instances, cfg)
    if not instances:
        print("no solvable evaluation instances", file=sys.stderr)
        return EXIT_INPUT
    rates = evaluate_policy(policy, instances, cfg, sim_cfg)
    result = EvalResult.from_rates(rates, discarded=discarded)
    table = results_table([(label, result.median, result.ci[0], result.ci[1])])
    manifest = {
        "policy": label,
        "sim_config_hash": sim_hash,
        "n_instances": len(instances),
        "n_seeds": cfg.n_seeds,
        "instance_seed": cfg.instance_seed,
        "rollout_seed": cfg.rollout_seed,
        "discarded": discarded,
        "rates": [float(r) for r in rates],
    }
    write_results(args.out, manifest, table)
    sys.stdout.write(table)
    return EXIT_OK


def cmd_report(args) -> int:
    try:
        text = merge_results(args.results, args.out)
    except (ReportError, OSError) as exc:
        print(str(exc), file=sys.stderr)
        return EXIT_INPUT
    sys.stdout.write(text)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="tampush",
        description="stream-based planar TAMP with offline push-skill distillation",
    )
    parser.add_argument("--config", help="JSON file of flag defaults (flags override)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("plan", help="solve one problem file to a bound plan")
    p.add_argument("--domain", required=True)
    p.add_argument("--streams", required=True)
    p.add_argument("--problem", required=True)
    p.add_argument("--budget", type=float, default=config.SOLVE_BUDGET)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out")
    p.set_defaults(func=cmd_plan)

    p = sub.add_parser("collect", help="collect scripted push demonstrations")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--budget", type=float, default=config.SOLVE_BUDGET)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_collect)

    p = sub.add_parser("process", help="filter, relabel and prune demonstrations")
    p.add_argument("--input", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--max-horizon", type=int, default=config.HORIZON)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("--gamma", type=float, default=0.99)
    p.add_argument("--intra-relabel", action="store_true")
    p.set_defaults(func=cmd_process)

    p = sub.add_parser("train", help="train a policy from a processed dataset")
    p.add_argument("--dataset", required=True)
    p.add_argument("--algo", choices=("gcbc", "gcbc-rnn", "bcq"), required=True)
    p.add_argument("--epochs", type=int, default=2000)
    p.add_argument("--checkpoint-every", type=int, default=50)
    p.add_argument("--batch-size", type=int, default=100)
    p.add_argument("--lr", type=float, default=1e-3)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint or the subroutine")
    p.add_argument("--policy", required=True, help="'subroutine' or a checkpoint path")
    p.add_argument("--instances", type=int, default=50)
    p.add_argument("--seeds", type=int, default=5)
    p.add_argument("--instance-seed", type=int, default=1000)
    p.add_argument("--rollout-seed", type=int, default=2000)
    p.add_argument("--budget", type=float, default=config.SOLVE_BUDGET)
    p.add_argument("--no-noise", action="store_true")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("report", help="merge result directories into one table")
    p.add_argument("results", nargs="+")
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    argv = sys.argv[1:] if argv is None else list(argv)
    parser = build_parser()
    # first pass only to find --config; second pass applies its defaults
    probe, _ = parser.parse_known_args(argv)
    if probe.config:
        try:
            defaults = json.loads(Path(probe.config).read_text())
        except (OSError, json.JSONDecodeError) as exc:
            print(f"bad config file: {exc}", file=sys.stderr)
            return EXIT_INPUT
        for action in parser._subparsers._group_actions[0].choices.values():  # noqa: SLF001
            known = {a.dest for a in action._actions}  # noqa: SLF001
            action.set_defaults(**{k: v for k, v in defaults.items() if k in known})
    args = parser.parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
