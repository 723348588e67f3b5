"""Command-line entry point: single runs, figure sweeps, config linting."""

from __future__ import annotations

import argparse
import sys

from . import experiments
from .simulator import run as run_sim


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="bprsim",
        description="Backbone-network simulator with backpressure-derived priority flow rules.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_run = sub.add_parser("run", help="execute a single configured run")
    p_run.add_argument("--config", required=True, help="YAML run config")
    p_run.add_argument("--seed", type=int, help="override the traffic seed")
    p_run.add_argument("--slots", type=int, help="override the run length")
    p_run.add_argument("--out", help="write the result row to this path")
    p_run.add_argument("--format", choices=("csv", "json"), default="csv")

    p_sweep = sub.add_parser("sweep", help="run a parameter sweep")
    p_sweep.add_argument("preset", choices=("fig3", "fig4", "custom"))
    p_sweep.add_argument("--config", help="YAML experiment spec (custom preset)")
    p_sweep.add_argument("--out", help="output path (default: preset name)")
    p_sweep.add_argument("--format", choices=("csv", "json"), default="csv")
    p_sweep.add_argument("--seeds", type=int, help="override seeds per point")
    p_sweep.add_argument("--slots", type=int, help="override run length")
    p_sweep.add_argument("--base-seed", type=int, help="override the seed base")
    p_sweep.add_argument("--parallel", type=int, default=1, help="worker processes")

    p_val = sub.add_parser("validate", help="lint a run config")
    p_val.add_argument("--config", required=True)

    args = parser.parse_args(argv)
    if args.command == "run":
        return _cmd_run(args)
    if args.command == "sweep":
        return _cmd_sweep(args)
    return _cmd_validate(args)


def _cmd_run(args) -> int:
    doc = experiments.load_yaml(args.config)
    if args.seed is not None:
        doc.setdefault("traffic", {})["seed"] = args.seed
    if args.slots is not None:
        doc["slots"] = args.slots
    cfg = experiments.sim_config_from_mapping(doc)
    report = run_sim(cfg)

    spec = experiments.ExperimentSpec(
        name="run", base=cfg, parameter="G", values=[cfg.traffic.base_rate],
        modes=[cfg.controller.mode], seeds_per_point=1, base_seed=cfg.traffic.seed,
    )
    row = experiments._raw_row(spec, cfg, report)
    print(
        f"mode={row['mode']} G={row['G']} T={row['T']} seed={row['seed']} "
        f"latency={report.avg_delivery_slots:.3f} slots "
        f"overflow={report.overflow_rate:.3f} batches/s "
        f"throughput={report.throughput_Bps:.3e} B/s"
    )
    if args.out:
        writer = experiments.write_csv if args.format == "csv" else experiments.write_json
        writer([row], args.out)
        print(f"wrote {args.out}")
    return 0


def _cmd_sweep(args) -> int:
    if args.preset == "custom":
        if not args.config:
            print("custom sweeps need --config", file=sys.stderr)
            return 2
        spec = experiments.experiment_from_mapping(experiments.load_yaml(args.config))
    else:
        preset = experiments.preset_fig3 if args.preset == "fig3" else experiments.preset_fig4
        kwargs = {}
        if args.seeds is not None:
            kwargs["seeds_per_point"] = args.seeds
        if args.slots is not None:
            kwargs["slots"] = args.slots
        if args.base_seed is not None:
            kwargs["base_seed"] = args.base_seed
        spec = preset(**kwargs)

    out = args.out or spec.output or f"{spec.name}.{args.format}"
    rows = experiments.run_experiment(spec, parallel=max(1, args.parallel))
    writer = experiments.write_csv if args.format == "csv" else experiments.write_json
    writer(rows, out)
    n_raw = sum(1 for r in rows if r["seed"] != "mean")
    print(f"{spec.name}: {n_raw} runs, {len(rows) - n_raw} averaged rows -> {out}")
    return 0


def _cmd_validate(args) -> int:
    doc = experiments.load_yaml(args.config)
    problems = experiments.validate_config(doc)
    if not problems:
        print(f"{args.config}: ok")
        return 0
    for p in problems:
        print(f"{args.config}: {p}")
    return 1


if __name__ == "__main__":
    raise SystemExit(main())
