"""Command line front end.

Subcommands::

    twoinf bounds    --config cfg.yaml         # matrix files -> bound reports (JSON lines)
    twoinf cluster   --config cfg.yaml         # one instance end to end
    twoinf simulate  --config cfg.yaml         # Monte Carlo replicates -> CSV
    twoinf sweep     --config cfg.yaml         # regime grid -> CSV
    twoinf calibrate --config cfg.yaml         # fit and validate constants -> CSV

Exit codes: 0 success, 2 configuration error, 3 runtime failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import List, Optional

from .bench.calibrate import outcomes_table, run_calibration
from .bench.config import ExperimentConfig, load_config, resolve
from .bench.experiment import (
    evaluate_bounds,
    make_truth,
    rows_to_csv,
    run_experiment,
)
from .bench.sweep import run_regime_sweep, sweep_csv
from .clustering import miscluster_count, spectral_cluster
from .errors import ConfigError
from .matrix_io import config_hash, write_labels, write_metadata

EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 2, 3


def _parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="twoinf", description=__doc__.split("\n")[0])
    sub = p.add_subparsers(dest="command", required=True)
    for name, help_ in (
        ("bounds", "evaluate bounds on matrix files"),
        ("cluster", "cluster one generated or loaded instance"),
        ("simulate", "run a seeded Monte Carlo experiment"),
        ("sweep", "run a regime grid"),
        ("calibrate", "fit and validate generic constants"),
    ):
        sp = sub.add_parser(name, help=help_)
        sp.add_argument("--config", help="YAML config file (defaults used if omitted)")
        sp.add_argument("--seed", type=int, help="master seed (overrides config)")
        sp.add_argument("--threads", type=int, help="worker threads (overrides config)")
        sp.add_argument("--out", help="output path (overrides config)")
        sp.add_argument("--print-config", action="store_true",
                        help="print the resolved config and exit")
        sp.add_argument("--allow-large", action="store_true",
                        help="lift the desk-scale size caps")
    return p


def _load(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else resolve({})
    over = {}
    if args.seed is not None:
        over["master_seed"] = args.seed
    if args.threads is not None:
        over["threads"] = args.threads
    if args.out is not None:
        over["output"] = args.out
    if args.allow_large:
        over["allow_large"] = True
    if over:
        cfg = resolve({**cfg.data, **over})
    return cfg


def _write(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def cmd_bounds(cfg: ExperimentConfig) -> None:
    if cfg.scenario != "matrix-files":
        raise ConfigError("the bounds command needs scenario: matrix-files")
    truth = make_truth(cfg, cfg["seed_start"])
    for mode in cfg["modes"]:
        for b, rep in evaluate_bounds(truth, mode, cfg["bounds"], cfg["constants"]).items():
            print(json.dumps({
                "mode": mode, "bound": b, "value": rep.value, "terms": dict(rep.terms),
                "constant_explicit": rep.constant_explicit,
                "preconditions_met": rep.preconditions_met, "notes": rep.notes,
            }))


def cmd_cluster(cfg: ExperimentConfig) -> None:
    truth = make_truth(cfg, cfg["seed_start"])
    km = cfg["kmeans"]
    out = {}
    for mode in cfg["modes"]:
        res = spectral_cluster(truth.Xhat, truth.r, mode, km["restarts"], km["max_iters"],
                               cfg["master_seed"])
        rec = {"objective": res.objective}
        if truth.model is not None:
            rec["miscluster_count"] = miscluster_count(res.zhat, truth.model.z, truth.model.r)
        out[mode] = rec
        if cfg["output"]:
            path = f"{cfg['output']}.{mode}.labels"
            write_labels(path, res.zhat)
            rec["labels"] = path
    if cfg["output"] and truth.model is not None:
        write_labels(f"{cfg['output']}.truth.labels", truth.model.z)
        write_metadata(f"{cfg['output']}.meta.json", {
            "seed": cfg["seed_start"], "master_seed": cfg["master_seed"],
            "config_hash": config_hash(cfg.data), "scenario": cfg.scenario,
            "params": cfg.params, **truth.meta,
        })
    print(json.dumps(out, indent=2, sort_keys=True))


def cmd_simulate(cfg: ExperimentConfig) -> None:
    _, summary, _ = run_experiment(cfg, out_path=cfg["output"])
    print(json.dumps(summary, indent=2, sort_keys=True))


def cmd_sweep(cfg: ExperimentConfig) -> None:
    sw = cfg["sweep"]
    table = run_regime_sweep(cfg, sw["x"], sw["y"], cfg["threads"], sw["axes"])
    _write(cfg["output"], sweep_csv(table))
    bad = [r for r in table if not r["trend_ok"]]
    print(json.dumps({"cells": len(table), "trend_flags": len(bad)}))


def cmd_calibrate(cfg: ExperimentConfig) -> None:
    outcomes, _ = run_calibration(cfg, cfg["threads"])
    table = outcomes_table(outcomes)
    cols = list(table[0]) if table else ["bound"]
    _write(cfg["output"], rows_to_csv(table, cols))
    print(json.dumps(table, indent=2))


COMMANDS = {
    "bounds": cmd_bounds,
    "cluster": cmd_cluster,
    "simulate": cmd_simulate,
    "sweep": cmd_sweep,
    "calibrate": cmd_calibrate,
}


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = _load(args)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    if args.print_config:
        sys.stdout.write(cfg.to_yaml())
        return EXIT_OK
    try:
        COMMANDS[args.command](cfg)
    except ConfigError as exc:
        for msg in exc.problems:
            print(f"config error: {msg}", file=sys.stderr)
        return EXIT_CONFIG
    except Exception as exc:  # noqa: BLE001 - surfaced as exit code 3
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
