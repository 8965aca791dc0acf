"""Command line front door: isac-sim run --preset <id> ... --out <dir>.

Exit codes: 0 success, 2 config problem, 3 numerical failure inside a
trial (the message carries the seed/trial pair for replay).
"""
from __future__ import annotations

import argparse
import sys
from pathlib import Path

import numpy as np

from isac_sim.config import ConfigError, load_config
from isac_sim.experiments import (
    PRESET_COMMENTS,
    PRESET_IDS,
    TrialFailure,
    frame_matrices,
    preset_config,
    run_experiment,
    write_csv,
)


def build_parser():
    parser = argparse.ArgumentParser(
        prog="isac-sim",
        description="Link-level ISAC pilot-phase simulator")
    sub = parser.add_subparsers(dest="command", required=True)
    run = sub.add_parser("run", help="run one preset experiment")
    run.add_argument("--preset", required=True, choices=PRESET_IDS)
    run.add_argument("--config", help="INI file overriding preset defaults")
    run.add_argument("--seed", type=int, help="master seed (non-negative)")
    run.add_argument("--trials", type=int, help="Monte-Carlo trial count")
    run.add_argument("--out", default=".", help="output directory")
    run.add_argument("--trace", action="store_true",
                     help="progress lines on stderr")
    run.add_argument("--dump-measurement-matrix", action="store_true",
                     help="also write measurement_matrix.npz")
    return parser


def _build_config(args):
    overrides = load_config(args.config) if args.config else {}
    if args.seed is not None:
        if args.seed < 0:
            raise ConfigError("seed must be non-negative")
        overrides["seed"] = args.seed
    if args.trials is not None:
        if args.trials < 1:
            raise ConfigError("trials must be at least 1")
        overrides["trials"] = args.trials
    overrides["trace"] = args.trace
    try:
        return preset_config(args.preset, **overrides)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        cfg = _build_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2

    out_dir = Path(args.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    try:
        records = run_experiment(cfg)
        if args.dump_measurement_matrix:
            _, mm = frame_matrices(cfg)
            np.savez(out_dir / "measurement_matrix.npz",
                     phi_bar=mm.phi_bar, phi_valid=mm.phi_valid,
                     valid_idx=mm.valid_idx)
    except TrialFailure as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return 3

    csv_path = out_dir / f"{cfg.preset}.csv"
    write_csv(records, csv_path, PRESET_COMMENTS.get(cfg.preset, ()))
    print(csv_path)
    return 0


if __name__ == "__main__":
    sys.exit(main())
