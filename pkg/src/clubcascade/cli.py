"""Command line entry point.

Exit codes: 0 on success, 2 on a configuration or input error, 3 when a
bounds check fails.
"""

from __future__ import annotations

import argparse
import dataclasses
import sys
from pathlib import Path

from . import experiment as ex
from .bounds_check import all_passed, format_table
from .replay import (
    EmptyInput,
    ParseError,
    TooFewUsers,
    extract_features,
    load_ratings,
    make_clustered_ratings,
    split_users,
    write_features,
    write_id_map,
    write_ratings,
)

EXIT_OK, EXIT_INVALID, EXIT_BOUNDS = 0, 2, 3

# flags with dedicated spellings; every other config key becomes --<key>
_SPECIAL = {"seeds", "output", "stride", "algorithms"}


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key=value config file")
    p.add_argument("--seed", dest="seeds", help="seed list, e.g. 0,1,2 or 0-9")
    p.add_argument("--out", dest="output", help="output path (stdout when omitted)")
    p.add_argument("--stride", help="record every N rounds")
    p.add_argument("--algorithms", help="comma-separated subset of " + ",".join(ex.ALGORITHMS))
    for f in dataclasses.fields(ex.ExperimentConfig):
        if f.name in _SPECIAL or f.name == "scenario":
            continue
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f.name, default=None)


def _config(args, scenario: str) -> ex.ExperimentConfig:
    keys = [f.name for f in dataclasses.fields(ex.ExperimentConfig)]
    overrides = {k: getattr(args, k) for k in keys if getattr(args, k, None) is not None}
    overrides["scenario"] = scenario
    return ex.load_config(args.config, **overrides)


def _emit(text: str, path: str | None) -> None:
    if path:
        Path(path).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def cmd_synth(args) -> int:
    cfg = _config(args, "synth")
    _emit(ex.format_records(ex.run_synth(cfg)), cfg.output)
    return EXIT_OK


def cmd_replay(args) -> int:
    cfg = _config(args, "replay")
    _emit(ex.format_records(ex.run_replay(cfg)), cfg.output)
    return EXIT_OK


def cmd_bounds(args) -> int:
    cfg = _config(args, "bounds_check")
    rows = ex.run_bounds_check(cfg, invert=args.invert)
    _emit(format_table(rows), cfg.output)
    return EXIT_OK if all_passed(rows) else EXIT_BOUNDS


def cmd_features(args) -> int:
    ratings = load_ratings(args.ratings, args.threshold)
    split = split_users(ratings, args.feature_users, args.split_seed)
    X = extract_features(split.H, args.d)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_features(out / "features.csv", X)
    write_id_map(out / "items.csv", ratings.item_ids)
    write_id_map(out / "users.csv", ratings.user_ids)
    write_id_map(out / "replay_users.csv", split.F.user_ids)
    return EXIT_OK


def cmd_aggregate(args) -> int:
    rows = ex.aggregate(ex.read_records(args.input))
    _emit(ex.format_aggregate(rows), args.out)
    return EXIT_OK


def cmd_gen_ratings(args) -> int:
    M, _ = make_clustered_ratings(args.users, args.items, args.clusters, args.rank, args.scale,
                                  args.bias, args.seed)
    write_ratings(args.out, M)
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="clubcascade",
                                     description="Clustered cascading bandit experiments")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="synthetic clustered users, cumulative regret")
    _add_config_flags(p)
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("replay", help="offline replay on a ratings file, cumulative clicks")
    _add_config_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("bounds-check", help="empirical checks of the closed-form bounds")
    _add_config_flags(p)
    p.add_argument("--invert", action="store_true", help=argparse.SUPPRESS)
    p.set_defaults(func=cmd_bounds)

    p = sub.add_parser("features", help="write SVD item features and id maps")
    p.add_argument("--ratings", required=True)
    p.add_argument("--threshold", type=float)
    p.add_argument("--feature-users", type=int, default=100)
    p.add_argument("--split-seed", type=int, default=0)
    p.add_argument("-d", type=int, default=20)
    p.add_argument("--out", required=True, help="output directory")
    p.set_defaults(func=cmd_features)

    p = sub.add_parser("aggregate", help="mean metric over seeds")
    p.add_argument("input")
    p.add_argument("--out")
    p.set_defaults(func=cmd_aggregate)

    p = sub.add_parser("gen-ratings", help="write a synthetic clustered ratings file")
    p.add_argument("--users", type=int, default=300)
    p.add_argument("--items", type=int, default=1000)
    p.add_argument("--clusters", type=int, default=5)
    p.add_argument("--rank", type=int, default=10)
    p.add_argument("--scale", type=float, default=4.0)
    p.add_argument("--bias", type=float, default=-6.0)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen_ratings)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (ex.ConfigError, ParseError, EmptyInput, TooFewUsers, FileNotFoundError,
            ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID


if __name__ == "__main__":
    sys.exit(main())
