"""Command line entry point: ``train``, ``sweep`` and ``eval`` subcommands.

Every :class:`ExperimentConfig` field has a flag (underscores become dashes).
``--config FILE`` reads ``key = value`` lines first; explicit flags win.
Exit status: 0 on success, 1 on runtime failure, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import sys

from .errors import ConfigurationError, DimensionError, ParseError
from .harness import (ExperimentConfig, TrainingAborted, evaluate_fixed, export_csv,
                      export_sweep, load_weights, read_config_file, save_weights, sweep, train)

log = logging.getLogger("photonic_rl")

# flag spellings that differ from the field name
_FLAG_NAMES = {"bias": ["--bias", "-b"]}


def _str_or_none(value: str):
    return None if value.lower() == "none" else value


def _float_or_none(value: str):
    return None if value.lower() == "none" else float(value)


def _bool(value: str) -> bool:
    v = value.lower()
    if v in ("1", "true", "yes", "on"):
        return True
    if v in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError(f"expected a boolean, got {value!r}")


def _floats(value: str) -> tuple:
    return tuple(float(t) for t in value.replace(",", " ").split())


def _add_config_flags(parser: argparse.ArgumentParser) -> None:
    parser.add_argument("--config", help="file of 'key = value' lines")
    for f in dataclasses.fields(ExperimentConfig):
        flags = _FLAG_NAMES.get(f.name, ["--" + f.name.replace("_", "-")])
        default = f.default
        if f.name == "alpha":
            kind = _float_or_none
        elif f.name in ("out", "weights_out", "weights_in"):
            kind = _str_or_none
        elif isinstance(default, bool):
            kind = _bool
        elif isinstance(default, tuple):
            kind = _floats
        else:
            kind = type(default)
        parser.add_argument(*flags, dest=f.name, type=kind, default=argparse.SUPPRESS,
                            help=f"default: {default!r}")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="photonic-rl", description="Reservoir-computing Q-learning on classic control tasks.")
    parser.add_argument("-v", "--verbose", action="store_true", help="log every episode")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("train", help="train a readout and write the episode log")
    _add_config_flags(p)

    p = sub.add_parser("sweep", help="max 100-episode average over a parameter grid")
    _add_config_flags(p)
    p.add_argument("--param", required=True, choices=["bias", "kappa"])
    p.add_argument("--values", required=True, type=_floats,
                   help="comma separated parameter values")
    p.add_argument("--summary-out", help="summary CSV path (default: <out>_summary.csv)")

    p = sub.add_parser("eval", help="play greedily with fixed weights")
    _add_config_flags(p)
    p.add_argument("--eval-seed", type=int, help="reseed episode starts and noise (mask keeps --seed)")
    return parser


def config_from_args(args: argparse.Namespace) -> ExperimentConfig:
    values = {}
    if getattr(args, "config", None):
        values.update(read_config_file(args.config))
    names = {f.name for f in dataclasses.fields(ExperimentConfig)}
    values.update({k: v for k, v in vars(args).items() if k in names})
    return ExperimentConfig(**values)


def _progress(verbose: bool):
    def report(rec):
        if verbose or rec.episode % 50 == 0:
            log.info("episode %d: steps=%d total=%g avg100=%.2f eps=%.3f",
                     rec.episode, rec.steps, rec.total_reward, rec.moving_avg_100, rec.epsilon)
    return report


def _run(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    if args.command == "train":
        try:
            result = train(config, _progress(args.verbose))
        except TrainingAborted as exc:
            if config.out:
                export_csv(exc.partial, config.out)
            raise
        if config.out:
            export_csv(result, config.out)
        if config.weights_out:
            best = config.save_weights_at == "best" and result.best_weights is not None
            save_weights(result.best_weights if best else result.weights, config.weights_out)
        print(f"episodes={len(result.records)} solved_at={result.solved_at} "
              f"max_moving_avg_100={result.max_moving_avg():.2f}")
    elif args.command == "eval":
        if not config.weights_in:
            raise ConfigurationError("eval needs --weights-in")
        weights = load_weights(config.weights_in)
        result = evaluate_fixed(weights, config, progress=_progress(args.verbose),
                                eval_seed=args.eval_seed)
        if config.out:
            export_csv(result, config.out)
        print(f"episodes={len(result.records)} solved_at={result.solved_at} "
              f"max_moving_avg_100={result.max_moving_avg():.2f}")
    elif args.command == "sweep":
        result = sweep(config, args.param, args.values)
        if config.out:
            export_sweep(result, config.out, args.summary_out)
        for value, mean, lo, hi in result.summary():
            print(f"{args.param}={value:g} mean={mean:.2f} min={lo:.2f} max={hi:.2f}")
    return 0


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s", stream=sys.stderr)
    try:
        return _run(args)
    except (ConfigurationError, DimensionError, ParseError, OSError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
