from __future__ import annotations

import argparse
import logging
import sys

from hspace.commands import EXIT_CONFIG, SUBCOMMANDS, run
from hspace.config import load_config
from hspace.errors import ConfigError

"""
Command line entry point of the toolkit. One subcommand per invocation, e.g.
python app.py phase --config configs/torus_n1.json
python app.py distance --config configs/constant_shift.json --out out/shift --epsilon 0.4 0.2 0.1
"""
LOGGER = logging.getLogger(__name__)
LOG_FORMAT = "%(asctime)s %(name)s:%(levelname)s:%(message)s"


class UsageError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    """Raises instead of exiting so every usage problem maps to exit status 2."""

    def error(self, message):
        raise UsageError(message)


def build_parser() -> Parser:
    parser = Parser(prog="app.py", description="Numerical toolkit for almost calibrated (1,1) forms on flat tori")
    parser.add_argument("subcommand", choices=sorted(SUBCOMMANDS), help="operation to run")
    parser.add_argument("--config", default=None, help="JSON configuration file, options.json by default")
    parser.add_argument("--out", default=None, help="output directory")
    parser.add_argument("--seed", type=int, default=None, help="seed of every random draw")
    parser.add_argument("--threads", type=int, default=None, help="worker count cap")
    parser.add_argument("--epsilon", type=float, nargs="+", default=None,
                        help="decreasing epsilon schedule, overrides the configured one")
    parser.add_argument("--verbose", action="store_true", help="log at DEBUG level")
    return parser


def main(argv: list[str] | None = None) -> int:
    """
    Parses the command line, loads the configuration and runs the subcommand
    :param argv: arguments without the program name, sys.argv by default
    :return: process exit status
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        parser.print_usage(sys.stderr)
        sys.stderr.write(f"{parser.prog}: error: {exc}\n")
        return EXIT_CONFIG
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO, format=LOG_FORMAT)
    try:
        config = load_config(args.config).with_overrides(output_dir=args.out, seed=args.seed,
                                                          threads=args.threads, epsilon_schedule=args.epsilon)
        if config.threads < 1 or config.seed < 0:
            raise ConfigError("--threads must be positive and --seed non-negative")
    except ConfigError as exc:
        LOGGER.error("Configuration error: %s", exc)
        return EXIT_CONFIG
    return run(args.subcommand, config)


if __name__ == '__main__':
    sys.exit(main())
