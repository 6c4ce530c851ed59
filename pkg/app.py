"""
Main CLI Application Module
Builds the spi-kit command-line parser and dispatches subcommands
"""
import argparse
import logging
import sys

from commands import register_commands
from config import Config
from storage.reports import dumps


def configure_logging(level=Config.LOG_LEVEL):
    """Log to stderr so stdout carries only the JSON payload"""
    logging.basicConfig(
        level=getattr(logging, level, logging.INFO),
        format='%(levelname)s %(name)s: %(message)s',
        stream=sys.stderr,
        force=True,
    )


def create_app():
    """
    Application factory: the argument parser with every subcommand registered

    Returns:
        argparse.ArgumentParser: configured parser
    """
    parser = argparse.ArgumentParser(
        prog='spi-kit',
        description='Single-pixel imaging simulation and reconstruction',
    )
    parser.add_argument('--log-level', default=Config.LOG_LEVEL,
                        choices=['DEBUG', 'INFO', 'WARNING', 'ERROR'])
    subparsers = parser.add_subparsers(dest='command', required=True)
    register_commands(subparsers)
    return parser


def main(argv=None):
    """
    Parse arguments, run one subcommand and print its JSON payload

    Returns:
        int: 0 success, 2 parameter error, 3 I/O error, 4 numerical failure
    """
    parser = create_app()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else 2
    configure_logging(args.log_level)
    payload, status = args.handler(args)
    print(dumps(payload))
    return status


if __name__ == '__main__':
    sys.exit(main())
