"""
Commands package initialization
Each module registers its subcommands on the CLI parser; handlers return
a (payload, exit_code) pair
"""
import argparse
from functools import wraps
import logging

from services.errors import SpiError

logger = logging.getLogger(__name__)


def error_payload(e):
    return {'error': e.title, 'message': str(e)}


def command(handler):
    """Turn raised errors into the JSON error payload and its exit code"""

    @wraps(handler)
    def wrapper(args):
        try:
            return handler(args)
        except SpiError as e:
            logger.error('✗ %s: %s', e.title, e)
            return error_payload(e), e.exit_code
        except Exception as e:
            logger.exception('✗ Unexpected error in %s', handler.__name__)
            return {'error': 'Unexpected error', 'message': str(e)}, 4

    return wrapper


def parse_size(text):
    """'WxH' -> (width, height)"""
    try:
        width, height = (int(v) for v in text.lower().split('x'))
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected WIDTHxHEIGHT, got {text!r}') from e
    return width, height


def parse_floats(text):
    """'780,565,450' -> [780.0, 565.0, 450.0]"""
    try:
        return [float(v) for v in text.split(',')]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f'expected comma-separated numbers, got {text!r}') from e


def register_commands(subparsers):
    from . import analysis_commands, imaging_commands, matrix_commands, pipeline_commands

    for module in (matrix_commands, imaging_commands, analysis_commands, pipeline_commands):
        module.register(subparsers)


__all__ = ['command', 'error_payload', 'parse_floats', 'parse_size', 'register_commands']
