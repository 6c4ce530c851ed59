"""
JSON reports
Run reports and per-command sidecars, written with sorted keys so equal
content gives equal bytes.
"""
import json
import logging
import os
import numpy as np

from config import Config
from services.errors import CorruptFile, IoError

logger = logging.getLogger(__name__)


def _plain(value):
    if isinstance(value, np.generic):
        return value.item()
    if isinstance(value, np.ndarray):
        return value.tolist()
    raise TypeError(f'{type(value).__name__} is not JSON serializable')


def dumps(payload):
    return json.dumps(payload, indent=2, sort_keys=True, default=_plain)


def write_report(report, path):
    """Write a report, stamping the schema tag when absent"""
    report = dict(report)
    report.setdefault('schema', Config.REPORT_SCHEMA)
    try:
        directory = os.path.dirname(path)
        if directory:
            os.makedirs(directory, exist_ok=True)
        with open(path, 'w') as f:
            f.write(dumps(report) + '\n')
    except OSError as e:
        raise IoError(f'cannot write {path}: {e}') from e
    logger.debug('Wrote report %s', path)
    return path


def read_report(path):
    try:
        with open(path) as f:
            return json.load(f)
    except OSError as e:
        raise IoError(f'cannot read {path}: {e}') from e
    except json.JSONDecodeError as e:
        raise CorruptFile(f'{path} is not valid JSON: {e}') from e


def sidecar_path(artifact_path):
    return os.path.splitext(artifact_path)[0] + '.json'


def write_sidecar(artifact_path, payload):
    """JSON metadata next to an artifact, same stem"""
    return write_report(payload, sidecar_path(artifact_path))
