"""
Pipeline Commands Module
Renders the bundled fixtures and runs the full pipeline from a config file
"""
import json
import logging

from commands import command
from config import Config
from services.errors import ConfigInvalid
from services.fixtures import make_fixtures
from services.pipeline import PipelineConfig, run_pipeline

logger = logging.getLogger(__name__)


@command
def fixtures(args):
    """Write the test scenes and their metadata"""
    paths = make_fixtures(args.outdir, seed=args.seed)
    return {'success': True, 'files': paths}, 0


def _overrides(args):
    overrides = {
        'seed': args.seed,
        'output.dir': args.outdir,
        'sampling.stride': args.stride,
        'measurement.noise_sigma': args.noise_sigma,
    }
    for item in args.set or []:
        key, sep, text = item.partition('=')
        if not sep:
            raise ConfigInvalid([f'--set {item!r}: expected KEY=VALUE'])
        try:
            overrides[key] = json.loads(text)
        except json.JSONDecodeError:
            overrides[key] = text
    return overrides


@command
def run(args):
    """
    Validate the config, run every stage and write the artifacts

    Returns:
        tuple: run report and exit code
    """
    cfg = PipelineConfig.from_json(args.config, _overrides(args))
    report = run_pipeline(cfg)
    return {'success': True, 'report': report}, 0


def register(subparsers):
    p = subparsers.add_parser('fixtures', help='render the USAF, silhouette and speckle fixtures')
    p.add_argument('--outdir', default='fixtures')
    p.add_argument('--seed', type=int, default=Config.SEED)
    p.set_defaults(handler=fixtures)

    p = subparsers.add_parser('run', help='run the full pipeline from a JSON config')
    p.add_argument('--config', required=True)
    p.add_argument('--seed', type=int, help='overrides the config seed')
    p.add_argument('--outdir', help='overrides output.dir')
    p.add_argument('--stride', type=int, help='overrides sampling.stride')
    p.add_argument('--noise-sigma', type=float, help='overrides measurement.noise_sigma')
    p.add_argument('--set', action='append', metavar='KEY=VALUE',
                   help='override any dotted config key, value parsed as JSON')
    p.set_defaults(handler=run)
