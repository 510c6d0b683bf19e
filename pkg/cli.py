"""Command-line tool for the CV teleportation simulator."""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import Optional

# Add parent directory to path for imports
sys.path.insert(0, str(Path(__file__).parent))

from cv_teleport import __version__, config
from cv_teleport.database import RunArchive
from cv_teleport.errors import EXIT_CONFIG, EXIT_FAILURE, EXIT_OK, ConfigValidationError, exit_code_for
from cv_teleport.experiments import COMMANDS, run_command
from cv_teleport.schema import RunConfig, load_run_config, with_overrides
from cv_teleport.tables import FORMATS, write_output
from cv_teleport.tools import archive_result, get_archive

logger = logging.getLogger(__name__)

COMMAND_HELP = {
    'teleport': 'Single run: fidelity, T_q, V_q, Duan value and limit flags',
    'sweep-gain': 'Fidelity, T_q and V_q versus feedforward gain (or another parameter)',
    'tv-map': 'Classical-limit, unity-gain and experiment curves on the T-V plane',
    'duan': 'EPR inseparability and inferred OPA squeezing',
    'spectrum': 'Synthesized analyzer traces of input and output with reference lines',
    'phase-space': 'Fidelity over a grid of coherent input amplitudes',
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        description='CV teleportation simulator - run experiments and emit tables'
    )
    parser.add_argument('--version', action='version', version=f'%(prog)s {__version__}')

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument(
        '--config',
        type=Path,
        help='UTF-8 JSON run document (defaults apply when omitted)'
    )
    common.add_argument(
        '--out',
        type=str,
        help='Write the output to this path instead of stdout'
    )
    common.add_argument(
        '--format',
        choices=FORMATS,
        help='Output format (default: the document\'s output.format, csv)'
    )
    common.add_argument(
        '--seed',
        type=int,
        help='Monte Carlo seed (unsigned 64-bit), overrides montecarlo.seed'
    )
    common.add_argument(
        '--samples',
        type=int,
        help='Monte Carlo sample count, overrides montecarlo.n'
    )
    common.add_argument(
        '--archive',
        type=Path,
        help='SQLite run archive (default: CV_TELEPORT_ARCHIVE_PATH)'
    )

    subparsers = parser.add_subparsers(dest='command', metavar='COMMAND')
    for name in COMMANDS:
        subparsers.add_parser(name, parents=[common], help=COMMAND_HELP[name])

    runs = subparsers.add_parser('runs', help='List or show archived runs')
    runs.add_argument('--archive', type=Path, help='SQLite run archive (default: CV_TELEPORT_ARCHIVE_PATH)')
    runs.add_argument('--filter', dest='command_filter', choices=sorted(COMMANDS), help='Only runs of this command')
    runs.add_argument('--limit', type=int, default=20, help='Maximum runs listed (default: 20)')
    runs.add_argument('--offset', type=int, default=0, help='Number of runs to skip')
    runs.add_argument('--show', type=int, metavar='RUN_ID', help='Print one archived run as JSON')

    return parser


def _open_archive(path: Optional[Path]) -> Optional[RunArchive]:
    return RunArchive(path) if path is not None else get_archive()


def run_experiment(args: argparse.Namespace) -> int:
    try:
        run = load_run_config(args.config) if args.config else RunConfig()
        run = with_overrides(run, args.seed, args.samples, args.format, args.out)
        result = run_command(args.command, run)

        out_path = Path(run.output.path) if run.output.path else None
        text = write_output(result, run.output.format, out_path)
        if out_path is None:
            sys.stdout.write(text)

        archive_result(result, _open_archive(args.archive))
        return EXIT_OK

    except ConfigValidationError as e:
        logger.error(f"Invalid configuration for {args.command}:")
        for path, message in e.errors:
            logger.error(f"  {path}: {message}")
        return exit_code_for(e)
    except Exception as e:
        logger.error(f"{args.command} failed: {e}")
        logger.debug("Traceback", exc_info=True)
        return exit_code_for(e)


def show_runs(args: argparse.Namespace) -> int:
    try:
        archive = _open_archive(args.archive)
        if archive is None:
            logger.error("No run archive: pass --archive or set CV_TELEPORT_ARCHIVE_PATH")
            return EXIT_CONFIG

        if args.show is not None:
            run = archive.get_run(args.show)
            if run is None:
                logger.error(f"Run {args.show} not found")
                return EXIT_FAILURE
            print(json.dumps(run, indent=2))
            return EXIT_OK

        listing = archive.list_runs(args.command_filter, None, args.limit, args.offset)
        print(f"\n=== Archived runs ({listing['total']} total) ===\n")
        for run in listing['results']:
            seed = f", seed {run['seed']}" if run['seed'] is not None else ""
            print(f"  [{run['id']}] {run['command']} {run['created_at']} "
                  f"config {run['config_hash'][:12]}{seed}")
        if listing['has_more']:
            print(f"  ... more with --offset {listing['next_offset']}")
        return EXIT_OK

    except Exception as e:
        logger.error(f"Failed to read run archive: {e}")
        return exit_code_for(e)


def main(argv: Optional[list[str]] = None) -> int:
    """Main CLI entry point."""
    logging.basicConfig(
        level=config.LOG_LEVEL,
        format='%(asctime)s - %(name)s - %(levelname)s - %(message)s'
    )
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command is None:
        parser.print_help()
        return EXIT_OK
    if args.command == 'runs':
        return show_runs(args)
    return run_experiment(args)


if __name__ == '__main__':
    sys.exit(main())
