"""Command-line driver: ``optwannier run|compare|models``."""
import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError

from config import Config
from optwannier import configure_logging
from optwannier.errors import WannierError
from optwannier.schemas import EMIT_CHOICES, RunConfig

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILED = 1
EXIT_OBSTRUCTED = 2


def _offsets(text: str) -> List[List[float]]:
    try:
        pairs = [[float(v) for v in pair.split(',')] for pair in text.split(';') if pair.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f'not a list of x,y pairs: {text!r}')
    if not pairs or any(len(p) != 2 for p in pairs):
        raise argparse.ArgumentTypeError(f'not a list of x,y pairs: {text!r}')
    return pairs


def _add_run_options(ap: argparse.ArgumentParser) -> None:
    ap.add_argument('--model', default='square3', help='Built-in model name or path to a model JSON file.')
    ap.add_argument('--band', type=int, help='Band index in ascending order; defaults to the band stored with the model.')
    ap.add_argument('--grid', type=int, default=Config.DEFAULT_GRID, help='Even grid size N.')
    ap.add_argument('--method', choices=('ode', 'twist', 'alt'), default='ode')
    ap.add_argument('--no-optimize', action='store_true', help='Skip the divergence-free gauge.')
    ap.add_argument('--no-richardson', action='store_true', help='Plain RK4 without extrapolation.')
    ap.add_argument('--no-rayleigh', action='store_true', help='Integrate the eigenvalue instead of recomputing it.')
    ap.add_argument('--threads', type=int, default=Config.THREADS)
    ap.add_argument('--initial-phase', type=float, default=0.0, help='Phase (radians) of the start vector.')
    ap.add_argument('--gap-tol', type=float, help='Smallest allowed gap to neighbouring bands (default from config).')
    ap.add_argument('--orbital-offsets', type=_offsets,
                    help='Intra-cell orbital positions as "x,y;x,y;...", one pair per orbital.')


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog='optwannier', description='Optimal Wannier functions of an isolated 2D band.')
    ap.add_argument('--log-level', default=Config.LOG_LEVEL)
    sub = ap.add_subparsers(dest='command', required=True)

    run = sub.add_parser('run', help='Run the construction and write the requested outputs.')
    _add_run_options(run)
    run.add_argument('--out', default=Config.OUTPUT_DIR, help='Output directory.')
    run.add_argument('--emit', default='report',
                     help='Comma-separated subset of ' + ','.join(EMIT_CHOICES) + '.')
    run.add_argument('--orbital-sigma', type=float, default=Config.ORBITAL_SIGMA,
                     help='Orbital width in units of the shortest lattice vector.')
    run.add_argument('--window', type=int, default=Config.WANNIER_WINDOW)
    run.add_argument('--resolution', type=int, default=Config.WANNIER_RESOLUTION)

    compare = sub.add_parser('compare', help='Compare ODE and twist transport (E_para) and the alt path.')
    _add_run_options(compare)
    compare.add_argument('--refine', action='store_true', help='Also compare at 2N and report the ratio.')

    sub.add_parser('models', help='List the built-in models.')
    return ap


def _run_config(args: argparse.Namespace, **extra) -> RunConfig:
    return RunConfig(model=args.model, band=args.band, n=args.grid, method=args.method,
                     optimize=not args.no_optimize, richardson=not args.no_richardson,
                     rayleigh=not args.no_rayleigh, threads=args.threads,
                     initial_phase=args.initial_phase, gap_tol=args.gap_tol,
                     orbital_offsets=args.orbital_offsets, **extra)


def _cmd_run(args: argparse.Namespace) -> int:
    emit = [e.strip() for e in args.emit.split(',') if e.strip()]
    cfg = _run_config(args, output=args.out, emit=emit, orbital_sigma=args.orbital_sigma,
                      window=args.window, resolution=args.resolution)
    from optwannier.services.pipeline import run_pipeline
    report = run_pipeline(cfg)
    print(report.model_dump_json(indent=2))
    if report.obstructed:
        logger.warning('Topological obstruction encountered: Chern number %d', report.chern)
        return EXIT_OBSTRUCTED
    return EXIT_OK


def _cmd_compare(args: argparse.Namespace) -> int:
    from optwannier.services.pipeline import compare_methods
    report = compare_methods(_run_config(args), refine=args.refine)
    print(report.model_dump_json(indent=2))
    return EXIT_OK


def _cmd_models(args: argparse.Namespace) -> int:
    from optwannier.services.hamiltonian import BUILTIN_MODELS, builtin_model, check_time_reversal
    for name in sorted(BUILTIN_MODELS):
        m = builtin_model(name)
        print(f'{name}\tdim={m.dim}\tband={m.band}\ttrs={check_time_reversal(m)}')
    return EXIT_OK


COMMANDS = {'run': _cmd_run, 'compare': _cmd_compare, 'models': _cmd_models}


def main(argv: Optional[List[str]] = None) -> int:
    args = _parser().parse_args(argv)
    configure_logging(args.log_level.upper())
    try:
        return COMMANDS[args.command](args)
    except ValidationError as e:
        print(f'error: invalid arguments: {e}', file=sys.stderr)
        return EXIT_FAILED
    except WannierError as e:
        print(f'error: {e}', file=sys.stderr)
        return EXIT_FAILED


if __name__ == '__main__':
    sys.exit(main())
