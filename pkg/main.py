import argparse
import logging
import sys

from backend.commands import cmd_classify, cmd_curve, cmd_eigen, cmd_logistic, cmd_verify
from backend.config import DEFAULT_LOG_LEVEL, load_config
from backend.errors import ConfigError, EigencurveError


logger = logging.getLogger('main')


def grid_shape(text: str) -> tuple[int, int]:
    try:
        n1, n2 = (int(part) for part in text.lower().split('x'))
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected N1xN2, got '{text}'")
    if n1 < 2 or n2 < 2:
        raise argparse.ArgumentTypeError("grid needs at least 2 points per axis")
    return n1, n2


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument('--config', required=True, help="TOML run configuration")
    common.add_argument('--out', help="output directory (default: EIGENCURVE_OUT_DIR or the config's out_dir)")
    common.add_argument('--seed', type=int, help="seed of the randomized checks")
    common.add_argument('--tol-eig', type=float, help="eigen residual tolerance")
    common.add_argument('--tol-curve', type=float, help="|F| tolerance on traced points")
    common.add_argument('--workers', type=int, help="worker processes for sweeps")
    common.add_argument('--log-level', default=DEFAULT_LOG_LEVEL)

    parser = argparse.ArgumentParser(
        prog='eigencurve', description="Principal eigenvalues and eigencurves of two-membrane interface problems")
    sub = parser.add_subparsers(dest='command', required=True)

    eigen = sub.add_parser('eigen', parents=[common], help="principal eigenvalue with a mesh refinement table")
    eigen.add_argument('--dump-matrix', action='store_true', help="write the assembled matrix")

    curve = sub.add_parser('curve', parents=[common], help="trace the curve F = 0 and plot it")
    curve.add_argument('--rays', type=int, help="number of ray angles")
    curve.add_argument('--grid', type=grid_shape, help="background grid of the plot, N1xN2")

    classify = sub.add_parser('classify', parents=[common], help="case tag and predicted vs measured landmarks")
    classify.add_argument('--rays', type=int)

    logistic = sub.add_parser('logistic', parents=[common], help="existence map of positive logistic solutions")
    logistic.add_argument('--grid', type=grid_shape, help="(lambda1, lambda2) grid, N1xN2")

    verify = sub.add_parser('verify', parents=[common], help="run the property suite")
    verify.add_argument('--coarse', action='store_true', help="run on a mesh four times coarser")
    return parser


def run(args: argparse.Namespace) -> int:
    overrides = {'seed': args.seed, 'eigen.tol_eig': args.tol_eig, 'curve.tol_curve': args.tol_curve,
                 'workers': args.workers, 'out_dir': args.out, 'curve.n_rays': getattr(args, 'rays', None)}
    config = load_config(args.config, overrides)
    out = config.out_dir

    if args.command == 'eigen':
        cmd_eigen(config, out, args.dump_matrix)
    elif args.command == 'curve':
        cmd_curve(config, out, grid=args.grid)
    elif args.command == 'classify':
        cmd_classify(config, out)
    elif args.command == 'logistic':
        cmd_logistic(config, out, grid=args.grid)
    elif args.command == 'verify':
        cmd_verify(config, out, args.coarse)
    return 0


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=args.log_level.upper(), format='%(asctime)s %(name)s %(levelname)s %(message)s')
    try:
        return run(args)
    except ConfigError as e:
        logger.error(f"Configuration error:\n{e.detail}")
        return e.status_code
    except EigencurveError as e:
        logger.error(f"{type(e).__name__}: {e.detail}")
        return e.status_code


if __name__ == '__main__':
    sys.exit(main())
