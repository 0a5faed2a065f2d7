# main.py
"""
polariscope - Polarization Multipole Tomography
================================================

Batch driver: generate states, design measurement directions, simulate the
wave-plate measurement, reconstruct correlation matrices and verify them.

Exit codes: 0 success, 1 I/O or invalid input, 2 reconstruction failure
(conditioning, insufficient data), 3 verification failure.
"""

import argparse
import sys

from src.utils.exceptions import (ConvergenceError, InvalidInputError, PolariscopeError,
                                  ReconstructionError, VerificationError)
from src.utils.logger import setup_logger

# Setup logging
logger = setup_logger('main')
setup_logger('src')

EXIT_OK = 0
EXIT_INPUT = 1
EXIT_NUMERICAL = 2
EXIT_VERIFY = 3


class _Parser(argparse.ArgumentParser):
    """Usage errors exit with the input-error code instead of argparse's 2"""

    def error(self, message):
        raise InvalidInputError(f"{self.prog}: {message}")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog='polariscope', description='Polarization multipole tomography toolkit')
    sub = parser.add_subparsers(dest='command', parser_class=_Parser)

    gen = sub.add_parser('gen-state', help='Write a state file from a named recipe')
    gen.add_argument('--family', required=True, choices=['pure-layer', 'random', 'noon', 'fock', 'manual'])
    gen.add_argument('--spin', help="Layer spin S, e.g. 1, 0.5 or 3/2")
    gen.add_argument('--amps', help="Comma-separated amplitudes for m = S ... -S")
    gen.add_argument('--rank', type=int, help='Rank of a random layer state (default: full)')
    gen.add_argument('--n', type=int, help='Photon number of a NOON state')
    gen.add_argument('--nh', type=int, help='H occupation of a Fock state')
    gen.add_argument('--nv', type=int, help='V occupation of a Fock state')
    gen.add_argument('--component', action='append', help="Layer component 'S:a0,a1,...' (manual)")
    gen.add_argument('--seed', type=int, default=0)
    gen.add_argument('--out', required=True)

    directions = sub.add_parser('directions', help='Design measurement directions for order L')
    directions.add_argument('--L', type=int, required=True)
    directions.add_argument('--seed', type=int, default=0)
    directions.add_argument('--out', required=True)

    simulate = sub.add_parser('simulate', help='Simulate intensity-moment measurements')
    simulate.add_argument('--state', required=True)
    simulate.add_argument('--directions', nargs='+', required=True, help='Direction files, one per L')
    simulate.add_argument('--K', nargs='+', required=True)
    simulate.add_argument('--shots', default='noiseless', help="Shots per direction or 'noiseless'")
    simulate.add_argument('--seed', type=int, default=0)
    simulate.add_argument('--out', required=True)

    reconstruct = sub.add_parser('reconstruct', help='Reconstruct correlation matrices')
    reconstruct.add_argument('--measurements', required=True)
    reconstruct.add_argument('--mode', choices=['exact', 'lsq'], default='exact')
    reconstruct.add_argument('--lambda', dest='lam', type=float, default=None)
    reconstruct.add_argument('--psd-project', action='store_true')
    reconstruct.add_argument('--K', nargs='+')
    reconstruct.add_argument('--truth', help='Optional state file; prints max |dG| against it')
    reconstruct.add_argument('--out', required=True)

    verify = sub.add_parser('verify', help='Compare a reconstruction with a state file')
    verify.add_argument('--state', required=True)
    verify.add_argument('--reconstruction', required=True)
    verify.add_argument('--K', nargs='+')
    verify.add_argument('--threshold', type=float, default=None)
    verify.add_argument('--out', required=True, help='CSV report path')
    return parser


def run(args) -> None:
    from src.tomo_cli import commands

    if args.command == 'gen-state':
        commands.cmd_gen_state(args.family, args.out, spin=args.spin, amps=args.amps, rank=args.rank,
                               seed=args.seed, n=args.n, n_h=args.nh, n_v=args.nv,
                               components=args.component)
    elif args.command == 'directions':
        commands.cmd_directions(args.L, args.out, seed=args.seed)
    elif args.command == 'simulate':
        commands.cmd_simulate(args.state, args.directions, args.K, args.out, shots=args.shots, seed=args.seed)
    elif args.command == 'reconstruct':
        commands.cmd_reconstruct(args.measurements, args.out, mode=args.mode, lam=args.lam,
                                 psd_project=args.psd_project, K_values=args.K, truth_file=args.truth)
    elif args.command == 'verify':
        commands.cmd_verify(args.state, args.reconstruction, args.out, threshold=args.threshold,
                            K_values=args.K)
    else:
        raise InvalidInputError("Choose a subcommand: gen-state, directions, simulate, reconstruct, verify")


def main(argv=None) -> int:
    """Main application entry point"""
    try:
        args = build_parser().parse_args(argv)
        run(args)
        return EXIT_OK
    except VerificationError as e:
        logger.error(f"Verification failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_VERIFY
    except (ReconstructionError, ConvergenceError) as e:
        logger.error(f"Reconstruction failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (InvalidInputError, OSError) as e:
        logger.error(f"Invalid input: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except PolariscopeError as e:
        logger.error(f"Command failed: {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT


if __name__ == "__main__":
    exit(main())
