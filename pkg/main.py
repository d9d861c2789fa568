import argparse
import sys

from commands import analyze, regularize, solve, verify
from commands.common import ExitCode, run
from idereg import __version__
from idereg.logging_setup import configure_logging

COMMANDS = {
    "analyze": analyze.analyze,
    "solve": solve.solve,
    "regularize": regularize.regularize_command,
    "verify": verify.verify,
}


def _float_list(text):
    try:
        return [float(x) for x in text.split(",") if x.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def build_parser():
    parser = argparse.ArgumentParser(
        prog="idereg",
        description="Solvability, solution families and regularizing controls for impulsive "
        "integro-differential boundary-value problems",
    )
    parser.add_argument("--version", action="version", version=f"idereg {__version__}")
    subparsers = parser.add_subparsers(dest="command", required=True)

    for name in COMMANDS:
        sub = subparsers.add_parser(name)
        sub.add_argument("file", help="problem document (JSON)")
        sub.add_argument("--tol-rank", type=float, help="relative singular value cutoff")
        sub.add_argument("--tol-solve", type=float, help="residual threshold of the verdicts")
        sub.add_argument("--quad-order", type=int, help="Gauss-Legendre points per panel")
        sub.add_argument("--jump-model", choices=["free", "none"])
        sub.add_argument("--samples", type=int, help="uniform sample points for solve")
        sub.add_argument("--params", type=_float_list, help="family parameters c1,c2,...")
        sub.add_argument("--objective", choices=["minnorm", "weighted"])
        sub.add_argument("--weight", help="JSON file with the SPD selection weight")
        sub.add_argument("--uref", help="JSON file with the reference control")
        sub.add_argument("--oracle-nodes", type=int, help="oracle nodes per subinterval")
        sub.add_argument("--output", choices=["json", "csv"])
        sub.add_argument("--grid", help="CSV file for the oracle's nodal values (verify)")
    return parser


def main(argv=None):
    configure_logging()
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return int(ExitCode.INVALID_INPUT if exc.code else ExitCode.OK)
    return int(run(COMMANDS[args.command], args))


if __name__ == "__main__":
    sys.exit(main())
