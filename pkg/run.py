"""
Coefficient recovery for parabolic problems from boundary integral data - Entry Point

Usage:
    python run.py check   --config PROBLEM.json --out DIR   Audit a problem file, no solves
    python run.py forward --config PROBLEM.json --out DIR   Solve the forward problem
    python run.py synth   --config PROBLEM.json --out DIR   Generate measurements from the truth
    python run.py invert  --config PROBLEM.json --out DIR   Recover q_1..q_s
    python run.py study   --config PROBLEM.json --out DIR   Convergence or noise study

Exit codes: 0 success, 1 validation or usage, 2 non-convergence, 3 I/O.
"""

import argparse
import logging
import sys

from experiments.commands import COMMANDS, EXIT_VALIDATION, execute

logger = logging.getLogger(__name__)


class _ArgumentParser(argparse.ArgumentParser):
    """Usage errors exit with the validation code instead of argparse's 2."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_VALIDATION, f"{self.prog}: error: {message}\n")


def _grid(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(part) for part in text.split(","))
    except ValueError as exc:
        raise argparse.ArgumentTypeError(f"expected NX or NX,NY, got {text!r}") from exc


def _theta(text: str) -> float:
    value = float(text)
    if value not in (1.0, 0.5):
        raise argparse.ArgumentTypeError("theta must be 1 or 0.5")
    return value


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="run.py", description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", dest="problem_path", required=True, help="problem JSON file")
    parser.add_argument("--out", dest="out_dir", default="out", help="output directory")
    parser.add_argument("--grid", type=_grid, help="node counts NX[,NY]")
    parser.add_argument("--nt", dest="steps", type=int, help="number of time steps")
    parser.add_argument("--theta", type=_theta)
    parser.add_argument("--tol", type=float)
    parser.add_argument("--max-iter", type=int)
    parser.add_argument("--window-policy", help="single | fixed:K | adaptive")
    parser.add_argument("--max-halvings", type=int)
    parser.add_argument("--noise", type=float, help="relative Gaussian noise level")
    parser.add_argument("--seed", type=int)
    parser.add_argument("--oversample", type=int)
    parser.add_argument(
        "--inverse-crime",
        action="store_true",
        default=None,
        help="generate data on the inversion grid",
    )
    parser.add_argument("--emit-solution", action="store_true", help="also write u_final.csv")
    parser.add_argument("--levels", type=int, help="refinement levels for study")
    parser.add_argument("--study", choices=("forward", "reconstruction", "both", "noise"))
    parser.add_argument("--smoothing", type=int, help="odd moving-average width for dpsi/dt")
    parser.add_argument("--norm-p", type=int, help="even exponent of the window norm")
    parser.add_argument(
        "--log-level", default="INFO", choices=("DEBUG", "INFO", "WARNING", "ERROR")
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format="%(levelname)s %(name)s: %(message)s")
    options = vars(args)
    options.pop("log_level")
    return execute(options)


if __name__ == "__main__":
    sys.exit(main())
