"""
Command-line interface.

    mollify run --config <path> [--task parity --bits 8 --layers 6 --hidden 200
                 --k 1.0 --delta 0.3 --c 1.0 --seed 1 --epochs 200
                 --baseline mollified|plain|residual-plain --out dir/]
    mollify plot --csv <path> --cols train_loss,valid_loss --out curves.svg
    mollify oracle --objective double-well --theta 0.5 --sigma 1.0 --samples 100000
                   --seed 7

Exit status: 0 on success, 1 if training diverged or an objective was not finite,
2 on configuration or usage errors, 3 if output cannot be written.
"""

import argparse
import csv
import logging
import sys
from typing import Any, Dict, Optional, Sequence

from mollify import __version__
from mollify.harness.config import BASELINES, TASKS, load_config, parse_value
from mollify.harness.metrics import format_value
from mollify.harness.plot import emit_plot
from mollify.harness.training import run_experiment
from mollify.numerics.rng import RngStream
from mollify.oracle.objectives import get_objective, objective_names
from mollify.oracle.smoothing import SmoothingSpec, mc_mollified_grad, mc_mollify
from mollify.exceptions.base import MollifyValidationError, MollifyValueError
from mollify.exceptions.harness import OutputDirectoryError
from mollify.exceptions.networks import CheckpointError
from mollify.exceptions.oracle import NonFiniteSampleError

__all__ = ["main", "build_parser"]

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_DIVERGED = 1
EXIT_USAGE = 2
EXIT_OUTPUT = 3

LOG_FORMAT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

# Flags of `mollify run` that map one to one onto RunConfig fields.
_RUN_FLAGS = (
    ("--task", str, "task to train on", {"choices": TASKS}),
    ("--bits", int, "parity input bits", {}),
    ("--examples", int, "generated examples before the 90/10 split", {}),
    ("--layers", int, "number of hidden layers", {}),
    ("--hidden", int, "hidden units per layer", {}),
    ("--activation", str, "activation kind", {}),
    ("--optimizer", str, "sgd-momentum or rmsprop", {}),
    ("--learning-rate", float, "optimizer learning rate", {}),
    ("--momentum", float, "momentum coefficient", {}),
    ("--k", float, "annealing sharpness k", {}),
    ("--beta", float, "loss moving-average decay", {}),
    ("--delta", float, "expected-skip stop threshold", {}),
    ("--average", str, "exponential or window", {}),
    ("--window", int, "window of the windowed loss average", {}),
    ("--anneal-loss", str, "train or valid loss drives annealing", {}),
    ("--c", float, "noise constant c", {}),
    ("--epochs", int, "training epochs", {}),
    ("--batch-size", int, "mini-batch size", {}),
    ("--baseline", str, "training mode", {"choices": BASELINES}),
    ("--out", str, "output directory", {}),
    ("--workers", int, "seeds trained in parallel", {}),
    ("--cell", str, "gru or lstm for seq-copy", {}),
    ("--bptt", int, "truncated backpropagation length", {}),
)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="mollify", description="Mollified training of neural networks."
    )
    parser.add_argument("--version", action="version", version=__version__)
    parser.add_argument(
        "--log-level",
        default="INFO",
        choices=("DEBUG", "INFO", "WARNING", "ERROR"),
        help="logging level (default: INFO)",
    )
    commands = parser.add_subparsers(dest="command", required=True)

    run = commands.add_parser("run", help="train models and write metrics")
    run.add_argument("--config", default=None, help="key = value configuration file")
    for flag, kind, text, extra in _RUN_FLAGS:
        run.add_argument(flag, type=kind, default=None, help=text, **extra)
    run.add_argument("--seed", type=int, default=None, help="train a single seed")
    run.add_argument("--seeds", default=None, help="comma-separated seeds")
    for flag, text in (
        ("--nesterov", "use Nesterov momentum"),
        ("--residual", "add residual connections"),
        ("--plot", "write curves.svg per seed"),
        ("--record-wall-time", "record wall-clock milliseconds"),
    ):
        run.add_argument(
            flag, action="store_const", const=True, default=None, help=text
        )
    run.add_argument(
        "--no-nesterov",
        dest="nesterov",
        action="store_const",
        const=False,
        default=None,
        help="use classical momentum",
    )

    plot = commands.add_parser("plot", help="plot metrics columns as SVG")
    plot.add_argument("--csv", required=True, help="metrics CSV file")
    plot.add_argument("--cols", default="train_loss,valid_loss", help="columns")
    plot.add_argument("--out", required=True, help="SVG file to write")

    oracle = commands.add_parser(
        "oracle", help="Monte-Carlo estimate of a mollified objective"
    )
    oracle.add_argument(
        "--objective", required=True, help=f"one of {', '.join(objective_names())}"
    )
    oracle.add_argument(
        "--theta", required=True, help="comma-separated parameter vector"
    )
    oracle.add_argument("--sigma", type=float, required=True, help="kernel scale")
    oracle.add_argument("--samples", type=int, default=100000, help="sample count")
    oracle.add_argument("--seed", type=int, default=0, help="random seed")
    return parser


def _run_overrides(args: argparse.Namespace) -> Dict[str, Any]:
    overrides: Dict[str, Any] = {}
    for flag, _, _, _ in _RUN_FLAGS:
        dest = flag[2:].replace("-", "_")
        overrides[dest] = getattr(args, dest)
    for name in ("nesterov", "residual", "plot", "record_wall_time"):
        overrides[name] = getattr(args, name)
    if args.seeds is not None:
        overrides["seeds"] = parse_value("seeds", args.seeds)
    if args.seed is not None:
        overrides["seeds"] = (args.seed,)
    return overrides


def _run(args: argparse.Namespace) -> int:
    cfg = load_config(args.config, _run_overrides(args))
    return run_experiment(cfg)


def _plot(args: argparse.Namespace) -> int:
    columns = [column.strip() for column in args.cols.split(",") if column.strip()]
    emit_plot(args.csv, columns, args.out)
    return EXIT_OK


def _oracle(args: argparse.Namespace) -> int:
    try:
        theta = [float(item) for item in args.theta.split(",")]
    except ValueError:
        raise MollifyValidationError(
            f"cannot run oracle; --theta must be comma-separated numbers, got "
            f"{args.theta!r}. "
        ) from None
    obj = get_objective(args.objective, len(theta))
    # Both estimates see the same shifts.
    value = mc_mollify(
        obj, theta, SmoothingSpec(args.sigma, args.samples, RngStream(args.seed))
    )
    grad = mc_mollified_grad(
        obj, theta, SmoothingSpec(args.sigma, args.samples, RngStream(args.seed))
    )
    dims = range(1, len(theta) + 1)
    writer = csv.writer(sys.stdout, lineterminator="\n")
    writer.writerow(
        ["value", "std_error"]
        + [f"grad_{i}" for i in dims]
        + [f"grad_std_error_{i}" for i in dims]
    )
    writer.writerow(
        [format_value(value.value), format_value(value.std_error)]
        + [format_value(g) for g in grad.value]
        + [format_value(se) for se in grad.std_error]
    )
    return EXIT_OK


_commands = {"run": _run, "plot": _plot, "oracle": _oracle}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run the `mollify` command line with `argv` (defaults to `sys.argv[1:]`) and
    return its exit status.
    """
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=args.log_level, format=LOG_FORMAT)
    try:
        return _commands[args.command](args)
    except (OutputDirectoryError, CheckpointError) as exc:
        logger.error("%s", exc)
        return EXIT_OUTPUT
    except NonFiniteSampleError as exc:
        logger.error("%s", exc)
        return EXIT_DIVERGED
    except (MollifyValidationError, MollifyValueError) as exc:
        logger.error("%s", exc)
        return EXIT_USAGE
