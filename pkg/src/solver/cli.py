"""
Command-line interface

    solve    Jacobi solution of the Poisson demo problem
    inspect  Validate a saved field file and print its header
    algebra  Evaluate B = mexp(inv(A)) * hermitian(A + 5) for a random SU(n) A

Exit codes: 0 success, 1 usage or configuration error, 2 transport error,
3 field file error.
"""

import argparse
import logging
import sys
from pathlib import Path
from typing import Any, Dict, List, Optional, Sequence

from src.field.io import inspect_file
from src.lattice.rng import RngStream
from src.linalg import Matrix, det, hermitian, identity, inv, mexp, random_su
from src.shared.config_loader import load_solver_config
from src.shared.errors import (
    ConfigurationError,
    DimensionError,
    DomainError,
    FieldFileError,
    FieldFormatError,
    SingularMatrixError,
    TransportError,
)
from src.shared.settings import GlobalSettings
from src.solver.poisson import Checkpoint, PoissonConfig, default_amplitude, default_output_path
from src.solver.runner import run_poisson
from src.transport.endpoint import Backend

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_TRANSPORT = 2
EXIT_FORMAT = 3


class CliParser(argparse.ArgumentParser):
    """ArgumentParser whose usage errors exit with status 1."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _dims(text: str) -> List[int]:
    try:
        dims = [int(part) for part in text.split(",")]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}")
    return dims


def build_parser() -> CliParser:
    parser = CliParser(
        prog="lattice-field",
        description="Distributed lattice fields: Poisson demo and field file tools",
    )
    parser.add_argument(
        "--verbose",
        action="store_true",
        help="Log debug output to the console",
    )
    commands = parser.add_subparsers(dest="command", parser_class=CliParser)
    commands.required = True

    solve = commands.add_parser("solve", help="Run the Jacobi Poisson solver")
    solve.add_argument("--config", type=Path, help="YAML file with solver settings")
    solve.add_argument("--dims", type=_dims, help="Lattice extents (default: 10,10,10)")
    solve.add_argument("--iters", type=int, help="Number of sweeps (default: 1000)")
    solve.add_argument("--ranks", type=int, help="Number of ranks (default: 1)")
    solve.add_argument(
        "--backend",
        choices=[b.value for b in Backend],
        help="Transport backend (default: inproc)",
    )
    solve.add_argument("--coordinator", help="Rank 0 host:port (tcp backend)")
    solve.add_argument("--rank", type=int, help="This process's rank (tcp backend)")
    solve.add_argument("--listen", type=int, help="Port this worker listens on (tcp backend)")
    solve.add_argument(
        "--listen-host",
        dest="listen_host",
        help="Address this worker listens on and advertises to other ranks (tcp backend, default: 127.0.0.1)",
    )
    solve.add_argument("--seed", type=int, help="Lattice seed (default: 0)")
    solve.add_argument("--tol", type=float, help="Stop once the residual is below this")
    solve.add_argument("--out", type=Path, help="Output field file")
    solve.add_argument(
        "--checkpoint-every",
        dest="checkpoint_every",
        type=int,
        help="Sweeps between residual reports (default: 100)",
    )
    solve.add_argument(
        "--verbose",
        action="store_true",
        default=argparse.SUPPRESS,
        help="Log debug output to the console",
    )

    inspect = commands.add_parser("inspect", help="Validate a field file and print its header")
    inspect.add_argument("path", type=Path)

    algebra = commands.add_parser("algebra", help="Matrix algebra demo on a random SU(n) matrix")
    algebra.add_argument("--seed", type=int, default=0, help="Random seed (default: 0)")
    algebra.add_argument("--n", type=int, default=3, help="Matrix size (default: 3)")
    return parser


# solve ----------------------------------------------------------------------

def _merge(args: argparse.Namespace, file_values: Dict[str, Any]) -> Dict[str, Any]:
    """Command-line flags win over the config file."""
    merged = dict(file_values)
    keys = (
        "dims", "ranks", "backend", "coordinator", "rank", "listen",
        "listen_host", "seed", "tol", "out", "checkpoint_every",
    )
    for key in keys:
        value = getattr(args, key)
        if value is not None:
            merged[key] = value
    if args.iters is not None:
        merged["iterations"] = args.iters
    return merged


def _backend(value: str) -> Backend:
    try:
        return Backend(value)
    except ValueError:
        raise ConfigurationError(f"Unknown backend {value!r}")


def config_from_args(args: argparse.Namespace) -> PoissonConfig:
    """
    Raises:
        ConfigurationError: Bad config file or settings
    """
    file_values = load_solver_config(args.config) if args.config else {}
    values = _merge(args, file_values)
    defaults = GlobalSettings.SolverDefaults

    amplitude = default_amplitude()
    if "amplitude" in values:
        amplitude = Matrix.from_rows(values["amplitude"])

    config = PoissonConfig(
        dims=tuple(values.get("dims", defaults.DIMS)),
        iterations=values.get("iterations", defaults.ITERATIONS),
        nranks=values.get("ranks", defaults.NRANKS),
        backend=_backend(values.get("backend", defaults.BACKEND)),
        seed=values.get("seed", defaults.SEED),
        output_path=Path(values.get("out", default_output_path())),
        amplitude=amplitude,
        tolerance=values.get("tol"),
        checkpoint_every=values.get("checkpoint_every", defaults.CHECKPOINT_EVERY),
        rank=values.get("rank", 0),
        coordinator=values.get("coordinator"),
        listen_host=values.get("listen_host", GlobalSettings.TransportSettings.LISTEN_HOST),
        listen_port=values.get("listen", 0),
    )
    config.validate()
    return config


def print_checkpoint(point: Checkpoint):
    print(f"iter={point.iteration} residual={point.residual!r}", flush=True)


def cmd_solve(args: argparse.Namespace) -> int:
    config = config_from_args(args)
    report = run_poisson(config, on_checkpoint=print_checkpoint)
    if config.rank == 0:
        print(f"max_error={report.max_error!r}")
    return EXIT_OK


# inspect --------------------------------------------------------------------

def cmd_inspect(args: argparse.Namespace) -> int:
    header = inspect_file(args.path)
    magic = GlobalSettings.FieldFileSettings.MAGIC.decode("ascii")
    print(f"magic={magic} version={header.version}")
    print(header.summary())
    return EXIT_OK


# algebra --------------------------------------------------------------------

def cmd_algebra(args: argparse.Namespace) -> int:
    if args.n < 1:
        raise ConfigurationError(f"--n must be >= 1, got {args.n}")
    a = random_su(args.n, RngStream.for_site(args.seed, 0))
    b = mexp(inv(a)) * hermitian(a + 5)
    unitarity = (a * hermitian(a) - identity(args.n)).max_abs()
    print(f"A = {a!r}")
    print(f"det(A) = {det(a)!r}")
    print(f"max|A A^H - 1| = {unitarity!r}")
    print(f"B = {b!r}")
    return EXIT_OK


COMMANDS = {
    "solve": cmd_solve,
    "inspect": cmd_inspect,
    "algebra": cmd_algebra,
}


def parse_args(argv: Optional[Sequence[str]] = None) -> argparse.Namespace:
    return build_parser().parse_args(argv)


def run_command(args: argparse.Namespace) -> int:
    """Dispatch a parsed command and map failures to exit codes."""
    try:
        return COMMANDS[args.command](args)
    except (ConfigurationError, DimensionError, DomainError, SingularMatrixError) as e:
        logger.error(f"{args.command}: {e}")
        print(f"Error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (TransportError, ConnectionError, TimeoutError) as e:
        logger.error(f"{args.command}: transport failure: {e}")
        print(f"Transport error: {e}", file=sys.stderr)
        return EXIT_TRANSPORT
    except (FieldFormatError, FieldFileError) as e:
        logger.error(f"{args.command}: field file failure: {e}")
        print(f"Field file error: {e}", file=sys.stderr)
        return EXIT_FORMAT
