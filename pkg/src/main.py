import logging
import logging.handlers
import sys
from typing import Optional, Sequence

from src.shared.settings import GlobalSettings
from src.solver.cli import parse_args, run_command


def initialize_logging(verbose: bool = False):

    GlobalSettings.ensure_output_dirs()
    formatter = logging.Formatter(GlobalSettings.LoggingParams.FORMAT)

    file_handler = logging.handlers.RotatingFileHandler(
        GlobalSettings.GLOBAL_LOGS_DIR/GlobalSettings.LoggingParams.GLOBAL_FILE_NAME,
        backupCount=GlobalSettings.LoggingParams.BACKUP_COUNT)
    file_handler.setFormatter(formatter)
    file_handler.setLevel(logging.DEBUG)

    console_handler = logging.StreamHandler(sys.stderr)
    console_handler.setFormatter(formatter)
    console_handler.setLevel(logging.DEBUG if verbose else logging.WARNING)

    root = logging.getLogger()
    root.setLevel(logging.DEBUG)
    root.addHandler(file_handler)
    root.addHandler(console_handler)
    file_handler.doRollover()
    logging.info("Global Logging Started")


def main(argv: Optional[Sequence[str]] = None) -> int:
    """parse the command line, start logging and run the selected command"""

    args = parse_args(argv)
    initialize_logging(verbose=args.verbose)
    return run_command(args)
