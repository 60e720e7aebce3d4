"""
Run the Poisson demo on the configured backend.

With the in-process backend every rank runs on its own thread inside this
program. With the tcp backend this process is a single rank and the others
are started separately with the same settings and their own --rank.
"""

import logging
from typing import Optional

from src.solver.poisson import CheckpointCallback, ConvergenceReport, PoissonConfig, solve_on_endpoint
from src.transport import TransportConfig, open_endpoint
from src.transport.endpoint import Backend
from src.transport.inproc import run_inprocess

logger = logging.getLogger(__name__)


def run_poisson(
    config: PoissonConfig,
    on_checkpoint: Optional[CheckpointCallback] = None,
    timeout: Optional[float] = None,
) -> ConvergenceReport:
    """
    Solve and return this process's report (rank 0's for in-process runs).

    Args:
        config: Problem and transport settings
        on_checkpoint: Called on rank 0 for each reported residual
        timeout: In-process only; seconds before the run is abandoned

    Raises:
        ConfigurationError: Invalid settings
        TransportError: Lost or unreachable peers
        FieldFileError: The output file could not be written
    """
    config.validate()
    backend = Backend(config.backend)
    logger.info(
        f"Solving dims={tuple(config.dims)} iterations={config.iterations} "
        f"nranks={config.nranks} backend={backend.value}"
    )

    if backend is Backend.INPROC:
        reports = run_inprocess(
            config.nranks,
            lambda endpoint: solve_on_endpoint(config, endpoint, on_checkpoint),
            timeout=timeout,
        )
        return reports[0]

    transport = TransportConfig(
        backend=backend,
        coordinator=config.coordinator or "127.0.0.1:0",
        listen_host=config.listen_host,
        listen_port=config.listen_port,
    )
    with open_endpoint(config.nranks, config.rank, transport) as endpoint:
        return solve_on_endpoint(config, endpoint, on_checkpoint)
