"""
Transport Module

Point-to-point messaging between ranks (in-process and TCP backends), the
deadlock-free exchange plan, instrumentation and small collectives.
"""

import logging
from dataclasses import dataclass
from typing import Optional

from src.shared.errors import ConfigurationError
from src.shared.settings import GlobalSettings

from .endpoint import Backend, TransportEndpoint
from .inproc import InProcessEndpoint, InProcessHub, run_inprocess
from .tcp import TcpEndpoint, parse_address
from .plan import ExchangePlan, ExchangeStep, Role, execute_plan, make_plan
from .instrumented import InstrumentedEndpoint
from .collectives import allreduce_max, broadcast, gather

logger = logging.getLogger(__name__)


@dataclass
class TransportConfig:
    """
    How to reach the other ranks.

    Attributes:
        backend: "inproc" or "tcp"
        hub: Shared hub (in-process backend)
        coordinator: Rank 0 "host:port" (tcp backend)
        listen_host: Interface a tcp worker listens on
        listen_port: Port a tcp worker listens on (0 = any free port)
        handshake_timeout: Seconds allowed for tcp connection setup
    """
    backend: Backend = Backend.INPROC
    hub: Optional[InProcessHub] = None
    coordinator: Optional[str] = None
    listen_host: str = GlobalSettings.TransportSettings.LISTEN_HOST
    listen_port: int = 0
    handshake_timeout: float = GlobalSettings.TransportSettings.HANDSHAKE_TIMEOUT


def open_endpoint(nranks: int, rank: int, config: TransportConfig) -> TransportEndpoint:
    """
    Open this rank's endpoint with the configured backend.

    Raises:
        ConfigurationError: Missing hub/coordinator, bad rank, rank collision
        TransportConnectionError: TCP peers unreachable within the timeout
    """
    backend = Backend(config.backend)
    if backend is Backend.INPROC:
        hub = config.hub
        if hub is None:
            if nranks != 1:
                raise ConfigurationError("In-process backend needs a shared hub for nranks > 1")
            hub = InProcessHub(1)
        if hub.nranks != nranks:
            raise ConfigurationError(f"Hub has {hub.nranks} ranks, expected {nranks}")
        endpoint = hub.endpoint(rank)
    else:
        if not config.coordinator:
            raise ConfigurationError("TCP backend needs a coordinator address")
        endpoint = TcpEndpoint.connect(
            rank,
            nranks,
            config.coordinator,
            listen_host=config.listen_host,
            listen_port=config.listen_port,
            handshake_timeout=config.handshake_timeout,
        )
    logger.info(f"Opened {backend.value} endpoint for rank {rank}/{nranks}")
    return endpoint


def close_endpoint(endpoint: TransportEndpoint):
    endpoint.close()


__all__ = [
    "Backend",
    "ExchangePlan",
    "ExchangeStep",
    "InProcessEndpoint",
    "InProcessHub",
    "InstrumentedEndpoint",
    "Role",
    "TcpEndpoint",
    "TransportConfig",
    "TransportEndpoint",
    "allreduce_max",
    "broadcast",
    "close_endpoint",
    "execute_plan",
    "gather",
    "make_plan",
    "open_endpoint",
    "parse_address",
    "run_inprocess",
]
