"""
Exchange Plan

The communication policy of a halo update: a rank talks only to the peers it
overlaps with, visits them in ascending rank order and, within each pair, the
lower rank sends first while the higher rank receives first. Both sides of a
pair therefore always issue complementary blocking calls, so executing every
rank's plan concurrently cannot deadlock, and each rank has at most one send
and one receive in flight.
"""

import logging
from dataclasses import dataclass
from enum import Enum
from typing import Callable, Iterable, Tuple

from src.shared.errors import ConfigurationError
from src.transport.endpoint import TransportEndpoint

logger = logging.getLogger(__name__)


class Role(str, Enum):
    SEND_FIRST = "send-first"
    RECEIVE_FIRST = "receive-first"


@dataclass(frozen=True)
class ExchangeStep:
    peer: int
    role: Role


@dataclass(frozen=True)
class ExchangePlan:
    rank: int
    steps: Tuple[ExchangeStep, ...]

    @property
    def peers(self) -> Tuple[int, ...]:
        return tuple(step.peer for step in self.steps)

    def __len__(self):
        return len(self.steps)

    def __iter__(self):
        return iter(self.steps)


def make_plan(rank: int, peers: Iterable[int]) -> ExchangePlan:
    """
    Build the deadlock-free schedule of ``rank`` with its overlapping peers.

    Raises:
        ConfigurationError: If ``peers`` contains ``rank`` itself
    """
    peers = sorted(set(int(p) for p in peers))
    if rank in peers:
        raise ConfigurationError(f"Rank {rank} cannot overlap with itself")
    steps = tuple(
        ExchangeStep(peer, Role.SEND_FIRST if rank < peer else Role.RECEIVE_FIRST)
        for peer in peers
    )
    return ExchangePlan(rank, steps)


def execute_plan(
    endpoint: TransportEndpoint,
    plan: ExchangePlan,
    outgoing: Callable[[int], bytes],
    receive: Callable[[int], None],
):
    """
    Run one exchange: per step, one send and one receive with that peer.

    Args:
        endpoint: This rank's endpoint
        plan: Schedule produced by ``make_plan``
        outgoing: Returns the payload for a peer (built just before sending)
        receive: Receives the peer's message (typically via ``recv_into``)
    """
    if plan.rank != endpoint.rank:
        raise ConfigurationError(f"Plan of rank {plan.rank} used on rank {endpoint.rank}")
    for step in plan:
        if step.role is Role.SEND_FIRST:
            endpoint.send(step.peer, outgoing(step.peer))
            receive(step.peer)
        else:
            receive(step.peer)
            endpoint.send(step.peer, outgoing(step.peer))
    logger.debug(f"Rank {plan.rank} exchanged with peers {list(plan.peers)}")
