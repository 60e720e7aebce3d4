"""
In-Process Transport

All ranks live in one program and exchange frames through per-pair FIFO
queues owned by an InProcessHub. The hub can inject random delays before every
send and receive to shake out ordering assumptions in tests.
"""

import logging
import queue
import random
import threading
import time
from typing import Any, Callable, Dict, List, Optional, Tuple

from src.shared.errors import ConfigurationError, ProtocolError, TransportConnectionError
from src.transport.endpoint import (
    FRAME_HEADER,
    Backend,
    TransportEndpoint,
    decode_frame_header,
    encode_frame_header,
)

logger = logging.getLogger(__name__)

# Marks a channel whose sender has gone away
_CLOSED = object()


class InProcessHub:
    """
    Shared switchboard for the endpoints of one in-process run.

    The hub is internally synchronized; each endpoint must still be used by a
    single worker only.
    """

    def __init__(self, nranks: int, jitter: float = 0.0, seed: Optional[int] = None):
        """
        Args:
            nranks: Number of ranks
            jitter: Upper bound in seconds of the random pause taken before
                each send and receive (0 disables it)
            seed: Seed for the jitter generator
        """
        if nranks < 1:
            raise ConfigurationError(f"nranks must be >= 1, got {nranks}")
        self.nranks = nranks
        self.jitter = jitter
        self._rng = random.Random(seed)
        self._rng_lock = threading.Lock()
        self._lock = threading.Lock()
        self._claimed: set = set()
        self._channels: Dict[Tuple[int, int], queue.Queue] = {
            (src, dst): queue.Queue()
            for src in range(nranks)
            for dst in range(nranks)
            if src != dst
        }

    def endpoint(self, rank: int) -> "InProcessEndpoint":
        """
        Claim the endpoint of ``rank``.

        Raises:
            ConfigurationError: If the rank is out of range or already claimed
        """
        if not 0 <= rank < self.nranks:
            raise ConfigurationError(f"Rank {rank} outside 0..{self.nranks - 1}")
        with self._lock:
            if rank in self._claimed:
                raise ConfigurationError(f"Rank {rank} already has an endpoint")
            self._claimed.add(rank)
        return InProcessEndpoint(self, rank)

    def channel(self, src: int, dst: int) -> queue.Queue:
        return self._channels[(src, dst)]

    def pause(self):
        if self.jitter <= 0:
            return
        with self._rng_lock:
            delay = self._rng.uniform(0.0, self.jitter)
        time.sleep(delay)

    def abort(self):
        """Wake every blocked receiver with a connection error."""
        for channel in self._channels.values():
            channel.put(_CLOSED)


class InProcessEndpoint(TransportEndpoint):
    """Endpoint backed by the hub's per-pair queues."""

    def __init__(self, hub: InProcessHub, rank: int):
        super().__init__(rank, hub.nranks, Backend.INPROC)
        self.hub = hub

    def _send_frame(self, to: int, payload: memoryview):
        self.hub.pause()
        frame = encode_frame_header(payload.nbytes) + payload.tobytes()
        self.hub.channel(self.rank, to).put(frame)

    def _next_frame(self, source: int) -> memoryview:
        self.hub.pause()
        frame = self.hub.channel(source, self.rank).get()
        if frame is _CLOSED:
            raise TransportConnectionError(f"Rank {source} closed its connection to rank {self.rank}")
        frame = memoryview(frame)
        length = decode_frame_header(frame[:FRAME_HEADER.size].tobytes())
        body = frame[FRAME_HEADER.size:]
        if body.nbytes != length:
            raise ProtocolError(
                f"Frame from rank {source} announces {length} bytes but carries {body.nbytes}"
            )
        return body

    def _recv_frame(self, source: int) -> bytes:
        return self._next_frame(source).tobytes()

    def _recv_frame_into(self, source: int, view: memoryview):
        body = self._next_frame(source)
        if body.nbytes != view.nbytes:
            raise ProtocolError(
                f"Expected {view.nbytes} bytes from rank {source}, got {body.nbytes}"
            )
        view[:] = body

    def _close(self):
        for peer in range(self.nranks):
            if peer != self.rank:
                self.hub.channel(self.rank, peer).put(_CLOSED)


def run_inprocess(
    nranks: int,
    target: Callable[[TransportEndpoint], Any],
    jitter: float = 0.0,
    seed: Optional[int] = None,
    timeout: Optional[float] = None,
    hub: Optional[InProcessHub] = None,
    wrap: Optional[Callable[[TransportEndpoint], TransportEndpoint]] = None,
) -> List[Any]:
    """
    Run ``target(endpoint)`` once per rank, each on its own thread.

    Args:
        nranks: Number of ranks
        target: Per-rank work; receives that rank's endpoint
        jitter: Random scheduling delay bound passed to the hub
        seed: Jitter seed
        timeout: Seconds to wait for all ranks; None waits forever
        hub: Existing hub to use instead of a fresh one
        wrap: Optional endpoint decorator (e.g. instrumentation)

    Returns:
        Per-rank return values, indexed by rank

    Raises:
        TimeoutError: If some rank is still running after ``timeout``
        Exception: The first failure observed, re-raised
    """
    hub = hub or InProcessHub(nranks, jitter=jitter, seed=seed)
    results: List[Any] = [None] * nranks
    failures: List[BaseException] = []
    failures_lock = threading.Lock()

    def worker(rank: int):
        endpoint = hub.endpoint(rank)
        if wrap is not None:
            endpoint = wrap(endpoint)
        try:
            results[rank] = target(endpoint)
        except BaseException as e:
            with failures_lock:
                failures.append(e)
            logger.error(f"Rank {rank} failed: {e}")
        finally:
            endpoint.close()

    threads = [
        threading.Thread(target=worker, args=(rank,), name=f"rank-{rank}", daemon=True)
        for rank in range(nranks)
    ]
    for thread in threads:
        thread.start()

    deadline = None if timeout is None else time.monotonic() + timeout
    for thread in threads:
        remaining = None if deadline is None else max(0.0, deadline - time.monotonic())
        thread.join(remaining)
    if any(thread.is_alive() for thread in threads):
        hub.abort()
        raise TimeoutError(f"In-process run did not finish within {timeout} s")

    if failures:
        raise failures[0]
    return results
