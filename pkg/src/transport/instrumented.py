"""
Instrumented endpoint wrapper.

Counts messages per peer, tracks how many sends and receives are in flight at
once, and remembers every buffer handed to ``recv_into`` so tests can verify
the message economy and zero-copy rules of the exchange policy.
"""

import threading
from collections import Counter
from contextlib import contextmanager
from typing import List, Tuple

from src.transport.endpoint import TransportEndpoint


class InstrumentedEndpoint:
    """Delegating wrapper around any TransportEndpoint."""

    def __init__(self, inner: TransportEndpoint):
        self.inner = inner
        self.sent = Counter()
        self.received = Counter()
        self.receive_targets: List[Tuple[int, memoryview]] = []
        self.max_outstanding_sends = 0
        self.max_outstanding_recvs = 0
        self._outstanding_sends = 0
        self._outstanding_recvs = 0
        self._lock = threading.Lock()

    @property
    def rank(self) -> int:
        return self.inner.rank

    @property
    def nranks(self) -> int:
        return self.inner.nranks

    @property
    def backend(self):
        return self.inner.backend

    @property
    def messages_sent(self) -> int:
        return sum(self.sent.values())

    @property
    def messages_received(self) -> int:
        return sum(self.received.values())

    def reset(self):
        with self._lock:
            self.sent.clear()
            self.received.clear()
            self.receive_targets.clear()
            self.max_outstanding_sends = 0
            self.max_outstanding_recvs = 0

    @contextmanager
    def _track(self, kind: str):
        with self._lock:
            if kind == "send":
                self._outstanding_sends += 1
                self.max_outstanding_sends = max(self.max_outstanding_sends, self._outstanding_sends)
            else:
                self._outstanding_recvs += 1
                self.max_outstanding_recvs = max(self.max_outstanding_recvs, self._outstanding_recvs)
        try:
            yield
        finally:
            with self._lock:
                if kind == "send":
                    self._outstanding_sends -= 1
                else:
                    self._outstanding_recvs -= 1

    def send(self, to: int, payload: bytes):
        with self._track("send"):
            self.inner.send(to, payload)
        self.sent[to] += 1

    def recv(self, source: int) -> bytes:
        with self._track("recv"):
            payload = self.inner.recv(source)
        self.received[source] += 1
        return payload

    def recv_into(self, source: int, buffer) -> int:
        with self._track("recv"):
            n = self.inner.recv_into(source, buffer)
        self.received[source] += 1
        self.receive_targets.append((source, memoryview(buffer)))
        return n

    def barrier(self):
        self.inner.barrier()

    def close(self):
        self.inner.close()

    @property
    def closed(self) -> bool:
        return self.inner.closed

    def __enter__(self):
        return self

    def __exit__(self, exc_type, exc, tb):
        self.close()
