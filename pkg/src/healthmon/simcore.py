"""Deterministic discrete-event kernel: virtual time, ordered event queue,
named-stream pseudo-randomness.

Time is integer microseconds from simulation start.  Events fire in strict
(time, sequence) order; ties on time resolve in insertion order.  All
randomness is drawn from per-label streams derived from (seed, label) so
adding a new randomized component never perturbs existing streams.
"""

from __future__ import annotations

import hashlib
import heapq
import random
from dataclasses import dataclass, field
from typing import Any, Callable


class SchedulingError(RuntimeError):
    """Raised when an event is scheduled in the past (a simulation bug)."""


@dataclass(order=True)
class Event:
    at: int
    seq: int
    target: str = field(compare=False)
    kind: str = field(compare=False)
    data: Any = field(compare=False, default=None)
    cancelled: bool = field(compare=False, default=False)

    def cancel(self) -> None:
        self.cancelled = True


class Kernel:
    """Single-threaded event loop.  Components register under a target name
    and receive their events via ``handle(event)``."""

    def __init__(self, seed: int = 0):
        self.seed = seed
        self._now = 0
        self._seq = 0
        self._heap: list[Event] = []
        self._handlers: dict[str, Callable[[Event], None]] = {}
        self._streams: dict[str, random.Random] = {}
        self.trace: Callable[[Event], None] | None = None

    def now(self) -> int:
        return self._now

    def register(self, target: str, handler: Callable[[Event], None]) -> None:
        if target in self._handlers:
            raise ValueError(f"target {target!r} already registered")
        self._handlers[target] = handler

    def schedule(self, at: int, target: str, kind: str, data: Any = None) -> Event:
        if at < self._now:
            raise SchedulingError(
                f"scheduling into the past: at={at} now={self._now} ({target}/{kind})"
            )
        ev = Event(at=at, seq=self._seq, target=target, kind=kind, data=data)
        self._seq += 1
        heapq.heappush(self._heap, ev)
        return ev

    def cancel(self, event: Event) -> None:
        event.cancel()

    def run_until(self, t: int) -> int:
        """Process every event with at <= t; leave now() == t."""
        if t < self._now:
            raise SchedulingError(f"run_until into the past: t={t} now={self._now}")
        processed = 0
        while self._heap and self._heap[0].at <= t:
            ev = heapq.heappop(self._heap)
            if ev.cancelled:
                continue
            self._now = ev.at
            if self.trace is not None:
                self.trace(ev)
            handler = self._handlers.get(ev.target)
            if handler is None:
                raise RuntimeError(f"no handler registered for target {ev.target!r}")
            handler(ev)
            processed += 1
        self._now = t
        return processed

    def rng(self, label: str) -> random.Random:
        """Named random stream, reproducible from (seed, label) alone."""
        stream = self._streams.get(label)
        if stream is None:
            digest = hashlib.sha256(f"{self.seed}/{label}".encode()).digest()
            stream = random.Random(int.from_bytes(digest[:16], "big"))
            self._streams[label] = stream
        return stream

    def rng_next(self, label: str) -> float:
        return self.rng(label).random()
