"""Single CAN segment model: prioritized non-preemptive broadcast with
identifier arbitration and worst-case stuffed frame timing.

Frames are timed at their worst-case stuffed length so latency bounds are
deterministic and payload-independent.  No error frames, retransmission or
channel faults: the fault model lives in the ECUs, not the wire.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from typing import Callable

from .simcore import Event, Kernel


class FrameError(ValueError):
    """Invalid frame contents (identifier or length out of range)."""


class BusConfigError(RuntimeError):
    """Static configuration violated (unregistered sender, duplicate ids)."""


@dataclass(frozen=True)
class Frame:
    id: int
    dlc: int
    payload: bytes
    sender: str

    def __post_init__(self):
        if not 0 <= self.id < 2048:
            raise FrameError(f"identifier {self.id:#x} outside 11-bit range")
        if not 0 <= self.dlc <= 8:
            raise FrameError(f"dlc {self.dlc} outside 0..8")
        if len(self.payload) != self.dlc:
            raise FrameError(f"payload length {len(self.payload)} != dlc {self.dlc}")


@dataclass
class BusConfig:
    bitrate: int = 500_000
    inter_frame_bits: int = 3

    def __post_init__(self):
        if self.bitrate <= 0:
            raise BusConfigError("bitrate must be positive")

    def bits_to_us(self, bits: int) -> int:
        return (bits * 1_000_000) // self.bitrate


def frame_bits(dlc: int) -> int:
    """Worst-case on-wire bit count of a standard (11-bit id) data frame,
    including maximal stuffing over the 34 + 8*dlc stuffable bits."""
    if not 0 <= dlc <= 8:
        raise FrameError(f"dlc {dlc} outside 0..8")
    return 8 * dlc + 47 + (34 + 8 * dlc - 1) // 4


@dataclass
class Transmission:
    frame: Frame
    submitted_at: int
    started_at: int
    delivered_at: int
    bits: int


@dataclass
class _NodeQueue:
    receive: Callable[[Frame, int], None]
    pending: deque = field(default_factory=deque)


class CanBus:
    """Event-driven bus.  Nodes register a receive callback; submitted frames
    queue per-sender FIFO, arbitrate by lowest id at each bus-idle boundary,
    and are delivered to every other registered node in the same event."""

    TARGET = "bus"

    def __init__(self, kernel: Kernel, config: BusConfig | None = None):
        self.kernel = kernel
        self.config = config or BusConfig()
        self._nodes: dict[str, _NodeQueue] = {}
        self._busy = False
        self._free_at = 0  # inter-frame gap: no arbitration before this
        self._arb_event: Event | None = None
        self.log: list[Transmission] = []
        kernel.register(self.TARGET, self._handle)

    def register(self, node_id: str, receive: Callable[[Frame, int], None]) -> None:
        if node_id in self._nodes:
            raise BusConfigError(f"node {node_id!r} already registered")
        self._nodes[node_id] = _NodeQueue(receive=receive)

    def submit(self, frame: Frame) -> None:
        node = self._nodes.get(frame.sender)
        if node is None:
            raise BusConfigError(f"unregistered sender {frame.sender!r}")
        now = self.kernel.now()
        node.pending.append((frame, now))
        if self._arb_event is not None and self._arb_event.at == now:
            # push the arbitration behind every same-instant submission so
            # all frames submitted at time t contend at time t
            self._arb_event.cancel()
            self._arb_event = self.kernel.schedule(now, self.TARGET, "arbitrate")
        else:
            self._schedule_arbitration(now)

    def withdraw_pending(self, node_id: str) -> int:
        """Drop all queued (not yet transmitting) frames of a node."""
        node = self._nodes.get(node_id)
        if node is None:
            return 0
        dropped = len(node.pending)
        node.pending.clear()
        return dropped

    def _schedule_arbitration(self, at: int) -> None:
        if self._busy or self._arb_event is not None:
            return
        at = max(at, self._free_at)
        self._arb_event = self.kernel.schedule(at, self.TARGET, "arbitrate")

    def _handle(self, ev: Event) -> None:
        if ev.kind == "arbitrate":
            self._arb_event = None
            self._arbitrate()
        elif ev.kind == "tx-complete":
            self._complete(ev.data)
        else:
            raise RuntimeError(f"unknown bus event kind {ev.kind!r}")

    def _arbitrate(self) -> None:
        heads = [(q.pending[0][0].id, name) for name, q in self._nodes.items() if q.pending]
        if not heads:
            return
        ids = [h[0] for h in heads]
        if len(set(ids)) != len(ids):
            dup = min(i for i in ids if ids.count(i) > 1)
            raise BusConfigError(f"two pending frames share identifier {dup:#x}")
        _, winner = min(heads)
        frame, submitted_at = self._nodes[winner].pending.popleft()
        bits = frame_bits(frame.dlc)
        now = self.kernel.now()
        tx = Transmission(
            frame=frame,
            submitted_at=submitted_at,
            started_at=now,
            delivered_at=now + self.config.bits_to_us(bits),
            bits=bits,
        )
        self._busy = True
        self.kernel.schedule(tx.delivered_at, self.TARGET, "tx-complete", data=tx)

    def _complete(self, tx: Transmission) -> None:
        self.log.append(tx)
        for name, node in self._nodes.items():
            if name != tx.frame.sender:
                node.receive(tx.frame, tx.delivered_at)
        self._busy = False
        self._free_at = tx.delivered_at + self.config.bits_to_us(self.config.inter_frame_bits)
        if any(q.pending for q in self._nodes.values()):
            self._schedule_arbitration(self._free_at)


def utilization(log: list[Transmission], config: BusConfig, start: int, end: int) -> float:
    """Fraction of the window occupied by on-wire bit-times of frames
    delivered inside (start, end]."""
    if end <= start:
        raise ValueError("empty utilization window")
    busy = sum(
        config.bits_to_us(tx.bits) for tx in log if start < tx.delivered_at <= end
    )
    return busy / (end - start)
