"""Simulated application ECU: answers health polls according to its current
(scenario-injected) health state and accepts corrective commands.

The self-test verdict is injected ground truth: a node is Healthy, carries
exactly one active error code, or has failed silent.  A failed node
transmits nothing at all; frames already queued are discarded the instant
the failure hits.
"""

from __future__ import annotations

import enum
import logging
from dataclasses import dataclass
from typing import Callable

from . import protocol
from .canbus import CanBus, Frame
from .simcore import Event, Kernel


@dataclass(frozen=True)
class ErrorCode:
    code: int
    recoverable: bool = False

    def __post_init__(self):
        if not 0x01 <= self.code <= 0xFE:
            raise ValueError(f"error code {self.code:#x} outside 0x01..0xFE")

    @property
    def minor(self) -> bool:
        return protocol.is_minor_code(self.code)


class Health(enum.Enum):
    HEALTHY = "healthy"
    FAULTED = "faulted"
    FAILED = "failed"


logger = logging.getLogger(__name__)

DEFAULT_PROCESSING_DELAY_US = 200


class EcuNode:
    """One networked ECU, addressed by a small positive integer id."""

    def __init__(
        self,
        kernel: Kernel,
        bus: CanBus,
        ecu_id: int,
        processing_delay_us: int = DEFAULT_PROCESSING_DELAY_US,
        on_transition: Callable[[int, int, Health, ErrorCode | None], None] | None = None,
    ):
        if ecu_id < 1:
            raise ValueError("ecu id must be >= 1")
        self.kernel = kernel
        self.bus = bus
        self.ecu_id = ecu_id
        self.node_name = f"ecu-{ecu_id}"
        self.processing_delay_us = processing_delay_us
        self.health = Health.HEALTHY
        self.fault: ErrorCode | None = None
        self.malformed_polls = 0
        self._pending_responses: list[Event] = []
        self._recovery_event: Event | None = None
        self._on_transition = on_transition
        kernel.register(self.node_name, self._handle)
        bus.register(self.node_name, self.on_frame)

    # -- bus side ----------------------------------------------------------

    def on_frame(self, frame: Frame, at: int) -> None:
        if self.health is Health.FAILED:
            return
        if frame.id == protocol.POLL_ID:
            if frame.dlc != 1:
                self.malformed_polls += 1
                return
            if frame.payload[0] == self.ecu_id:
                self._pending_responses.append(
                    self.kernel.schedule(
                        at + self.processing_delay_us, self.node_name, "respond"
                    )
                )
        elif frame.id == protocol.CORRECTIVE_ID:
            if frame.dlc == 2 and frame.payload[0] == self.ecu_id:
                self.apply_corrective()

    def _handle(self, ev: Event) -> None:
        if ev.kind == "respond":
            self._respond()
        elif ev.kind == "recover":
            self._recovery_event = None
            self._transition(Health.HEALTHY, None)
        else:
            raise RuntimeError(f"unknown ecu event kind {ev.kind!r}")

    def _respond(self) -> None:
        if self.health is Health.FAILED:
            return
        status = protocol.ACK_STATUS if self.fault is None else self.fault.code
        self.bus.submit(protocol.response_frame(self.node_name, self.ecu_id, status))

    # -- state changes -----------------------------------------------------

    def inject_fault(self, fault: ErrorCode | None, duration_us: int | None = None) -> None:
        """Transition to FAULTED (fault given) or FAILED (fault is None) at
        the current instant; optional duration schedules a recovery."""
        if self.health is Health.FAILED:
            logger.warning("fault injected into already-failed ecu %d; ignored", self.ecu_id)
            return
        if fault is None:
            self._transition(Health.FAILED, None)
            # fail-silent is immediate: drop anything queued or in flight to the bus
            for ev in self._pending_responses:
                ev.cancel()
            self._pending_responses.clear()
            self.bus.withdraw_pending(self.node_name)
        else:
            self._transition(Health.FAULTED, fault)
        if duration_us is not None:
            self._recovery_event = self.kernel.schedule(
                self.kernel.now() + duration_us, self.node_name, "recover"
            )

    def apply_corrective(self) -> None:
        if self.health is Health.FAULTED and self.fault is not None and self.fault.recoverable:
            self._transition(Health.HEALTHY, None)
        # non-recoverable faults persist; a healthy node treats this as a no-op

    def _transition(self, health: Health, fault: ErrorCode | None) -> None:
        self.health = health
        self.fault = fault
        if self._on_transition is not None:
            self._on_transition(self.kernel.now(), self.ecu_id, health, fault)
