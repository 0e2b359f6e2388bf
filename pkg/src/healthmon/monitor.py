"""The health-monitoring ECU: cyclic slotted polling of every node, an
acknowledgement deadline per poll, bounded retries, corrective dispatch for
minor faults, and escalation of everything else.

Each cycle of length P is divided into N evenly spaced slots, one per ECU.
A poll that goes unanswered for the deadline D is retried up to R times at
the configured spacing; the (R+1)-th consecutive miss marks the node
unresponsive and fires a one-per-episode driver / service-station
escalation.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

from . import protocol
from .canbus import CanBus, Frame
from .escalation import EscalationCenter
from .simcore import Event, Kernel


class MonitorConfigError(ValueError):
    """Monitor timing parameters cannot be scheduled without slot overlap."""


@dataclass
class MonitorConfig:
    period_us: int = 1_000_000
    deadline_us: int = 10_000
    retries: int = 2
    retry_spacing_us: int | None = None  # defaults to deadline_us
    poll_order: list[int] | None = None  # defaults to ascending ecu id
    minor_persistence: int = 3  # consecutive minor NACKs before promotion

    def __post_init__(self):
        if self.retry_spacing_us is None:
            self.retry_spacing_us = self.deadline_us
        if self.period_us <= 0 or self.deadline_us <= 0:
            raise MonitorConfigError("period and deadline must be positive")
        if self.retries < 0:
            raise MonitorConfigError("retry count must be >= 0")
        if self.minor_persistence < 1:
            raise MonitorConfigError("minor persistence threshold must be >= 1")

    def retry_budget_us(self) -> int:
        return (self.retries + 1) * self.deadline_us + self.retries * self.retry_spacing_us

    def slot_us(self, fleet_size: int) -> int:
        return self.period_us // fleet_size

    def validate(self, fleet_size: int) -> None:
        if fleet_size < 1:
            raise MonitorConfigError("fleet size must be >= 1")
        if self.poll_order is not None and sorted(self.poll_order) != list(
            range(1, fleet_size + 1)
        ):
            raise MonitorConfigError("poll order must be a permutation of 1..N")
        slot = self.slot_us(fleet_size)
        budget = self.retry_budget_us()
        if slot < budget:
            raise MonitorConfigError(
                f"slot spacing {slot} us < deadline+retry budget {budget} us; "
                "deadlines would overlap the next poll slot"
            )


def detection_bound_us(config: MonitorConfig, fleet_size: int) -> int:
    """Worst-case fail-silent detection latency: fault onset just after a
    successful response, detected at the end of the next slot's retry chain."""
    config.validate(fleet_size)
    return config.period_us + config.retry_budget_us()


class Assessment(enum.Enum):
    OK = "ok"
    DEGRADED = "degraded"
    UNRESPONSIVE = "unresponsive"


@dataclass
class EcuRecord:
    ecu: int
    assessed: Assessment = Assessment.OK
    code: int | None = None
    misses: int = 0
    last_poll_us: int | None = None
    last_response_us: int | None = None
    escalated: bool = False
    minor_attempts: int = 0
    stale_responses: int = 0
    deadline_event: Event | None = field(default=None, repr=False)


class HealthMonitor:
    TARGET = "monitor"
    NODE_NAME = "monitor"

    def __init__(
        self,
        kernel: Kernel,
        bus: CanBus,
        escalation: EscalationCenter,
        fleet_size: int,
        config: MonitorConfig | None = None,
    ):
        self.kernel = kernel
        self.bus = bus
        self.escalation = escalation
        self.config = config or MonitorConfig()
        self.config.validate(fleet_size)
        self.fleet_size = fleet_size
        self.records = {ecu: EcuRecord(ecu=ecu) for ecu in range(1, fleet_size + 1)}
        self.polls_sent = 0
        self.correctives_sent = 0
        order = self.config.poll_order or list(range(1, fleet_size + 1))
        self._order = order
        kernel.register(self.TARGET, self._handle)
        bus.register(self.NODE_NAME, self.on_frame)

    def start(self) -> None:
        slot = self.config.slot_us(self.fleet_size)
        for i in range(self.fleet_size):
            self.kernel.schedule(i * slot, self.TARGET, "poll-slot", data=i)

    def counts(self) -> tuple[int, int, int]:
        ok = sum(1 for r in self.records.values() if r.assessed is Assessment.OK)
        deg = sum(1 for r in self.records.values() if r.assessed is Assessment.DEGRADED)
        return ok, deg, self.fleet_size - ok - deg

    # -- event handling ----------------------------------------------------

    def _handle(self, ev: Event) -> None:
        if ev.kind == "poll-slot":
            slot_index = ev.data
            self._poll(self._order[slot_index])
            self.kernel.schedule(
                ev.at + self.config.period_us, self.TARGET, "poll-slot", data=slot_index
            )
        elif ev.kind == "retry":
            self._poll(ev.data)
        elif ev.kind == "deadline":
            self._on_deadline(ev.data)
        else:
            raise RuntimeError(f"unknown monitor event kind {ev.kind!r}")

    def _poll(self, ecu: int) -> None:
        rec = self.records[ecu]
        now = self.kernel.now()
        self.bus.submit(protocol.poll_frame(self.NODE_NAME, ecu))
        self.polls_sent += 1
        rec.last_poll_us = now
        rec.deadline_event = self.kernel.schedule(
            now + self.config.deadline_us, self.TARGET, "deadline", data=ecu
        )

    def on_frame(self, frame: Frame, at: int) -> None:
        ecu = frame.id - protocol.RESPONSE_BASE
        if not 1 <= ecu <= self.fleet_size:
            return  # not a health response (background traffic etc.)
        if frame.dlc != 2 or frame.payload[0] != ecu:
            return
        rec = self.records[ecu]
        if rec.deadline_event is None:
            rec.stale_responses += 1
            return
        rec.deadline_event.cancel()
        rec.deadline_event = None
        rec.last_response_us = at
        rec.misses = 0
        status = frame.payload[1]
        if status == protocol.ACK_STATUS:
            self._on_ack(rec)
        else:
            self._on_nack(rec, status)

    def _on_ack(self, rec: EcuRecord) -> None:
        rec.assessed = Assessment.OK
        rec.code = None
        rec.minor_attempts = 0
        rec.escalated = False

    def _on_nack(self, rec: EcuRecord, code: int) -> None:
        if code != rec.code:
            rec.minor_attempts = 0
        rec.assessed = Assessment.DEGRADED
        rec.code = code
        if rec.escalated:
            return  # episode already escalated; keep polling quietly
        if protocol.is_minor_code(code):
            rec.minor_attempts += 1
            if rec.minor_attempts >= self.config.minor_persistence:
                # corrective actions did not clear it: promote to major handling
                self.escalation.display_warn(rec.ecu, code)
                self.escalation.notify_driver(rec.ecu, "persistent_minor", code)
                self.escalation.report_station(rec.ecu, "persistent_minor", code)
                rec.escalated = True
            else:
                self.bus.submit(protocol.corrective_frame(self.NODE_NAME, rec.ecu))
                self.correctives_sent += 1
                self.escalation.display_warn(rec.ecu, code)
        else:
            self.escalation.display_warn(rec.ecu, code)
            self.escalation.notify_driver(rec.ecu, "major_fault", code)
            self.escalation.report_station(rec.ecu, "major_fault", code)
            rec.escalated = True

    def _on_deadline(self, ecu: int) -> None:
        rec = self.records[ecu]
        rec.deadline_event = None
        rec.misses += 1
        if rec.misses <= self.config.retries:
            self.kernel.schedule(
                self.kernel.now() + self.config.retry_spacing_us,
                self.TARGET,
                "retry",
                data=ecu,
            )
            return
        rec.assessed = Assessment.UNRESPONSIVE
        rec.code = None
        if not rec.escalated:
            self.escalation.notify_driver(ecu, "unresponsive")
            self.escalation.report_station(ecu, "unresponsive")
            rec.escalated = True
