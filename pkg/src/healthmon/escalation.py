"""Escalation sinks: on-board display transcript, driver notifications, and
the wireless service-station channel with its periodic vehicle status
reports.

Every escalation lands in a single ordered audit log; service-station
traffic is additionally serialized onto a newline-delimited wire with a
configurable delivery latency and seeded Bernoulli loss.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Callable

from .simcore import Event, Kernel

DISPLAY_WARNING = "display_warning"
DRIVER_NOTIFICATION = "driver_notification"
SERVICE_REPORT = "service_report"


@dataclass(frozen=True)
class EscalationEvent:
    at: int
    ecu: int
    kind: str
    reason: str
    code: int | None = None

    def to_json(self) -> str:
        rec = {"t_us": self.at, "kind": self.kind, "ecu": self.ecu, "reason": self.reason}
        if self.code is not None:
            rec["code"] = self.code
        return json.dumps(rec, separators=(",", ":"))


class AuditLog:
    """Append-only, time-ordered record of every escalation."""

    def __init__(self):
        self.events: list[EscalationEvent] = []

    def append(self, event: EscalationEvent) -> None:
        if self.events and event.at < self.events[-1].at:
            raise RuntimeError("audit log time went backwards")
        self.events.append(event)

    def lines(self) -> list[str]:
        return [e.to_json() for e in self.events]


@dataclass
class TelematicsConfig:
    latency_us: int = 0
    loss_probability: float = 0.0

    def __post_init__(self):
        if self.latency_us < 0:
            raise ValueError("telematics latency must be >= 0")
        if not 0.0 <= self.loss_probability <= 1.0:
            raise ValueError("loss probability must be in [0, 1]")


class TelematicsChannel:
    """Fire-and-forget wireless link to the service station.

    Records are serialized in emission order; each is either delivered (after
    the configured latency) or dropped by a seeded coin flip.  Lost records
    are reported through the ``on_lost`` callback so the run log keeps an
    account of them."""

    TARGET = "telematics"
    RNG_LABEL = "telematics-loss"

    def __init__(
        self,
        kernel: Kernel,
        config: TelematicsConfig | None = None,
        on_lost: Callable[[int, dict], None] | None = None,
    ):
        self.kernel = kernel
        self.config = config or TelematicsConfig()
        self.wire: list[str] = []
        self.lost: list[dict] = []
        self._on_lost = on_lost
        kernel.register(self.TARGET, self._handle)

    def send(self, record: dict) -> bool:
        """Returns True if the record made it onto the wire."""
        if self.config.loss_probability > 0.0:
            if self.kernel.rng(self.RNG_LABEL).random() < self.config.loss_probability:
                self.lost.append(record)
                if self._on_lost is not None:
                    self._on_lost(self.kernel.now(), record)
                return False
        self.wire.append(json.dumps(record, separators=(",", ":")))
        if self.config.latency_us > 0:
            # delivery instant is observable in the event log; ordering is
            # preserved because latency is constant
            self.kernel.schedule(
                self.kernel.now() + self.config.latency_us, self.TARGET, "delivered"
            )
        return True

    def _handle(self, ev: Event) -> None:
        if ev.kind != "delivered":
            raise RuntimeError(f"unknown telematics event kind {ev.kind!r}")


class EscalationCenter:
    """Routes monitor decisions to the display, the driver, and the wireless
    channel, and keeps the unified audit trail."""

    def __init__(self, kernel: Kernel, telematics: TelematicsChannel):
        self.kernel = kernel
        self.telematics = telematics
        self.audit = AuditLog()
        self.display_transcript: list[str] = []

    def display_warn(self, ecu: int, code: int) -> None:
        at = self.kernel.now()
        self.audit.append(
            EscalationEvent(at=at, ecu=ecu, kind=DISPLAY_WARNING, reason="fault", code=code)
        )
        self.display_transcript.append(f"WARN ecu={ecu} code={code:#04x}")

    def notify_driver(self, ecu: int, reason: str, code: int | None = None) -> None:
        self.audit.append(
            EscalationEvent(
                at=self.kernel.now(), ecu=ecu, kind=DRIVER_NOTIFICATION, reason=reason, code=code
            )
        )

    def report_station(self, ecu: int, reason: str, code: int | None = None) -> None:
        at = self.kernel.now()
        self.audit.append(
            EscalationEvent(at=at, ecu=ecu, kind=SERVICE_REPORT, reason=reason, code=code)
        )
        record: dict = {"t_us": at, "type": "fault", "ecu": ecu, "reason": reason}
        if code is not None:
            record["code"] = code
        self.telematics.send(record)


@dataclass
class StatusReporterConfig:
    interval_us: int = 10_000_000
    speed_mps: float = 20.0
    origin: tuple[float, float] = (0.0, 0.0)
    heading: tuple[float, float] = (1.0, 0.0)  # unit vector, straight-line travel

    def __post_init__(self):
        if self.interval_us <= 0:
            raise ValueError("status interval must be > 0")


@dataclass(frozen=True)
class VehicleStatusReport:
    at: int
    odometer_m: float
    position: tuple[float, float]
    speed_mps: float
    fleet_size: int
    ok: int
    degraded: int
    unresponsive: int


class StatusReporter:
    """Emits position and fleet-health summaries at a fixed interval over the
    telematics channel.  Position comes from a constant-speed straight-line
    model."""

    TARGET = "status-reporter"

    def __init__(
        self,
        kernel: Kernel,
        telematics: TelematicsChannel,
        counts: Callable[[], tuple[int, int, int]],
        config: StatusReporterConfig | None = None,
    ):
        self.kernel = kernel
        self.telematics = telematics
        self.config = config or StatusReporterConfig()
        self._counts = counts
        self.reports: list[VehicleStatusReport] = []
        kernel.register(self.TARGET, self._handle)

    def start(self) -> None:
        self.kernel.schedule(self.config.interval_us, self.TARGET, "report-due")

    def _handle(self, ev: Event) -> None:
        if ev.kind != "report-due":
            raise RuntimeError(f"unknown status event kind {ev.kind!r}")
        report = self._build()
        self.reports.append(report)
        self.telematics.send(
            {
                "t_us": report.at,
                "type": "status",
                "pos_m": int(report.odometer_m),
                "ok": report.ok,
                "degraded": report.degraded,
                "unresponsive": report.unresponsive,
            }
        )
        self.kernel.schedule(ev.at + self.config.interval_us, self.TARGET, "report-due")

    def _build(self) -> VehicleStatusReport:
        now = self.kernel.now()
        t_s = now / 1_000_000
        odo = self.config.speed_mps * t_s
        ox, oy = self.config.origin
        hx, hy = self.config.heading
        ok, degraded, unresponsive = self._counts()
        return VehicleStatusReport(
            at=now,
            odometer_m=odo,
            position=(ox + hx * odo, oy + hy * odo),
            speed_mps=self.config.speed_mps,
            fleet_size=ok + degraded + unresponsive,
            ok=ok,
            degraded=degraded,
            unresponsive=unresponsive,
        )
