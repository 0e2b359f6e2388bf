"""Pure recomputation of a run report from the event and audit logs.

Running this on stored logs reproduces the report the run emitted,
byte for byte; it never touches simulator state.
"""

from __future__ import annotations

import json

from . import protocol


class LogFormatError(ValueError):
    """A log line could not be parsed; message carries the line number."""


def parse_log_lines(lines: list[str], what: str) -> list[dict]:
    records = []
    for lineno, line in enumerate(lines, start=1):
        line = line.strip()
        if not line:
            continue
        try:
            rec = json.loads(line)
        except json.JSONDecodeError as exc:
            raise LogFormatError(f"{what}:{lineno}: malformed log line: {exc}") from exc
        if not isinstance(rec, dict):
            raise LogFormatError(f"{what}:{lineno}: log line is not an object")
        records.append(rec)
    return records


def _is_health_id(frame_id: int, fleet_size: int) -> bool:
    if frame_id in (protocol.POLL_ID, protocol.CORRECTIVE_ID):
        return True
    return protocol.RESPONSE_BASE < frame_id <= protocol.RESPONSE_BASE + fleet_size


def compute_report(event_lines: list[str], audit_lines: list[str]) -> dict:
    """Build the run report from logs alone.

    The first event-log line must be the run header carrying the resolved
    configuration and seed."""
    events = parse_log_lines(event_lines, "events.log")
    audit = parse_log_lines(audit_lines, "audit.log")
    if not events or events[0].get("kind") != "run-header":
        raise LogFormatError("events.log:1: missing run header")
    header = events[0]
    config = header["config"]
    fleet_size = config["fleet_size"]
    horizon_us = config["horizon_us"]
    bitrate = config["bus"]["bitrate"]

    deliveries = [e for e in events if e.get("kind") == "tx-complete"]
    injections = [e for e in events if e.get("kind") == "fault-injection"]
    lost = [e for e in events if e.get("kind") == "telematics-lost"]

    busy_all = 0
    busy_health = 0
    for d in deliveries:
        if not 0 < d["t_us"] <= horizon_us:
            continue
        bit_us = (d["bits"] * 1_000_000) // bitrate
        busy_all += bit_us
        if _is_health_id(d["frame_id"], fleet_size):
            busy_health += bit_us

    faults = []
    for inj in injections:
        onset = inj["t_us"]
        ecu = inj["ecu"]
        detected = None
        esc_kind = None
        for ev in audit:
            if ev["ecu"] == ecu and ev["t_us"] >= onset:
                detected = ev["t_us"]
                esc_kind = ev["kind"]
                break
        faults.append(
            {
                "ecu": ecu,
                "kind": inj["fault"],
                "code": inj.get("code"),
                "onset_us": onset,
                "detected_us": detected,
                "latency_us": None if detected is None else detected - onset,
                "escalation_kind": esc_kind,
            }
        )

    counts = {k: 0 for k in ("display_warning", "driver_notification", "service_report")}
    for ev in audit:
        counts[ev["kind"]] += 1

    return {
        "seed": config["seed"],
        "config": config,
        "events_processed": len(events) - 1,
        "faults": faults,
        "escalations": counts,
        "telematics_lost": len(lost),
        "utilization": {
            "overall": busy_all / horizon_us,
            "health": busy_health / horizon_us,
        },
    }
