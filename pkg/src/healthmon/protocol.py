"""Health-protocol frame layout shared by the monitor and the ECU nodes.

Poll:       id 0x080, dlc 1, payload [target ecu id]
Response:   id 0x100 + ecu id, dlc 2, payload [ecu id, status]
            status 0x00 = positive ack, anything else = error code
Corrective: id 0x090, dlc 2, payload [ecu id, 0x01]

Polls outrank corrective actions which outrank all responses, so the
monitor's traffic always wins arbitration against the nodes it manages.
"""

from __future__ import annotations

from .canbus import Frame

POLL_ID = 0x080
CORRECTIVE_ID = 0x090
RESPONSE_BASE = 0x100

ACK_STATUS = 0x00
CORRECTIVE_OPCODE = 0x01

MINOR_CODE_MAX = 0x7F  # codes 0x01..0x7F are minor, 0x80..0xFE major


def is_minor_code(code: int) -> bool:
    return 0x01 <= code <= MINOR_CODE_MAX


def poll_frame(sender: str, ecu: int) -> Frame:
    return Frame(id=POLL_ID, dlc=1, payload=bytes([ecu]), sender=sender)


def response_frame(sender: str, ecu: int, status: int) -> Frame:
    return Frame(id=RESPONSE_BASE + ecu, dlc=2, payload=bytes([ecu, status]), sender=sender)


def corrective_frame(sender: str, ecu: int) -> Frame:
    return Frame(id=CORRECTIVE_ID, dlc=2, payload=bytes([ecu, CORRECTIVE_OPCODE]), sender=sender)
