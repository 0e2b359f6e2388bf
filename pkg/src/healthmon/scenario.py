"""Scenario files: a YAML schedule of injected faults, traffic and
configuration driving one simulation run.

Validation is all-or-nothing: a file either loads completely with defaults
filled in, or is rejected with a diagnostic naming the offending key and
its line.  Nothing is simulated from a partially valid file.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass, field

import yaml

from .canbus import BusConfig, BusConfigError
from .escalation import StatusReporterConfig, TelematicsConfig
from .monitor import MonitorConfig, MonitorConfigError

MAX_FLEET_SIZE = 255  # ecu id must fit one payload byte

FAULT_KINDS = ("minor", "major", "fail_silent")


class ScenarioError(ValueError):
    """Scenario file rejected; message carries file name and line."""


@dataclass(frozen=True)
class FaultSpec:
    at_us: int
    ecu: int
    kind: str  # "minor" | "major" | "fail_silent"
    code: int | None = None
    recoverable: bool = False
    duration_us: int | None = None


@dataclass
class BackgroundConfig:
    frames_per_s: float = 0.0
    id_min: int = 0x400
    id_max: int = 0x7FF
    dlc: int = 8


@dataclass
class Scenario:
    fleet_size: int
    horizon_us: int
    seed: int = 0
    monitor: MonitorConfig = field(default_factory=MonitorConfig)
    bus: BusConfig = field(default_factory=BusConfig)
    background: BackgroundConfig = field(default_factory=BackgroundConfig)
    telematics: TelematicsConfig = field(default_factory=TelematicsConfig)
    status: StatusReporterConfig = field(default_factory=StatusReporterConfig)
    processing_delay_us: int = 200
    faults: list[FaultSpec] = field(default_factory=list)

    def config_echo(self) -> dict:
        """Fully resolved configuration, echoed into logs and reports."""
        return {
            "fleet_size": self.fleet_size,
            "horizon_us": self.horizon_us,
            "seed": self.seed,
            "monitor": {
                "period_us": self.monitor.period_us,
                "deadline_us": self.monitor.deadline_us,
                "retries": self.monitor.retries,
                "retry_spacing_us": self.monitor.retry_spacing_us,
                "minor_persistence": self.monitor.minor_persistence,
            },
            "bus": {"bitrate": self.bus.bitrate},
            "background": {
                "frames_per_s": self.background.frames_per_s,
                "id_min": self.background.id_min,
                "id_max": self.background.id_max,
                "dlc": self.background.dlc,
            },
            "telematics": {
                "latency_us": self.telematics.latency_us,
                "loss_probability": self.telematics.loss_probability,
            },
            "status": {
                "interval_us": self.status.interval_us,
                "speed_mps": self.status.speed_mps,
            },
            "processing_delay_us": self.processing_delay_us,
            "faults": [
                {
                    "at_us": f.at_us,
                    "ecu": f.ecu,
                    "kind": f.kind,
                    "code": f.code,
                    "recoverable": f.recoverable,
                    "duration_us": f.duration_us,
                }
                for f in self.faults
            ],
        }


def _us(seconds: float) -> int:
    return int(round(seconds * 1_000_000))


class _Section:
    """A mapping section of the file paired with the YAML node tree so
    diagnostics can name exact lines."""

    def __init__(self, name: str, data, node, path: str):
        self.name = name
        self.path = path
        if not isinstance(data, dict):
            raise ScenarioError(f"{name}:{self._node_line(node)}: {path} must be a mapping")
        self.data = dict(data)
        self._key_lines = {}
        if node is not None:
            for key_node, value_node in node.value:
                self._key_lines[key_node.value] = key_node.start_mark.line + 1

    @staticmethod
    def _node_line(node) -> int:
        return node.start_mark.line + 1 if node is not None else 0

    def line(self, key: str) -> str:
        ln = self._key_lines.get(key)
        return f"{self.name}:{ln}" if ln is not None else self.name

    def fail(self, key: str, message: str):
        raise ScenarioError(f"{self.line(key)}: {self.path}{key}: {message}")

    def child_node(self, node, key: str):
        if node is None:
            return None
        for key_node, value_node in node.value:
            if key_node.value == key:
                return value_node
        return None

    def take(self, key: str, default=None):
        return self.data.pop(key, default)

    def reject_unknown(self) -> None:
        if self.data:
            key = sorted(self.data)[0]
            self.fail(key, "unknown key")

    def take_int(self, key: str, default=None, lo=None, hi=None, required=False):
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self.name}: missing required key {self.path}{key}")
            return default
        value = self.data.pop(key)
        if isinstance(value, bool) or not isinstance(value, int):
            self.fail(key, f"expected an integer, got {value!r}")
        if lo is not None and value < lo:
            self.fail(key, f"must be >= {lo}, got {value}")
        if hi is not None and value > hi:
            self.fail(key, f"must be <= {hi}, got {value}")
        return value

    def take_number(self, key: str, default=None, lo=None, hi=None, required=False):
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self.name}: missing required key {self.path}{key}")
            return default
        value = self.data.pop(key)
        if isinstance(value, bool) or not isinstance(value, (int, float)):
            self.fail(key, f"expected a number, got {value!r}")
        if lo is not None and value < lo:
            self.fail(key, f"must be >= {lo}, got {value}")
        if hi is not None and value > hi:
            self.fail(key, f"must be <= {hi}, got {value}")
        return float(value)

    def take_bool(self, key: str, default=None):
        if key not in self.data:
            return default
        value = self.data.pop(key)
        if not isinstance(value, bool):
            self.fail(key, f"expected true/false, got {value!r}")
        return value

    def take_str(self, key: str, default=None, choices=None, required=False):
        if key not in self.data:
            if required:
                raise ScenarioError(f"{self.name}: missing required key {self.path}{key}")
            return default
        value = self.data.pop(key)
        if not isinstance(value, str):
            self.fail(key, f"expected a string, got {value!r}")
        if choices is not None and value not in choices:
            self.fail(key, f"must be one of {', '.join(choices)}; got {value!r}")
        return value


def parse_scenario(text: str, name: str = "<scenario>") -> Scenario:
    try:
        data = yaml.safe_load(text)
        node = yaml.compose(text, Loader=yaml.SafeLoader)
    except yaml.YAMLError as exc:
        raise ScenarioError(f"{name}: not valid YAML: {exc}") from exc
    if data is None:
        raise ScenarioError(f"{name}: empty scenario file")
    top = _Section(name, data, node, "")

    fleet_size = top.take_int("fleet_size", lo=1, hi=MAX_FLEET_SIZE, required=True)
    horizon_s = top.take_number("horizon_s", required=True)
    if horizon_s <= 0:
        top.fail("horizon_s", f"must be > 0, got {horizon_s}")
    horizon_us = _us(horizon_s)
    seed = top.take_int("seed", default=0, lo=0)
    processing_delay_us = _us(top.take_number("processing_delay_s", default=200e-6, lo=1e-6))

    mon_node = top.child_node(node, "monitor")
    mon = _Section(name, top.take("monitor", {}), mon_node, "monitor.")
    period_us = _us(mon.take_number("period_s", default=1.0, lo=1e-6))
    deadline_us = _us(mon.take_number("deadline_s", default=0.010, lo=1e-6))
    retries = mon.take_int("retries", default=2, lo=0, hi=100)
    spacing = mon.take_number("retry_spacing_s", default=None, lo=1e-6)
    minor_persistence = mon.take_int("minor_persistence", default=3, lo=1)
    mon.reject_unknown()

    bus_node = top.child_node(node, "bus")
    bus_sec = _Section(name, top.take("bus", {}), bus_node, "bus.")
    bitrate = bus_sec.take_int("bitrate", default=500_000, lo=1)
    bus_sec.reject_unknown()

    bg_node = top.child_node(node, "background")
    bg = _Section(name, top.take("background", {}), bg_node, "background.")
    frames_per_s = bg.take_number("frames_per_s", default=0.0, lo=0.0)
    id_min = bg.take_int("id_min", default=0x400, lo=0, hi=0x7FF)
    id_max = bg.take_int("id_max", default=0x7FF, lo=0, hi=0x7FF)
    bg_dlc = bg.take_int("dlc", default=8, lo=0, hi=8)
    if id_max < id_min:
        bg.fail("id_max", f"must be >= id_min ({id_min:#x})")
    if frames_per_s > 0 and id_min <= 0x100 + fleet_size:
        bg.fail("id_min", f"background ids must be above the response range (> {0x100 + fleet_size:#x})")
    bg.reject_unknown()

    tel_node = top.child_node(node, "telematics")
    tel = _Section(name, top.take("telematics", {}), tel_node, "telematics.")
    tel_latency_us = _us(tel.take_number("latency_s", default=0.0, lo=0.0))
    loss_p = tel.take_number("loss_probability", default=0.0, lo=0.0, hi=1.0)
    tel.reject_unknown()

    st_node = top.child_node(node, "status")
    st = _Section(name, top.take("status", {}), st_node, "status.")
    interval_us = _us(st.take_number("interval_s", default=10.0, lo=1e-6))
    speed_mps = st.take_number("speed_mps", default=20.0, lo=0.0)
    st.reject_unknown()

    faults_raw = top.take("faults", [])
    faults_node = top.child_node(node, "faults")
    top.reject_unknown()

    if not isinstance(faults_raw, list):
        raise ScenarioError(f"{name}: faults must be a list")
    faults: list[FaultSpec] = []
    for i, entry in enumerate(faults_raw):
        entry_node = faults_node.value[i] if faults_node is not None else None
        fs = _Section(name, entry, entry_node, f"faults[{i}].")
        at_s = fs.take_number("at_s", required=True, lo=0.0)
        ecu = fs.take_int("ecu", required=True, lo=1)
        kind = fs.take_str("kind", required=True, choices=FAULT_KINDS)
        code = fs.take_int("code", default=None, lo=0x01, hi=0xFE)
        recoverable = fs.take_bool("recoverable", default=False)
        duration_s = fs.take_number("duration_s", default=None, lo=1e-6)
        fs.reject_unknown()
        if at_s >= horizon_s:
            fs.fail("at_s", f"fault time {at_s} s is not before the horizon ({horizon_s} s)")
        if ecu > fleet_size:
            fs.fail("ecu", f"ecu {ecu} out of range for fleet size {fleet_size}")
        if kind == "fail_silent":
            if code is not None:
                fs.fail("code", "fail_silent faults carry no error code")
        else:
            if code is None:
                raise ScenarioError(
                    f"{name}: faults[{i}]: {kind} fault requires an error code"
                )
            if kind == "minor" and not 0x01 <= code <= 0x7F:
                fs.fail("code", f"minor codes are 0x01..0x7F, got {code:#x}")
            if kind == "major" and not 0x80 <= code <= 0xFE:
                fs.fail("code", f"major codes are 0x80..0xFE, got {code:#x}")
        faults.append(
            FaultSpec(
                at_us=_us(at_s),
                ecu=ecu,
                kind=kind,
                code=code,
                recoverable=bool(recoverable),
                duration_us=None if duration_s is None else _us(duration_s),
            )
        )

    try:
        monitor = MonitorConfig(
            period_us=period_us,
            deadline_us=deadline_us,
            retries=retries,
            retry_spacing_us=None if spacing is None else _us(spacing),
            minor_persistence=minor_persistence,
        )
        monitor.validate(fleet_size)
        bus = BusConfig(bitrate=bitrate)
    except (MonitorConfigError, BusConfigError) as exc:
        raise ScenarioError(f"{name}: {exc}") from exc

    return Scenario(
        fleet_size=fleet_size,
        horizon_us=horizon_us,
        seed=seed,
        monitor=monitor,
        bus=bus,
        background=BackgroundConfig(
            frames_per_s=frames_per_s, id_min=id_min, id_max=id_max, dlc=bg_dlc
        ),
        telematics=TelematicsConfig(latency_us=tel_latency_us, loss_probability=loss_p),
        status=StatusReporterConfig(interval_us=interval_us, speed_mps=speed_mps),
        processing_delay_us=processing_delay_us,
        faults=faults,
    )


def load_scenario(path) -> Scenario:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ScenarioError(f"{path}: cannot read scenario: {exc}") from exc
    except (UnicodeDecodeError, ValueError) as exc:
        raise ScenarioError(f"{path}: scenario is not UTF-8 text: {exc}") from exc
    return parse_scenario(text, name=str(path))


def with_fault_onset(scenario: Scenario, onset_us: int) -> Scenario:
    """Copy of a single-fault scenario with the fault moved to ``onset_us``."""
    if len(scenario.faults) != 1:
        raise ScenarioError("sweep template must contain exactly one fault")
    fault = dataclasses.replace(scenario.faults[0], at_us=onset_us)
    return dataclasses.replace(scenario, faults=[fault])
