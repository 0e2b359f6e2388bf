"""Deterministic discrete-event simulator of an in-vehicle network with a
health-monitoring ECU: cyclic polling over CAN, acknowledgement deadlines,
corrective actions, and driver / service-station escalation."""

from .canbus import BusConfig, CanBus, Frame, frame_bits, utilization
from .ecu import EcuNode, ErrorCode, Health
from .escalation import EscalationCenter, StatusReporter, TelematicsChannel
from .monitor import Assessment, HealthMonitor, MonitorConfig, detection_bound_us
from .runner import RunResult, build_and_run, write_outputs
from .scenario import FaultSpec, Scenario, ScenarioError, load_scenario, parse_scenario
from .simcore import Kernel, SchedulingError
from .sweep import SweepResult, sweep

__version__ = "0.1.0"

__all__ = [
    "Assessment",
    "BusConfig",
    "CanBus",
    "EcuNode",
    "ErrorCode",
    "EscalationCenter",
    "FaultSpec",
    "Frame",
    "Health",
    "HealthMonitor",
    "Kernel",
    "MonitorConfig",
    "RunResult",
    "Scenario",
    "ScenarioError",
    "SchedulingError",
    "StatusReporter",
    "SweepResult",
    "TelematicsChannel",
    "build_and_run",
    "detection_bound_us",
    "frame_bits",
    "load_scenario",
    "parse_scenario",
    "sweep",
    "utilization",
    "write_outputs",
]
