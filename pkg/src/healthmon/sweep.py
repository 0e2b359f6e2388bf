"""Onset sweep: rerun a single-fault scenario across a range of fault-onset
times and compare the measured detection latencies with the closed-form
worst-case bound."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass

from .monitor import detection_bound_us
from .scenario import Scenario, with_fault_onset
from .runner import build_and_run


@dataclass
class SweepResult:
    onsets_us: list[int]
    latencies_us: list[int | None]
    bound_us: int

    @property
    def detected(self) -> list[int]:
        return [lat for lat in self.latencies_us if lat is not None]

    @property
    def max_us(self) -> int | None:
        return max(self.detected, default=None)

    @property
    def min_us(self) -> int | None:
        return min(self.detected, default=None)

    @property
    def mean_us(self) -> float | None:
        d = self.detected
        return sum(d) / len(d) if d else None

    @property
    def missed(self) -> int:
        return sum(1 for lat in self.latencies_us if lat is None)

    def within_bound(self) -> bool:
        return self.missed == 0 and all(lat <= self.bound_us for lat in self.detected)

    def summary(self) -> dict:
        return {
            "onsets": len(self.onsets_us),
            "missed": self.missed,
            "bound_us": self.bound_us,
            "min_us": self.min_us,
            "max_us": self.max_us,
            "mean_us": self.mean_us,
            "within_bound": self.within_bound(),
        }


def sweep(template: Scenario, onsets_us: list[int]) -> SweepResult:
    bound = detection_bound_us(template.monitor, template.fleet_size)
    latencies: list[int | None] = []
    for onset in onsets_us:
        scenario = with_fault_onset(template, onset)
        # make sure the detection window fits inside the run
        horizon = max(scenario.horizon_us, onset + bound + scenario.monitor.period_us)
        scenario = dataclasses.replace(scenario, horizon_us=horizon)
        result = build_and_run(scenario)
        latencies.append(result.report["faults"][0]["latency_us"])
    return SweepResult(onsets_us=list(onsets_us), latencies_us=latencies, bound_us=bound)
