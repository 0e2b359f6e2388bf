"""Figure rendering for run and sweep reports.

All figures go to files next to the delimited outputs; nothing is shown
interactively."""

from __future__ import annotations

import json
from pathlib import Path

import matplotlib

matplotlib.use("Agg")

import matplotlib.pyplot as plt  # noqa: E402  (backend must be set first)

from . import protocol  # noqa: E402
from .runner import RunResult  # noqa: E402


def _frame_class(frame_id: int, fleet_size: int) -> str:
    if frame_id == protocol.POLL_ID:
        return "poll"
    if frame_id == protocol.CORRECTIVE_ID:
        return "corrective"
    if protocol.RESPONSE_BASE < frame_id <= protocol.RESPONSE_BASE + fleet_size:
        return "response"
    return "background"


def render_run_figures(result: RunResult, out_dir) -> list[Path]:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    paths = [_render_timeline(result, out / "timeline.png")]
    if result.report["faults"]:
        paths.append(_render_latencies(result, out / "latency.png"))
    return paths


def _render_timeline(result: RunResult, path: Path) -> Path:
    n = result.scenario.fleet_size
    styles = {
        "poll": ("tab:blue", "."),
        "response": ("tab:green", "."),
        "corrective": ("tab:orange", "x"),
        "background": ("lightgray", "."),
    }
    points: dict[str, tuple[list[float], list[int]]] = {k: ([], []) for k in styles}
    for line in result.event_lines[1:]:
        rec = json.loads(line)
        if rec.get("kind") != "tx-complete":
            continue
        cls = _frame_class(rec["frame_id"], n)
        xs, ys = points[cls]
        xs.append(rec["t_us"] / 1e6)
        ys.append(rec["frame_id"])

    fig, ax = plt.subplots(figsize=(10, 4))
    for cls, (color, marker) in styles.items():
        xs, ys = points[cls]
        if xs:
            ax.scatter(xs, ys, s=8, c=color, marker=marker, label=cls)
    for line in result.audit_lines:
        rec = json.loads(line)
        ax.axvline(rec["t_us"] / 1e6, color="tab:red", alpha=0.4, linewidth=0.8)
    ax.set_xlabel("time [s]")
    ax.set_ylabel("frame id")
    ax.set_title("Bus traffic and escalations")
    if any(xs for xs, _ in points.values()):
        ax.legend(loc="upper right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def _render_latencies(result: RunResult, path: Path) -> Path:
    faults = result.report["faults"]
    labels = [f"ecu {f['ecu']}\n{f['kind']}" for f in faults]
    values = [0 if f["latency_us"] is None else f["latency_us"] / 1e3 for f in faults]

    fig, ax = plt.subplots(figsize=(max(4, len(faults) * 1.2), 4))
    ax.bar(range(len(faults)), values, color="tab:blue")
    ax.set_xticks(range(len(faults)))
    ax.set_xticklabels(labels, fontsize=8)
    ax.set_ylabel("detection latency [ms]")
    ax.set_title("Per-fault detection latency")
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path


def render_sweep_figure(onsets_us, latencies_us, bound_us, path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    xs = [o / 1e6 for o in onsets_us]
    ys = [None if lat is None else lat / 1e3 for lat in latencies_us]

    fig, ax = plt.subplots(figsize=(9, 4))
    ax.plot(xs, ys, ".", markersize=3, color="tab:blue", label="measured")
    ax.axhline(bound_us / 1e3, color="tab:red", linestyle="--", label="worst-case bound")
    ax.set_xlabel("fault onset [s]")
    ax.set_ylabel("detection latency [ms]")
    ax.set_title("Detection latency vs fault onset")
    ax.legend(loc="lower right", fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=120)
    plt.close(fig)
    return path
