"""Measurement pipeline: 10 Hz sampling rows, pointer/AOI event streams, the
derived measures, and the line-delimited log / report files.

The log file is the sole input to every derived measure. One JSON object
per line, UTF-8, with a ``type`` tag of sample / pointer / aoi / event;
field names below are a stable contract (see README).
"""

import json
import math
from dataclasses import dataclass, field

DEFAULT_PX_PER_CM = 37.8  # 96 DPI

AOI_AREAS = ("request_panel", "info_panel", "main_panel", "secondary_panel")


class MetricsLogError(ValueError):
    """Malformed log line; carries the 1-based line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


@dataclass(frozen=True)
class Sample:
    t: float
    request_id: int
    lane_deviation: float
    progress_floor: int
    progress_raw: float
    slot: str
    speed: float

    def to_record(self) -> dict:
        return {"type": "sample", "t": self.t, "request_id": self.request_id,
                "lane_deviation": self.lane_deviation, "progress_floor": self.progress_floor,
                "progress_raw": self.progress_raw, "slot": self.slot, "speed": self.speed}


@dataclass(frozen=True)
class PointerEvent:
    t: float
    dx: float
    dy: float
    px_per_cm: float = DEFAULT_PX_PER_CM

    def to_record(self) -> dict:
        return {"type": "pointer", "t": self.t, "dx": self.dx, "dy": self.dy,
                "px_per_cm": self.px_per_cm}


@dataclass(frozen=True)
class AoiEvent:
    t: float
    area: str
    enter: bool
    source: str = "focus"  # "gaze" for external 60 Hz eye-tracker ingestion

    def to_record(self) -> dict:
        return {"type": "aoi", "t": self.t, "area": self.area, "enter": self.enter,
                "source": self.source}


@dataclass
class MetricsLog:
    """Append-only collection of sample rows and event streams."""

    samples: list = field(default_factory=list)
    pointer_events: list = field(default_factory=list)
    aoi_events: list = field(default_factory=list)
    events: list = field(default_factory=list)

    def add_event(self, kind: str, **fields):
        self.events.append({"type": "event", "kind": kind, **fields})

    def neglect_intervals(self) -> list:
        return [(e["request_id"], e["start"], e["end"])
                for e in self.events if e["kind"] == "neglect_interval"]

    def episode_span(self) -> float:
        for e in self.events:
            if e["kind"] == "episode_end":
                return float(e["clock"])
        if self.samples:
            return self.samples[-1].t
        return 0.0

    def to_lines(self) -> list:
        lines = []
        for s in self.samples:
            lines.append(json.dumps(s.to_record(), sort_keys=True))
        for p in self.pointer_events:
            lines.append(json.dumps(p.to_record(), sort_keys=True))
        for a in self.aoi_events:
            lines.append(json.dumps(a.to_record(), sort_keys=True))
        for e in self.events:
            lines.append(json.dumps(e, sort_keys=True))
        return lines

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


def read_log(path) -> MetricsLog:
    """Parse a log file; malformed lines raise with their line number."""
    log = MetricsLog()
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.strip()
            if not line:
                continue
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as exc:
                raise MetricsLogError(lineno, f"invalid JSON: {exc.msg}") from exc
            kind = rec.get("type")
            try:
                if kind == "sample":
                    log.samples.append(Sample(rec["t"], rec["request_id"], rec["lane_deviation"],
                                              rec["progress_floor"], rec["progress_raw"],
                                              rec["slot"], rec["speed"]))
                elif kind == "pointer":
                    log.pointer_events.append(PointerEvent(rec["t"], rec["dx"], rec["dy"],
                                                           rec["px_per_cm"]))
                elif kind == "aoi":
                    log.aoi_events.append(AoiEvent(rec["t"], rec["area"], rec["enter"],
                                                   rec.get("source", "focus")))
                elif kind == "event":
                    log.events.append(rec)
                else:
                    raise MetricsLogError(lineno, f"unknown record type {kind!r}")
            except KeyError as exc:
                raise MetricsLogError(lineno, f"missing field {exc}") from exc
    return log


def deviation_time_sum(samples) -> float:
    """Sum of the 10 Hz lane deviations over every active request."""
    return float(sum(s.lane_deviation for s in samples))


def deviation_progress_sum(samples) -> float:
    """Progress-weighted lane deviation.

    Per request, deviations are bucketed by floored progress meter and
    averaged within each bucket; buckets are then joined across requests by
    progress value, averaged again over the requests present, and the
    per-meter averages summed. Time spent parked on one meter therefore
    counts once.
    """
    per_request: dict = {}
    for s in samples:
        buckets = per_request.setdefault(s.request_id, {})
        acc = buckets.setdefault(s.progress_floor, [0.0, 0])
        acc[0] += s.lane_deviation
        acc[1] += 1
    joined: dict = {}
    for buckets in per_request.values():
        for meter, (total, count) in buckets.items():
            acc = joined.setdefault(meter, [0.0, 0])
            acc[0] += total / count
            acc[1] += 1
    return float(sum(total / count for total, count in joined.values()))


def neglected_avg(intervals_per_request) -> float:
    """Cumulative neglected duration divided by the number of neglect
    intervals; 0 when nothing was neglected."""
    total = 0.0
    count = 0
    for intervals in intervals_per_request:
        for start, end in intervals:
            total += end - start
            count += 1
    return total / count if count else 0.0


def mouse_travel(events) -> float:
    """Pointer path length in centimeters (sum of step lengths, not net)."""
    return float(sum(math.hypot(e.dx, e.dy) / e.px_per_cm for e in events))


def aoi_shares(events, span: float) -> dict:
    """Dwell percentage per area of interest.

    Enter/leave events alternate per area; a missing leave is closed
    implicitly at the episode end. Unattributed time is excluded from the
    denominator, so shares sum to 100 whenever any dwell exists.
    """
    dwell = {area: 0.0 for area in AOI_AREAS}
    open_since = {}
    for e in sorted(events, key=lambda e: e.t):
        if e.enter:
            open_since.setdefault(e.area, e.t)
        elif e.area in open_since:
            dwell[e.area] += e.t - open_since.pop(e.area)
    for area, t0 in open_since.items():
        dwell[area] += max(0.0, span - t0)
    total = sum(dwell.values())
    if total <= 0.0:
        return {area: 0.0 for area in AOI_AREAS}
    return {area: 100.0 * dwell[area] / total for area in AOI_AREAS}


def build_report(log: MetricsLog, config_echo: dict | None = None) -> dict:
    """Compute the six per-episode scalars from a log."""
    missed = sum(1 for e in log.events if e["kind"] == "request_missed")
    per_request: dict = {}
    for rid, start, end in log.neglect_intervals():
        per_request.setdefault(rid, []).append((start, end))
    return {
        "missed_count": missed,
        "deviation_time_sum_m": deviation_time_sum(log.samples),
        "deviation_progress_sum_m": deviation_progress_sum(log.samples),
        "neglected_avg_s": neglected_avg(per_request.values()),
        "mouse_travel_cm": mouse_travel(log.pointer_events),
        "aoi_shares_pct": aoi_shares(log.aoi_events, log.episode_span()),
        "config": config_echo or {},
    }


def write_report(report: dict, path):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(report, fh, sort_keys=True, indent=2)
        fh.write("\n")


def read_report(path) -> dict:
    with open(path, "r", encoding="utf-8") as fh:
        return json.load(fh)
