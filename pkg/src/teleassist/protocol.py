"""Wire protocol between the session core and an operator client (human
console or bot), plus the deterministic recording/replay format.

Messages are UTF-8 JSON objects, one per line (or per WebSocket text
frame), tagged with ``type``. A recording file is a header line followed by
``{"type": "input", "tick": N, "message": {...}}`` lines; replaying one
against the same seed and config reproduces the episode summary and the
metrics log byte for byte.
"""

import json
from dataclasses import dataclass, field

from . import session as session_mod
from .session import Episode, EpisodeConfig, apply_message, episode_summary, start_episode, tick
from .world import ScenarioConfig

PROTOCOL_VERSION = "1"

# every operator message carries a client timestamp `t`; the two
# connection-control messages are the only exceptions
CLIENT_TYPES = {
    # Sent once right after connecting: gives the framing sniffer its first
    # bytes (a WebSocket client's HTTP GET serves the same purpose).
    "client_hello": (),
    "slot_assign": ("request_id", "slot", "t"),
    "waypoint_place": ("request_id", "x", "y", "t"),
    "waypoint_edit": ("request_id", "edit", "index", "t"),
    "stroke_begin": ("request_id", "t"),
    "stroke_sample": ("request_id", "x", "y", "t"),
    "stroke_end": ("request_id", "t"),
    "candidate_select": ("request_id", "index", "t"),
    "focus_toggle": ("mode", "on", "t"),
    "view_drag": ("dx", "dy", "t"),
    "pointer_moved": ("dx", "dy", "t"),
    "aoi_change": ("area", "enter", "t"),
    "ack": ("tick",),
}

SERVER_TYPES = {
    "hello": ("protocol_version", "config"),
    "snapshot": ("tick", "clock", "requests"),
    "resolved": ("request_id", "clock"),
    "episode_end": ("summary",),
    "reject": ("reason",),
    "error": ("message",),
}


class ProtocolError(ValueError):
    pass


def encode(message: dict) -> str:
    """One message, one line. Canonical key order keeps recordings stable."""
    return json.dumps(message, sort_keys=True, separators=(",", ":"))


def decode(line: str) -> dict:
    """Parse and validate one message line; unknown tags and missing fields
    are named in the error."""
    try:
        msg = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid message line: {exc.msg}") from exc
    if not isinstance(msg, dict):
        raise ProtocolError("message must be a JSON object")
    kind = msg.get("type")
    if kind in CLIENT_TYPES:
        required = CLIENT_TYPES[kind]
    elif kind in SERVER_TYPES:
        required = SERVER_TYPES[kind]
    else:
        raise ProtocolError(f"unknown message type {kind!r}")
    missing = [f for f in required if f not in msg]
    if missing:
        raise ProtocolError(f"message {kind!r} missing fields {missing}")
    return msg


def config_to_wire(config: EpisodeConfig) -> dict:
    sc = config.scenario
    return {
        "n_requests": config.n_requests,
        "time_budget": config.time_budget,
        "seed": config.seed,
        "sides": [config.side_of(i) for i in range(config.n_requests)],
        "lane_count": sc.lane_count,
        "lane_width_m": sc.lane_width_m,
        "works_start_m": sc.works_start_m,
        "works_end_m": sc.works_end_m,
        "view_range_m": sc.view_range_m,
        "resolution_distance_m": sc.resolution_distance_m,
        "initial_path_m": sc.initial_path_m,
        "traffic_spawn_interval_s": config.traffic_spawn_interval_s,
        "max_traffic": config.max_traffic,
        "initial_traffic_per_lane": config.initial_traffic_per_lane,
    }


def config_from_wire(wire: dict) -> EpisodeConfig:
    scenario = ScenarioConfig(
        lane_count=int(wire["lane_count"]),
        lane_width_m=float(wire["lane_width_m"]),
        works_start_m=float(wire["works_start_m"]),
        works_end_m=float(wire["works_end_m"]),
        view_range_m=float(wire["view_range_m"]),
        resolution_distance_m=float(wire["resolution_distance_m"]),
        initial_path_m=float(wire["initial_path_m"]),
    )
    return EpisodeConfig(
        n_requests=int(wire["n_requests"]),
        time_budget=float(wire["time_budget"]),
        sides=tuple(wire["sides"]),
        seed=int(wire["seed"]),
        scenario=scenario,
        traffic_spawn_interval_s=float(wire.get("traffic_spawn_interval_s", 9.0)),
        max_traffic=int(wire.get("max_traffic", 18)),
        initial_traffic_per_lane=int(wire.get("initial_traffic_per_lane", 2)),
    )


def hello_message(config: EpisodeConfig, episode: Episode | None = None) -> dict:
    """Handshake: protocol version, episode config, and the static geometry
    of every request's scene (lanes, works extent, obstacle discs)."""
    msg = {"type": "hello", "protocol_version": PROTOCOL_VERSION,
           "config": config_to_wire(config)}
    if episode is not None:
        scenes = []
        for scene in episode.scenes:
            w = scene.world
            scenes.append({
                "side": w.works.side,
                "works": {"start_m": w.works.start_s, "end_m": w.works.end_s,
                          "blocked_lanes": sorted(w.works.blocked_lanes)},
                "lane_centers_y": [l.center_y for l in w.lanes],
                "road_min": w.road_min,
                "road_max": w.road_max,
                "obstacles": [[o.center[0], o.center[1], o.radius] for o in w.obstacles],
            })
        msg["scenes"] = scenes
    return msg


def _path_points(path) -> list:
    return [[float(x), float(y)] for x, y in path.waypoints.points]


def snapshot_message(episode: Episode) -> dict:
    """Full per-request UI state at the current tick."""
    from .pathedit import generate_candidates  # local import keeps module load light

    requests = []
    for r in episode.requests:
        scene = episode.scene_of(r)
        v = scene.assisted
        line = v.path.waypoints if v.path else None
        remaining = 0.0
        if line is not None:
            s_here, _, _ = line.nearest((v.x, v.y))
            remaining = max(0.0, line.length - s_here)
        # candidates are an input affordance: only the main-slot request is
        # steerable, so only it carries a fresh candidate set
        cset = None
        if r.state == session_mod.MAIN:
            cset = generate_candidates(scene.world, (v.x, v.y), v.heading,
                                       generation_tick=episode.tick_index)
        requests.append({
            "id": r.id,
            "state": r.state,
            "linger_slot": r.linger_slot,
            "reason": r.reason,
            "needs_action": session_mod.needs_action(episode, r),
            "vehicle": {"x": v.x, "y": v.y, "heading": v.heading, "speed": v.speed,
                        "stopped_by_collision": v.stopped_by_collision},
            "proximity": {"front": v.proximity_front, "rear": v.proximity_rear},
            "progress_raw": v.progress_raw,
            "progress_max": v.progress_max,
            "remaining_path_m": remaining,
            "path_end_progress_m": v.progress_raw + remaining,
            "path": _path_points(v.path) if v.path else [],
            "committed_index": v.path.committed_index if v.path else 0,
            "candidates": None if cset is None else {
                "generation_tick": cset.generation_tick,
                "forward": [_path_points(c) for c in cset.forward],
                "reverse": [_path_points(c) for c in cset.reverse],
            },
            "traffic": [{"x": u.x, "y": u.y, "heading": u.heading, "speed": u.speed}
                        for u in scene.traffic],
        })
    announcements = [a for a in episode.announcements
                     if episode.clock - a["clock"] <= _ANNOUNCE_WINDOW_S]
    return {"type": "snapshot", "tick": episode.tick_index, "clock": episode.clock,
            "requests": requests, "announcements": announcements}


_ANNOUNCE_WINDOW_S = 3.0


@dataclass
class SessionRecording:
    """Seed, config, and the ordered (tick, message) list of applied inputs."""

    seed: int
    config_wire: dict
    protocol_version: str = PROTOCOL_VERSION
    entries: list = field(default_factory=list)  # (tick, message) pairs
    gaps: list = field(default_factory=list)     # ticks where the client vanished

    def add(self, tick_index: int, message: dict):
        self.entries.append((tick_index, message))

    def to_lines(self) -> list:
        header = {"type": "header", "protocol_version": self.protocol_version,
                  "seed": self.seed, "config": self.config_wire}
        lines = [json.dumps(header, sort_keys=True)]
        events = [(t, 0, {"type": "input", "tick": t, "message": m}) for t, m in self.entries]
        events += [(t, 1, {"type": "client_gap", "tick": t}) for t in self.gaps]
        for _, _, rec in sorted(events, key=lambda e: (e[0], e[1])):
            lines.append(json.dumps(rec, sort_keys=True))
        return lines

    def write(self, path):
        with open(path, "w", encoding="utf-8") as fh:
            for line in self.to_lines():
                fh.write(line + "\n")


def read_recording(path) -> SessionRecording:
    with open(path, "r", encoding="utf-8") as fh:
        lines = [l.strip() for l in fh if l.strip()]
    if not lines:
        raise ProtocolError("empty recording file: missing header")
    header = json.loads(lines[0])
    if header.get("type") != "header":
        raise ProtocolError("recording must start with a header line")
    version = header.get("protocol_version")
    if version != PROTOCOL_VERSION:
        raise ProtocolError(
            f"recording protocol_version {version!r} does not match this build's "
            f"{PROTOCOL_VERSION!r}")
    rec = SessionRecording(seed=int(header["seed"]), config_wire=header["config"],
                           protocol_version=version)
    for lineno, line in enumerate(lines[1:], start=2):
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise ProtocolError(f"recording line {lineno}: {exc.msg}") from exc
        if obj.get("type") == "input":
            rec.entries.append((int(obj["tick"]), obj["message"]))
        elif obj.get("type") == "client_gap":
            rec.gaps.append(int(obj["tick"]))
        else:
            raise ProtocolError(f"recording line {lineno}: unknown record {obj.get('type')!r}")
    return rec


def new_recording(config: EpisodeConfig) -> SessionRecording:
    return SessionRecording(seed=config.seed, config_wire=config_to_wire(config))


def replay(recording: SessionRecording) -> tuple[dict, Episode]:
    """Re-run a recording headless; returns (summary, finished episode).

    Messages are applied at their recorded tick boundaries, so the outcome
    matches the live run's summary and metrics log exactly.
    """
    config = config_from_wire(recording.config_wire)
    episode = start_episode(config)
    pending = sorted(recording.entries, key=lambda e: (e[0],))
    i = 0
    # Entries recorded at tick t were applied when the episode was at tick t,
    # before the next advance.
    while not episode.ended:
        while i < len(pending) and pending[i][0] <= episode.tick_index:
            apply_message(episode, pending[i][1])
            i += 1
        tick(episode)
    return episode_summary(episode), episode
