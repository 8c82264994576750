"""Episode orchestration: request lifecycle, the main/secondary slot model,
neglect accounting, the 120 s clock, and resolution/expiry handling.

Every request runs in its own self-contained road scene. All mutation goes
through apply_message() and tick(), called from a single logical thread;
the server layer owns the producer/consumer command queue in front of them.
"""

import math
import random
from dataclasses import dataclass, field, replace

import numpy as np

from . import pathedit
from .dynamics import (ASSISTED, SIM_TICK, TRAFFIC, KinematicsConfig, VehicleState,
                       is_resolved, proximity_flags, step_traffic, step_vehicle)
from .geometry import Polyline
from .metrics import AoiEvent, MetricsLog, PointerEvent, Sample, DEFAULT_PX_PER_CM
from .pathedit import (DeleteWaypoint, EditRejected, InsertBetween, MoveWaypoint,
                       PlannedPath, Stroke, adopt_path, apply_merge, classify_merge,
                       generate_candidates, select_candidate, stroke_to_trajectory,
                       waypoint_place, waypoint_edit)
from .world import LEFT, RIGHT, ConfigError, ScenarioConfig, World, build_scenario, nearest_lane_center

QUEUED = "queued"
MAIN = "main"
SECONDARY = "secondary"
RESOLVED = "resolved"
MISSED = "missed"

TERMINAL = (RESOLVED, MISSED)

MAX_REQUESTS = 7
LINGER_S = 2.0
SNAPSHOT_EVERY = 3   # 20 Hz at the 60 Hz tick
SAMPLE_EVERY = 6     # 10 Hz metrics sampling

REASON_TEXT = "Road works ahead - outside ODD"


class SessionError(RuntimeError):
    pass


@dataclass
class AssistRequest:
    id: int
    vehicle_id: int
    reason: str = REASON_TEXT
    issued_at: float = 0.0
    state: str = QUEUED
    resolved_at: float | None = None
    linger_until: float | None = None
    linger_slot: str | None = None
    neglect_intervals: list = field(default_factory=list)
    neglect_open: float | None = None
    inputs: dict = field(default_factory=lambda: {"waypoint": 0, "trajectory": 0, "pathplan": 0})
    progress_trace: list = field(default_factory=list)

    @property
    def terminal(self) -> bool:
        return self.state in TERMINAL


@dataclass(frozen=True)
class EpisodeConfig:
    n_requests: int = 1
    time_budget: float = 120.0
    sides: tuple | None = None
    seed: int = 0
    scenario: ScenarioConfig = ScenarioConfig()
    kinematics: KinematicsConfig = KinematicsConfig()
    traffic_spawn_interval_s: float = 9.0
    max_traffic: int = 18
    initial_traffic_per_lane: int = 2
    record_poses: bool = False  # per-tick pose trace for safety audits

    def __post_init__(self):
        if not (1 <= self.n_requests <= MAX_REQUESTS):
            raise ConfigError(
                f"n_requests must be in [1, {MAX_REQUESTS}], got {self.n_requests}")
        if self.time_budget <= 0:
            raise ConfigError("time_budget must be positive")

    def side_of(self, i: int) -> str:
        if self.sides is not None:
            return self.sides[i % len(self.sides)]
        return LEFT if i % 2 == 0 else RIGHT


@dataclass
class Scene:
    """One request's private road instance."""

    world: World
    assisted: VehicleState
    traffic: list
    rng: random.Random
    next_spawn: dict
    next_vehicle_id: int
    stroke_buffer: dict | None = None


@dataclass
class Episode:
    config: EpisodeConfig
    scenes: list
    requests: list
    log: MetricsLog
    tick_index: int = 0
    ended: bool = False
    end_clock: float | None = None
    announcements: list = field(default_factory=list)
    pose_trace: list = field(default_factory=list)  # (tick, scene, vid, x, y, heading)

    @property
    def clock(self) -> float:
        return self.tick_index / 60.0

    def request(self, request_id: int) -> AssistRequest:
        return self.requests[request_id]

    def scene_of(self, request: AssistRequest) -> Scene:
        return self.scenes[request.vehicle_id]


def _initial_path(world: World, lane_id: int) -> PlannedPath:
    y = world.lane_center_y(lane_id)
    xs = np.arange(0.0, world.initial_path_m + 1e-9, 25.0)
    pts = np.array([(x, y) for x in xs])
    return PlannedPath(Polyline(pts), 0, pathedit.SOURCE_INITIAL)


def _build_scene(config: EpisodeConfig, index: int) -> Scene:
    side = config.side_of(index)
    world = build_scenario(replace(config.scenario, works_side=side))
    lane = world.start_lane()
    assisted = VehicleState(
        id=0, x=0.0, y=world.lane_center_y(lane), heading=0.0,
        speed=config.kinematics.approach_speed, path=_initial_path(world, lane),
        kind=ASSISTED, origin_s=0.0, lane=lane)
    rng = random.Random(f"{config.seed}/{index}")
    traffic = []
    next_id = 1
    for lane_spec in world.lanes:
        for j in range(config.initial_traffic_per_lane):
            x = -45.0 - 40.0 * j - rng.uniform(0.0, 10.0)
            traffic.append(VehicleState(
                id=next_id, x=x, y=lane_spec.center_y, speed=config.kinematics.approach_speed,
                kind=TRAFFIC, lane=lane_spec.lane_id))
            next_id += 1
    next_spawn = {l.lane_id: config.traffic_spawn_interval_s * (0.5 + 0.5 * rng.random())
                  for l in world.lanes}
    return Scene(world, assisted, traffic, rng, next_spawn, next_id)


def start_episode(config: EpisodeConfig) -> Episode:
    """Create all scenes and issue every request at clock 0."""
    if not (1 <= config.n_requests <= MAX_REQUESTS):
        raise ConfigError(f"n_requests must be in [1, {MAX_REQUESTS}], got {config.n_requests}")
    scenes = [_build_scene(config, i) for i in range(config.n_requests)]
    requests = [AssistRequest(id=i, vehicle_id=i) for i in range(config.n_requests)]
    log = MetricsLog()
    for r in requests:
        log.add_event("request_issued", request_id=r.id, clock=0.0, reason=r.reason)
    return Episode(config=config, scenes=scenes, requests=requests, log=log)


def assign_slot(episode: Episode, request_id: int, slot: str) -> None:
    """Drag a request between the list, the main view, and the secondary view.

    Moving into an occupied slot returns the displaced request to the queue;
    a lingering resolved request is evicted early. Terminal requests cannot
    be moved.
    """
    request = episode.request(request_id)
    if request.terminal:
        raise SessionError(f"request {request_id} is {request.state}: invalid transition")
    if slot not in (MAIN, SECONDARY, QUEUED, "queue"):
        raise SessionError(f"unknown slot {slot!r}")
    slot = QUEUED if slot == "queue" else slot
    if slot in (MAIN, SECONDARY):
        for other in episode.requests:
            if other.id != request_id and other.state == slot:
                other.state = QUEUED
            if other.linger_slot == slot:
                other.linger_slot = None
    request.state = slot


def needs_action(episode: Episode, request: AssistRequest) -> bool:
    """True when the request's vehicle is stopped, or within three seconds
    of stopping at the current deceleration, for want of a usable path."""
    if request.terminal:
        return False
    return episode.scene_of(request).assisted.needs_action_flag


def _step_scene(episode: Episode, scene: Scene) -> None:
    cfg = episode.config.kinematics
    world = scene.world
    step_vehicle(world, scene.assisted, scene.traffic, cfg)
    step_traffic(world, scene.traffic, [scene.assisted], cfg)
    # vehicles leave the scene at the far end, freeing spawn budget
    scene.traffic = [u for u in scene.traffic if u.x < world.road_max - 20.0]
    flags = proximity_flags(
        scene.assisted, scene.traffic,
        world.obstacles_between(scene.assisted.x - 10.0, scene.assisted.x + 10.0),
        cfg.proximity_radius)
    scene.assisted.proximity_front = flags["front"]
    scene.assisted.proximity_rear = flags["rear"]

    clock = episode.clock
    if len(scene.traffic) < episode.config.max_traffic:
        for lane_id, due in scene.next_spawn.items():
            if clock < due:
                continue
            lane_y = world.lane_center_y(lane_id)
            x_spawn = world.road_min + 10.0
            occupants = [u for u in scene.traffic + [scene.assisted]
                         if abs(u.y - lane_y) < 2.0 and -15.0 < u.x - x_spawn]
            ahead = [u for u in occupants if u.x > x_spawn]
            clear = all(u.x - x_spawn > 45.0 for u in ahead) and \
                all(x_spawn - u.x > 15.0 for u in occupants if u.x <= x_spawn)
            if clear:
                speed = cfg.approach_speed
                if ahead:
                    lead = min(ahead, key=lambda u: u.x)
                    gap = lead.x - x_spawn - 4.5
                    speed = min(speed, math.sqrt(
                        lead.speed ** 2 + 2.0 * cfg.max_decel * max(0.0, gap - cfg.min_gap - 5.0)))
                scene.traffic.append(VehicleState(
                    id=scene.next_vehicle_id, x=x_spawn, y=lane_y, speed=speed,
                    kind=TRAFFIC, lane=lane_id))
                scene.next_vehicle_id += 1
                scene.next_spawn[lane_id] = clock + episode.config.traffic_spawn_interval_s \
                    + scene.rng.uniform(-2.0, 2.0)
            # When blocked, retry shortly instead of skipping a whole period.
            else:
                scene.next_spawn[lane_id] = clock + 1.0


def tick(episode: Episode, dt: float = SIM_TICK) -> Episode:
    """Advance the episode by one fixed tick.

    Order: dynamics for every scene, then request lifecycle (resolution and
    linger), then neglect accounting, then 10 Hz sampling, then the budget
    check. Client messages are applied before this call by the server.
    """
    if episode.ended:
        raise SessionError("episode has ended")
    episode.tick_index += 1
    clock = episode.clock

    for scene in episode.scenes:
        _step_scene(episode, scene)

    if episode.config.record_poses:
        for si, scene in enumerate(episode.scenes):
            for u in [scene.assisted] + scene.traffic:
                episode.pose_trace.append(
                    (episode.tick_index, si, u.id, u.x, u.y, u.heading))

    for request in episode.requests:
        if request.terminal:
            if request.linger_slot and request.linger_until is not None \
                    and clock >= request.linger_until:
                request.linger_slot = None
            continue
        scene = episode.scene_of(request)
        if is_resolved(scene.world, scene.assisted):
            _close_neglect(episode, request, clock)
            request.linger_slot = request.state if request.state in (MAIN, SECONDARY) else None
            request.state = RESOLVED
            request.resolved_at = clock
            request.linger_until = clock + LINGER_S
            _resume_autonomous(scene)
            episode.announcements.append(
                {"clock": clock, "request_id": request.id,
                 "text": "Vehicle resumes autonomous operation"})
            episode.log.add_event("request_resolved", request_id=request.id, clock=clock)

    for request in episode.requests:
        if request.terminal:
            continue
        neglected = needs_action(episode, request) and request.state != MAIN
        if neglected and request.neglect_open is None:
            request.neglect_open = clock
        elif not neglected and request.neglect_open is not None:
            _close_neglect(episode, request, clock)

    if episode.tick_index % SAMPLE_EVERY == 0:
        for request in episode.requests:
            if request.terminal:
                continue
            scene = episode.scene_of(request)
            v = scene.assisted
            _, _, deviation = nearest_lane_center(scene.world, (v.x, v.y))
            episode.log.samples.append(Sample(
                t=clock, request_id=request.id, lane_deviation=deviation,
                progress_floor=int(math.floor(v.progress_max)),
                progress_raw=v.progress_raw, slot=request.state, speed=v.speed))
            request.progress_trace.append(v.progress_max)

    budget = episode.config.time_budget
    if clock >= budget - 1e-9:
        for request in episode.requests:
            if not request.terminal:
                _close_neglect(episode, request, budget)
                request.state = MISSED
                episode.log.add_event("request_missed", request_id=request.id, clock=budget)
        _end(episode, budget)
    elif all(r.terminal for r in episode.requests) and \
            all(r.linger_until is None or clock >= r.linger_until
                for r in episode.requests):
        _end(episode, clock)
    return episode


def _resume_autonomous(scene: Scene) -> None:
    """A resolved vehicle drives on by itself: extend its path along the
    nearest lane center to the end of the road so it leaves the scene."""
    v = scene.assisted
    old = v.path.waypoints if v.path is not None else None
    anchor = old.points[-1] if old is not None else (v.x, v.y)
    lane_id, _, _ = nearest_lane_center(scene.world, anchor)
    y = scene.world.lane_center_y(lane_id)
    start_x = float(anchor[0]) if old is not None else v.x
    xs = np.arange(start_x + 25.0, scene.world.road_max + 1e-9, 25.0)
    if xs.size == 0:
        return
    tail = np.array([(x, y) for x in xs])
    if old is not None:
        pts = pathedit._enforce_angles(
            [p for p in old.points] + [p for p in tail],
            protect=v.path.committed_index)
        v.path = PlannedPath(Polyline(np.array(pts)), v.path.committed_index,
                             v.path.source)
    else:
        v.path = PlannedPath(Polyline(tail), 0, pathedit.SOURCE_PATHPLAN)


def _close_neglect(episode: Episode, request: AssistRequest, clock: float) -> None:
    if request.neglect_open is not None:
        interval = (request.neglect_open, clock)
        request.neglect_intervals.append(interval)
        episode.log.add_event("neglect_interval", request_id=request.id,
                              start=interval[0], end=interval[1])
        request.neglect_open = None


def _end(episode: Episode, clock: float) -> None:
    episode.ended = True
    episode.end_clock = clock
    episode.log.add_event("episode_end", clock=clock,
                          resolved=sum(1 for r in episode.requests if r.state == RESOLVED),
                          missed=sum(1 for r in episode.requests if r.state == MISSED))


def episode_summary(episode: Episode) -> dict:
    """Immutable outcome record; identical inputs give identical output."""
    if not episode.ended:
        raise SessionError("episode has not ended")
    return {
        "n_requests": episode.config.n_requests,
        "resolved": sum(1 for r in episode.requests if r.state == RESOLVED),
        "missed": sum(1 for r in episode.requests if r.state == MISSED),
        "ended_at": episode.end_clock,
        "requests": [
            {
                "id": r.id,
                "state": r.state,
                "resolved_at": r.resolved_at,
                "neglect_intervals": [list(iv) for iv in r.neglect_intervals],
                "inputs": dict(r.inputs),
                "progress_max": episode.scenes[r.vehicle_id].assisted.progress_max,
                "progress_trace": list(r.progress_trace),
            }
            for r in episode.requests
        ],
    }


def _main_request(episode: Episode, request_id: int) -> tuple:
    if not (0 <= request_id < len(episode.requests)):
        return None, "unknown_request"
    request = episode.request(request_id)
    if request.terminal:
        return None, "terminal_request"
    if request.state != MAIN:
        return None, "not_main"
    return request, None


def apply_message(episode: Episode, msg: dict) -> tuple[bool, str | None]:
    """Apply one client message; returns (applied, reject_reason).

    Path inputs are accepted only for the request occupying the main slot
    and leave no trace when rejected. Pointer and AOI messages feed the
    metrics log directly.
    """
    if episode.ended:
        return False, "ended"
    kind = msg.get("type")
    clock = episode.clock
    try:
        if kind == "slot_assign":
            assign_slot(episode, int(msg["request_id"]), msg["slot"])
            return True, None
        if kind == "pointer_moved":
            episode.log.pointer_events.append(PointerEvent(
                t=clock, dx=float(msg["dx"]), dy=float(msg["dy"]),
                px_per_cm=float(msg.get("px_per_cm", DEFAULT_PX_PER_CM))))
            return True, None
        if kind == "aoi_change":
            episode.log.aoi_events.append(AoiEvent(
                t=clock, area=msg["area"], enter=bool(msg["enter"])))
            return True, None
        if kind in ("focus_toggle", "view_drag"):
            return True, None  # client-authoritative view state, nothing to do

        request, err = _main_request(episode, int(msg.get("request_id", -1)))
        if err:
            return False, err
        scene = episode.scene_of(request)
        v = scene.assisted

        if kind == "waypoint_place":
            v.path = waypoint_place(
                v.path, (float(msg["x"]), float(msg["y"])), scene.world,
                snap=bool(msg.get("snap", False)), view_center=(v.x, v.y))
            request.inputs["waypoint"] += 1
            return True, None
        if kind == "waypoint_edit":
            edit_kind = msg["edit"]
            index = int(msg["index"])
            if edit_kind == "insert":
                edit = InsertBetween(index, (float(msg["x"]), float(msg["y"])))
            elif edit_kind == "move":
                edit = MoveWaypoint(index, (float(msg["x"]), float(msg["y"])))
            elif edit_kind == "delete":
                edit = DeleteWaypoint(index)
            else:
                return False, "unknown_edit"
            v.path = waypoint_edit(v.path, edit, scene.world, snap=bool(msg.get("snap", False)))
            request.inputs["waypoint"] += 1
            return True, None
        if kind == "stroke_begin":
            scene.stroke_buffer = {"snap": bool(msg.get("snap", False)), "samples": []}
            return True, None
        if kind == "stroke_sample":
            if scene.stroke_buffer is None:
                return False, "stroke_not_open"
            scene.stroke_buffer["samples"].append(
                (float(msg["x"]), float(msg["y"]), float(msg["t"])))
            return True, None
        if kind == "stroke_end":
            if scene.stroke_buffer is None:
                return False, "stroke_not_open"
            buf, scene.stroke_buffer = scene.stroke_buffer, None
            stroke = Stroke(tuple(buf["samples"]), snap_mode=buf["snap"])
            line = stroke_to_trajectory(stroke, scene.world)
            cls = classify_merge(v.path, line)
            v.path = apply_merge(v.path, line, cls)
            request.inputs["trajectory"] += 1
            return True, None
        if kind == "candidate_select":
            shown = int(msg.get("generation_tick", episode.tick_index))
            if episode.tick_index - shown > 60:
                return False, "stale_selection"
            cset = generate_candidates(scene.world, (v.x, v.y), v.heading,
                                       generation_tick=episode.tick_index)
            reverse = bool(msg.get("reverse", False))
            candidate = select_candidate(cset, int(msg["index"]), reverse)
            v.path = adopt_path(v.path, candidate, reverse=reverse)
            request.inputs["pathplan"] += 1
            return True, None
        return False, "unknown_type"
    except EditRejected as exc:
        return False, exc.reason
    except SessionError:
        return False, "invalid_transition"
    except (KeyError, TypeError, ValueError):
        return False, "malformed_message"
