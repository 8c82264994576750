"""Vehicle motion: path following with cruise control and collision-stop for
assisted vehicles, plus background traffic with gap keeping, the in-works
overtaking ban, and jam formation.

Everything here is deterministic in (state, config, dt); the session owns
the single tick loop that mutates state.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .pathedit import PlannedPath
from .world import World, progress_along

SIM_TICK = 1.0 / 60.0
VEHICLE_LENGTH = 4.5
VEHICLE_WIDTH = 2.0
KMH = 1.0 / 3.6

ASSISTED = "assisted"
TRAFFIC = "traffic"

STOP_NONE = "none"
STOP_PATH_END = "path_end"
STOP_BLOCKED = "blocked"

_END_MARGIN = 0.3       # stop this short of the final waypoint
_CORRIDOR_HALF = 2.8    # lateral window for leader detection
_LANE_RATE = 1.4        # traffic lateral ramp speed, m/s


@dataclass(frozen=True)
class KinematicsConfig:
    approach_speed: float = 120.0 * KMH
    works_speed: float = 30.0 * KMH
    max_accel: float = 2.0
    max_decel: float = 3.0
    proximity_radius: float = 5.0
    stop_standoff: float = 5.0
    lookahead: float = 12.0
    reverse_speed: float = 2.0
    headway_s: float = 1.5
    min_gap: float = 2.0


@dataclass
class VehicleState:
    id: int
    x: float
    y: float
    heading: float = 0.0
    speed: float = 0.0
    path: PlannedPath | None = None
    kind: str = TRAFFIC
    origin_s: float = 0.0
    progress_raw: float = 0.0
    progress_max: float = 0.0
    stopped_by_collision: bool = False
    proximity_front: bool = False
    proximity_rear: bool = False
    lane: int = 0
    stop_reason: str = STOP_NONE
    needs_action_flag: bool = False
    _change_from: int | None = field(default=None, repr=False)

    @property
    def position(self) -> np.ndarray:
        return np.array([self.x, self.y])

    def heading_vec(self) -> np.ndarray:
        return np.array([math.cos(self.heading), math.sin(self.heading)])


def footprint_corners(x: float, y: float, heading: float) -> np.ndarray:
    """Corners of the 2.0 m x 4.5 m vehicle rectangle, centered on the pose."""
    hl, hw = VEHICLE_LENGTH / 2.0, VEHICLE_WIDTH / 2.0
    c, s = math.cos(heading), math.sin(heading)
    local = np.array([(hl, hw), (hl, -hw), (-hl, -hw), (-hl, hw)])
    rot = np.array([[c, -s], [s, c]])
    return local @ rot.T + np.array([x, y])


def rects_overlap(a: np.ndarray, b: np.ndarray) -> bool:
    """Separating-axis test for two convex quads."""
    for rect in (a, b):
        for i in range(4):
            edge = rect[(i + 1) % 4] - rect[i]
            axis = np.array([-edge[1], edge[0]])
            pa = a @ axis
            pb = b @ axis
            if pa.max() < pb.min() or pb.max() < pa.min():
                return False
    return True


def _zone_speed(world: World, cfg: KinematicsConfig, x: float) -> float:
    """Speed limit at x, with a braking envelope ahead of the works so the
    in-works cap is met strictly on entry (the 2 m margin absorbs the
    discrete integration lag)."""
    works = world.works
    if works.start_s <= x <= works.end_s:
        return cfg.works_speed
    if x < works.start_s:
        room = max(0.0, works.start_s - x - 2.0)
        env = math.sqrt(cfg.works_speed ** 2 + 2.0 * cfg.max_decel * room)
        return min(cfg.approach_speed, env)
    return cfg.approach_speed


def _scan_blockers(world: World, v: VehicleState, others, horizon: float,
                   clearance: float = 1.5) -> float | None:
    """Along-path distance from the vehicle to the first obstacle or vehicle
    conflicting with its path corridor, or None when clear."""
    path = v.path
    line = path.waypoints
    s0, _, _ = line.nearest((v.x, v.y))
    s_hi = min(line.length, s0 + horizon)
    best = None
    x_lo, x_hi = v.x - horizon - 5.0, v.x + horizon + 5.0
    obstacles = world.obstacles_between(x_lo, x_hi)
    if obstacles:
        arc = _nearest_arcs(line, np.array([o.center for o in obstacles]),
                            clearance + max(o.radius for o in obstacles))
        if arc is not None:
            hits = arc[(arc >= s0 - 0.5) & (arc <= s_hi)]
            if hits.size:
                best = float(hits.min()) - s0
    for other in others:
        if other.id == v.id:
            continue
        if not (x_lo <= other.x <= x_hi):
            continue
        s, foot, d = line.nearest((other.x, other.y))
        if d <= clearance + VEHICLE_WIDTH / 2.0 and s0 + 0.5 <= s <= s_hi:
            gap = s - s0 - VEHICLE_LENGTH
            if best is None or gap < best:
                best = gap
    merge = _merge_yield_distance(v, line, s0, others, accel=1.0)
    if merge is not None and (best is None or merge < best):
        best = merge
    return best


def _nearest_arcs(line, centers: np.ndarray, reach: float) -> np.ndarray | None:
    """Arc positions of the points whose distance to the line is within
    reach, over a batch of query centers; None when nothing is close."""
    pts = line.points
    a = pts[:-1]
    ab = pts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", ab, ab)
    rel = centers[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("kmj,mj->km", rel, ab) / seg_len2, 0.0, 1.0)
    feet = a[None, :, :] + t[..., None] * ab[None, :, :]
    d2 = np.einsum("kmj,kmj->km", feet - centers[:, None, :],
                   feet - centers[:, None, :])
    near = d2.min(axis=1) <= reach * reach
    if not np.any(near):
        return None
    seg = np.argmin(d2[near], axis=1)
    rows = np.flatnonzero(near)
    seg_s = line.cumulative_s[:-1]
    return seg_s[seg] + t[rows, seg] * np.sqrt(seg_len2[seg])


def _merge_yield_distance(v: VehicleState, line, s0: float, others,
                          accel: float = 2.0, horizon: float = 70.0) -> float | None:
    """Gap acceptance for lane crossings.

    A path sample ahead whose lateral corridor a faster vehicle is closing
    on from behind becomes a blocker until that vehicle has passed.
    Followers already in the vehicle's own corridor are exempt: they keep
    the gap themselves.
    """
    # cheap prefilter: a conflict needs a faster vehicle outside my own
    # corridor somewhere behind the horizon; most ticks have none
    threats = [o for o in others
               if o.id != v.id and o.speed > v.speed + 0.5
               and abs(o.y - v.y) > 2.0 and o.x < v.x + horizon]
    if not threats:
        return None
    s_hi = min(line.length, s0 + horizon)
    s = s0 + 1.0
    while s <= s_hi:
        p = line.point_at(s)
        py = float(p[1])
        d = s - s0
        # achievable arrival time from the current speed
        t_me = (math.sqrt(v.speed ** 2 + 2.0 * accel * d) - v.speed) / accel
        for other in threats:
            if other.x >= p[0]:
                continue
            if abs(other.y - py) > 2.5:
                continue
            t_other = (float(p[0]) - other.x) / max(other.speed, 0.1)
            if t_other < t_me + 2.0:
                return d
        s += 2.0
    return None


def step_vehicle(world: World, v: VehicleState, others, cfg: KinematicsConfig,
                 dt: float = SIM_TICK) -> VehicleState:
    """Advance an assisted vehicle one tick along its planned path.

    Pure-pursuit tracking toward a lookahead point; speed ramps toward the
    zone target and decelerates to stop at the path end or behind anything
    within stop_standoff along the path. Mutates and returns v.
    """
    path = v.path
    if path is None:
        v.speed = max(0.0, v.speed - cfg.max_decel * dt)
        v.stop_reason = STOP_PATH_END
        _update_progress(world, v)
        return v

    line = path.waypoints
    s_path, _, _ = line.nearest((v.x, v.y))
    remaining = line.length - s_path

    tangent = line.tangent_at(min(s_path + 0.05, line.length))
    heading_vec = v.heading_vec()
    reverse = float(np.dot(tangent, heading_vec)) < 0.0

    d_block = _scan_blockers(world, v, others, horizon=max(60.0, v.speed * 4.0))
    v_end = math.sqrt(2.0 * cfg.max_decel * max(0.0, remaining - _END_MARGIN))
    decel = cfg.max_decel
    if d_block is None:
        v_obs = float("inf")
    else:
        brake_room = max(0.0, d_block - cfg.stop_standoff)
        v_obs = math.sqrt(2.0 * cfg.max_decel * brake_room)
        # a blocker that appears inside the comfort braking distance (a path
        # just adopted across occupied space) gets an emergency response
        if v.speed ** 2 > 2.0 * cfg.max_decel * brake_room:
            decel = 3.0 * cfg.max_decel
    if reverse:
        v_zone = cfg.reverse_speed
    else:
        v_zone = _zone_speed(world, cfg, v.x)
    target = min(v_zone, v_end, v_obs)
    if target < 0.05:
        target = 0.0
    speed = min(target, v.speed + cfg.max_accel * dt)
    speed = max(speed, v.speed - decel * dt, 0.0)
    if speed < 0.02 and target == 0.0:
        speed = 0.0
    # zone compliance is exact, not best-effort
    speed = min(speed, v_zone)

    blocked = d_block is not None and d_block <= cfg.stop_standoff + 0.1
    if speed > 0.0:
        lookahead = min(25.0, max(cfg.lookahead, 0.6 * speed))
        goal = line.point_at(min(s_path + lookahead, line.length))
        motion = v.heading + (math.pi if reverse else 0.0)
        to_goal = math.atan2(goal[1] - v.y, goal[0] - v.x)
        alpha = _wrap_angle(to_goal - motion)
        curvature = min(0.3, max(-0.3, 2.0 * math.sin(alpha) / lookahead))
        motion += speed * curvature * dt
        v.x += speed * dt * math.cos(motion)
        v.y += speed * dt * math.sin(motion)
        v.heading = _wrap_angle(motion - (math.pi if reverse else 0.0))

    v.speed = speed
    v.stopped_by_collision = blocked and speed == 0.0
    if blocked:
        v.stop_reason = STOP_BLOCKED
    elif remaining - _END_MARGIN <= v.speed ** 2 / (2.0 * cfg.max_decel) + 0.1:
        v.stop_reason = STOP_PATH_END
    else:
        v.stop_reason = STOP_NONE

    # Imminent-stop predicate used by the session's neglect accounting:
    # the vehicle is stopped at a constraint, or braking for one and at most
    # three seconds from standstill at the configured deceleration.
    d_stop = remaining - _END_MARGIN
    if d_block is not None:
        d_stop = min(d_stop, d_block - cfg.stop_standoff)
    braking_for_stop = d_stop <= v.speed ** 2 / (2.0 * cfg.max_decel) + 0.1
    v.needs_action_flag = braking_for_stop and (v.speed == 0.0 or v.speed / cfg.max_decel <= 3.0)

    s_after, _, _ = line.nearest((v.x, v.y))
    idx = int(np.searchsorted(line.cumulative_s, s_after + 1e-9, side="right")) - 1
    if idx > path.committed_index:
        v.path = path.with_committed(min(idx, len(line) - 1))
    _update_progress(world, v)
    return v


def _update_progress(world: World, v: VehicleState):
    v.progress_raw = progress_along(world, v.origin_s, (v.x, v.y))
    v.progress_max = max(v.progress_max, v.progress_raw)


def _wrap_angle(a: float) -> float:
    while a > math.pi:
        a -= 2.0 * math.pi
    while a < -math.pi:
        a += 2.0 * math.pi
    return a


def proximity_flags(v: VehicleState, others, obstacles, radius: float = 5.0) -> dict:
    """Front/rear presence flags: anything within radius, split by the
    forward half-plane of the pose."""
    front = rear = False
    hv = v.heading_vec()
    pos = v.position
    points = []
    for other in others:
        if other.id != v.id and abs(other.x - v.x) < radius + VEHICLE_LENGTH:
            points.extend(footprint_corners(other.x, other.y, other.heading))
            points.append((other.x, other.y))
    for obs in obstacles:
        if abs(obs.center[0] - v.x) < radius + 1.0:
            points.append(obs.center)
    for p in points:
        rel = np.asarray(p, dtype=float) - pos
        if float(np.linalg.norm(rel)) <= radius:
            if float(np.dot(rel, hv)) >= 0.0:
                front = True
            else:
                rear = True
    return {"front": front, "rear": rear}


def _lane_is_clear(candidates, lane_id: int, x: float, lane_y: float, window: float = 25.0) -> bool:
    for u in candidates:
        # traffic claims its assigned lane (and its origin while ramping);
        # assisted vehicles follow arbitrary paths, so only their actual
        # lateral position counts
        occupies = abs(u.y - lane_y) < 2.0
        if u.kind == TRAFFIC:
            occupies = occupies or u.lane == lane_id or u._change_from == lane_id
        if occupies and abs(u.x - x) < window:
            return False
    return True


def step_traffic(world: World, traffic, assisted, cfg: KinematicsConfig,
                 dt: float = SIM_TICK):
    """Advance background traffic one tick.

    Gap keeping against the nearest leader in the lateral corridor
    (including assisted vehicles), lane changes only outside the works zone,
    and a mandatory merge out of blocked lanes ahead of the taper. Inside
    the works it is strictly follow-the-leader, so a stalled vehicle
    accumulates a queue. Mutates the traffic states in place.
    """
    everyone = list(traffic) + list(assisted)
    order = sorted(traffic, key=lambda u: (-u.x, u.id))
    works = world.works
    for u in order:
        leader = None
        gap = float("inf")
        for other in everyone:
            if other.id == u.id or other.x <= u.x:
                continue
            # a laterally moving vehicle ahead counts as occupying both its
            # current corridor and where its heading puts it within a second
            proj_y = other.y + other.speed * math.sin(other.heading) * 1.0
            if abs(other.y - u.y) < _CORRIDOR_HALF or abs(proj_y - u.y) < _CORRIDOR_HALF:
                g = other.x - u.x - VEHICLE_LENGTH
                if g < gap:
                    gap = g
                    leader = other

        v_zone = _zone_speed(world, cfg, u.x)
        v_gap = float("inf")
        decel = cfg.max_decel
        if leader is not None:
            brake_room = max(0.0, gap - cfg.min_gap - u.speed * dt)
            v_gap = min(
                math.sqrt(leader.speed ** 2 + 2.0 * cfg.max_decel * brake_room),
                max(0.0, gap) / cfg.headway_s,
            )
            # an infeasible gap (cut-in, spawn anomaly) permits emergency
            # braking beyond the comfort limit
            if u.speed ** 2 - leader.speed ** 2 > 2.0 * cfg.max_decel * brake_room:
                decel = 3.0 * cfg.max_decel
        v_works_queue = float("inf")
        blocked_lane = u.lane in works.blocked_lanes
        if blocked_lane and u.x < works.start_s:
            v_works_queue = math.sqrt(2.0 * cfg.max_decel * max(0.0, works.start_s - 6.0 - u.x))

        target = min(v_zone, v_gap, v_works_queue)
        if target < 0.05:
            target = 0.0
        speed = min(target, u.speed + cfg.max_accel * dt)
        speed = max(speed, u.speed - decel * dt, 0.0)
        if speed < 0.02 and target == 0.0:
            speed = 0.0
        u.speed = min(speed, v_zone)

        # Lane changes: barred inside and just ahead of the works span.
        can_change = u.x < works.start_s - 30.0 or u.x > works.end_s
        if can_change:
            options = []
            if blocked_lane and 0.0 < works.start_s - u.x < 160.0:
                options = [l for l in (u.lane - 1, u.lane + 1)
                           if 0 <= l < world.lane_count and l not in works.blocked_lanes]
            elif leader is not None and leader.speed < 2.0 and gap < 25.0 and u.speed < 8.0:
                options = [l for l in (u.lane + 1, u.lane - 1)
                           if 0 <= l < world.lane_count
                           and not works.blocks(l, u.x)
                           and not (l in works.blocked_lanes and works.start_s - u.x < 200.0)]
            for lane_id in options:
                lane_y = world.lane_center_y(lane_id)
                if not _lane_is_clear(everyone, lane_id, u.x, lane_y):
                    continue
                # braking feasibility both ways: me against the new leader,
                # and the new follower against me
                new_lead = new_follower = None
                for other in everyone:
                    if other.id == u.id or abs(other.y - lane_y) >= _CORRIDOR_HALF:
                        continue
                    if other.x > u.x and (new_lead is None or other.x < new_lead.x):
                        new_lead = other
                    if other.x < u.x and (new_follower is None or other.x > new_follower.x):
                        new_follower = other
                if new_lead is not None:
                    room = new_lead.x - u.x - VEHICLE_LENGTH - cfg.min_gap
                    if u.speed ** 2 - new_lead.speed ** 2 > 2.0 * cfg.max_decel * max(0.0, room):
                        continue
                if new_follower is not None:
                    room = u.x - new_follower.x - VEHICLE_LENGTH - cfg.min_gap
                    if new_follower.speed ** 2 - u.speed ** 2 > 2.0 * cfg.max_decel * max(0.0, room):
                        continue
                u._change_from = u.lane
                u.lane = lane_id
                break

        u.x += u.speed * dt
        target_y = world.lane_center_y(u.lane)
        dy = target_y - u.y
        step_y = max(-_LANE_RATE * dt, min(_LANE_RATE * dt, dy))
        u.y += step_y
        if abs(dy) < 0.02:
            u._change_from = None
        u.heading = math.atan2(step_y, max(u.speed * dt, 1e-9)) if u.speed > 0 else u.heading
    return traffic


def is_resolved(world: World, v: VehicleState) -> bool:
    """A request resolves once the monotone progress covers the resolution
    distance."""
    return v.progress_max >= world.resolution_distance_m
