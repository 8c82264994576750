"""The three operator interaction concepts as pure path-editing operations:
waypoint guidance, trajectory guidance with merge rules, and path-planning
candidate generation/selection.

All functions leave their inputs untouched and return fresh paths; the only
place a returned path becomes live is when the session adopts it.
"""

import math
from dataclasses import dataclass

import numpy as np

from .geometry import Polyline, interior_angle, resample_equidistant, transform_to_world
from .world import OutOfRoadError, World, snap_to_lane_center, road_arc

MIN_ANGLE_DEG = 90.0          # turns at or below this are rejected
NEAR_ATTACH_M = 3.5           # endpoint closeness for merge classification
PARALLEL_M = 1.0              # lateral band for parallel replacement
PARALLEL_COVERAGE = 0.8       # fraction of samples that must lie in the band
PARALLEL_ALIGN_DEG = 15.0     # tangent alignment for parallel replacement
FORWARD_HORIZON_M = 185.0     # path-plan candidate length limit
OBSTACLE_STANDOFF_M = 5.0     # candidates stop this short of a blockage
LANE_BLEND_M = 30.0           # lane-transition length for candidates
REVERSE_STRAIGHT_M = 15.0     # straight-back reverse candidate length
REVERSE_ARC_RADIUS_M = 10.0   # reverse arc radius
REVERSE_ARC_SWEEP_DEG = 45.0  # reverse arc sweep
TRAJECTORY_SPACING_M = 2.0    # default equidistant waypoint spacing

SOURCE_INITIAL = "initial"
SOURCE_WAYPOINT = "waypoint"
SOURCE_TRAJECTORY = "trajectory"
SOURCE_PATHPLAN = "pathplan"

EXTENSION = "extension"
REPLACEMENT = "replacement"
PARALLEL_REPLACEMENT = "parallel_replacement"
STANDALONE = "standalone"

ANGLE_TOO_SHARP = "angle_too_sharp"
OUT_OF_VIEW = "out_of_view"
COMMITTED_SEGMENT = "committed_segment"
STALE_SELECTION = "stale_selection"
EMPTY_TRAJECTORY = "empty_trajectory"
DEGENERATE = "degenerate"


class EditRejected(Exception):
    """A path edit was refused; the path is unchanged."""

    def __init__(self, reason: str, detail: str = ""):
        super().__init__(f"{reason}{': ' + detail if detail else ''}")
        self.reason = reason


@dataclass(frozen=True)
class PlannedPath:
    """Waypoint polyline a vehicle follows; waypoints at or before
    ``committed_index`` were already passed and are never edited."""

    waypoints: Polyline
    committed_index: int
    source: str

    def __post_init__(self):
        if not (0 <= self.committed_index < len(self.waypoints)):
            raise ValueError("committed_index out of range")

    @property
    def length(self) -> float:
        return self.waypoints.length

    def end_point(self) -> np.ndarray:
        return self.waypoints.points[-1].copy()

    def with_committed(self, index: int) -> "PlannedPath":
        if index < self.committed_index:
            raise ValueError("committed_index never decreases")
        return PlannedPath(self.waypoints, index, self.source)


@dataclass(frozen=True)
class Stroke:
    """Raw right-button drag: (x, y, t) samples with strictly increasing
    timestamps; snap_mode mirrors the control key."""

    samples: tuple
    snap_mode: bool = False

    def __post_init__(self):
        if len(self.samples) < 2:
            raise EditRejected(EMPTY_TRAJECTORY, "stroke needs at least two samples")
        ts = [s[2] for s in self.samples]
        if any(b <= a for a, b in zip(ts, ts[1:])):
            raise EditRejected(DEGENERATE, "stroke timestamps must strictly increase")


@dataclass(frozen=True)
class MergeClass:
    kind: str
    attach_points: tuple  # waypoint indices into the old path


@dataclass(frozen=True)
class CandidateSet:
    forward: tuple   # ordered by lane id, up to 3
    reverse: tuple   # always 3 static shapes
    generation_tick: int


@dataclass(frozen=True)
class InsertBetween:
    index: int
    point: tuple


@dataclass(frozen=True)
class MoveWaypoint:
    index: int
    point: tuple


@dataclass(frozen=True)
class DeleteWaypoint:
    index: int


def _angles_ok(points, start: int = 1, end: int | None = None) -> bool:
    """True when every interior angle in [start, end) exceeds MIN_ANGLE_DEG."""
    pts = np.asarray(points, dtype=float)
    end = len(pts) - 1 if end is None else min(end, len(pts) - 1)
    for i in range(max(start, 1), end):
        if interior_angle(pts[i - 1], pts[i], pts[i + 1]) <= MIN_ANGLE_DEG:
            return False
    return True


def _dedupe(points, eps: float = 1e-9) -> list:
    out = []
    for p in points:
        p = np.asarray(p, dtype=float)
        if not out or np.linalg.norm(p - out[-1]) > eps:
            out.append(p)
    return out


def _snap_or_reject(world: World, p) -> np.ndarray:
    try:
        return snap_to_lane_center(world, p)
    except OutOfRoadError as exc:
        raise EditRejected(OUT_OF_VIEW, str(exc)) from exc


def _enforce_angles(points, protect: int = 0) -> list:
    """Drop points until all interior angles exceed the gate.

    Points at indices <= protect are never removed (committed prefix). Used
    as junction smoothing after splices; total by construction.
    """
    pts = _dedupe(points)
    changed = True
    while changed and len(pts) > 2:
        changed = False
        for i in range(1, len(pts) - 1):
            if interior_angle(pts[i - 1], pts[i], pts[i + 1]) <= MIN_ANGLE_DEG:
                del pts[i if i > protect else i + 1]
                # a deletion can make former neighbours coincide
                pts = _dedupe(pts)
                changed = True
                break
    return pts


def waypoint_place(path: PlannedPath, p, world: World, snap: bool = False,
                   view_center=None, view_range_m: float | None = None) -> PlannedPath:
    """Append one waypoint (lane-center snapped when snap is set).

    Rejected without mutation when the point is outside the view window or
    the new interior angle at the previous waypoint would be <= 90 degrees.
    """
    p = np.asarray(p, dtype=float)
    if view_center is not None:
        rng = world.view_range_m if view_range_m is None else view_range_m
        if np.linalg.norm(p - np.asarray(view_center, dtype=float)) > rng:
            raise EditRejected(OUT_OF_VIEW)
    q = _snap_or_reject(world, p) if snap else p
    pts = path.waypoints.points
    if np.linalg.norm(q - pts[-1]) <= 1e-9:
        raise EditRejected(DEGENERATE, "waypoint coincides with the path end")
    if len(pts) >= 2 and interior_angle(pts[-2], pts[-1], q) <= MIN_ANGLE_DEG:
        raise EditRejected(ANGLE_TOO_SHARP)
    new_pts = np.vstack([pts, q])
    return PlannedPath(Polyline(new_pts), path.committed_index, SOURCE_WAYPOINT)


def waypoint_edit(path: PlannedPath, edit, world: World, snap: bool = False) -> PlannedPath:
    """Insert-between, move, or delete one uncommitted waypoint.

    The edit applies only if every interior angle of the result stays above
    the gate; edits touching the committed prefix are rejected.
    """
    pts = [p for p in path.waypoints.points]
    ci = path.committed_index
    i = edit.index
    if i <= ci:
        raise EditRejected(COMMITTED_SEGMENT)
    if isinstance(edit, InsertBetween):
        if i >= len(pts) - 1:
            raise EditRejected(DEGENERATE, "insert index past the last segment")
        q = _snap_or_reject(world, edit.point) if snap else np.asarray(edit.point, dtype=float)
        pts.insert(i + 1, q)
    elif isinstance(edit, MoveWaypoint):
        if i >= len(pts):
            raise EditRejected(DEGENERATE, "index out of range")
        q = _snap_or_reject(world, edit.point) if snap else np.asarray(edit.point, dtype=float)
        pts[i] = q
    elif isinstance(edit, DeleteWaypoint):
        if i >= len(pts):
            raise EditRejected(DEGENERATE, "index out of range")
        del pts[i]
        if len(pts) < 2:
            raise EditRejected(DEGENERATE, "path needs at least two points")
    else:
        raise EditRejected(DEGENERATE, f"unknown edit {edit!r}")
    pts = _dedupe(pts)
    if len(pts) < 2:
        raise EditRejected(DEGENERATE, "edit collapses the path")
    if not _angles_ok(pts):
        raise EditRejected(ANGLE_TOO_SHARP)
    return PlannedPath(Polyline(np.array(pts)), ci, SOURCE_WAYPOINT)


def stroke_to_trajectory(stroke: Stroke, world: World,
                         spacing: float = TRAJECTORY_SPACING_M,
                         min_step: float = 0.25) -> Polyline:
    """Filter a drag stroke into an equidistant waypoint polyline.

    Samples are consumed in order. With snap_mode each sample is replaced by
    its lane-center foot point before any test. A candidate closer than
    min_step to the last accepted point is skipped (sensor noise), and one
    whose interior angle at the previous accepted point would be <= 90
    degrees is dropped rather than buffered, so drawing continues past a
    hectic reversal. The survivors are resampled at `spacing` and swept once
    more so resampling cannot reintroduce a sharp corner.
    """
    accepted = []
    for sample in stroke.samples:
        p = np.asarray(sample[:2], dtype=float)
        if stroke.snap_mode:
            try:
                p = snap_to_lane_center(world, p)
            except OutOfRoadError:
                continue
        if accepted and np.linalg.norm(p - accepted[-1]) < min_step:
            continue
        if len(accepted) >= 2 and interior_angle(accepted[-2], accepted[-1], p) <= MIN_ANGLE_DEG:
            continue
        accepted.append(p)
    if len(accepted) < 2:
        raise EditRejected(EMPTY_TRAJECTORY, "all stroke samples were blocked")
    line = resample_equidistant(Polyline(np.array(accepted)), spacing)
    pts = _enforce_angles(line.points)
    if len(pts) < 2:
        raise EditRejected(EMPTY_TRAJECTORY)
    return Polyline(np.array(pts))


def _endpoint_attach(old: PlannedPath, p) -> tuple[float, np.ndarray, float]:
    return old.waypoints.nearest(p)


def _index_at_arc(line: Polyline, s: float) -> int:
    """Index of the last vertex at or before arc position s."""
    i = int(np.searchsorted(line.cumulative_s, s + 1e-12, side="right")) - 1
    return min(max(i, 0), len(line) - 1)


def classify_merge(old: PlannedPath, new_line: Polyline,
                   near_m: float = NEAR_ATTACH_M,
                   parallel_m: float = PARALLEL_M) -> MergeClass:
    """Classify how a drawn line combines with the existing path.

    Both endpoints near the old path: replacement of the spanned segment.
    Exactly one endpoint near: extension from that attach point. Neither,
    but the line hugs the old path with aligned tangents for most of its
    length: parallel replacement. Otherwise standalone. Total by
    construction: exactly one class per input.
    """
    s_a, _, d_a = _endpoint_attach(old, new_line.points[0])
    s_b, _, d_b = _endpoint_attach(old, new_line.points[-1])
    close_a = d_a <= near_m
    close_b = d_b <= near_m
    if close_a and close_b and abs(s_b - s_a) > 1.0:
        lo, hi = sorted((s_a, s_b))
        return MergeClass(REPLACEMENT, (_index_at_arc(old.waypoints, lo),
                                        _index_at_arc(old.waypoints, hi)))
    if close_a or close_b:
        s_at = s_a if (d_a <= d_b) else s_b
        return MergeClass(EXTENSION, (_index_at_arc(old.waypoints, s_at),))

    probe = resample_equidistant(new_line, 1.0)
    feet = [old.waypoints.nearest(probe.point_at(s)) for s in probe.cumulative_s]
    within = [f for f in feet if f[2] <= parallel_m]
    # distance alone bounds the coverage: skip the alignment pass when the
    # band fraction already falls short
    if len(within) / len(probe) < PARALLEL_COVERAGE:
        return MergeClass(STANDALONE, ())
    hits = 0
    span = []
    for s, (s_old, _, d) in zip(probe.cumulative_s, feet):
        if d <= parallel_m:
            t_old = old.waypoints.tangent_at(s_old)
            t_new = probe.tangent_at(s)
            ang = math.degrees(math.acos(min(1.0, max(-1.0, abs(float(np.dot(t_old, t_new)))))))
            if ang <= PARALLEL_ALIGN_DEG:
                hits += 1
                span.append(s_old)
    if len(probe) > 0 and hits / len(probe) >= PARALLEL_COVERAGE and span:
        return MergeClass(PARALLEL_REPLACEMENT, (_index_at_arc(old.waypoints, min(span)),
                                                 _index_at_arc(old.waypoints, max(span))))
    return MergeClass(STANDALONE, ())


def _splice(old: PlannedPath, new_pts, s_cut_lo: float, s_cut_hi: float | None) -> PlannedPath:
    """Old path up to s_cut_lo, the new points, then (optionally) the old
    tail from s_cut_hi on; angle repair applied at the junctions."""
    line = old.waypoints
    ci = old.committed_index
    s_committed = float(line.cumulative_s[ci])
    s_cut_lo = max(s_cut_lo, s_committed)
    keep = line.cumulative_s <= s_cut_lo + 1e-12
    head = [p for p in line.points[keep]]
    foot = line.point_at(s_cut_lo)
    head.append(foot)
    assembled = head + [np.asarray(p, dtype=float) for p in new_pts]
    if s_cut_hi is not None:
        tail_keep = line.cumulative_s >= s_cut_hi - 1e-12
        assembled += [line.point_at(s_cut_hi)] + [p for p in line.points[tail_keep]]
    pts = _enforce_angles(assembled, protect=ci)
    if len(pts) < 2:
        return old
    return PlannedPath(Polyline(np.array(pts)), ci, SOURCE_TRAJECTORY)


def apply_merge(old: PlannedPath, new_line: Polyline, cls: MergeClass) -> PlannedPath:
    """Apply a classified merge; junction angle violations are smoothed by
    dropping offending points, never by failing."""
    pts = new_line.points
    if cls.kind == STANDALONE:
        ci = old.committed_index
        head = [p for p in old.waypoints.points[: ci + 1]]
        assembled = _enforce_angles(head + [np.asarray(p) for p in pts], protect=ci)
        if len(assembled) < 2:
            return old
        return PlannedPath(Polyline(np.array(assembled)), ci, SOURCE_TRAJECTORY)

    s_a, _, d_a = _endpoint_attach(old, pts[0])
    s_b, _, d_b = _endpoint_attach(old, pts[-1])
    if cls.kind == EXTENSION:
        # Orient the new line away from its attached endpoint; the old path
        # beyond the attach point gives way to the drawn one.
        if d_a <= d_b:
            return _splice(old, pts[1:], s_a, None)
        return _splice(old, pts[::-1][1:], s_b, None)
    if cls.kind in (REPLACEMENT, PARALLEL_REPLACEMENT):
        if cls.kind == PARALLEL_REPLACEMENT:
            lo_i, hi_i = cls.attach_points
            s_lo = float(old.waypoints.cumulative_s[lo_i])
            s_hi = float(old.waypoints.cumulative_s[hi_i])
            body = pts
            if s_b < s_a:
                body = pts[::-1]
        else:
            s_lo, s_hi = sorted((s_a, s_b))
            body = pts if s_a <= s_b else pts[::-1]
        if s_hi <= s_lo + 1e-9:
            return _splice(old, body[1:], s_lo, None)
        return _splice(old, body, s_lo, s_hi)
    raise ValueError(f"unknown merge kind {cls.kind!r}")


def _lane_offset(world: World, lane_id: int, y0: float, x0: float, x: float) -> float:
    """Cubic lateral blend from y0 onto the lane center over LANE_BLEND_M."""
    y_lane = world.lane_center_y(lane_id)
    u = min(1.0, max(0.0, (x - x0) / LANE_BLEND_M))
    ease = u * u * (3.0 - 2.0 * u)
    return y0 + (y_lane - y0) * ease


def _clip_arc_at_obstacles(world: World, pts: np.ndarray,
                           clearance: float = 1.3) -> float | None:
    """Along-path arc of the first blocking obstacle, or None.

    An obstacle blocks when its center comes within `clearance` of the path;
    the blocking arc is the obstacle's own along-path position, so a
    blockage 30 m ahead clips a candidate to 30 - standoff.
    """
    if len(pts) < 2:
        return None
    x_lo = float(np.min(pts[:, 0])) - clearance
    x_hi = float(np.max(pts[:, 0])) + clearance
    obstacles = world.obstacles_between(x_lo, x_hi)
    if not obstacles:
        return None
    centers = np.array([o.center for o in obstacles])
    radii = np.array([o.radius for o in obstacles])
    a = pts[:-1]
    ab = pts[1:] - a
    seg_len2 = np.einsum("ij,ij->i", ab, ab)
    # (k, m) projections of every obstacle onto every segment
    rel = centers[:, None, :] - a[None, :, :]
    t = np.clip(np.einsum("kmj,mj->km", rel, ab) / seg_len2, 0.0, 1.0)
    feet = a[None, :, :] + t[..., None] * ab[None, :, :]
    d = np.linalg.norm(feet - centers[:, None, :], axis=2)
    hit = d <= clearance + radii[:, None]
    if not np.any(hit):
        return None
    cum = np.concatenate(([0.0], np.cumsum(np.sqrt(seg_len2))))
    arcs = cum[None, :-1] + t * np.sqrt(seg_len2)[None, :]
    return float(np.min(arcs[hit]))


def generate_candidates(world: World, position, heading: float,
                        generation_tick: int = 0) -> CandidateSet:
    """Forward candidates (one per lane passable at the vehicle's position,
    horizon- and obstacle-clipped) plus the three static reverse shapes.

    Pure in (world, position, heading): identical inputs give identical
    candidate geometry.
    """
    position = np.asarray(position, dtype=float)
    s0 = road_arc(world, position)
    x0 = float(position[0])
    y0 = float(position[1])
    forward = []
    for lane_id in world.passable_lanes_at(s0):
        x_end = min(x0 + FORWARD_HORIZON_M, world.road_max)
        span = x_end - x0
        if span < 2.0:
            continue
        xs = np.linspace(x0, x_end, max(2, int(math.ceil(span / 5.0)) + 1))
        u = np.clip((xs - x0) / LANE_BLEND_M, 0.0, 1.0)
        ease = u * u * (3.0 - 2.0 * u)
        ys = y0 + (world.lane_center_y(lane_id) - y0) * ease
        pts = np.stack([xs, ys], axis=1)
        cut = None
        block = _clip_arc_at_obstacles(world, pts)
        if block is not None:
            cut = block - OBSTACLE_STANDOFF_M
            if cut < 2.0:
                continue
        # The lateral blend adds arc length beyond the x extent; the horizon
        # caps the candidate's arc length as well.
        line = Polyline(pts)
        if line.length > FORWARD_HORIZON_M:
            cut = min(cut, FORWARD_HORIZON_M) if cut is not None else FORWARD_HORIZON_M
        if cut is not None:
            n_keep = int(np.searchsorted(line.cumulative_s, cut - 1e-9, side="right"))
            pts = np.vstack([line.points[:n_keep], line.point_at(cut)])
        if len(pts) >= 2:
            forward.append(PlannedPath(Polyline(pts), 0, SOURCE_PATHPLAN))
    return CandidateSet(tuple(forward), generate_reverse_candidates(position, heading),
                        generation_tick)


def generate_reverse_candidates(position, heading: float) -> tuple:
    """Three fixed pose-relative reverse shapes: straight back, back-left
    arc, back-right arc. Congruent at every pose up to rigid transform."""
    straight = [(-d, 0.0) for d in np.linspace(0.0, REVERSE_STRAIGHT_M, 7)]
    sweep = math.radians(REVERSE_ARC_SWEEP_DEG)
    thetas = np.linspace(0.0, sweep, 7)
    r = REVERSE_ARC_RADIUS_M
    left = [(-r * math.sin(t), r * (1.0 - math.cos(t))) for t in thetas]
    right = [(x, -y) for (x, y) in left]
    out = []
    for local in (straight, left, right):
        pts = transform_to_world(np.array(local), position, heading)
        out.append(PlannedPath(Polyline(pts), 0, SOURCE_PATHPLAN))
    return tuple(out)


def select_candidate(cset: CandidateSet, index: int, reverse: bool = False) -> PlannedPath:
    """Pick one candidate; out-of-range indices mean the set went stale."""
    pool = cset.reverse if reverse else cset.forward
    if not (0 <= index < len(pool)):
        raise EditRejected(STALE_SELECTION, f"index {index} of {len(pool)} candidates")
    return pool[index]


def adopt_path(current: PlannedPath, candidate: PlannedPath, reverse: bool = False) -> PlannedPath:
    """Replace the uncommitted suffix of the current path with a candidate.

    Forward candidates keep the committed prefix; a reverse candidate starts
    a fresh path at the vehicle pose, because gluing a backward shape onto
    forward history would always violate the angle gate at the junction.
    """
    if reverse:
        return PlannedPath(candidate.waypoints, 0, SOURCE_PATHPLAN)
    ci = current.committed_index
    head = [p for p in current.waypoints.points[: ci + 1]]
    pts = _enforce_angles(head + [np.asarray(p) for p in candidate.waypoints.points], protect=ci)
    if len(pts) < 2:
        return current
    return PlannedPath(Polyline(np.array(pts)), ci, SOURCE_PATHPLAN)
