"""Road scenario model: lanes, the works zone, cone obstacles, and the
geometry queries every other module routes through.

The road is a straight segment along +x. Lane centers sit at
y = (lane_id - (n-1)/2) * lane_width with lane 0 the rightmost (most
negative y), so mirroring a layout is an exact reflection about y = 0.
"""

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Polyline

LEFT = "left"
RIGHT = "right"

CONE_RADIUS = 0.3
CONE_SPACING = 4.0


class ConfigError(ValueError):
    """Invalid scenario configuration (bad key, value, or geometry)."""


class OutOfRoadError(ValueError):
    """Query point outside the road bounding box plus one lane width."""


@dataclass(frozen=True)
class LaneSpec:
    """One lane: id 0 is the rightmost, centerline runs the whole road."""

    lane_id: int
    centerline: Polyline
    width: float

    @property
    def center_y(self) -> float:
        return float(self.centerline.points[0][1])


@dataclass(frozen=True)
class WorksZone:
    """Arc-length extent of the road works and the lanes it closes."""

    start_s: float
    end_s: float
    blocked_lanes: frozenset
    side: str

    def blocks(self, lane_id: int, s: float) -> bool:
        return lane_id in self.blocked_lanes and self.start_s <= s <= self.end_s


@dataclass(frozen=True)
class Obstacle:
    """Cone or barrier disc; `polygon` gives an octagon for consumers that
    want vertices."""

    center: tuple
    radius: float

    def polygon(self, n: int = 8) -> np.ndarray:
        ang = np.arange(n) * (2.0 * math.pi / n)
        return np.stack(
            [self.center[0] + self.radius * np.cos(ang),
             self.center[1] + self.radius * np.sin(ang)], axis=1)


@dataclass(frozen=True)
class ScenarioConfig:
    lane_count: int = 3
    lane_width_m: float = 3.5
    works_side: str = LEFT
    works_start_m: float = 300.0
    works_end_m: float = 550.0
    taper_m: float = 50.0
    blocked_lanes: tuple | None = None
    view_range_m: float = 200.0
    resolution_distance_m: float = 600.0
    initial_path_m: float = 200.0
    road_min_m: float = -100.0
    road_max_m: float = 1200.0


@dataclass(frozen=True)
class World:
    lanes: tuple
    works: WorksZone
    obstacles: tuple
    view_range_m: float
    resolution_distance_m: float
    initial_path_m: float
    lane_width: float
    road_min: float
    road_max: float
    _obs_x: np.ndarray = field(repr=False, default=None)

    @property
    def lane_count(self) -> int:
        return len(self.lanes)

    def lane_center_y(self, lane_id: int) -> float:
        return self.lanes[lane_id].center_y

    def road_half_width(self) -> float:
        return 0.5 * self.lane_width * self.lane_count

    def passable_lanes_at(self, s: float) -> tuple:
        """Lane ids usable at arc position s (blocked ones excluded in-works)."""
        return tuple(l.lane_id for l in self.lanes if not self.works.blocks(l.lane_id, s))

    def start_lane(self) -> int:
        """Default spawn lane for assisted vehicles: the lane the works close."""
        return max(self.works.blocked_lanes) if self.works.side == LEFT else min(self.works.blocked_lanes)

    def obstacles_between(self, x0: float, x1: float) -> tuple:
        """Obstacles whose center x lies in [x0, x1], via the sorted index."""
        lo = int(np.searchsorted(self._obs_x, x0, side="left"))
        hi = int(np.searchsorted(self._obs_x, x1, side="right"))
        return self.obstacles[lo:hi]


def _cone_line(p0, p1, spacing=CONE_SPACING) -> list:
    p0 = np.asarray(p0, dtype=float)
    p1 = np.asarray(p1, dtype=float)
    length = float(np.linalg.norm(p1 - p0))
    n = max(1, int(math.floor(length / spacing)))
    out = []
    for i in range(n + 1):
        t = min(1.0, i * spacing / length)
        c = p0 + t * (p1 - p0)
        out.append(Obstacle((float(c[0]), float(c[1])), CONE_RADIUS))
    return out


def build_scenario(config: ScenarioConfig = ScenarioConfig()) -> World:
    """Construct the road-works world from a config.

    The right-sided variant is the exact reflection of the left-sided one
    about the road axis: obstacle lateral coordinates are negated and the
    blocked-lane set is mirrored.
    """
    if config.lane_count != 3:
        raise ConfigError(f"lane_count must be 3, got {config.lane_count}")
    if config.works_side not in (LEFT, RIGHT):
        raise ConfigError(f"works_side must be left or right, got {config.works_side!r}")
    if config.works_end_m <= config.works_start_m:
        raise ConfigError("works zone has zero or negative length")
    if config.lane_width_m <= 0:
        raise ConfigError("lane_width_m must be positive")

    n = config.lane_count
    w = config.lane_width_m
    lanes = []
    for lane_id in range(n):
        y = (lane_id - (n - 1) / 2.0) * w
        line = Polyline([(config.road_min_m, y), (config.road_max_m, y)])
        lanes.append(LaneSpec(lane_id, line, w))

    if config.blocked_lanes is not None:
        blocked = frozenset(int(b) for b in config.blocked_lanes)
    else:
        # One outer lane closed: the works area keeps two passable lanes,
        # which is what makes the in-works overtaking ban meaningful.
        blocked = frozenset({n - 1}) if config.works_side == LEFT else frozenset({0})
    if not blocked or not blocked < set(range(n)):
        raise ConfigError("blocked_lanes must be a non-empty strict subset of all lanes")

    works = WorksZone(config.works_start_m, config.works_end_m, blocked, config.works_side)

    # Canonical cone layout built for a left-side closure of the outermost
    # blocked lane, then mirrored if needed. Inset keeps every disc fully
    # inside the blocked lane strip.
    inset = CONE_RADIUS + 0.05
    outer_blocked = max(blocked) if config.works_side == LEFT else min(blocked)
    sign = 1.0 if config.works_side == LEFT else -1.0
    lane_y = abs(lanes[outer_blocked].center_y)
    y_outer = lane_y + 0.5 * w - inset
    y_inner = lane_y - 0.5 * w + inset
    taper_end = min(config.works_start_m + config.taper_m, config.works_end_m - 2.0)
    cones = _cone_line((config.works_start_m + 1.0, y_outer), (taper_end, y_inner))
    cones += _cone_line((taper_end + CONE_SPACING, y_inner), (config.works_end_m - 1.0, y_inner))
    if sign < 0:
        cones = [Obstacle((c.center[0], -c.center[1]), c.radius) for c in cones]

    cones.sort(key=lambda c: c.center[0])
    obs_x = np.array([c.center[0] for c in cones])
    return World(
        lanes=tuple(lanes),
        works=works,
        obstacles=tuple(cones),
        view_range_m=config.view_range_m,
        resolution_distance_m=config.resolution_distance_m,
        initial_path_m=config.initial_path_m,
        lane_width=w,
        road_min=config.road_min_m,
        road_max=config.road_max_m,
        _obs_x=obs_x,
    )


def nearest_lane_center(world: World, p) -> tuple[int, np.ndarray, float]:
    """Lane whose centerline is nearest to p, with foot point and deviation.

    Raises OutOfRoadError when p is outside the road bounding box expanded
    by one lane width. Ties resolve to the lowest lane id.
    """
    p = np.asarray(p, dtype=float)
    half = world.road_half_width() + world.lane_width
    if not (world.road_min - world.lane_width <= p[0] <= world.road_max + world.lane_width
            and -half <= p[1] <= half):
        raise OutOfRoadError(f"point {tuple(p)} outside road bounds")
    best = None
    for lane in world.lanes:
        _, foot, dist = lane.centerline.nearest(p)
        if best is None or dist < best[2]:
            best = (lane.lane_id, foot, dist)
    return best


def snap_to_lane_center(world: World, p) -> np.ndarray:
    """Foot point on the nearest lane centerline (idempotent)."""
    return nearest_lane_center(world, p)[1]


def road_arc(world: World, p) -> float:
    """Arc-length coordinate of p along the road axis. Assisted vehicles
    spawn at arc 0, so works-zone extents and progress share this origin;
    for the straight road the coordinate is simply x."""
    return float(np.asarray(p, dtype=float)[0])


def progress_along(world: World, origin_s: float, pose) -> float:
    """Signed arc-length advance along the road axis since request issue.

    Callers that need the monotone reported progress keep the running
    maximum themselves (see VehicleState.progress_max); reverse motion makes
    this raw value decrease.
    """
    return road_arc(world, pose) - origin_s


_CONFIG_KEYS = {
    "lane_count": int,
    "lane_width_m": float,
    "works_side": str,
    "works_start_m": float,
    "works_end_m": float,
    "blocked_lanes": str,
    "view_range_m": float,
    "resolution_distance_m": float,
    "initial_path_m": float,
}


def parse_scenario_config(text: str) -> ScenarioConfig:
    """Parse the flat key-value scenario config format.

    One ``key = value`` pair per line; blank lines and ``#`` comments are
    skipped; unknown keys are rejected by name.
    """
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" in line:
            key, _, val = line.partition("=")
        else:
            parts = line.split(None, 1)
            if len(parts) != 2:
                raise ConfigError(f"line {lineno}: expected 'key = value', got {raw!r}")
            key, val = parts
        key = key.strip()
        val = val.strip()
        if key not in _CONFIG_KEYS:
            raise ConfigError(f"line {lineno}: unknown key {key!r}")
        try:
            if key == "blocked_lanes":
                values[key] = tuple(int(v) for v in val.split(",") if v.strip() != "")
            elif key == "works_side":
                if val not in (LEFT, RIGHT):
                    raise ValueError(val)
                values[key] = val
            else:
                values[key] = _CONFIG_KEYS[key](val)
        except ValueError as exc:
            raise ConfigError(f"line {lineno}: bad value for {key!r}: {val!r}") from exc
    return ScenarioConfig(**values)


def load_scenario_config(path) -> ScenarioConfig:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_scenario_config(fh.read())
