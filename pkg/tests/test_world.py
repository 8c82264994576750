"""Scenario construction, mirror symmetry, lane queries, and config parsing."""

import numpy as np
import pytest

from teleassist.dynamics import VEHICLE_WIDTH
from teleassist.world import (LEFT, RIGHT, ConfigError, OutOfRoadError, ScenarioConfig,
                              build_scenario, load_scenario_config, nearest_lane_center,
                              parse_scenario_config, progress_along, road_arc,
                              snap_to_lane_center)

CLEARANCE = VEHICLE_WIDTH / 2.0 + 0.3  # vehicle half-width plus cone radius


def _passable_by_obstacle_probe(world, lane_id, n_probe=800):
    """Oracle: a lane is passable through the works iff a vehicle-width
    corridor on its centerline stays clear of every obstacle disc."""
    xs = np.linspace(world.works.start_s, world.works.end_s, n_probe)
    y = world.lane_center_y(lane_id)
    centers = np.array([o.center for o in world.obstacles])
    radii = np.array([o.radius for o in world.obstacles])
    for x in xs:
        d = np.linalg.norm(centers - (x, y), axis=1)
        if np.any(d < CLEARANCE + radii - 0.3):  # centers within blocking reach
            return False
    return True


class TestBuildScenario:
    def test_paper_scenario_constants(self):
        world = build_scenario(ScenarioConfig())
        assert world.view_range_m == 200.0
        assert world.resolution_distance_m == 600.0
        assert world.initial_path_m == 200.0
        assert world.lane_count == 3

    def test_left_variant_passable_lane_set(self):
        world = build_scenario(ScenarioConfig(works_side=LEFT))
        passable = {l for l in range(3) if _passable_by_obstacle_probe(world, l)}
        assert passable == {0, 1}
        assert world.works.blocked_lanes == frozenset({2})

    def test_right_variant_is_mirror(self):
        world = build_scenario(ScenarioConfig(works_side=RIGHT))
        passable = {l for l in range(3) if _passable_by_obstacle_probe(world, l)}
        assert passable == {1, 2}
        assert world.works.blocked_lanes == frozenset({0})

    def test_mirror_property_exact_reflection(self):
        left = build_scenario(ScenarioConfig(works_side=LEFT))
        right = build_scenario(ScenarioConfig(works_side=RIGHT))
        left_set = sorted((o.center[0], -o.center[1]) for o in left.obstacles)
        right_set = sorted(o.center for o in right.obstacles)
        assert len(left_set) == len(right_set)
        for a, b in zip(left_set, right_set):
            assert abs(a[0] - b[0]) < 1e-9
            assert abs(a[1] - b[1]) < 1e-9

    def test_obstacles_inside_blocked_lane_strip(self):
        for side in (LEFT, RIGHT):
            world = build_scenario(ScenarioConfig(works_side=side))
            lane = max(world.works.blocked_lanes) if side == LEFT else min(world.works.blocked_lanes)
            y_center = world.lane_center_y(lane)
            half = world.lane_width / 2.0
            for o in world.obstacles:
                assert world.works.start_s <= o.center[0] <= world.works.end_s
                assert abs(o.center[1] - y_center) + o.radius <= half + 1e-9

    def test_invalid_configs_rejected(self):
        with pytest.raises(ConfigError):
            build_scenario(ScenarioConfig(lane_count=2))
        with pytest.raises(ConfigError):
            build_scenario(ScenarioConfig(works_start_m=500.0, works_end_m=500.0))
        with pytest.raises(ConfigError):
            build_scenario(ScenarioConfig(blocked_lanes=(0, 1, 2)))
        with pytest.raises(ConfigError):
            build_scenario(ScenarioConfig(blocked_lanes=()))


class TestNearestLaneCenter:
    def setup_method(self):
        self.world = build_scenario(ScenarioConfig())

    def test_point_on_centerline_has_zero_deviation(self):
        lane, foot, dev = nearest_lane_center(self.world, (120.0, 0.0))
        assert lane == 1
        assert dev == 0.0
        assert np.allclose(foot, (120.0, 0.0))

    def test_midway_between_lanes(self):
        # halfway between lane 0 (y=-3.5) and lane 1 (y=0)
        _, _, dev = nearest_lane_center(self.world, (80.0, -1.75))
        assert dev == pytest.approx(1.75, abs=1e-12)

    def test_offset_from_lane_two(self):
        lane, _, dev = nearest_lane_center(self.world, (250.0, 3.5 + 0.4))
        assert lane == 2
        assert dev == pytest.approx(0.4, abs=1e-12)

    def test_out_of_road_rejected(self):
        with pytest.raises(OutOfRoadError):
            nearest_lane_center(self.world, (0.0, 50.0))
        with pytest.raises(OutOfRoadError):
            nearest_lane_center(self.world, (-500.0, 0.0))

    def test_matches_dense_brute_force_on_random_points(self):
        rng = np.random.default_rng(123)
        half = self.world.road_half_width()
        for _ in range(1000):
            x = rng.uniform(-50.0, 1100.0)
            y = rng.uniform(-half, half)
            lane, _, dev = nearest_lane_center(self.world, (x, y))
            brute = min(
                self._dense_distance(l, x, y) for l in range(self.world.lane_count))
            assert dev == pytest.approx(brute, abs=1e-6)

    def _dense_distance(self, lane_id, x, y):
        line = self.world.lanes[lane_id].centerline
        x0, x1 = line.points[0][0], line.points[-1][0]
        xs = np.arange(max(x0, x - 1.0), min(x1, x + 1.0) + 1e-9, 1e-4)
        if xs.size == 0:
            xs = np.array([x0 if x < x0 else x1])
        ys = np.full_like(xs, self.world.lane_center_y(lane_id))
        return float(np.min(np.hypot(xs - x, ys - y)))

    def test_snap_is_idempotent(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            p = (rng.uniform(0, 1000), rng.uniform(-5, 5))
            once = snap_to_lane_center(self.world, p)
            twice = snap_to_lane_center(self.world, once)
            assert np.linalg.norm(once - twice) < 1e-9


class TestProgress:
    def setup_method(self):
        self.world = build_scenario(ScenarioConfig())

    def test_progress_at_origin_is_zero(self):
        origin = road_arc(self.world, (0.0, 3.5))
        assert progress_along(self.world, origin, (0.0, 3.5)) == 0.0

    def test_progress_600m_down_road(self):
        origin = road_arc(self.world, (0.0, 0.0))
        assert progress_along(self.world, origin, (600.0, 0.0)) == 600.0

    def test_forward_then_reverse_trace(self):
        # scripted trace: 50 m forward then 10 m back; the raw advance drops
        # to 40 while the running maximum holds at 50
        origin = 0.0
        xs = list(np.linspace(0, 50, 101)) + list(np.linspace(50, 40, 21))
        running_max = 0.0
        raw = 0.0
        for x in xs:
            raw = progress_along(self.world, origin, (x, 0.0))
            running_max = max(running_max, raw)
        assert raw == pytest.approx(40.0, abs=1e-12)
        assert running_max == pytest.approx(50.0, abs=1e-12)

    def test_mirror_invariance(self):
        left = build_scenario(ScenarioConfig(works_side=LEFT))
        right = build_scenario(ScenarioConfig(works_side=RIGHT))
        for x, y in [(12.0, 1.0), (300.0, -2.5), (599.0, 3.5)]:
            a = progress_along(left, 0.0, (x, y))
            b = progress_along(right, 0.0, (x, -y))
            assert a == b


class TestScenarioConfigFile:
    def test_defaults_roundtrip(self):
        cfg = parse_scenario_config("""
            lane_count = 3
            lane_width_m = 3.5
            works_side = right
            works_start_m = 320
            works_end_m = 560
            view_range_m = 200
            resolution_distance_m = 600
            initial_path_m = 200
        """)
        assert cfg.works_side == RIGHT
        assert cfg.works_start_m == 320.0
        world = build_scenario(cfg)
        assert world.view_range_m == 200.0

    def test_unknown_key_rejected_by_name(self):
        with pytest.raises(ConfigError, match="frobnicate"):
            parse_scenario_config("frobnicate = 1")

    def test_bad_value_rejected(self):
        with pytest.raises(ConfigError, match="lane_count"):
            parse_scenario_config("lane_count = three")

    def test_blocked_lanes_list(self):
        cfg = parse_scenario_config("blocked_lanes = 1,2")
        assert cfg.blocked_lanes == (1, 2)
        world = build_scenario(cfg)
        assert world.works.blocked_lanes == frozenset({1, 2})

    def test_comments_and_blanks_ignored(self):
        cfg = parse_scenario_config("# comment\n\nworks_side = left # trailing\n")
        assert cfg.works_side == LEFT

    def test_load_from_file(self, tmp_path):
        p = tmp_path / "scenario.cfg"
        p.write_text("works_start_m = 280\nworks_end_m = 500\n", encoding="utf-8")
        cfg = load_scenario_config(p)
        assert cfg.works_start_m == 280.0
        assert cfg.works_end_m == 500.0
