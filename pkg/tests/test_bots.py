"""Scripted-operator policies and their protocol-level behavior."""

import pytest

from teleassist.bots import (IDLE, PATHPLAN, TRAJECTORY, WAYPOINT, BotPolicy,
                             ScriptedOperator, make_policy, run_bot_episode)
from teleassist.session import EpisodeConfig
from teleassist.world import LEFT


class TestPolicies:
    def test_documented_reach_defaults(self):
        assert make_policy(PATHPLAN).reach_m == 185.0
        assert make_policy(WAYPOINT).reach_m == 86.0
        assert make_policy(TRAJECTORY).reach_m == 60.0

    def test_trigger_margins(self):
        assert make_policy(PATHPLAN).trigger_m == 25.0
        assert make_policy(WAYPOINT).trigger_m == 25.0
        assert make_policy(TRAJECTORY).trigger_m == 20.0

    def test_unknown_kind_rejected(self):
        with pytest.raises(ValueError):
            BotPolicy(kind="teleporter")

    def test_negative_delay_rejected(self):
        with pytest.raises(ValueError):
            make_policy(PATHPLAN, reaction_delay_s=-1.0)


class TestOperatorLogic:
    def _hello(self):
        return {
            "type": "hello", "protocol_version": "1",
            "config": {"resolution_distance_m": 600.0, "works_start_m": 300.0},
            "scenes": [{
                "side": "left",
                "works": {"start_m": 300.0, "end_m": 550.0, "blocked_lanes": [2]},
                "lane_centers_y": [-3.5, 0.0, 3.5],
                "road_min": -100.0, "road_max": 1200.0, "obstacles": [],
            }],
        }

    def test_route_blends_from_blocked_lane_to_target(self):
        bot = ScriptedOperator(make_policy(WAYPOINT))
        bot.on_hello(self._hello())
        assert bot.route_y(0, 100.0) == 3.5    # start lane (blocked, left side)
        assert bot.route_y(0, 280.0) == 0.0    # target lane before the works
        mid = bot.route_y(0, 240.0)
        assert 0.0 < mid < 3.5

    def test_first_snapshot_assigns_main(self):
        bot = ScriptedOperator(make_policy(PATHPLAN))
        bot.on_hello(self._hello())
        snap = {"type": "snapshot", "tick": 3, "clock": 0.05, "requests": [
            {"id": 0, "state": "queued", "remaining_path_m": 199.0,
             "path_end_progress_m": 200.0, "candidates": None,
             "vehicle": {"x": 1.0, "y": 3.5, "heading": 0.0, "speed": 33.0}},
        ]}
        msgs = bot.on_snapshot(snap)
        kinds = [m["type"] for m in msgs]
        assert "slot_assign" in kinds
        assign = msgs[kinds.index("slot_assign")]
        assert assign["slot"] == "main" and assign["request_id"] == 0

    def test_no_input_while_plenty_of_path_remains(self):
        bot = ScriptedOperator(make_policy(WAYPOINT))
        bot.on_hello(self._hello())
        snap = {"type": "snapshot", "tick": 6, "clock": 0.1, "requests": [
            {"id": 0, "state": "main", "remaining_path_m": 150.0,
             "path_end_progress_m": 200.0, "candidates": None,
             "vehicle": {"x": 50.0, "y": 3.5, "heading": 0.0, "speed": 33.0}},
        ]}
        msgs = [m for m in bot.on_snapshot(snap) if m["type"] != "aoi_change"]
        assert msgs == []

    def test_waypoint_input_at_trigger(self):
        bot = ScriptedOperator(make_policy(WAYPOINT))
        bot.on_hello(self._hello())
        bot.started = True
        snap = {"type": "snapshot", "tick": 60, "clock": 1.0, "requests": [
            {"id": 0, "state": "main", "remaining_path_m": 24.0,
             "path_end_progress_m": 200.0, "candidates": None,
             "vehicle": {"x": 176.0, "y": 3.5, "heading": 0.0, "speed": 12.0}},
        ]}
        msgs = bot.on_snapshot(snap)
        place = [m for m in msgs if m["type"] == "waypoint_place"]
        assert len(place) == 1
        assert place[0]["x"] == pytest.approx(176.0 + 86.0)
        assert place[0]["snap"] is True

    def test_no_input_once_path_end_reaches_resolution(self):
        bot = ScriptedOperator(make_policy(WAYPOINT))
        bot.on_hello(self._hello())
        bot.started = True
        snap = {"type": "snapshot", "tick": 60, "clock": 50.0, "requests": [
            {"id": 0, "state": "main", "remaining_path_m": 10.0,
             "path_end_progress_m": 615.0, "candidates": None,
             "vehicle": {"x": 605.0, "y": 0.0, "heading": 0.0, "speed": 8.0}},
        ]}
        msgs = [m for m in bot.on_snapshot(snap) if m["type"] == "waypoint_place"]
        assert msgs == []

    def test_pick_candidate_prefers_longest_then_nearest_lane(self):
        bot = ScriptedOperator(make_policy(PATHPLAN))
        r = {"vehicle": {"x": 0.0, "y": 3.5, "heading": 0.0, "speed": 10.0},
             "candidates": {"generation_tick": 1, "forward": [
                 [[0.0, -3.5], [185.0, -3.5]],   # lane 0, full horizon
                 [[0.0, 0.0], [185.0, 0.0]],     # lane 1, full horizon
                 [[0.0, 3.5], [120.0, 3.5]],     # lane 2, clipped
             ], "reverse": []}}
        assert bot._pick_candidate(r) == 1


class TestBotEpisodes:
    def test_idle_bot_over_socket_misses_and_sends_no_path_inputs(self):
        config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=4, time_budget=12.0,
                               initial_traffic_per_lane=0, max_traffic=0)
        summary, server = run_bot_episode(config, make_policy(IDLE))
        assert summary["missed"] == 1
        inputs = summary["requests"][0]["inputs"]
        assert inputs == {"waypoint": 0, "trajectory": 0, "pathplan": 0}
        kinds = {m["type"] for _, m in server.recording.entries}
        assert kinds <= {"slot_assign", "aoi_change", "pointer_moved"}

    def test_reaction_delay_still_resolves_single_request(self):
        config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=4)
        summary, _ = run_bot_episode(config, make_policy(PATHPLAN, reaction_delay_s=1.0))
        assert summary["resolved"] == 1

    def test_same_seed_and_policy_reproduce_summary(self):
        config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=21, time_budget=20.0)
        a, _ = run_bot_episode(config, make_policy(PATHPLAN))
        b, _ = run_bot_episode(config, make_policy(PATHPLAN))
        assert a == b

    @pytest.mark.parametrize("kind,count", [(PATHPLAN, 3), (WAYPOINT, 7),
                                            (TRAJECTORY, 10)])
    def test_reference_counts_hold_on_the_mirrored_variant(self, kind, count):
        from teleassist.world import RIGHT
        config = EpisodeConfig(n_requests=1, sides=(RIGHT,), seed=1)
        summary, _ = run_bot_episode(config, make_policy(kind))
        assert summary["resolved"] == 1
        assert summary["requests"][0]["inputs"][kind] == count
