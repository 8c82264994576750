"""Request lifecycle, slot model, neglect accounting, and episode clock."""

import random

import numpy as np
import pytest

from teleassist.dynamics import SIM_TICK
from teleassist.session import (MAIN, MISSED, QUEUED, RESOLVED, SECONDARY,
                                EpisodeConfig, SessionError, apply_message, assign_slot,
                                episode_summary, needs_action, start_episode, tick)
from teleassist.world import LEFT, RIGHT, ConfigError, ScenarioConfig

FAST = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=3, time_budget=30.0,
                     initial_traffic_per_lane=0, max_traffic=0)


def run_until(episode, predicate, limit_s=130.0):
    for _ in range(int(limit_s / SIM_TICK)):
        if predicate(episode):
            return True
        if episode.ended:
            return predicate(episode)
        tick(episode)
    return predicate(episode)


class TestStartEpisode:
    def test_single_request(self):
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,)))
        assert len(ep.requests) == 1
        assert ep.requests[0].state == QUEUED
        assert ep.clock == 0.0

    def test_four_simultaneous_requests(self):
        ep = start_episode(EpisodeConfig(n_requests=4))
        assert all(r.issued_at == 0.0 for r in ep.requests)
        assert all(r.state == QUEUED for r in ep.requests)

    def test_eight_requests_rejected(self):
        with pytest.raises(ConfigError):
            start_episode(EpisodeConfig(n_requests=8))

    def test_vehicles_get_initial_path(self):
        ep = start_episode(EpisodeConfig(n_requests=2))
        for scene in ep.scenes:
            assert scene.assisted.path is not None
            assert scene.assisted.path.length == pytest.approx(200.0)

    def test_reason_text_present(self):
        ep = start_episode(EpisodeConfig(n_requests=1))
        assert "ODD" in ep.requests[0].reason


class TestAssignSlot:
    def test_queued_to_main(self):
        ep = start_episode(EpisodeConfig(n_requests=2))
        assign_slot(ep, 0, MAIN)
        assert ep.requests[0].state == MAIN

    def test_displacement_returns_old_main_to_queue(self):
        ep = start_episode(EpisodeConfig(n_requests=2))
        assign_slot(ep, 0, MAIN)
        assign_slot(ep, 1, MAIN)
        assert ep.requests[0].state == QUEUED
        assert ep.requests[1].state == MAIN

    def test_terminal_request_rejected(self):
        ep = start_episode(EpisodeConfig(n_requests=1))
        ep.requests[0].state = RESOLVED
        with pytest.raises(SessionError):
            assign_slot(ep, 0, SECONDARY)

    def test_exclusivity_under_fuzzed_drags(self):
        ep = start_episode(EpisodeConfig(n_requests=4, time_budget=120.0))
        rng = random.Random(12)
        for _ in range(400):
            rid = rng.randint(0, 3)
            slot = rng.choice([MAIN, SECONDARY, "queue"])
            try:
                assign_slot(ep, rid, slot)
            except SessionError:
                pass
            tick(ep)
            states = [r.state for r in ep.requests]
            assert states.count(MAIN) <= 1
            assert states.count(SECONDARY) <= 1


class TestNeedsAction:
    def test_moving_vehicle_with_path_remaining(self):
        ep = start_episode(FAST)
        tick(ep)
        assert not needs_action(ep, ep.requests[0])

    def test_exhausted_path_needs_action(self):
        ep = start_episode(FAST)
        assert run_until(ep, lambda e: e.scenes[0].assisted.speed == 0.0, 30.0)
        assert needs_action(ep, ep.requests[0])


class TestNeglectAccounting:
    def test_secondary_for_ten_seconds_gives_one_exact_interval(self):
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,), seed=3,
                                         time_budget=60.0, initial_traffic_per_lane=0,
                                         max_traffic=0))
        assign_slot(ep, 0, SECONDARY)
        assert run_until(ep, lambda e: e.requests[0].neglect_open is not None, 30.0)
        k1 = ep.tick_index
        t1 = ep.requests[0].neglect_open
        while ep.tick_index < k1 + 599:
            tick(ep)
        assign_slot(ep, 0, MAIN)
        tick(ep)
        assert ep.requests[0].neglect_open is None
        intervals = ep.requests[0].neglect_intervals
        assert len(intervals) == 1
        start, end = intervals[0]
        assert start == t1
        assert end - start == pytest.approx(10.0, abs=1e-9)

    def test_intervals_match_per_tick_condition_trace(self):
        ep = start_episode(EpisodeConfig(n_requests=2, sides=(LEFT, RIGHT), seed=5,
                                         time_budget=40.0, initial_traffic_per_lane=0,
                                         max_traffic=0))
        rng = random.Random(77)
        trace = {r.id: [] for r in ep.requests}
        while not ep.ended:
            if rng.random() < 0.01:
                rid = rng.randint(0, 1)
                try:
                    assign_slot(ep, rid, rng.choice([MAIN, SECONDARY, "queue"]))
                except SessionError:
                    pass
            tick(ep)
            for r in ep.requests:
                cond = (not r.terminal) and needs_action(ep, r) and r.state != MAIN
                trace[r.id].append((ep.clock, cond))
        summary = episode_summary(ep)
        for rec in summary["requests"]:
            got = rec["neglect_intervals"]
            want = _condense(trace[rec["id"]], ep.config.time_budget)
            assert len(got) == len(want)
            for (gs, ge), (ws, we) in zip(got, want):
                assert gs == pytest.approx(ws, abs=1e-9)
                assert ge == pytest.approx(we, abs=1e-9)

    def test_headless_yields_one_interval_per_request(self):
        ep = start_episode(EpisodeConfig(n_requests=2, time_budget=120.0,
                                         initial_traffic_per_lane=0, max_traffic=0))
        while not ep.ended:
            tick(ep)
        for r in ep.requests:
            assert r.state == MISSED
            assert len(r.neglect_intervals) == 1
            start, end = r.neglect_intervals[0]
            assert end == 120.0
            assert 5.0 < start < 15.0  # braking for the 200 m path end


def _condense(pairs, budget):
    """Collapse a per-tick (clock, bool) trace into closed intervals."""
    intervals = []
    open_at = None
    prev_clock = 0.0
    for clock, cond in pairs:
        if cond and open_at is None:
            open_at = clock
        elif not cond and open_at is not None:
            intervals.append((open_at, clock))
            open_at = None
        prev_clock = clock
    if open_at is not None:
        intervals.append((open_at, min(budget, prev_clock)))
    return intervals


class TestResolutionAndEnd:
    def test_short_resolution_distance_resolves_without_input(self):
        scenario = ScenarioConfig(resolution_distance_m=150.0)
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,), scenario=scenario,
                                         time_budget=60.0, initial_traffic_per_lane=0,
                                         max_traffic=0))
        while not ep.ended:
            tick(ep)
        summary = episode_summary(ep)
        assert summary["resolved"] == 1
        r = summary["requests"][0]
        assert r["resolved_at"] is not None
        # episode ends after the 2 s linger
        assert summary["ended_at"] == pytest.approx(r["resolved_at"] + 2.0, abs=2 * SIM_TICK)

    def test_budget_expiry_marks_missed(self):
        ep = start_episode(EpisodeConfig(n_requests=3, time_budget=20.0,
                                         initial_traffic_per_lane=0, max_traffic=0))
        while not ep.ended:
            tick(ep)
        summary = episode_summary(ep)
        assert summary["missed"] == 3
        assert summary["resolved"] + summary["missed"] == 3
        assert summary["ended_at"] == 20.0

    def test_no_state_change_after_end(self):
        ep = start_episode(EpisodeConfig(n_requests=1, time_budget=5.0,
                                         initial_traffic_per_lane=0, max_traffic=0))
        while not ep.ended:
            tick(ep)
        with pytest.raises(SessionError):
            tick(ep)
        applied, err = apply_message(ep, {"type": "slot_assign", "request_id": 0,
                                          "slot": MAIN})
        assert not applied and err == "ended"

    def test_summary_before_end_rejected(self):
        ep = start_episode(EpisodeConfig(n_requests=1))
        with pytest.raises(SessionError):
            episode_summary(ep)

    def test_summary_is_idempotent(self):
        ep = start_episode(EpisodeConfig(n_requests=1, time_budget=5.0,
                                         initial_traffic_per_lane=0, max_traffic=0))
        while not ep.ended:
            tick(ep)
        assert episode_summary(ep) == episode_summary(ep)


class TestInputGating:
    def test_path_input_to_non_main_rejected_without_trace(self):
        ep = start_episode(EpisodeConfig(n_requests=2, initial_traffic_per_lane=0,
                                         max_traffic=0))
        assign_slot(ep, 0, MAIN)
        tick(ep)
        path_before = ep.scenes[1].assisted.path.waypoints.points.copy()
        applied, err = apply_message(ep, {"type": "waypoint_place", "request_id": 1,
                                          "x": 250.0, "y": 0.0, "snap": False})
        assert not applied and err == "not_main"
        assert np.array_equal(ep.scenes[1].assisted.path.waypoints.points, path_before)
        assert ep.requests[1].inputs["waypoint"] == 0

    def test_fuzzed_non_main_inputs_leave_no_trace(self):
        ep = start_episode(EpisodeConfig(n_requests=3, initial_traffic_per_lane=0,
                                         max_traffic=0))
        assign_slot(ep, 0, MAIN)
        rng = random.Random(9)
        for _ in range(200):
            tick(ep)
            rid = rng.randint(1, 2)
            before = ep.scenes[rid].assisted.path.waypoints.points.copy()
            msg = rng.choice([
                {"type": "waypoint_place", "request_id": rid, "x": 300.0, "y": 0.0},
                {"type": "candidate_select", "request_id": rid, "index": 0,
                 "generation_tick": ep.tick_index},
                {"type": "stroke_begin", "request_id": rid},
            ])
            applied, err = apply_message(ep, msg)
            assert not applied
            assert np.array_equal(ep.scenes[rid].assisted.path.waypoints.points, before)

    def test_main_request_accepts_waypoint(self):
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,),
                                         initial_traffic_per_lane=0, max_traffic=0))
        assign_slot(ep, 0, MAIN)
        for _ in range(int(4.0 / SIM_TICK)):  # drive until the path end is in view
            tick(ep)
        v = ep.scenes[0].assisted
        applied, err = apply_message(ep, {"type": "waypoint_place", "request_id": 0,
                                          "x": 260.0, "y": 3.5, "snap": True})
        assert applied, err
        assert ep.requests[0].inputs["waypoint"] == 1
        assert v.path.length == pytest.approx(260.0, abs=1.0)

    def test_stroke_flow_applies_merge(self):
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,),
                                         initial_traffic_per_lane=0, max_traffic=0))
        assign_slot(ep, 0, MAIN)
        tick(ep)
        v = ep.scenes[0].assisted
        # stroke starts on the path and runs 50 m past its end: extension
        apply_message(ep, {"type": "stroke_begin", "request_id": 0, "snap": False})
        for i in range(51):
            apply_message(ep, {"type": "stroke_sample", "request_id": 0,
                               "x": 150.0 + 2.0 * i, "y": 3.5, "t": 0.01 * i})
        applied, err = apply_message(ep, {"type": "stroke_end", "request_id": 0})
        assert applied, err
        assert ep.requests[0].inputs["trajectory"] == 1
        assert v.path.length == pytest.approx(250.0, abs=1.0)

    def test_on_path_stroke_is_a_self_replacement(self):
        ep = start_episode(EpisodeConfig(n_requests=1, sides=(LEFT,),
                                         initial_traffic_per_lane=0, max_traffic=0))
        assign_slot(ep, 0, MAIN)
        tick(ep)
        v = ep.scenes[0].assisted
        apply_message(ep, {"type": "stroke_begin", "request_id": 0, "snap": False})
        for i in range(30):
            apply_message(ep, {"type": "stroke_sample", "request_id": 0,
                               "x": 20.0 + 2.0 * i, "y": 3.5, "t": 0.01 * i})
        applied, err = apply_message(ep, {"type": "stroke_end", "request_id": 0})
        assert applied, err
        # replacing a straight span with the same straight span is a no-op
        assert v.path.length == pytest.approx(200.0, abs=0.5)
