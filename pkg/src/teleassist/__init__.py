"""Deterministic remote-assistance simulation for automated vehicles at
road works: scenario geometry, three path-input concepts, vehicle and
traffic dynamics, a multi-request session model, a metrics pipeline, and a
record/replay wire protocol.
"""

__version__ = "0.1.0"

from .geometry import Polyline, interior_angle, resample_equidistant
from .world import (ScenarioConfig, World, build_scenario, load_scenario_config,
                    nearest_lane_center, progress_along)
from .pathedit import (CandidateSet, MergeClass, PlannedPath, Stroke, apply_merge,
                       classify_merge, generate_candidates, generate_reverse_candidates,
                       select_candidate, stroke_to_trajectory, waypoint_edit, waypoint_place)
from .dynamics import KinematicsConfig, VehicleState, is_resolved, proximity_flags
from .session import (AssistRequest, Episode, EpisodeConfig, assign_slot, episode_summary,
                      needs_action, start_episode, tick)
from .metrics import (MetricsLog, aoi_shares, build_report, deviation_progress_sum,
                      deviation_time_sum, mouse_travel, neglected_avg, read_log)
from .protocol import SessionRecording, decode, encode, read_recording, replay
