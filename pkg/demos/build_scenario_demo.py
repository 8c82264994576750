"""Walk through the road-works scenario model: lanes, the works zone, its
mirrored variant, and the geometry queries everything else builds on.

Run:  python3 demos/build_scenario_demo.py
"""

from teleassist.world import (LEFT, RIGHT, ScenarioConfig, build_scenario,
                              nearest_lane_center, progress_along)


def describe(world, label):
    print(f"--- {label} ---")
    print(f"lanes: {world.lane_count} x {world.lane_width} m, "
          f"centers y = {[l.center_y for l in world.lanes]}")
    print(f"works zone: x in [{world.works.start_s:.0f}, {world.works.end_s:.0f}] m, "
          f"blocked lanes {sorted(world.works.blocked_lanes)}")
    print(f"cones: {len(world.obstacles)} discs of r={world.obstacles[0].radius} m")
    print(f"view range {world.view_range_m:.0f} m, resolution distance "
          f"{world.resolution_distance_m:.0f} m, initial path {world.initial_path_m:.0f} m")
    for x in (100.0, 400.0):
        print(f"passable lanes at x={x:.0f}: {world.passable_lanes_at(x)}")
    print()


left = build_scenario(ScenarioConfig(works_side=LEFT))
right = build_scenario(ScenarioConfig(works_side=RIGHT))
describe(left, "left-sided works")
describe(right, "right-sided works (exact mirror)")

print("mirror check: every right-variant cone is the y-negation of a left one")
mirrored = sorted((o.center[0], -o.center[1]) for o in left.obstacles)
actual = sorted(o.center for o in right.obstacles)
worst = max(abs(a[1] - b[1]) for a, b in zip(mirrored, actual))
print(f"largest lateral mismatch: {worst:.2e} m\n")

print("lane queries near the works taper:")
for p in [(310.0, 3.4), (310.0, 1.0), (310.0, -3.2)]:
    lane, foot, dev = nearest_lane_center(left, p)
    print(f"  point {p} -> lane {lane}, deviation {dev:.2f} m")

print("\nprogress is arc length along the road axis since request issue:")
for pose in [(0.0, 3.5), (250.0, 0.0), (600.0, -3.5)]:
    print(f"  pose {pose} -> progress {progress_along(left, 0.0, pose):.1f} m")
