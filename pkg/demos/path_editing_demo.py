"""The three interaction concepts as pure path edits: waypoint clicks with
the 90-degree gate, trajectory strokes with reversal blocking and merge
rules, and path-plan candidate generation.

Run:  python3 demos/path_editing_demo.py
"""

import numpy as np

from teleassist.geometry import Polyline
from teleassist.pathedit import (EditRejected, PlannedPath, Stroke, apply_merge,
                                 classify_merge, generate_candidates,
                                 generate_reverse_candidates, stroke_to_trajectory,
                                 waypoint_place)
from teleassist.world import ScenarioConfig, build_scenario

world = build_scenario(ScenarioConfig())
path = PlannedPath(Polyline([(0.0, 3.5), (100.0, 3.5), (200.0, 3.5)]), 0, "initial")

print("== waypoint guidance ==")
path = waypoint_place(path, (260.0, 0.0), world, snap=True)
end = path.end_point()
print(f"placed a snapped waypoint; path now ends at ({end[0]:.1f}, {end[1]:.1f})")
for bad in [(200.0, 60.0), (100.0, 0.0)]:
    try:
        waypoint_place(path, bad, world)
        print(f"placed {bad} (unexpected)")
    except EditRejected as exc:
        print(f"click at {bad} rejected: {exc.reason}")

print("\n== trajectory guidance ==")
forward = [(x, 3.5, 0.01 * i) for i, x in enumerate(np.linspace(180, 230, 26))]
jitter_back = [(230 - k, 3.6, 0.26 + 0.01 * k) for k in range(1, 8)]
resume = [(x, 3.5, 0.45 + 0.01 * i) for i, x in enumerate(np.linspace(231, 280, 25))]
stroke = Stroke(tuple(forward + jitter_back + resume))
line = stroke_to_trajectory(stroke, world)
xs = line.points[:, 0]
print(f"stroke with a mid-drag reversal -> {len(line)} equidistant waypoints, "
      f"monotone: {bool(np.all(np.diff(xs) > 0))}")

initial = PlannedPath(Polyline([(0.0, 3.5), (100.0, 3.5), (200.0, 3.5)]), 0, "initial")
cls = classify_merge(initial, line)
merged = apply_merge(initial, line, cls)
print(f"merge class: {cls.kind}; merged path length {merged.length:.1f} m")

print("\n== path planning ==")
for pose_x in (100.0, 400.0):
    cset = generate_candidates(world, (pose_x, 0.0), 0.0)
    lengths = [f"{c.waypoints.length:.0f}m" for c in cset.forward]
    where = "before works" if pose_x < world.works.start_s else "inside works"
    print(f"at x={pose_x:.0f} ({where}): {len(cset.forward)} forward "
          f"candidates {lengths}")
rev = generate_reverse_candidates((100.0, 0.0), 0.0)
print("reverse candidates end at:",
      [(round(float(c.waypoints.points[-1][0]), 1),
        round(float(c.waypoints.points[-1][1]), 1)) for c in rev])
