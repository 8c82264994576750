"""Reproduce the minimum-input reference: with the documented per-input
reaches, the scripted operators resolve a single request with exactly three
path-plan selections, seven waypoint clicks, or ten trajectory strokes.

Run:  python3 demos/bot_reference_counts_demo.py   (takes ~20 s)
"""

from teleassist.bots import make_policy, run_bot_episode
from teleassist.session import EpisodeConfig
from teleassist.world import LEFT

print(f"{'concept':12s} {'reach':>7s} {'inputs':>7s} {'resolved at':>12s}")
for kind in ("pathplan", "waypoint", "trajectory"):
    policy = make_policy(kind)
    config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=1)
    summary, _ = run_bot_episode(config, policy)
    request = summary["requests"][0]
    print(f"{kind:12s} {policy.reach_m:6.0f}m {request['inputs'][kind]:7d} "
          f"{request['resolved_at']:10.1f} s")
