"""Deterministic record/replay: a live socket-driven episode, its recording,
and a headless replay that reproduces the outcome byte for byte.

Run:  python3 demos/record_replay_demo.py   (takes ~10 s)
"""

import json

from teleassist.bots import make_policy, run_bot_episode
from teleassist.protocol import replay
from teleassist.session import EpisodeConfig
from teleassist.world import LEFT

config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=3)
live, server = run_bot_episode(config, make_policy("pathplan"))
print(f"live run: resolved={live['resolved']}, "
      f"{len(server.recording.entries)} applied messages recorded")

replayed, episode = replay(server.recording)
same_summary = json.dumps(replayed, sort_keys=True) == json.dumps(live, sort_keys=True)
same_log = episode.log.to_lines() == server.episode.log.to_lines()
print(f"replayed summary byte-identical: {same_summary}")
print(f"replayed metrics log byte-identical: {same_log}")

pruned = type(server.recording)(seed=server.recording.seed,
                                config_wire=server.recording.config_wire)
pruned.entries = server.recording.entries[:-1]
mutated, _ = replay(pruned)
print(f"dropping the final message changes the outcome: {mutated != live}")
