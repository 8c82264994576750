"""Run one multi-request bot episode, write its metrics log, and compute the
derived measures from the log alone.

Run:  python3 demos/metrics_demo.py   (takes ~20 s)
"""

import json
import tempfile
from pathlib import Path

from teleassist.bots import make_policy, run_bot_episode
from teleassist.metrics import build_report, read_log
from teleassist.protocol import config_to_wire
from teleassist.session import EpisodeConfig

config = EpisodeConfig(n_requests=2, seed=9)
summary, server = run_bot_episode(config, make_policy("pathplan"))
print(f"episode: resolved={summary['resolved']} missed={summary['missed']} "
      f"ended at {summary['ended_at']:.1f} s")

with tempfile.TemporaryDirectory() as tmp:
    log_path = Path(tmp) / "episode.log"
    server.episode.log.write(log_path)
    print(f"log: {sum(1 for _ in open(log_path))} line-delimited records")
    report = build_report(read_log(log_path), config_to_wire(config))

print("\nderived measures (the log file is their sole input):")
for key in ("missed_count", "deviation_time_sum_m", "deviation_progress_sum_m",
            "neglected_avg_s", "mouse_travel_cm"):
    print(f"  {key:26s} {report[key]:.2f}" if isinstance(report[key], float)
          else f"  {key:26s} {report[key]}")
print("  aoi_shares_pct            " + json.dumps(report["aoi_shares_pct"]))
