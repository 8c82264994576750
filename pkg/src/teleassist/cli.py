"""Command-line entry points: serve a live session, run headless bot
episodes, replay recordings, and emit metric reports.

Exit codes: 0 success, 2 configuration error, 3 protocol/startup error,
4 replay summary mismatch.
"""

import argparse
import json
import sys

from .bots import IDLE, PATHPLAN, TRAJECTORY, WAYPOINT, make_policy, run_bot_episode
from .metrics import build_report, read_log, write_report, MetricsLogError
from .protocol import ProtocolError, config_to_wire, read_recording, replay
from .server import SessionServer, run_headless
from .session import EpisodeConfig
from .world import LEFT, RIGHT, ConfigError, ScenarioConfig, load_scenario_config

EXIT_OK = 0
EXIT_CONFIG = 2
EXIT_PROTOCOL = 3
EXIT_REPLAY_MISMATCH = 4


def _episode_config(args) -> EpisodeConfig:
    scenario = load_scenario_config(args.config) if args.config else ScenarioConfig()
    sides = (args.side,) if args.side else None
    return EpisodeConfig(n_requests=args.requests, time_budget=args.budget,
                         sides=sides, seed=args.seed, scenario=scenario)


def _parse_listen(spec: str) -> tuple:
    host, _, port = spec.rpartition(":")
    if not host or not port.isdigit():
        raise ConfigError(f"--listen must be HOST:PORT, got {spec!r}")
    return host, int(port)


def _print_summary(summary: dict):
    print(f"resolved={summary['resolved']} missed={summary['missed']} "
          f"ended_at={summary['ended_at']:.2f}s")
    print(f"{'request':>7} {'state':>9} {'resolved_at':>11} {'waypoint':>8} "
          f"{'trajectory':>10} {'pathplan':>8} {'neglect_s':>9}")
    for r in summary["requests"]:
        neglect = sum(e - s for s, e in r["neglect_intervals"])
        resolved_at = f"{r['resolved_at']:.1f}" if r["resolved_at"] is not None else "-"
        print(f"{r['id']:>7} {r['state']:>9} {resolved_at:>11} "
              f"{r['inputs']['waypoint']:>8} {r['inputs']['trajectory']:>10} "
              f"{r['inputs']['pathplan']:>8} {neglect:>9.1f}")


def cmd_run(args) -> int:
    config = _episode_config(args)
    server = SessionServer(config, lockstep=False, realtime=True)
    host, port = _parse_listen(args.listen)
    addr = server.listen(host, port)
    print(f"listening on {addr[0]}:{addr[1]} "
          f"(config: {json.dumps(config_to_wire(config), sort_keys=True)})")
    summary = server.serve_one()
    _print_summary(summary)
    if args.record:
        server.recording.write(args.record)
        print(f"recording written to {args.record}")
    if args.log:
        server.episode.log.write(args.log)
        print(f"metrics log written to {args.log}")
    return EXIT_OK


def cmd_bot(args) -> int:
    policy = make_policy(args.bot, reaction_delay_s=args.delay)
    last = None
    for k in range(args.repeats):
        config = _episode_config(args)
        if k > 0:
            config = EpisodeConfig(**{**config.__dict__, "seed": config.seed + k})
        if args.bot == IDLE and not args.connect_idle:
            summary, episode = run_headless(config)
            server = None
        else:
            summary, server = run_bot_episode(config, policy)
            episode = server.episode
        print(f"--- episode {k} (seed {config.seed}) ---")
        _print_summary(summary)
        last = (summary, server, episode)
    summary, server, episode = last
    if args.record and server is not None:
        server.recording.write(args.record)
    if args.log:
        episode.log.write(args.log)
    if args.report:
        write_report(build_report(episode.log, config_to_wire(episode.config)), args.report)
    return EXIT_OK


def cmd_replay(args) -> int:
    recording = read_recording(args.recording)
    summary, episode = replay(recording)
    _print_summary(summary)
    if args.log:
        episode.log.write(args.log)
    if args.report:
        write_report(build_report(episode.log, recording.config_wire), args.report)
    if args.expect:
        with open(args.expect, "r", encoding="utf-8") as fh:
            expected = json.load(fh)
        if expected != summary:
            print("replay mismatch: summary differs from expected", file=sys.stderr)
            return EXIT_REPLAY_MISMATCH
        print("replay matches expected summary")
    return EXIT_OK


def cmd_report(args) -> int:
    log = read_log(args.log)
    report = build_report(log)
    if args.report:
        write_report(report, args.report)
    else:
        print(json.dumps(report, sort_keys=True, indent=2))
    return EXIT_OK


def _add_episode_flags(p):
    p.add_argument("--config", default=None, help="scenario config file (key = value lines)")
    p.add_argument("--requests", type=int, default=1, metavar="N")
    p.add_argument("--side", choices=[LEFT, RIGHT], default=None,
                   help="works side for every request (default: alternating)")
    p.add_argument("--seed", type=int, default=0, metavar="S")
    p.add_argument("--budget", type=float, default=120.0, help="episode time budget, seconds")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="teleassist",
                                     description="Remote-assistance simulation suite")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="serve a live session for an operator console")
    _add_episode_flags(p)
    p.add_argument("--listen", default="127.0.0.1:8700", metavar="HOST:PORT")
    p.add_argument("--record", default=None, metavar="PATH")
    p.add_argument("--log", default=None, metavar="PATH", help="metrics log output")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bot", help="run headless scripted-operator episodes")
    _add_episode_flags(p)
    p.add_argument("--bot", choices=[PATHPLAN, WAYPOINT, TRAJECTORY, IDLE], default=PATHPLAN)
    p.add_argument("--delay", type=float, default=0.0, help="bot reaction delay, seconds")
    p.add_argument("--repeats", type=int, default=1, metavar="K")
    p.add_argument("--record", default=None, metavar="PATH")
    p.add_argument("--log", default=None, metavar="PATH")
    p.add_argument("--report", default=None, metavar="PATH")
    p.add_argument("--connect-idle", action="store_true",
                   help="drive the idle bot through a socket instead of headless")
    p.set_defaults(func=cmd_bot)

    p = sub.add_parser("replay", help="re-run a recording deterministically")
    p.add_argument("recording", metavar="RECORDING")
    p.add_argument("--log", default=None, metavar="PATH")
    p.add_argument("--report", default=None, metavar="PATH")
    p.add_argument("--expect", default=None, metavar="SUMMARY_JSON",
                   help="compare the replayed summary against this file")
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="compute the derived measures from a metrics log")
    p.add_argument("log", metavar="LOG")
    p.add_argument("--report", default=None, metavar="PATH")
    p.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except MetricsLogError as exc:
        print(f"log error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ProtocolError as exc:
        print(f"protocol error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL
    except OSError as exc:
        print(f"startup error: {exc}", file=sys.stderr)
        return EXIT_PROTOCOL


if __name__ == "__main__":
    sys.exit(main())
