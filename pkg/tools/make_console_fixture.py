"""Regenerate the console-equivalence fixture.

Runs a path-plan bot episode over the real protocol, captures every
snapshot the bot acted on, and converts each bot message into the console
gesture that must reproduce it. The frontend test replays the gestures
through the gesture mapper and asserts the identical message stream; the
backend test replays the stream and asserts the identical episode summary.

Usage:  python3 tools/make_console_fixture.py
"""

import json
import socket
import threading
from pathlib import Path

from teleassist.bots import ScriptedOperator, make_policy
from teleassist.protocol import config_to_wire, decode, encode
from teleassist.server import LineFraming, SessionServer
from teleassist.session import EpisodeConfig
from teleassist.world import LEFT

FIXTURE = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures" \
    / "console_session.json"


def message_to_gesture(msg: dict, snapshot: dict) -> list:
    kind = msg["type"]
    if kind == "aoi_change":
        return [{"kind": "panel_enter" if msg["enter"] else "panel_leave",
                 "area": msg["area"]}]
    if kind == "slot_assign":
        return [{"kind": "card_drop", "requestId": msg["request_id"],
                 "target": msg["slot"]}]
    if kind == "pointer_moved":
        return [{"kind": "pointer_move", "dxPx": msg["dx"], "dyPx": msg["dy"]}]
    if kind == "candidate_select":
        request = next(r for r in snapshot["requests"] if r["id"] == msg["request_id"])
        pool = request["candidates"]["reverse" if msg["reverse"] else "forward"]
        x, y = pool[msg["index"]][-1]  # candidate end points are well separated
        return [{"kind": "right_down", "x": x, "y": y, "shift": bool(msg["reverse"]),
                 "ctrl": False, "panel": "main"},
                {"kind": "right_up", "x": x, "y": y}]
    raise ValueError(f"no gesture mapping for bot message {kind!r}")


def main():
    config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=1)
    server = SessionServer(config, lockstep=True)
    addr = server.listen("127.0.0.1", 0)
    thread = threading.Thread(target=server.serve_one, daemon=True)
    thread.start()

    bot = ScriptedOperator(make_policy("pathplan"))
    conn = socket.create_connection(addr, timeout=60.0)
    framing = LineFraming(conn)
    framing.send_message(encode({"type": "client_hello"}))
    steps = []
    summary = None
    while True:
        line = framing.recv_message()
        if line is None:
            break
        msg = decode(line)
        if msg["type"] == "hello":
            bot.on_hello(msg)
        elif msg["type"] == "snapshot":
            replies = bot.on_snapshot(msg)
            if replies:
                gestures = []
                for reply in replies:
                    gestures.extend(message_to_gesture(reply, msg))
                steps.append({"tick": msg["tick"], "snapshot": msg,
                              "gestures": gestures, "expected": replies})
            for reply in replies:
                framing.send_message(encode(reply))
            framing.send_message(encode({"type": "ack", "tick": msg["tick"]}))
        elif msg["type"] == "episode_end":
            summary = msg["summary"]
            break
    conn.close()
    thread.join(timeout=60.0)

    fixture = {
        "config_wire": config_to_wire(config),
        "seed": config.seed,
        "bot_summary": summary,
        "recording_entries": [[t, m] for t, m in server.recording.entries],
        "steps": steps,
    }
    FIXTURE.parent.mkdir(parents=True, exist_ok=True)
    FIXTURE.write_text(json.dumps(fixture, sort_keys=True, indent=1) + "\n",
                       encoding="utf-8")
    total = sum(len(s["expected"]) for s in steps)
    print(f"wrote {FIXTURE} ({len(steps)} steps, {total} messages, "
          f"resolved={summary['resolved']})")


if __name__ == "__main__":
    main()
