"""Scripted operator clients.

Bots stand in for the human operator and act on snapshot state exactly as a
console would, through the socket protocol: they never reach into the
session. Each input authors path up to ``reach_m`` meters ahead of the
vehicle and fires when the remaining path drops below ``trigger_m``; the
documented defaults reproduce the minimum-input reference counts (3 path
plan selections, 7 waypoint clicks, 10 trajectory strokes) for a single
request.
"""

import math
import socket
import threading
from dataclasses import dataclass

from .protocol import decode, encode
from .server import LineFraming, SessionServer
from .session import EpisodeConfig, MAIN, MISSED, RESOLVED

PATHPLAN = "pathplan"
WAYPOINT = "waypoint"
TRAJECTORY = "trajectory"
IDLE = "idle"

_DEFAULTS = {
    # reach_m: how far ahead of the vehicle one input authors path.
    # trigger_m: remaining-path threshold below which the bot acts; the net
    # advance per input is reach - trigger, calibrated against the 400 m an
    # input sequence must cover beyond the pre-assigned path.
    PATHPLAN: {"reach_m": 185.0, "trigger_m": 25.0},
    WAYPOINT: {"reach_m": 86.0, "trigger_m": 25.0},
    TRAJECTORY: {"reach_m": 60.0, "trigger_m": 20.0},
    IDLE: {"reach_m": 0.0, "trigger_m": 0.0},
}


@dataclass(frozen=True)
class BotPolicy:
    kind: str
    reaction_delay_s: float = 0.0
    reach_m: float = 0.0
    trigger_m: float = 0.0
    dwell_s: float = 8.0  # round-robin main-slot rotation period

    def __post_init__(self):
        if self.kind not in _DEFAULTS:
            raise ValueError(f"unknown bot kind {self.kind!r}")
        if self.reaction_delay_s < 0:
            raise ValueError("reaction delay must be >= 0")


def make_policy(kind: str, reaction_delay_s: float = 0.0, dwell_s: float = 8.0) -> BotPolicy:
    d = _DEFAULTS[kind]
    return BotPolicy(kind=kind, reaction_delay_s=reaction_delay_s,
                     reach_m=d["reach_m"], trigger_m=d["trigger_m"], dwell_s=dwell_s)


def _blend(y0: float, y1: float, u: float) -> float:
    u = min(1.0, max(0.0, u))
    return y0 + (y1 - y0) * u * u * (3.0 - 2.0 * u)


class ScriptedOperator:
    """Pure snapshot-to-messages decision logic shared by all bot kinds."""

    def __init__(self, policy: BotPolicy):
        self.policy = policy
        self.resolution_m = None
        self.routes = {}          # request id -> (y_start, y_target, blend_lo, blend_hi)
        self.rotation_due = 0.0
        self.rotation_order = []
        self.started = False
        self._pending = []        # (due_clock, request_id, messages)

    def on_hello(self, hello: dict):
        cfg = hello["config"]
        self.resolution_m = float(cfg["resolution_distance_m"])
        works_start = float(cfg["works_start_m"])
        for rid, scene in enumerate(hello.get("scenes", [])):
            centers = scene["lane_centers_y"]
            blocked = set(scene["works"]["blocked_lanes"])
            start_lane = max(blocked) if scene["side"] == "left" else min(blocked)
            target_lane = start_lane - 1 if scene["side"] == "left" else start_lane + 1
            self.routes[rid] = (centers[start_lane], centers[target_lane],
                                works_start - 80.0, works_start - 40.0)
        self.rotation_order = sorted(self.routes)

    def route_y(self, request_id: int, x: float) -> float:
        y0, y1, lo, hi = self.routes[request_id]
        if x <= lo:
            return y0
        if x >= hi:
            return y1
        return _blend(y0, y1, (x - lo) / (hi - lo))

    def on_snapshot(self, snap: dict) -> list:
        clock = float(snap["clock"])
        out = []
        if not self.started:
            self.started = True
            out.append({"type": "aoi_change", "area": "main_panel", "enter": True, "t": clock})
        active = [r for r in snap["requests"] if r["state"] not in (RESOLVED, MISSED)]
        if not active:
            return out
        main = next((r for r in active if r["state"] == MAIN), None)

        rotate = main is None or (len(active) > 1 and clock >= self.rotation_due)
        if rotate:
            nxt = self._next_request(active, main["id"] if main else None)
            if main is None or nxt != main["id"]:
                out.append({"type": "slot_assign", "request_id": nxt, "slot": "main",
                            "t": clock})
            self.rotation_due = clock + self.policy.dwell_s
            return out

        due = [p for p in self._pending if p[0] <= clock and p[1] == main["id"]]
        if due:
            self._pending = [p for p in self._pending if p not in due]
            for _, _, msgs in due:
                out.extend(msgs)
            return out
        if any(p[1] == main["id"] for p in self._pending):
            return out

        if self.policy.kind != IDLE and self._wants_input(main):
            msgs = self._make_input(main, clock)
            if self.policy.reaction_delay_s > 0.0:
                self._pending.append((clock + self.policy.reaction_delay_s, main["id"], msgs))
            else:
                out.extend(msgs)
        return out

    def _next_request(self, active, current_id):
        ids = [r["id"] for r in active]
        if current_id is None or current_id not in ids:
            return ids[0]
        i = ids.index(current_id)
        return ids[(i + 1) % len(ids)]

    def _wants_input(self, r: dict) -> bool:
        if r["path_end_progress_m"] >= self.resolution_m:
            return False
        return r["remaining_path_m"] < self.policy.trigger_m

    def _make_input(self, r: dict, clock: float) -> list:
        v = r["vehicle"]
        rid = r["id"]
        reach = self.policy.reach_m
        travel_px = reach * 3.78  # nominal screen travel for the gesture
        pointer = {"type": "pointer_moved", "dx": travel_px, "dy": 12.0,
                   "px_per_cm": 37.8, "t": clock}
        if self.policy.kind == PATHPLAN:
            idx = self._pick_candidate(r)
            if idx is None:
                return []
            return [pointer, {"type": "candidate_select", "request_id": rid, "index": idx,
                              "reverse": False,
                              "generation_tick": r["candidates"]["generation_tick"],
                              "t": clock}]
        if self.policy.kind == WAYPOINT:
            x = v["x"] + reach
            return [pointer, {"type": "waypoint_place", "request_id": rid,
                              "x": x, "y": self.route_y(rid, x), "snap": True, "t": clock}]
        if self.policy.kind == TRAJECTORY:
            msgs = [pointer, {"type": "stroke_begin", "request_id": rid, "snap": False,
                              "t": clock}]
            n = max(2, int(reach / 2.0))
            for i in range(n + 1):
                x = v["x"] + reach * i / n
                y_route = self.route_y(rid, x)
                # ease from the vehicle's actual lateral position onto the route
                u = min(1.0, (x - v["x"]) / 15.0)
                y = v["y"] + (y_route - v["y"]) * u
                msgs.append({"type": "stroke_sample", "request_id": rid, "x": x, "y": y,
                             "t": clock + 0.01 * (i + 1)})
            msgs.append({"type": "stroke_end", "request_id": rid, "t": clock + 0.01 * (n + 2)})
            return msgs
        return []

    def _pick_candidate(self, r: dict) -> int | None:
        best = None
        v = r["vehicle"]
        for i, pts in enumerate(r["candidates"]["forward"]):
            length = 0.0
            for (x0, y0), (x1, y1) in zip(pts, pts[1:]):
                length += math.hypot(x1 - x0, y1 - y0)
            end_y = pts[-1][1] if pts else 0.0
            score = (round(length, 3), -abs(end_y - v["y"]), -i)
            if best is None or score > best[0]:
                best = (score, i)
        return best[1] if best else None


def run_bot_episode(config: EpisodeConfig, policy: BotPolicy,
                    host: str = "127.0.0.1") -> tuple[dict, "SessionServer"]:
    """Serve one episode and drive it with a bot over a real socket in
    lockstep; returns (summary, server) with recording and log attached."""
    server = SessionServer(config, lockstep=True)
    addr = server.listen(host, 0)
    errors = []

    def serve():
        try:
            server.serve_one()
        except Exception as exc:  # surfaced after join
            errors.append(exc)

    thread = threading.Thread(target=serve, daemon=True)
    thread.start()

    bot = ScriptedOperator(policy)
    conn = socket.create_connection(addr, timeout=60.0)
    conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
    framing = LineFraming(conn)
    framing.send_message(encode({"type": "client_hello"}))
    summary = None
    try:
        while True:
            line = framing.recv_message()
            if line is None:
                break
            msg = decode(line)
            kind = msg["type"]
            if kind == "hello":
                bot.on_hello(msg)
            elif kind == "snapshot":
                for reply in bot.on_snapshot(msg):
                    framing.send_message(encode(reply))
                framing.send_message(encode({"type": "ack", "tick": msg["tick"]}))
            elif kind == "episode_end":
                summary = msg["summary"]
                break
    finally:
        conn.close()
    thread.join(timeout=60.0)
    if errors:
        raise errors[0]
    if summary is None:
        summary = server.summary
    return summary, server
