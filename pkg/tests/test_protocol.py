"""Wire codec, recording format, replay determinism, ordering, and the
socket server with both framings."""

import base64
import hashlib
import json
import os
import socket
import struct
import threading

import pytest

from teleassist.bots import make_policy, run_bot_episode
from teleassist.protocol import (PROTOCOL_VERSION, ProtocolError, SessionRecording,
                                 config_from_wire, config_to_wire, decode, encode,
                                 hello_message, new_recording, read_recording, replay,
                                 snapshot_message)
from teleassist.server import LineFraming, SessionServer, run_headless
from teleassist.session import EpisodeConfig, start_episode, tick
from teleassist.world import LEFT

FAST = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=2, time_budget=6.0,
                     initial_traffic_per_lane=1, max_traffic=3)

EXAMPLE_MESSAGES = [
    {"type": "client_hello"},
    {"type": "slot_assign", "request_id": 0, "slot": "main", "t": 0.05},
    {"type": "waypoint_place", "request_id": 0, "x": 210.0, "y": 0.0, "snap": True,
     "t": 1.2},
    {"type": "waypoint_edit", "request_id": 0, "edit": "delete", "index": 3, "t": 2.0},
    {"type": "stroke_begin", "request_id": 0, "snap": False, "t": 3.0},
    {"type": "stroke_sample", "request_id": 0, "x": 1.0, "y": 2.0, "t": 3.01},
    {"type": "stroke_end", "request_id": 0, "t": 3.5},
    {"type": "candidate_select", "request_id": 0, "index": 1, "reverse": False,
     "generation_tick": 42, "t": 4.0},
    {"type": "focus_toggle", "mode": "vehicle", "on": True, "t": 5.0},
    {"type": "view_drag", "dx": 10.0, "dy": -4.0, "t": 5.5},
    {"type": "pointer_moved", "dx": 3.0, "dy": 4.0, "px_per_cm": 37.8, "t": 6.0},
    {"type": "aoi_change", "area": "main_panel", "enter": True, "t": 6.5},
    {"type": "ack", "tick": 99},
]


class TestCodec:
    @pytest.mark.parametrize("msg", EXAMPLE_MESSAGES, ids=lambda m: m["type"])
    def test_round_trip_every_client_kind(self, msg):
        assert decode(encode(msg)) == msg

    def test_round_trip_server_kinds(self):
        ep = start_episode(FAST)
        for _ in range(3):
            tick(ep)
        for msg in (hello_message(FAST, ep), snapshot_message(ep),
                    {"type": "resolved", "request_id": 0, "clock": 3.0},
                    {"type": "reject", "reason": "angle_too_sharp"},
                    {"type": "error", "message": "bad"}):
            assert decode(encode(msg)) == msg

    def test_hello_carries_protocol_version_1(self):
        assert hello_message(FAST)["protocol_version"] == "1"
        assert PROTOCOL_VERSION == "1"

    def test_unknown_type_named_in_error(self):
        with pytest.raises(ProtocolError, match="warp_drive"):
            decode(json.dumps({"type": "warp_drive"}))

    def test_trailing_garbage_rejected(self):
        with pytest.raises(ProtocolError):
            decode('{"type": "ack", "tick": 1} extra')

    def test_missing_fields_named(self):
        with pytest.raises(ProtocolError, match="request_id"):
            decode(json.dumps({"type": "slot_assign", "slot": "main"}))

    def test_config_wire_round_trip(self):
        wire = config_to_wire(FAST)
        back = config_from_wire(wire)
        assert config_to_wire(back) == wire


class TestRecording:
    def test_write_read_round_trip(self, tmp_path):
        rec = new_recording(FAST)
        rec.add(3, {"type": "slot_assign", "request_id": 0, "slot": "main", "t": 0.05})
        rec.add(9, {"type": "candidate_select", "request_id": 0, "index": 0,
                    "generation_tick": 9, "t": 0.15})
        rec.gaps.append(60)
        p = tmp_path / "session.rec"
        rec.write(p)
        back = read_recording(p)
        assert back.seed == rec.seed
        assert back.config_wire == rec.config_wire
        assert back.entries == [(t, m) for t, m in rec.entries]
        assert back.gaps == [60]

    def test_version_mismatch_names_both_versions(self, tmp_path):
        p = tmp_path / "old.rec"
        header = {"type": "header", "protocol_version": "0", "seed": 1,
                  "config": config_to_wire(FAST)}
        p.write_text(json.dumps(header) + "\n", encoding="utf-8")
        with pytest.raises(ProtocolError) as exc:
            read_recording(p)
        assert "'0'" in str(exc.value) and "'1'" in str(exc.value)

    def test_empty_file_rejected(self, tmp_path):
        p = tmp_path / "empty.rec"
        p.write_text("", encoding="utf-8")
        with pytest.raises(ProtocolError):
            read_recording(p)


class TestReplay:
    def test_empty_recording_equals_headless_run(self):
        summary_a, _ = replay(new_recording(FAST))
        summary_b, _ = run_headless(FAST)
        assert summary_a == summary_b

    def test_replay_reproduces_live_bot_run(self):
        config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=11)
        live, server = run_bot_episode(config, make_policy("pathplan"))
        replayed, episode = replay(server.recording)
        assert replayed == live
        assert episode.log.to_lines() == server.episode.log.to_lines()

    def test_removing_one_message_changes_the_summary(self):
        config = EpisodeConfig(n_requests=1, sides=(LEFT,), seed=11)
        live, server = run_bot_episode(config, make_policy("pathplan"))
        pruned = SessionRecording(seed=server.recording.seed,
                                  config_wire=server.recording.config_wire)
        selects = [e for e in server.recording.entries
                   if e[1]["type"] == "candidate_select"]
        pruned.entries = [e for e in server.recording.entries if e != selects[-1]]
        mutated, _ = replay(pruned)
        assert mutated != live

    def test_same_tick_messages_apply_in_arrival_order(self):
        # two slot assignments in one tick: the later one wins
        rec = new_recording(EpisodeConfig(n_requests=2, time_budget=1.0,
                                          initial_traffic_per_lane=0, max_traffic=0))
        rec.add(2, {"type": "slot_assign", "request_id": 0, "slot": "main", "t": 0.0})
        rec.add(2, {"type": "slot_assign", "request_id": 1, "slot": "main", "t": 0.0})
        _, episode = replay(rec)
        # request 1 displaced request 0, so 0 ended queued then missed
        states = {r["id"]: r for r in __import__("teleassist.session", fromlist=["episode_summary"]).episode_summary(episode)["requests"]}
        assert states[0]["state"] == "missed"

    def test_sequence_numbered_burst_preserves_order(self):
        rec = new_recording(EpisodeConfig(n_requests=1, time_budget=1.0,
                                          initial_traffic_per_lane=0, max_traffic=0))
        for i in range(20):
            rec.add(5, {"type": "pointer_moved", "dx": float(i), "dy": 0.0,
                        "px_per_cm": 37.8, "t": 0.1})
        _, episode = replay(rec)
        dxs = [e.dx for e in episode.log.pointer_events]
        assert dxs == [float(i) for i in range(20)]


def _ws_client_send(sock, text):
    payload = text.encode("utf-8")
    mask = os.urandom(4)
    header = bytearray([0x81])
    n = len(payload)
    if n < 126:
        header.append(0x80 | n)
    elif n < (1 << 16):
        header.append(0x80 | 126)
        header.extend(struct.pack(">H", n))
    else:
        header.append(0x80 | 127)
        header.extend(struct.pack(">Q", n))
    header.extend(mask)
    masked = bytes(b ^ mask[i % 4] for i, b in enumerate(payload))
    sock.sendall(bytes(header) + masked)


def _ws_client_recv(sock, buf):
    def need(n):
        while len(buf) < n:
            chunk = sock.recv(65536)
            if not chunk:
                raise ConnectionError("closed")
            buf.extend(chunk)
        out = bytes(buf[:n])
        del buf[:n]
        return out

    b0, b1 = need(2)
    length = b1 & 0x7F
    if length == 126:
        length = struct.unpack(">H", need(2))[0]
    elif length == 127:
        length = struct.unpack(">Q", need(8))[0]
    return need(length).decode("utf-8")


class TestSocketServer:
    def _serve_async(self, config, lockstep=True):
        server = SessionServer(config, lockstep=lockstep)
        addr = server.listen("127.0.0.1", 0)
        thread = threading.Thread(target=server.serve_one, daemon=True)
        thread.start()
        return server, addr, thread

    def test_line_client_session_and_snapshot_cadence(self):
        server, addr, thread = self._serve_async(FAST)
        conn = socket.create_connection(addr, timeout=30)
        fr = LineFraming(conn)
        fr.send_message(encode({"type": "client_hello"}))
        hello = decode(fr.recv_message())
        assert hello["type"] == "hello"
        assert hello["config"]["n_requests"] == 1
        ticks = []
        while True:
            msg = decode(fr.recv_message())
            if msg["type"] == "snapshot":
                ticks.append(msg["tick"])
                fr.send_message(encode({"type": "ack", "tick": msg["tick"]}))
            elif msg["type"] == "episode_end":
                break
        conn.close()
        thread.join(timeout=30)
        assert all(b - a == 3 for a, b in zip(ticks, ticks[1:])), \
            "snapshots every 3 ticks (20 Hz)"
        assert ticks == sorted(ticks)

    def test_malformed_message_gets_error_reply_session_survives(self):
        server, addr, thread = self._serve_async(FAST)
        conn = socket.create_connection(addr, timeout=30)
        fr = LineFraming(conn)
        fr.send_message(encode({"type": "client_hello"}))
        decode(fr.recv_message())  # hello
        fr.send_message("this is not json")
        saw_error = False
        while True:
            msg = decode(fr.recv_message())
            if msg["type"] == "error":
                saw_error = True
            elif msg["type"] == "snapshot":
                fr.send_message(encode({"type": "ack", "tick": msg["tick"]}))
            elif msg["type"] == "episode_end":
                break
        conn.close()
        thread.join(timeout=30)
        assert saw_error
        assert server.summary is not None

    def test_rejected_input_gets_reject_reply(self):
        server, addr, thread = self._serve_async(FAST)
        conn = socket.create_connection(addr, timeout=30)
        fr = LineFraming(conn)
        fr.send_message(encode({"type": "client_hello"}))
        decode(fr.recv_message())
        saw_reject = False
        while True:
            msg = decode(fr.recv_message())
            if msg["type"] == "snapshot":
                if msg["tick"] == 3:
                    # path input without holding the main slot
                    fr.send_message(encode({"type": "waypoint_place", "request_id": 0,
                                            "x": 210.0, "y": 3.5, "t": 0.0}))
                fr.send_message(encode({"type": "ack", "tick": msg["tick"]}))
            elif msg["type"] == "reject":
                saw_reject = True
                assert msg["reason"] == "not_main"
            elif msg["type"] == "episode_end":
                break
        conn.close()
        thread.join(timeout=30)
        assert saw_reject

    def test_disconnect_continues_headless_and_notes_gap(self):
        server, addr, thread = self._serve_async(FAST)
        conn = socket.create_connection(addr, timeout=30)
        fr = LineFraming(conn)
        fr.send_message(encode({"type": "client_hello"}))
        decode(fr.recv_message())
        msg = decode(fr.recv_message())
        assert msg["type"] == "snapshot"
        conn.close()  # vanish without an ack
        thread.join(timeout=60)
        assert server.summary is not None
        assert server.summary["missed"] == 1
        assert server.recording.gaps, "recording must note the client gap"

    def test_websocket_binding_round_trip(self):
        server, addr, thread = self._serve_async(FAST)
        sock = socket.create_connection(addr, timeout=30)
        key = base64.b64encode(os.urandom(16)).decode()
        sock.sendall((f"GET / HTTP/1.1\r\nHost: x\r\nUpgrade: websocket\r\n"
                      f"Connection: Upgrade\r\nSec-WebSocket-Key: {key}\r\n"
                      f"Sec-WebSocket-Version: 13\r\n\r\n").encode())
        buf = bytearray()
        while b"\r\n\r\n" not in buf:
            buf.extend(sock.recv(65536))
        head, _, rest = bytes(buf).partition(b"\r\n\r\n")
        accept = base64.b64encode(hashlib.sha1(
            (key + "258EAFA5-E914-47DA-95CA-C5AB0DC85B11").encode()).digest()).decode()
        assert accept.encode() in head
        buf = bytearray(rest)
        hello = decode(_ws_client_recv(sock, buf))
        assert hello["type"] == "hello"
        while True:
            msg = decode(_ws_client_recv(sock, buf))
            if msg["type"] == "snapshot":
                _ws_client_send(sock, encode({"type": "ack", "tick": msg["tick"]}))
            elif msg["type"] == "episode_end":
                break
        sock.close()
        thread.join(timeout=30)
        assert server.summary is not None

    def test_port_busy_raises_startup_error(self):
        a = SessionServer(FAST)
        addr = a.listen("127.0.0.1", 0)
        b = SessionServer(FAST)
        with pytest.raises(ProtocolError):
            b.listen("127.0.0.1", addr[1])
        a._listener.close()
