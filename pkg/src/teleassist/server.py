"""Socket server for live sessions.

One persistent bidirectional connection per session, carrying the line
protocol either raw or wrapped in WebSocket text frames (auto-detected from
the first bytes, so a browser console connects to the same port without a
proxy). Bot and replay runs use lockstep mode: the server waits for the
client's ack after every snapshot, which makes socket-driven episodes fully
deterministic.
"""

import base64
import hashlib
import queue
import socket
import struct
import threading
import time

from .protocol import (ProtocolError, SessionRecording, decode, encode,
                       hello_message, new_recording, snapshot_message)
from .session import (SNAPSHOT_EVERY, Episode, EpisodeConfig, apply_message,
                      episode_summary, start_episode, tick)

_WS_GUID = "258EAFA5-E914-47DA-95CA-C5AB0DC85B11"
_ACK_TIMEOUT_S = 30.0


class LineFraming:
    """Newline-delimited UTF-8 messages over a stream socket."""

    def __init__(self, conn: socket.socket, initial: bytes = b""):
        self.conn = conn
        self._buf = bytearray(initial)

    def recv_message(self) -> str | None:
        while b"\n" not in self._buf:
            chunk = self.conn.recv(65536)
            if not chunk:
                return None
            self._buf.extend(chunk)
        line, _, rest = bytes(self._buf).partition(b"\n")
        self._buf = bytearray(rest)
        return line.decode("utf-8")

    def send_message(self, text: str):
        self.conn.sendall(text.encode("utf-8") + b"\n")


class WebSocketFraming:
    """Minimal RFC 6455 server endpoint: text frames in, text frames out."""

    def __init__(self, conn: socket.socket, initial: bytes):
        self.conn = conn
        self._buf = bytearray(initial)
        self._handshake()

    def _read_until(self, marker: bytes) -> bytes:
        while marker not in self._buf:
            chunk = self.conn.recv(65536)
            if not chunk:
                raise ConnectionError("client closed during WebSocket handshake")
            self._buf.extend(chunk)
        head, _, rest = bytes(self._buf).partition(marker)
        self._buf = bytearray(rest)
        return head

    def _handshake(self):
        head = self._read_until(b"\r\n\r\n").decode("latin-1")
        key = None
        for line in head.split("\r\n")[1:]:
            name, _, value = line.partition(":")
            if name.strip().lower() == "sec-websocket-key":
                key = value.strip()
        if key is None:
            raise ConnectionError("WebSocket handshake missing Sec-WebSocket-Key")
        accept = base64.b64encode(hashlib.sha1((key + _WS_GUID).encode()).digest()).decode()
        self.conn.sendall(
            ("HTTP/1.1 101 Switching Protocols\r\n"
             "Upgrade: websocket\r\nConnection: Upgrade\r\n"
             f"Sec-WebSocket-Accept: {accept}\r\n\r\n").encode("latin-1"))

    def _read_exact(self, n: int) -> bytes:
        while len(self._buf) < n:
            chunk = self.conn.recv(65536)
            if not chunk:
                raise ConnectionError("client closed mid-frame")
            self._buf.extend(chunk)
        out = bytes(self._buf[:n])
        del self._buf[:n]
        return out

    def recv_message(self) -> str | None:
        while True:
            try:
                b0, b1 = self._read_exact(2)
            except ConnectionError:
                return None
            opcode = b0 & 0x0F
            masked = bool(b1 & 0x80)
            length = b1 & 0x7F
            if length == 126:
                length = struct.unpack(">H", self._read_exact(2))[0]
            elif length == 127:
                length = struct.unpack(">Q", self._read_exact(8))[0]
            mask = self._read_exact(4) if masked else b"\x00" * 4
            payload = bytearray(self._read_exact(length))
            if masked:
                for i in range(length):
                    payload[i] ^= mask[i % 4]
            if opcode == 0x8:  # close
                return None
            if opcode == 0x9:  # ping -> pong
                self._send_frame(0xA, bytes(payload))
                continue
            if opcode in (0x1, 0x2):
                return payload.decode("utf-8")
            # continuation/pong frames are ignored

    def _send_frame(self, opcode: int, payload: bytes):
        header = bytearray([0x80 | opcode])
        n = len(payload)
        if n < 126:
            header.append(n)
        elif n < (1 << 16):
            header.append(126)
            header.extend(struct.pack(">H", n))
        else:
            header.append(127)
            header.extend(struct.pack(">Q", n))
        self.conn.sendall(bytes(header) + payload)

    def send_message(self, text: str):
        self._send_frame(0x1, text.encode("utf-8"))


def detect_framing(conn: socket.socket):
    """Choose WebSocket or raw line framing by sniffing the first bytes."""
    first = conn.recv(4, socket.MSG_PEEK)
    if first.startswith(b"GET"):
        return WebSocketFraming(conn, b"")
    return LineFraming(conn)


class SessionServer:
    """Serves one episode to one client and records every applied message."""

    def __init__(self, config: EpisodeConfig, lockstep: bool = False,
                 realtime: bool | None = None):
        self.config = config
        self.lockstep = lockstep
        self.realtime = (not lockstep) if realtime is None else realtime
        self.episode: Episode | None = None
        self.recording: SessionRecording = new_recording(config)
        self.summary: dict | None = None
        self._listener: socket.socket | None = None

    def listen(self, host: str, port: int) -> tuple:
        try:
            self._listener = socket.create_server((host, port))
        except OSError as exc:
            raise ProtocolError(f"cannot listen on {host}:{port}: {exc}") from exc
        return self._listener.getsockname()[:2]

    def serve_one(self) -> dict:
        """Accept one client, run the episode to its end, return the summary."""
        assert self._listener is not None, "call listen() first"
        conn, _ = self._listener.accept()
        conn.setsockopt(socket.IPPROTO_TCP, socket.TCP_NODELAY, 1)
        framing = detect_framing(conn)
        try:
            return self._run(framing)
        finally:
            conn.close()
            self._listener.close()

    def _run(self, framing) -> dict:
        episode = start_episode(self.config)
        self.episode = episode
        inbox: queue.Queue = queue.Queue()

        def reader():
            try:
                while True:
                    line = framing.recv_message()
                    if line is None:
                        break
                    inbox.put(line)
            except (OSError, ConnectionError):
                pass
            finally:
                inbox.put(None)

        thread = threading.Thread(target=reader, daemon=True)
        thread.start()

        framing.send_message(encode(hello_message(self.config, episode)))
        announced = 0
        wall_start = time.monotonic()
        client_up = True

        def handle_line(line: str):
            try:
                msg = decode(line)
            except ProtocolError as exc:
                _safe_send(framing, {"type": "error", "message": str(exc)})
                return None
            if msg["type"] == "ack":
                return msg
            if msg["type"] == "client_hello":
                return None
            applied, err = apply_message(episode, msg)
            if applied:
                self.recording.add(episode.tick_index, msg)
            else:
                _safe_send(framing, {"type": "reject", "reason": err,
                                     "request_id": msg.get("request_id")})
            return None

        while not episode.ended:
            while True:
                try:
                    line = inbox.get_nowait()
                except queue.Empty:
                    break
                if line is None:
                    if client_up:
                        client_up = False
                        self.recording.gaps.append(episode.tick_index)
                    break
                handle_line(line)

            tick(episode)
            for a in episode.announcements[announced:]:
                if client_up:
                    _safe_send(framing, {"type": "resolved", "request_id": a["request_id"],
                                         "clock": a["clock"]})
            announced = len(episode.announcements)

            if episode.tick_index % SNAPSHOT_EVERY == 0 and client_up:
                sent = _safe_send(framing, snapshot_message(episode))
                if not sent:
                    client_up = False
                    self.recording.gaps.append(episode.tick_index)
                elif self.lockstep:
                    client_up = self._await_ack(inbox, handle_line, episode.tick_index)
                    if not client_up:
                        self.recording.gaps.append(episode.tick_index)

            if self.realtime:
                target = wall_start + episode.tick_index / 60.0
                delay = target - time.monotonic()
                if delay > 0:
                    time.sleep(delay)

        self.summary = episode_summary(episode)
        if client_up:
            _safe_send(framing, {"type": "episode_end", "summary": self.summary})
        return self.summary

    def _await_ack(self, inbox, handle_line, tick_index: int) -> bool:
        deadline = time.monotonic() + _ACK_TIMEOUT_S
        while True:
            try:
                line = inbox.get(timeout=max(0.0, deadline - time.monotonic()))
            except queue.Empty:
                return False
            if line is None:
                return False
            ack = handle_line(line)
            if ack is not None and int(ack.get("tick", -1)) == tick_index:
                return True


def _safe_send(framing, message: dict) -> bool:
    try:
        framing.send_message(encode(message))
        return True
    except (OSError, ConnectionError):
        return False


def run_headless(config: EpisodeConfig) -> tuple[dict, Episode]:
    """Run an episode with no client at all (same outcome as replaying an
    empty recording)."""
    episode = start_episode(config)
    while not episode.ended:
        tick(episode)
    return episode_summary(episode), episode
