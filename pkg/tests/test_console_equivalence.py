"""Backend half of the console-equivalence check: the message stream the
console's gesture layer reproduces (frontend/tests/fixtures) must drive a
live session to the same outcome as the bot recording it was derived from.

Regenerate the fixture with tools/make_console_fixture.py after simulation
changes.
"""

import json
from pathlib import Path

import pytest

from teleassist.protocol import SessionRecording, replay

FIXTURE = Path(__file__).resolve().parent.parent / "frontend" / "tests" / "fixtures" \
    / "console_session.json"


@pytest.fixture(scope="module")
def fixture():
    assert FIXTURE.exists(), "run tools/make_console_fixture.py first"
    return json.loads(FIXTURE.read_text(encoding="utf-8"))


def test_fixture_stream_replays_to_the_bot_summary(fixture):
    recording = SessionRecording(seed=fixture["seed"],
                                 config_wire=fixture["config_wire"])
    recording.entries = [(tick, message)
                         for tick, message in fixture["recording_entries"]]
    summary, _ = replay(recording)
    assert summary == fixture["bot_summary"]
    print("\nPASS console equivalence: scripted console stream replays to the "
          f"bot's summary (resolved={summary['resolved']})")


def test_fixture_steps_cover_every_recorded_message(fixture):
    from_steps = [m for step in fixture["steps"] for m in step["expected"]]
    recorded = [message for _, message in fixture["recording_entries"]]
    assert from_steps == recorded


def test_fixture_gestures_are_console_vocabulary(fixture):
    allowed = {"pointer_move", "right_down", "right_up", "card_drop",
               "panel_enter", "panel_leave", "toggle", "left_drag", "right_move"}
    for step in fixture["steps"]:
        for gesture in step["gestures"]:
            assert gesture["kind"] in allowed
