from __future__ import annotations

import math
from pathlib import Path

import pytest
from starlette.testclient import TestClient

import gazekit as gz
from gazekit.service import ServeSettings, build_app
from gazekit.session_io import read_session, validate_session
from gazekit.replay import classify_session, verify_replay

from conftest import flat_ring


def settings_for(tmp_path, rounds=1) -> ServeSettings:
    return ServeSettings(out_root=Path(tmp_path), ring=flat_ring(rounds=rounds))


class Driver:
    """Scripted harness client: a synthetic cursor on a 100 Hz clock."""

    def __init__(self, ws, ring: gz.RingSpec):
        self.ws = ws
        self.ring = ring
        self.t = 0.0
        self.pos = (0.0, 0.0)
        self.extras: list[dict] = []

    def recv_until(self, *types: str) -> dict:
        while True:
            msg = self.ws.receive_json()
            if msg["type"] in types:
                return msg
            self.extras.append(msg)

    def frame(self, x=None, y=None, valid=True) -> dict:
        self.t += 10.0
        if x is not None:
            self.pos = (x, y)
        self.ws.send_json(
            {"type": "frame", "t_ms": self.t, "x_m": self.pos[0], "y_m": self.pos[1], "valid": valid}
        )
        return self.recv_until("hover")

    def pinch(self) -> dict:
        self.t += 1.0
        self.ws.send_json({"type": "pinch", "t_ms": self.t})
        return self.recv_until("outcome")

    def glide_to(self, x, y, steps=6):
        x0, y0 = self.pos
        for i in range(1, steps + 1):
            u = i / steps
            self.frame(x0 + u * (x - x0), y0 + u * (y - y0))

    def run_trial(self, highlight, layout) -> dict:
        c = layout.target(highlight["target"]).center
        self.glide_to(c.x, c.y)
        for _ in range(4):  # settle on the target
            self.frame()
        return self.pinch()

    def drain_tail(self, max_frames=60) -> dict:
        for _ in range(max_frames):
            self.t += 10.0
            self.ws.send_json(
                {"type": "frame", "t_ms": self.t, "x_m": self.pos[0], "y_m": self.pos[1], "valid": True}
            )
            msg = self.recv_until("hover", "done")
            if msg["type"] == "done":
                return msg
        raise AssertionError("service never sent done")


def complete_round(client, tmp_path, condition="none", rounds=1):
    ring = flat_ring(rounds=rounds)
    layout = ring.layout_for_round(0)
    with client.websocket_connect("/ws") as ws:
        ws.send_json({"type": "hello", "subject_id": "hsub", "condition": condition})
        config = ws.receive_json()
        assert config["type"] == "config"
        assert config["manifest"]["condition"] == condition
        assert config["derived"]["trials_per_round"] == 9
        drv = Driver(ws, ring)
        highlight = drv.recv_until("highlight")
        outcomes = []
        for k in range(9 * rounds):
            outcome = drv.run_trial(highlight, ring.layout_for_round(k // 9))
            outcomes.append(outcome)
            if k < 9 * rounds - 1:
                highlight = drv.recv_until("highlight")
        done = drv.drain_tail()
        return config, outcomes, done, drv.extras


def test_full_round_session(tmp_path):
    app = build_app(settings_for(tmp_path))
    with TestClient(app) as client:
        config, outcomes, done, extras = complete_round(client, tmp_path)
    assert len(outcomes) == 9
    assert all(o["correct"] for o in outcomes)
    session_dir = Path(done["session_path"])
    assert validate_session(session_dir) == []
    manifest, frames, selections = read_session(session_dir)
    assert len(selections) == 9
    # Every selection got a classified message once its window closed.
    classified = [m for m in extras if m["type"] == "classified"]
    assert len(classified) == 9
    assert all(m["effective"] == "correct" for m in classified)


def test_live_log_replays_bit_exactly(tmp_path):
    app = build_app(settings_for(tmp_path))
    with TestClient(app) as client:
        _, _, done, _ = complete_round(client, tmp_path, condition="sticky_magnetic")
    manifest, frames, selections = read_session(Path(done["session_path"]))
    assert verify_replay(manifest, frames, selections) == []
    assert classify_session((manifest, frames, selections)) == selections


def test_second_connection_rejected_while_busy(tmp_path):
    app = build_app(settings_for(tmp_path))
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as first:
            first.send_json({"type": "hello", "subject_id": "a", "condition": "none"})
            assert first.receive_json()["type"] == "config"
            with client.websocket_connect("/ws") as second:
                msg = second.receive_json()
                assert msg["type"] == "error"
                assert "busy" in msg["msg"]


def test_end_mid_round_writes_aborted_session(tmp_path):
    app = build_app(settings_for(tmp_path))
    ring = flat_ring(rounds=1)
    layout = ring.layout_for_round(0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "hello", "subject_id": "ab", "condition": "none"})
            ws.receive_json()  # config
            drv = Driver(ws, ring)
            highlight = drv.recv_until("highlight")
            for _ in range(3):
                highlight = highlight if highlight else None
                drv.run_trial(highlight, layout)
                highlight = drv.recv_until("highlight")
            ws.send_json({"type": "end"})
            done = drv.recv_until("done")
    session_dir = Path(done["session_path"])
    assert validate_session(session_dir) == []
    manifest, frames, selections = read_session(session_dir)
    assert len(selections) == 3
    assert selections[-1].trial == 2


def test_protocol_error_on_time_regression(tmp_path):
    app = build_app(settings_for(tmp_path))
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "hello", "subject_id": "x", "condition": "none"})
            ws.receive_json()  # config
            ws.receive_json()  # highlight
            ws.send_json({"type": "frame", "t_ms": 100.0, "x_m": 0.0, "y_m": 0.0, "valid": True})
            ws.receive_json()  # hover
            ws.send_json({"type": "frame", "t_ms": 50.0, "x_m": 0.0, "y_m": 0.0, "valid": True})
            msg = ws.receive_json()
            assert msg["type"] == "error"
            assert "strictly increase" in msg["msg"]


def test_unknown_condition_rejected(tmp_path):
    app = build_app(settings_for(tmp_path))
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "hello", "subject_id": "x", "condition": "warp"})
            msg = ws.receive_json()
            assert msg["type"] == "error"


def test_sticky_condition_holds_live(tmp_path):
    # Cursor leaves the target; the very next frame is within the hold window.
    app = build_app(settings_for(tmp_path))
    ring = flat_ring(rounds=1)
    layout = ring.layout_for_round(0)
    with TestClient(app) as client:
        with client.websocket_connect("/ws") as ws:
            ws.send_json({"type": "hello", "subject_id": "s", "condition": "sticky"})
            ws.receive_json()  # config
            drv = Driver(ws, ring)
            highlight = drv.recv_until("highlight")
            c = layout.target(highlight["target"]).center
            drv.glide_to(c.x, c.y)
            hover = drv.frame()
            assert hover["raw"] == highlight["target"]
            hover = drv.frame(0.0, 0.0)  # jump off: first no-hover sample
            assert hover["raw"] is None
            assert hover["effective"] == highlight["target"]
            assert hover["stuck"] is True
            outcome = drv.pinch()  # 11 ms after the exit: still held
            assert outcome["selected"] == highlight["target"]
            assert outcome["correct"] is True
            ws.send_json({"type": "end"})
            drv.recv_until("done")
