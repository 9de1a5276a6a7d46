import json
import time

import pytest
from fastapi.testclient import TestClient

from taskmesh import runtime
from taskmesh.server import SCHEMA_VERSION, build_app


@pytest.fixture(scope="module")
def app_client(request):
    task_model = request.getfixturevalue("task_model")
    policy = request.getfixturevalue("untrained_policy")
    suite = request.getfixturevalue("suite")
    app = build_app(task_model, policy, suite)
    with TestClient(app) as client:
        yield client, task_model, policy, suite


def send(ws, **message):
    message.setdefault("v", SCHEMA_VERSION)
    ws.send_text(json.dumps(message))


def recv(ws):
    return json.loads(ws.receive_text())


def recv_kind(ws, kind, limit=200):
    for _ in range(limit):
        msg = recv(ws)
        if msg["kind"] == kind:
            return msg
    raise AssertionError(f"no {kind!r} message within {limit} messages")


class TestHttp:
    def test_scenarios_endpoint(self, app_client):
        client, *_ = app_client
        body = client.get("/api/scenarios").json()
        assert "multi-room" in body["scenarios"]
        assert "NoEvent" in body["events"]


class TestSession:
    def test_start_run_acks_with_resolved_subtasks(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text="Find the blue flag, bring it to the switch, "
                              "and head for the goal.",
                 seed=5, n_robots=3, tick_cap=30)
            ack = recv(ws)
            assert ack["kind"] == "ack" and ack["for"] == "start_run"
            assert ack["resolved_subtasks"] == ["Find blue flag"] * 3
            assert ack["layout"]["name"] == "retrieve-flag"
            snap = recv_kind(ws, "snapshot")
            assert snap["tick"] >= 1
            assert len(snap["robots"]) == 3
            assert {"x", "y", "subtask", "confidence"} <= set(snap["robots"][0])

    def test_first_snapshot_under_half_second(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            started = time.perf_counter()
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text="Find the blue flag.", seed=5, n_robots=3,
                 tick_cap=30)
            recv(ws)                      # ack
            recv_kind(ws, "snapshot")
            elapsed = time.perf_counter() - started
            assert elapsed < 0.5, f"first snapshot took {elapsed:.3f}s"

    def test_snapshots_tick_monotone_until_completed(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text="Find the blue flag.", seed=6, n_robots=2,
                 tick_cap=15)
            recv(ws)
            last = 0
            while True:
                msg = recv(ws)
                if msg["kind"] == "completed":
                    assert msg["tick"] >= last
                    assert "metrics" in msg
                    break
                assert msg["kind"] == "snapshot"
                assert msg["tick"] > last
                last = msg["tick"]

    def test_inject_flag_lost_appears_in_next_snapshot(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text="Find the blue flag.", seed=7, n_robots=2,
                 tick_cap=300)
            recv(ws)
            recv_kind(ws, "snapshot")
            send(ws, kind="inject", event="FlagLost")
            saw_ack = False
            for _ in range(50):
                msg = recv(ws)
                if msg["kind"] == "ack" and msg["for"] == "inject":
                    saw_ack = True
                    continue
                if saw_ack and msg["kind"] == "snapshot":
                    assert "FlagLost" in msg["events"]
                    break
            else:
                raise AssertionError("no snapshot after inject ack")

    def test_displacement_inject(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text="Find the blue flag.", seed=8, n_robots=2,
                 tick_cap=300)
            recv(ws)
            recv_kind(ws, "snapshot")
            send(ws, kind="inject", displacement={"robot": 0,
                                                  "pos": [3.3, 3.3]})
            recv_kind(ws, "ack")
            snap = recv_kind(ws, "snapshot")
            assert abs(snap["robots"][0]["x"] - 3.3) < 0.2

    def test_pause_and_resume(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="multi-room",
                 command_text="Unlock the switches in sequence.", seed=9,
                 n_robots=3, tick_cap=500)
            recv(ws)
            recv_kind(ws, "snapshot")
            send(ws, kind="pause")
            recv_kind(ws, "ack")
            send(ws, kind="resume")
            ack = recv_kind(ws, "ack")
            assert ack["for"] == "resume"
            assert recv_kind(ws, "snapshot")["tick"] > 0

    def test_error_paths(self, app_client):
        client, *_ = app_client
        with client.websocket_connect("/session") as ws:
            send(ws, kind="inject", event="FlagLost")
            assert recv(ws)["code"] == "no-session"
            ws.send_text(json.dumps({"v": 99, "kind": "start_run"}))
            assert recv(ws)["code"] == "bad-version"
            send(ws, kind="start_run", scenario="orbital-drop",
                 command_text="x", seed=1)
            assert recv(ws)["code"] == "unknown-scenario"
            send(ws, kind="start_run", scenario="multi-room",
                 command_text="   ", seed=1)
            assert recv(ws)["code"] == "empty-command"

    def test_snapshot_labels_match_episode_log(self, app_client):
        client, task_model, policy, suite = app_client
        seed, ticks = 11, 12
        command = "Find the blue flag, bring it to the switch, and head for the goal."
        with client.websocket_connect("/session") as ws:
            send(ws, kind="start_run", scenario="retrieve-flag",
                 command_text=command, seed=seed, n_robots=3, tick_cap=ticks)
            recv(ws)
            snaps = {}
            while True:
                msg = recv(ws)
                if msg["kind"] == "completed":
                    break
                snaps[msg["tick"]] = [r["subtask"] for r in msg["robots"]]
        log = runtime.run_episode(suite[2], task_model, policy, n_robots=3,
                                  command_text=command, seed=seed,
                                  tick_cap=ticks)
        for rec in log.records:
            assert snaps[rec.tick] == rec.decoded_subtasks
