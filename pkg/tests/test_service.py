"""Sim service: snapshots, control commands, live edits, SSE stream with resume."""

from __future__ import annotations

import socket
import threading
import time

import httpx
import pytest
import uvicorn
from fastapi.testclient import TestClient

from polis.service import EMOJI, SimController, create_app
from polis.state import FARM, ROB, TRADE

from conftest import make_config


@pytest.fixture
def controller():
    c = SimController(make_config(population=9, seed=2))
    c.start()
    yield c
    c.shutdown()


@pytest.fixture
def client(controller):
    with TestClient(create_app(controller)) as tc:
        yield tc


def _wait_day(client, day, timeout=5.0):
    deadline = time.time() + timeout
    while time.time() < deadline:
        snap = client.get("/api/state").json()
        if snap["day"] >= day:
            return snap
    raise AssertionError(f"never reached day {day}")


def test_fresh_world_snapshot(client):
    snap = client.get("/api/state").json()
    assert snap["day"] == 0
    assert len(snap["agents"]) == 9
    assert snap["commonwealth"] == {"formed": False, "day": None, "sovereign": None}
    agent = snap["agents"][0]
    assert agent["food"] == 2.0 and agent["land"] == 10.0
    assert agent["superior"] is None and agent["subordinates"] == []
    assert set(agent["disposition"]) >= {"aggressiveness", "covetousness", "strength", "temperature", "top_p"}


def test_step_advances_exactly_n_days(client):
    ack = client.post("/api/control", json={"command": "step", "days": 2}).json()
    assert ack["ok"] is True
    snap = _wait_day(client, 2)
    time.sleep(0.2)  # paused after the budget: no further days
    assert client.get("/api/state").json()["day"] == snap["day"] == 2


def test_run_then_pause_halts(client):
    client.post("/api/control", json={"command": "run"})
    _wait_day(client, 1)
    client.post("/api/control", json={"command": "pause"})
    time.sleep(0.3)
    day = client.get("/api/state").json()["day"]
    time.sleep(0.3)
    assert client.get("/api/state").json()["day"] == day


def test_reset_builds_new_world(client):
    client.post("/api/control", json={"command": "step", "days": 1})
    _wait_day(client, 1)
    ack = client.post("/api/control", json={"command": "reset", "config": {"population": 5}, "seed": 7}).json()
    assert ack["ok"] is True
    deadline = time.time() + 5
    while time.time() < deadline:
        snap = client.get("/api/state").json()
        if snap["population"] == 5 and snap["day"] == 0:
            break
    assert snap["population"] == 5 and snap["day"] == 0


def test_unknown_command_400(client):
    assert client.post("/api/control", json={"command": "warp"}).status_code == 400


def test_malformed_control_body_rejected(client):
    assert client.post("/api/control", json={"days": 1}).status_code == 422


def test_patch_applies_between_turns(client):
    response = client.patch("/api/agents/0", json={"field": "aggressiveness", "value": 0.9})
    assert response.status_code == 200
    snap = client.get("/api/state").json()
    assert snap["agents"][0]["disposition"]["aggressiveness"] == 0.9


def test_patch_out_of_range_422_names_range(client):
    response = client.patch("/api/agents/0", json={"field": "covetousness", "value": 2.0})
    assert response.status_code == 422
    assert "[1.1, 1.6]" in response.json()["detail"]


def test_patch_strength_unbounded(client):
    assert client.patch("/api/agents/0", json={"field": "strength", "value": -0.5}).status_code == 200


def test_patch_memory_capacity(client):
    response = client.patch("/api/agents/3", json={"field": "memory_capacity", "value": 10})
    assert response.status_code == 200
    assert client.get("/api/state").json()["agents"][3]["memory_capacity"] == 10


def test_relations_visible_in_both_views(client):
    client.post("/api/control", json={"command": "run"})
    deadline = time.time() + 10
    snap = None
    while time.time() < deadline:
        snap = client.get("/api/state").json()
        pairs = [(a["id"], a["superior"]) for a in snap["agents"] if a["superior"] is not None]
        if pairs:
            break
    client.post("/api/control", json={"command": "pause"})
    assert pairs, "no concession formed within the window"
    sub, sup = pairs[0]
    superior_view = next(a for a in snap["agents"] if a["id"] == sup)
    assert sub in superior_view["subordinates"]


def test_emoji_mapping_contract():
    assert EMOJI[ROB] == "⚔️"
    assert EMOJI[FARM] == "\U0001f35a"
    assert EMOJI[TRADE] == "\U0001f91d"


# -- SSE over a real server --------------------------------------------------------


@pytest.fixture
def live_server():
    controller = SimController(make_config(population=9, seed=2))
    controller.start()
    app = create_app(controller)
    sock = socket.socket()
    sock.bind(("127.0.0.1", 0))
    port = sock.getsockname()[1]
    sock.close()
    server = uvicorn.Server(uvicorn.Config(app, host="127.0.0.1", port=port, log_level="critical"))
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    base = f"http://127.0.0.1:{port}"
    for _ in range(200):
        try:
            httpx.get(base + "/api/state", timeout=1)
            break
        except httpx.HTTPError:
            time.sleep(0.02)
    yield base
    server.should_exit = True
    controller.shutdown()
    thread.join(timeout=5)


def _read_sse(base, params, want, timeout=10.0):
    records = []
    with httpx.stream("GET", base + "/api/events", params=params, timeout=timeout) as response:
        buffer = ""
        for chunk in response.iter_text():
            buffer += chunk
            while "\n\n" in buffer:
                frame, buffer = buffer.split("\n\n", 1)
                if "event: sim" in frame:
                    records.append(frame)
                if len(records) >= want:
                    return records
    return records


def test_sse_streams_events_with_ids_and_emoji(live_server):
    httpx.post(live_server + "/api/control", json={"command": "step", "days": 2})
    records = _read_sse(live_server, {"since": -1}, want=5)
    assert len(records) == 5
    first = records[0].splitlines()
    assert first[0] == "id: 0"
    assert any("emoji" in line for line in first)


def test_sse_resume_from_sequence(live_server):
    httpx.post(live_server + "/api/control", json={"command": "step", "days": 2})
    time.sleep(0.5)
    records = _read_sse(live_server, {"since": 20}, want=1)
    assert records[0].splitlines()[0] == "id: 21"


def test_sse_no_duplicates_on_resume(live_server):
    httpx.post(live_server + "/api/control", json={"command": "step", "days": 1})
    time.sleep(0.5)
    records = _read_sse(live_server, {"since": -1}, want=10)
    ids = [int(r.splitlines()[0].split(": ")[1]) for r in records]
    assert ids == sorted(set(ids))
    assert ids[0] == 0
