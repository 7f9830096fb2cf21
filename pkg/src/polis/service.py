"""HTTP and event-stream facade over one live simulation.

One simulation thread owns the world; request handlers only read published
snapshots and enqueue commands, which the loop drains between turns. The
event stream is server-sent events with sequence-number resume.
"""

from __future__ import annotations

import asyncio
import json
import queue
import threading
from contextlib import asynccontextmanager
from dataclasses import dataclass, field
from typing import Any, AsyncIterator

from fastapi import FastAPI, HTTPException, Request
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import StreamingResponse
from pydantic import BaseModel

from .analytics import event_to_dict
from .config import SimConfig, config_from_dict
from .loop import LiveEditError, live_edit, run_day
from .providers import DecisionService
from .runner import build_service_for_run
from .state import (
    ADMIN,
    CONCEDE,
    CONSUME,
    DONATE,
    FARM,
    ROB,
    TRADE,
    Event,
    WorldState,
    init_world,
)

EMOJI = {
    ROB: "⚔️",       # crossed swords
    FARM: "\U0001f35a",        # rice
    TRADE: "\U0001f91d",       # handshake
    DONATE: "\U0001f381",      # gift
    CONCEDE: "\U0001f91d",     # handshake variant; clients badge it
    CONSUME: "\U0001f37d️",
    ADMIN: "⚙️",
}
MILESTONE_EMOJI = "\U0001f451"  # crown for commonwealth formation


def event_wire_record(event: Event, names: dict[int, str]) -> dict[str, Any]:
    record = event_to_dict(event)
    emoji = EMOJI.get(event.kind, "")
    if event.kind == ADMIN and event.payload.get("admin") == "commonwealth":
        emoji = MILESTONE_EMOJI
        record["milestone"] = "commonwealth"
    record["emoji"] = emoji
    record["actor_name"] = names.get(event.actor, str(event.actor))
    if event.target is not None:
        record["target_name"] = names.get(event.target, str(event.target))
    return record


class ControlBody(BaseModel):
    command: str
    days: int = 1
    seed: int | None = None
    config: dict[str, Any] | None = None


class AgentPatch(BaseModel):
    field: str
    value: float | int


@dataclass
class _Subscriber:
    q: "queue.Queue[dict]" = field(default_factory=lambda: queue.Queue(maxsize=10000))


class SimController:
    """Owns the simulation thread, the command queue, and published state."""

    def __init__(self, config: SimConfig, decisions: DecisionService | None = None) -> None:
        self._config = config
        self._decisions = decisions or build_service_for_run(config)
        self._commands: "queue.Queue[tuple]" = queue.Queue()
        self._lock = threading.Lock()
        self._subscribers: list[_Subscriber] = []
        self._events: list[dict[str, Any]] = []
        self._running = False
        self._step_budget = 0
        self._stopped = False
        self._world = init_world(config, config.seed)
        self._install_hooks()
        self._snapshot = self._build_snapshot()
        self._thread = threading.Thread(target=self._main, name="sim-loop", daemon=True)

    # -- lifecycle -----------------------------------------------------------

    def start(self) -> None:
        self._thread.start()

    def shutdown(self) -> None:
        self._stopped = True
        self._commands.put(("noop",))
        self._thread.join(timeout=5)

    # -- publication (called on the sim thread) -------------------------------

    def _install_hooks(self) -> None:
        names = {a.id: a.name for a in self._world.agents}

        def on_event(world: WorldState, event: Event) -> None:
            record = event_wire_record(event, names)
            with self._lock:
                self._events.append(record)
                self._snapshot = self._build_snapshot()
                subscribers = list(self._subscribers)
            for sub in subscribers:
                try:
                    sub.q.put_nowait(record)
                except queue.Full:
                    pass

        self._world.on_event = on_event

    def _build_snapshot(self) -> dict[str, Any]:
        world = self._world
        agents = []
        for agent in world.agents:
            d = agent.disposition
            pending = [
                {
                    "actor": p.actor,
                    "kind": p.intent.kind,
                    "day": p.day,
                }
                for p in world.pending.get(agent.id, ())
            ]
            agents.append(
                {
                    "id": agent.id,
                    "name": agent.name,
                    "disposition": {
                        "aggressiveness": d.aggressiveness,
                        "covetousness": d.covetousness,
                        "strength": d.strength,
                        "desire_for_peace": d.desire_for_peace,
                        "desire_for_glory": d.desire_for_glory,
                        "temperature": d.decoding.temperature,
                        "top_p": d.decoding.top_p,
                    },
                    "food": float(agent.food),
                    "land": float(agent.land),
                    "social_position": agent.social_position,
                    "starving": agent.starving,
                    "superior": world.relations.superior_of(agent.id),
                    "subordinates": list(world.relations.subordinates_of(agent.id)),
                    "memory": list(agent.memory.lines),
                    "memory_capacity": agent.memory.capacity,
                }
            )
        return {
            "day": world.day,
            "population": world.population,
            "running": self._running,
            "commonwealth": {
                "formed": world.commonwealth_day is not None,
                "day": world.commonwealth_day,
                "sovereign": world.sovereign,
            },
            "last_sequence": world.next_sequence - 1,
            "agents": agents,
        }

    def _publish(self) -> None:
        with self._lock:
            self._snapshot = self._build_snapshot()

    # -- command handling (sim thread) ----------------------------------------

    def _apply_command(self, command: tuple) -> None:
        kind = command[0]
        if kind == "run":
            self._running = True
        elif kind == "pause":
            self._running = False
            self._step_budget = 0
        elif kind == "step":
            self._step_budget += int(command[1])
        elif kind == "edit":
            _, agent_id, fieldname, value, reply = command
            try:
                live_edit(self._world, agent_id, fieldname, value)
                reply.put((True, self._world.day))
            except LiveEditError as exc:
                reply.put((False, str(exc)))
        elif kind == "reset":
            _, config, seed = command
            self._config = config
            self._decisions = build_service_for_run(config)
            self._world = init_world(config, seed if seed is not None else config.seed)
            self._install_hooks()
            self._running = False
            self._step_budget = 0
        self._publish()

    def _drain_commands(self, block: bool) -> None:
        while True:
            try:
                command = self._commands.get(block=block, timeout=0.2 if block else None)
            except queue.Empty:
                return
            self._apply_command(command)
            block = False

    def _main(self) -> None:
        while not self._stopped:
            if self._running or self._step_budget > 0:
                run_day(self._world, self._decisions, on_turn=lambda _w: self._drain_commands(block=False))
                if self._step_budget > 0:
                    self._step_budget -= 1
                    if self._step_budget == 0:
                        self._running = False
                self._publish()
            else:
                self._drain_commands(block=True)

    # -- handler-facing API ----------------------------------------------------

    def snapshot(self) -> dict[str, Any]:
        with self._lock:
            return json.loads(json.dumps(self._snapshot))

    def control(self, body: ControlBody) -> dict[str, Any]:
        if body.command == "run":
            self._commands.put(("run",))
        elif body.command == "pause":
            self._commands.put(("pause",))
        elif body.command == "step":
            if body.days < 1:
                raise HTTPException(status_code=400, detail="step days must be >= 1")
            self._commands.put(("step", body.days))
        elif body.command == "reset":
            try:
                config = config_from_dict(body.config) if body.config is not None else self._config
            except Exception as exc:
                raise HTTPException(status_code=400, detail=str(exc)) from exc
            self._commands.put(("reset", config, body.seed))
        else:
            raise HTTPException(status_code=400, detail=f"unknown command {body.command!r}")
        return {"ok": True, "day": self._world.day}

    def patch_agent(self, agent_id: int, body: AgentPatch) -> dict[str, Any]:
        reply: "queue.Queue[tuple]" = queue.Queue()
        self._commands.put(("edit", agent_id, body.field, body.value, reply))
        ok, detail = reply.get(timeout=10)
        if not ok:
            raise HTTPException(status_code=422, detail=detail)
        return {"ok": True, "day": detail}

    def subscribe(self) -> _Subscriber:
        sub = _Subscriber()
        with self._lock:
            self._subscribers.append(sub)
        return sub

    def unsubscribe(self, sub: _Subscriber) -> None:
        with self._lock:
            if sub in self._subscribers:
                self._subscribers.remove(sub)

    def events_since(self, sequence: int) -> list[dict[str, Any]]:
        with self._lock:
            return [e for e in self._events if e["seq"] > sequence]


def create_app(controller: SimController) -> FastAPI:
    @asynccontextmanager
    async def lifespan(_app: FastAPI):
        yield
        controller.shutdown()

    app = FastAPI(title="polis sim service", lifespan=lifespan)
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )
    app.state.controller = controller

    @app.get("/api/state")
    def get_state() -> dict[str, Any]:
        return controller.snapshot()

    @app.post("/api/control")
    def post_control(body: ControlBody) -> dict[str, Any]:
        return controller.control(body)

    @app.patch("/api/agents/{agent_id}")
    def patch_agent(agent_id: int, body: AgentPatch) -> dict[str, Any]:
        return controller.patch_agent(agent_id, body)

    @app.get("/api/events")
    def get_events(request: Request, since: int = -1) -> StreamingResponse:
        last_event_id = request.headers.get("Last-Event-ID")
        if last_event_id is not None:
            try:
                since = int(last_event_id)
            except ValueError:
                pass
        return StreamingResponse(_event_stream(controller, since, request), media_type="text/event-stream")

    return app


def _sse(record: dict[str, Any]) -> str:
    return f"id: {record['seq']}\nevent: sim\ndata: {json.dumps(record, ensure_ascii=False)}\n\n"


async def _event_stream(controller: SimController, since: int, request: Request) -> AsyncIterator[str]:
    # Async with short polls so client disconnects cancel promptly; a sync
    # generator blocked on the queue could never be cancelled.
    sub = controller.subscribe()
    try:
        seen = since
        for record in controller.events_since(since):
            seen = record["seq"]
            yield _sse(record)
        idle = 0.0
        while True:
            try:
                record = sub.q.get_nowait()
            except queue.Empty:
                if await request.is_disconnected():
                    return
                await asyncio.sleep(0.1)
                idle += 0.1
                if idle >= 15.0:
                    idle = 0.0
                    yield ": heartbeat\n\n"
                continue
            if record["seq"] <= seen:
                continue
            idle = 0.0
            seen = record["seq"]
            yield _sse(record)
    finally:
        controller.unsubscribe(sub)


def serve(config: SimConfig, addr: str = "127.0.0.1:8000", decisions: DecisionService | None = None) -> None:
    """Blocking entry point used by the CLI ``serve`` subcommand."""
    import uvicorn

    controller = SimController(config, decisions)
    controller.start()
    app = create_app(controller)
    host, _, port = addr.partition(":")
    uvicorn.run(app, host=host or "127.0.0.1", port=int(port or 8000), log_level="info")
