"""Operator console backend: one websocket session per episode.

The wire protocol is versioned JSON (see SCHEMA_VERSION): the client starts a
run (scenario, command text, optional per-robot sub-task texts, seed), then
receives tick-monotone snapshots; injections are applied at the next tick
boundary and acknowledged. Snapshots are downsampled from the simulation rate.
The server owns all simulation; the console only renders what it receives.
"""

import asyncio
import json

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect

from .runtime import EpisodeDriver, bare_subtask
from .sim.metrics import episode_metrics

SCHEMA_VERSION = 1
SNAPSHOT_EVERY = 1          # ticks between snapshots (sim runs 10 ticks/s)
DISTANCE_TAIL = 50


def _snapshot(driver, rec) -> dict:
    world = rec.world
    robots = []
    for r in range(world.n_robots):
        robots.append({
            "x": float(world.positions[r][0]),
            "y": float(world.positions[r][1]),
            "vx": float(world.velocities[r][0]),
            "vy": float(world.velocities[r][1]),
            "carrying": r in world.carried_flags,
            "subtask": rec.decoded_subtasks[r],
            "confidence": rec.confidences[r],
        })
    flags = []
    for fi, flag in enumerate(world.layout.flags):
        flags.append({"x": float(world.flag_positions[fi][0]),
                      "y": float(world.flag_positions[fi][1]),
                      "color": flag.color,
                      "carried": fi in world.flag_carrier,
                      "delivered": bool(world.flag_delivered[fi])})
    tail = [[d for d in series if d is not None][-DISTANCE_TAIL:]
            for series in _distance_series(driver)]
    return {
        "v": SCHEMA_VERSION,
        "kind": "snapshot",
        "tick": rec.tick,
        "robots": robots,
        "flags": flags,
        "gates": [bool(g) for g in world.gates_open],
        "switches": [bool(s) for s in world.switches_registered],
        "comm_edges": [list(e) for e in rec.comm_edges],
        "events": [e.event for e in rec.events],
        "distance_tail": tail,
        "done": bool(world.done),
    }


def _distance_series(driver):
    n = driver.world.n_robots
    series = [[] for _ in range(n)]
    for rec in driver.log.records[-DISTANCE_TAIL:]:
        for r in range(n):
            d = rec.target_distances[r]
            series[r].append(None if d != d else round(d, 4))
    return series


def _error(code, message) -> dict:
    return {"v": SCHEMA_VERSION, "kind": "error", "code": code,
            "message": message}


def build_app(task_model, policy, tasks, static_dir=None,
              tick_sleep: float = 0.0) -> FastAPI:
    """The console backend; ``tick_sleep`` throttles toward real time."""
    app = FastAPI()
    by_family = {}
    for task in tasks:
        if task.scenario is not None:
            by_family.setdefault(task.scenario.task_family, task)

    @app.get("/api/scenarios")
    def scenarios():
        return {"v": SCHEMA_VERSION,
                "scenarios": sorted(by_family),
                "events": list(tasks[0].dfa.alphabet) if tasks else []}

    @app.websocket("/session")
    async def session(ws: WebSocket):
        await ws.accept()
        driver = None
        paused = False
        tick_cap = 2000
        injected = []
        try:
            while True:
                message = await _next_message(ws, idle=driver is None or paused)
                if message is not None:
                    reply, driver, paused, tick_cap = _handle(
                        message, task_model, policy, by_family, driver, paused,
                        tick_cap)
                    if reply.get("for") == "inject" and "event" in message:
                        injected.append(message["event"])
                    if reply.get("for") == "start_run":
                        injected = []
                    await ws.send_text(json.dumps(reply))
                    if reply["kind"] == "error":
                        continue
                if driver is None or paused or driver.done:
                    continue
                rec = driver.tick()
                if rec.tick % SNAPSHOT_EVERY == 0 or driver.done:
                    snap = _snapshot(driver, rec)
                    if injected:
                        snap["events"] = sorted(set(snap["events"]) |
                                                set(injected))
                        injected = []
                    await ws.send_text(json.dumps(snap))
                if driver.done or rec.tick >= tick_cap:
                    metrics = episode_metrics(driver.log)
                    metrics.pop("distance_to_target", None)
                    await ws.send_text(json.dumps({
                        "v": SCHEMA_VERSION, "kind": "completed",
                        "tick": rec.tick, "metrics": metrics}))
                    driver = None
                if tick_sleep:
                    await asyncio.sleep(tick_sleep)
        except WebSocketDisconnect:
            pass

    if static_dir:
        from fastapi.staticfiles import StaticFiles
        app.mount("/", StaticFiles(directory=static_dir, html=True),
                  name="console")
    return app


async def _next_message(ws, idle: bool):
    """Poll for a client message; block while there is nothing to simulate."""
    if idle:
        return json.loads(await ws.receive_text())
    try:
        raw = await asyncio.wait_for(ws.receive_text(), timeout=0.0005)
        return json.loads(raw)
    except asyncio.TimeoutError:
        return None


def _handle(message, task_model, policy, by_family, driver, paused, tick_cap):
    kind = message.get("kind")
    if message.get("v") != SCHEMA_VERSION:
        return (_error("bad-version", f"expected v={SCHEMA_VERSION}"),
                driver, paused, tick_cap)
    if kind == "start_run":
        family = message.get("scenario")
        if family not in by_family:
            return (_error("unknown-scenario", f"no task for {family!r}"),
                    driver, paused, tick_cap)
        command = message.get("command_text") or ""
        if not command.strip():
            return (_error("empty-command", "command_text required"),
                    driver, paused, tick_cap)
        init_texts = {int(k): v for k, v in
                      (message.get("init_texts") or {}).items()}
        try:
            new_driver = EpisodeDriver(
                by_family[family], task_model, policy,
                n_robots=int(message.get("n_robots", 3)),
                command_text=command,
                init_mode=message.get("init_mode", "random"),
                init_subtasks=init_texts,
                seed=int(message.get("seed", 0)))
        except Exception as exc:   # surfaced to the operator, not fatal
            return (_error("start-failed", str(exc)), driver, paused, tick_cap)
        resolved = []
        for runtime_robot in new_driver.robots:
            from .rnn.model import decode_state
            probs = decode_state(task_model, runtime_robot.hidden)
            resolved.append(bare_subtask(
                task_model.label_names[int(np.argmax(probs))]))
        layout = json.loads(new_driver.world.layout.to_json())
        ack = {"v": SCHEMA_VERSION, "kind": "ack", "for": "start_run",
               "resolved_subtasks": resolved, "layout": layout,
               "n_robots": new_driver.world.n_robots}
        return ack, new_driver, False, int(message.get("tick_cap", 2000))
    if driver is None:
        return _error("no-session", "start a run first"), driver, paused, tick_cap
    if kind == "inject":
        try:
            if "event" in message:
                driver.inject(event=message["event"])
            elif "displacement" in message:
                d = message["displacement"]
                driver.inject(displacement={"robot": int(d["robot"]),
                                            "pos": tuple(d["pos"])})
            else:
                return (_error("bad-inject", "need event or displacement"),
                        driver, paused, tick_cap)
        except Exception as exc:
            return _error("inject-failed", str(exc)), driver, paused, tick_cap
        return ({"v": SCHEMA_VERSION, "kind": "ack", "for": "inject"},
                driver, paused, tick_cap)
    if kind == "pause":
        return ({"v": SCHEMA_VERSION, "kind": "ack", "for": "pause"},
                driver, True, tick_cap)
    if kind == "resume":
        return ({"v": SCHEMA_VERSION, "kind": "ack", "for": "resume"},
                driver, False, tick_cap)
    return _error("bad-kind", f"unknown message kind {kind!r}"), driver, paused, tick_cap
