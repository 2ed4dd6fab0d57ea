"""Live telemetry bridge: runs the simulation loop at a wall-clock-scaled
rate, streams one JSON frame per tick over WebSocket, and applies operator
commands at tick boundaries.

Wire protocol (schema version 1): every message is a single JSON object with
a ``type`` field. Server to client: ``hello`` (handshake), ``frame``,
``error``. Client to server: ``command`` with ``kind`` in {ADD_OBSTACLE,
MOVE_OBSTACLE, REMOVE_OBSTACLE, SET_GOAL, PAUSE, RESUME, RESET} and a
per-client strictly increasing ``seq``. Grid content travels as run-length
encoded ``[start, length, state]`` triples over the row-major raster; a
client that joins (or falls behind) gets a keyframe, then deltas.
"""

from __future__ import annotations

import asyncio
import json
from pathlib import Path

import numpy as np
from fastapi import FastAPI, WebSocket, WebSocketDisconnect
from fastapi.responses import HTMLResponse, JSONResponse, PlainTextResponse

from .scenario import Scenario
from .simulator import Simulation
from .world import inflate

SCHEMA_VERSION = 1
CLIENT_QUEUE_SIZE = 64

_FALLBACK_PAGE = """<!doctype html>
<html><head><title>hybridnav</title></head>
<body><h1>hybridnav telemetry</h1>
<p>No built console found. Point --static at the frontend's dist/ directory,
or connect a WebSocket client to <code>/ws</code>.</p></body></html>
"""


def encode_runs(values: np.ndarray) -> list[list[int]]:
    """Run-length encode a flat int array as [start, length, value] triples."""
    flat = np.asarray(values).reshape(-1)
    if flat.size == 0:
        return []
    change = np.flatnonzero(np.diff(flat)) + 1
    starts = np.concatenate(([0], change))
    lengths = np.diff(np.concatenate((starts, [flat.size])))
    return [[int(s), int(length), int(flat[s])]
            for s, length in zip(starts, lengths)]


def encode_delta(prev: np.ndarray, cur: np.ndarray) -> list[list[int]]:
    """RLE over only the cells that changed since the last broadcast."""
    prev_flat = prev.reshape(-1)
    cur_flat = cur.reshape(-1)
    changed = np.flatnonzero(prev_flat != cur_flat)
    runs: list[list[int]] = []
    for idx in changed:
        value = int(cur_flat[idx])
        if runs and runs[-1][0] + runs[-1][1] == idx and runs[-1][2] == value:
            runs[-1][1] += 1
        else:
            runs.append([int(idx), 1, value])
    return runs


class _Client:
    _next_id = 0

    def __init__(self):
        _Client._next_id += 1
        self.client_id = _Client._next_id
        self.queue: asyncio.Queue[str] = asyncio.Queue(maxsize=CLIENT_QUEUE_SIZE)
        self.needs_keyframe = True
        self.last_seq = 0


class TelemetryHub:
    """One authoritative loop; network handlers talk to it only through the
    inbound command queue and per-client outbound queues."""

    def __init__(self, scenario: Scenario, speed: float = 1.0,
                 out_dir: str | None = None):
        self.scenario = scenario
        self.speed = speed
        self.out_dir = out_dir
        self.sim = Simulation(scenario)
        self.paused = False
        self.stopped = False
        self.clients: dict[int, _Client] = {}
        self.inbound: asyncio.Queue[tuple[_Client, dict]] = asyncio.Queue()
        self.command_log: list[dict] = []
        self._last_states = None
        self._plan_changed = True

    # -- command handling ---------------------------------------------------

    def _validate(self, cmd: dict) -> str | None:
        kind = cmd.get("kind")
        grid = self.sim.belief
        if kind in ("ADD_OBSTACLE", "MOVE_OBSTACLE", "SET_GOAL"):
            pos = cmd.get("position")
            if (not isinstance(pos, (list, tuple)) or len(pos) != 2
                    or not all(isinstance(v, (int, float)) for v in pos)):
                return "position must be [x, y]"
            if not grid.contains((float(pos[0]), float(pos[1]))):
                return "position outside the world"
        if kind == "ADD_OBSTACLE":
            if not isinstance(cmd.get("radius"), (int, float)) or cmd["radius"] <= 0:
                return "radius must be a positive number"
            if "id" not in cmd:
                return "id required"
        if kind == "MOVE_OBSTACLE":
            ids = {o.obstacle_id for o in self.sim.obstacles}
            if cmd.get("id") not in ids:
                return f"unknown obstacle id {cmd.get('id')!r}"
        if kind == "SET_GOAL":
            mask = inflate(grid, self.scenario.nav.inflation_radius)
            col, row = grid.world_to_cell((float(pos[0]), float(pos[1])))
            if mask[row, col]:
                return "goal cell is blocked"
        if kind not in ("ADD_OBSTACLE", "MOVE_OBSTACLE", "REMOVE_OBSTACLE",
                        "SET_GOAL", "PAUSE", "RESUME", "RESET"):
            return f"unknown command kind {kind!r}"
        return None

    def _apply(self, client: _Client, cmd: dict) -> None:
        problem = self._validate(cmd)
        if problem is not None:
            self._reply_error(client, cmd, problem)
            return
        kind = cmd["kind"]
        if kind == "PAUSE":
            self.paused = True
            return
        if kind == "RESUME":
            self.paused = False
            return
        if kind == "RESET":
            self.sim = Simulation(self.scenario)
            self.command_log.clear()
            self._last_states = None
            for other in self.clients.values():
                other.needs_keyframe = True
            return
        payload = {k: cmd[k] for k in ("kind", "id", "position", "radius")
                   if k in cmd}
        self.sim.apply_command(payload)
        entry = dict(payload)
        entry["tick"] = self.sim.tick_index
        self.command_log.append(entry)

    def _reply_error(self, client: _Client, cmd: dict, message: str) -> None:
        text = json.dumps({"type": "error", "seq": cmd.get("seq"),
                           "message": message})
        self._offer(client, text)

    # -- frame fan-out --------------------------------------------------------

    def _frame_payload(self, keyframe: bool) -> dict:
        sim = self.sim
        nav = sim.navigator
        record = sim.trace.records[-1] if sim.trace.records else None
        tick = record.tick if record else -1
        grid = sim.belief
        if keyframe or self._last_states is None:
            runs = encode_runs(grid.states)
            grid_msg = {"keyframe": True, "runs": runs}
        else:
            grid_msg = {"keyframe": False,
                        "runs": encode_delta(self._last_states, grid.states)}
        grid_msg["checksum"] = grid.checksum()
        hist = None
        if nav.last_histogram is not None and record and record.mode == "AVOIDING":
            densities, theta_tar, theta_sel = nav.last_histogram
            hist = {"densities": [float(d) for d in densities],
                    "theta_tar": theta_tar, "theta_sel": theta_sel}
        ref = None
        if nav.traj is not None and nav.config.policy != "vfh-only":
            s = nav.traj.sample(nav.t_traj)
            ref = [s.ref.x, s.ref.y, s.ref.theta]
        obstacles = []
        t = tick * self.scenario.tick_dt if tick >= 0 else 0.0
        for obstacle in sim.obstacles:
            xy = obstacle.position(t)
            if xy is not None:
                obstacles.append({"id": obstacle.obstacle_id,
                                  "x": xy[0], "y": xy[1], "r": obstacle.radius})
        frame = {
            "type": "frame",
            "tick": tick,
            "t": t,
            "pose": [sim.pose.x, sim.pose.y, sim.pose.theta],
            "mode": record.mode if record else nav.mode.value,
            "command": [record.v, record.omega] if record else [0.0, 0.0],
            "errors": [record.e1, record.e2, record.e3] if record else [0, 0, 0],
            "min_range": record.min_range if record else None,
            "events": record.events if record else [],
            "goal": [nav.goal.x, nav.goal.y],
            "plan_version": nav.plan_version,
            "grid": grid_msg,
            "histogram": hist,
            "ref": ref,
            "obstacles": obstacles,
            "paused": self.paused,
            "finished": sim.finished(),
            "metrics": {
                "ticks": len(sim.trace.records),
                "replans": nav.replan_count,
                "mode": nav.mode.value,
            },
        }
        if keyframe or self._plan_changed:
            if nav.plan is not None:
                frame["plan"] = {"xs": [float(v) for v in nav.plan.xs],
                                 "ys": [float(v) for v in nav.plan.ys]}
            else:
                frame["plan"] = None
        return frame

    def _offer(self, client: _Client, text: str) -> None:
        try:
            client.queue.put_nowait(text)
        except asyncio.QueueFull:
            # slow client: drop its backlog and resync with a keyframe
            while not client.queue.empty():
                try:
                    client.queue.get_nowait()
                except asyncio.QueueEmpty:
                    break
            client.needs_keyframe = True

    def _broadcast(self) -> None:
        if not self.clients:
            self._last_states = self.sim.belief.states.copy()
            return
        delta_text = None
        keyframe_text = None
        for client in self.clients.values():
            if client.needs_keyframe:
                if keyframe_text is None:
                    keyframe_text = json.dumps(self._frame_payload(keyframe=True))
                client.needs_keyframe = False
                self._offer(client, keyframe_text)
            else:
                if delta_text is None:
                    delta_text = json.dumps(self._frame_payload(keyframe=False))
                self._offer(client, delta_text)
        self._last_states = self.sim.belief.states.copy()

    # -- main loop ------------------------------------------------------------

    async def run_loop(self) -> None:
        last_plan_version = self.sim.navigator.plan_version
        self._plan_changed = True
        while not self.stopped:
            while not self.inbound.empty():
                client, cmd = self.inbound.get_nowait()
                self._apply(client, cmd)
            if not self.paused and not self.sim.finished() \
                    and self.sim.tick_index < self.scenario.max_ticks:
                self.sim.tick()
                self._plan_changed = (
                    self.sim.navigator.plan_version != last_plan_version)
                last_plan_version = self.sim.navigator.plan_version
                self._broadcast()
            await asyncio.sleep(self.scenario.tick_dt / self.speed)

    def persist(self) -> None:
        if not self.out_dir:
            return
        out = Path(self.out_dir)
        out.mkdir(parents=True, exist_ok=True)
        (out / "trace.csv").write_text(self.sim.trace.to_csv())
        (out / "commands.json").write_text(
            json.dumps(self.command_log, indent=2) + "\n")


def create_app(scenario: Scenario, speed: float = 1.0,
               static_dir: str | None = None,
               out_dir: str | None = None) -> FastAPI:
    hub = TelemetryHub(scenario, speed=speed, out_dir=out_dir)

    async def lifespan(app):
        task = asyncio.create_task(hub.run_loop())
        yield
        hub.stopped = True
        await task
        hub.persist()

    app = FastAPI(lifespan=lifespan)
    app.state.hub = hub

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        client = _Client()
        hub.clients[client.client_id] = client
        grid = scenario.grid
        await ws.send_text(json.dumps({
            "type": "hello",
            "version": SCHEMA_VERSION,
            "scenario": scenario.name,
            "tick_dt": scenario.tick_dt,
            "map": {"width": grid.width, "height": grid.height,
                    "resolution": grid.resolution, "origin": list(grid.origin)},
        }))

        async def pump_out():
            while True:
                await ws.send_text(await client.queue.get())

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                raw = await ws.receive_text()
                try:
                    msg = json.loads(raw)
                except json.JSONDecodeError:
                    hub._reply_error(client, {}, "message is not valid JSON")
                    continue
                if msg.get("type") != "command":
                    hub._reply_error(client, msg, "expected type 'command'")
                    continue
                seq = msg.get("seq")
                if not isinstance(seq, int) or seq <= client.last_seq:
                    hub._reply_error(client, msg,
                                     "seq must be a strictly increasing integer")
                    continue
                client.last_seq = seq
                await hub.inbound.put((client, msg))
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            hub.clients.pop(client.client_id, None)

    @app.get("/trace.csv", response_class=PlainTextResponse)
    async def get_trace():
        return hub.sim.trace.to_csv()

    @app.get("/commands.json")
    async def get_commands():
        return JSONResponse(hub.command_log)

    @app.get("/metrics.json")
    async def get_metrics():
        hub.sim.finalize_metrics()
        payload = hub.sim.trace.metrics.to_dict()
        if not hub.sim.finished() and hub.sim.tick_index < scenario.max_ticks:
            payload["outcome"] = "RUNNING"
        return JSONResponse(payload)

    @app.get("/scenario.json")
    async def get_scenario():
        return JSONResponse(hub.scenario.raw)

    if static_dir and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=static_dir, html=True), name="console")
    else:
        @app.get("/", response_class=HTMLResponse)
        async def index():
            return _FALLBACK_PAGE

    return app


def serve(scenario: Scenario, host: str = "127.0.0.1", port: int = 8765,
          speed: float = 1.0, static_dir: str | None = None,
          out_dir: str | None = None) -> None:
    import uvicorn

    app = create_app(scenario, speed=speed, static_dir=static_dir, out_dir=out_dir)
    uvicorn.run(app, host=host, port=port, log_level="warning")
