"""Live mode: the simulation loop paced to the wall clock, with a WebSocket
bridge replacing the scripted operator by a human (or a scripted client).

One thread owns the simulator and applies queued commands only at control
boundaries; WebSocket handlers never touch simulation state directly, they
exchange immutable JSON text through thread-safe queues.
"""

import asyncio
import queue
import threading
import time

import numpy as np

from .config import ScenarioConfig
from .sim import Simulator
from .telemetry import (
    CommandError,
    CommandFrame,
    TelemetryDecimator,
    TelemetryFrame,
    decode_command,
    encode_telemetry,
)

HANDLE_FORCE_LIMIT = 25.0  # N per axis, matches the cockpit's pad scaling


class LiveSession:
    """Steppable live simulation with command queueing and telemetry fan-out."""

    def __init__(self, cfg: ScenarioConfig, speed: float = 1.0):
        if speed <= 0:
            raise ValueError("speed must be positive")
        self.cfg = cfg
        self.speed = speed
        self.sim = Simulator(cfg, live=True)
        self.decimator = TelemetryDecimator(cfg.telemetry_hz)
        self.commands: "queue.Queue[CommandFrame]" = queue.Queue()
        self.subscribers: list = []  # (asyncio queue, event loop)
        self._sub_lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: threading.Thread | None = None
        self.applied_log: list = []  # (t, kind) pairs, for inspection/tests

    # -- command path -------------------------------------------------------

    def submit(self, cmd: CommandFrame):
        self.commands.put(cmd)

    def _apply(self, cmd: CommandFrame):
        sim = self.sim
        if cmd.kind == "handle_wrench":
            sim.cmd_force = np.clip(
                np.asarray(cmd.payload, float), -HANDLE_FORCE_LIMIT, HANDLE_FORCE_LIMIT
            )
        elif cmd.kind == "grip_torque":
            sim.cmd_grip = float(np.clip(cmd.payload[0], 0.0, 0.5))
        elif cmd.kind == "yaw_setpoint":
            sim.state.yaw_setpoint = cmd.payload[0]
        elif cmd.kind == "reset":
            sim.reset()
            self.decimator.reset()
        self.applied_log.append((self.sim.state.t, cmd.kind))

    # -- stepping ------------------------------------------------------------

    def step_once(self) -> str | None:
        """Apply pending commands at the boundary, advance one control period,
        and return the encoded telemetry frame when one is due."""
        while True:
            try:
                self._apply(self.commands.get_nowait())
            except queue.Empty:
                break
        row = self.sim.step_control_period()
        if not self.decimator.due(row["t"]):
            return None
        return encode_telemetry(TelemetryFrame.from_row(row))

    def _broadcast(self, text: str):
        with self._sub_lock:
            subs = list(self.subscribers)
        for q_out, loop in subs:
            loop.call_soon_threadsafe(q_out.put_nowait, text)

    def _run(self):
        dt_wall = self.cfg.control_dt / self.speed
        next_tick = time.monotonic()
        while not self._stop.is_set():
            frame = self.step_once()
            if frame is not None:
                self._broadcast(frame)
            next_tick += dt_wall
            lag = next_tick - time.monotonic()
            if lag > 0:
                time.sleep(lag)
            elif lag < -1.0:
                next_tick = time.monotonic()  # fell badly behind, resynchronize

    def start(self):
        if self._thread is None:
            self._thread = threading.Thread(target=self._run, daemon=True)
            self._thread.start()

    def stop(self):
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout=2.0)
            self._thread = None

    def subscribe(self, q_out, loop):
        with self._sub_lock:
            self.subscribers.append((q_out, loop))

    def unsubscribe(self, q_out):
        with self._sub_lock:
            self.subscribers = [(q, l) for q, l in self.subscribers if q is not q_out]


def make_app(session: LiveSession, ui_dir: str | None = None):
    """FastAPI app exposing /ws; optionally serves the cockpit static files."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect

    app = FastAPI()
    app.state.session = session

    @app.websocket("/ws")
    async def ws_endpoint(ws: WebSocket):
        await ws.accept()
        cfg = session.cfg
        hello = (
            '{"hello":{'
            f'"control_dt":{cfg.control_dt},'
            f'"telemetry_hz":{cfg.telemetry_hz},'
            f'"fdot_threshold":{cfg.teleop.fdot_threshold},'
            f'"anchor":[{",".join(str(float(a)) for a in cfg.plug.anchor)}],'
            f'"force_limit":{HANDLE_FORCE_LIMIT}'
            "}}"
        )
        await ws.send_text(hello)
        out: asyncio.Queue = asyncio.Queue()
        session.subscribe(out, asyncio.get_running_loop())

        async def pump_out():
            while True:
                await ws.send_text(await out.get())

        sender = asyncio.create_task(pump_out())
        try:
            while True:
                text = await ws.receive_text()
                try:
                    session.submit(decode_command(text))
                except CommandError as exc:
                    await ws.send_text(f'{{"error":"{exc}"}}')
        except WebSocketDisconnect:
            pass
        finally:
            sender.cancel()
            session.unsubscribe(out)

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")
    return app


def serve(cfg: ScenarioConfig, port: int, speed: float = 1.0, ui_dir: str | None = None):
    """Run the live bridge until interrupted."""
    import uvicorn

    session = LiveSession(cfg, speed=speed)
    app = make_app(session, ui_dir=ui_dir)

    @app.on_event("startup")
    async def _start():
        session.start()

    @app.on_event("shutdown")
    async def _stop():
        session.stop()

    uvicorn.run(app, host="127.0.0.1", port=port, log_level="warning")
