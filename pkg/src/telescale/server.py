"""Live session bridge: drive the simulator over a websocket, log, replay.

The wire protocol ("telescale/1") is JSON text messages over a websocket,
one message per websocket frame:

    {"type": <kind>, "seq": <int>, "payload": {...}}

with seq strictly increasing per direction. Client kinds:

    hello         {"protocol": "telescale/1"}
    configure     {"scenario": name?, "delay_ms": number?, "scaling": name | mapping?}
    start         {}
    reset         {}
    master_input  {"left"|"right": {"position": [x, y, z] m,
                   "orientation": [w, x, y, z]?, "jaw": 0|1?}, "client_ms"?}

Server kinds: hello (ack, protocol version), configure / start / reset
(acks; start carries the scenario snapshot, tick rate, delay in ticks and
the frame stride), frame, event, trial_done, error. Frames carry the
DELAYED world snapshot plus HUD scorekeeping (elapsed time, running
weighted error, recent events); the operator never receives ground truth.
Poses between master_input messages are sampled and held, so an idle hand
is exactly still.

The simulated delay lives inside the tick loop; network transport adds its
own (small) latency on top, which is reported per trial when clients stamp
their inputs, never compensated. The tick loop is the sole owner of world
state: the socket reader only mutates the held master poses and control
state, the sender drains an outbound queue where stale frames are dropped
oldest-first rather than ever blocking the loop. Control messages (acks,
events, trial_done, error) are never dropped.

Session logs are JSON lines: a header record with the scenario snapshot,
then tick-stamped inputs, frames and events, and a final trial record.
Replaying the input stream through the same tick machinery reproduces the
event list bit for bit; that makes the log, not the live socket, the
artifact of record.
"""

from __future__ import annotations

import asyncio
import json
import time
from collections import deque
from dataclasses import dataclass, replace
from pathlib import Path

from .core import ConfigError, Jaw, Pose, make_pose
from .harness import TrialRecord, _record_to_dict, record_from_dict
from .pipeline import TeleopSession
from .scenario import (PRESET_CONDITIONS, Scenario, preset, scaling_from_dict,
                       scenario_from_dict, scenario_to_dict)
from .world import ErrorEvent, weighted_error

PROTOCOL = "telescale/1"
RENDER_HZ_DEFAULT = 30.0
HUD_EVENTS = 5          # most recent events echoed in every frame
MAX_PENDING_FRAMES = 4  # beyond this the oldest unsent frame is dropped
MAX_BURST_S = 0.5       # cap on catch-up stepping after an event-loop stall


def _event_payload(event: ErrorEvent) -> dict:
    return {"tick": event.tick, "kind": event.kind.name,
            "weight": event.weight, "source": event.source}


def _gripper_payload(g) -> dict:
    return {"position": list(g.pos), "jaw": int(g.jaw), "held": g.held}


class LiveSession:
    """One human-driven trial: sample-and-hold inputs, frames, JSONL log.

    Transport-free on purpose; the websocket layer and the tests drive it
    in tick space through apply_input / advance_to.
    """

    def __init__(self, scenario: Scenario, log_path=None,
                 render_hz: float = RENDER_HZ_DEFAULT):
        self.scenario = scenario
        self.session = TeleopSession(scenario)
        self.fs = self.session.clock.fs_hz
        self.dt = self.session.clock.dt
        self.frame_stride = max(1, int(round(self.fs / render_hz)))
        self.masters = [Pose(scenario.left_home), Pose(scenario.right_home)]
        self.events: list[ErrorEvent] = []
        self.recent: deque = deque(maxlen=HUD_EVENTS)
        self.next_frame_tick = self.frame_stride
        self.input_count = 0
        self.skew_ms: list[float] = []
        self.finished = False
        self.log_path = Path(log_path) if log_path else None
        self._log = None
        if self.log_path is not None:
            self.log_path.parent.mkdir(parents=True, exist_ok=True)
            self._log = open(self.log_path, "w")
            self._write({"log": PROTOCOL,
                         "scenario": scenario_to_dict(scenario),
                         "frame_stride": self.frame_stride,
                         "wall_unix": time.time()})

    def _write(self, entry: dict):
        if self._log is not None:
            self._log.write(json.dumps(entry) + "\n")
            self._log.flush()  # the log must survive a crash mid-trial

    def _arm_pose(self, arm: int, data) -> Pose:
        if not isinstance(data, dict) or "position" not in data:
            raise ConfigError("master_input arm needs at least a position")
        held = self.masters[arm]
        return make_pose(data["position"],
                         data.get("orientation", held.orientation),
                         Jaw(int(data.get("jaw", held.jaw))))

    def apply_input(self, left=None, right=None, client_ms=None):
        """Update the held master poses; logged at the tick it lands on."""
        # validate both arms before touching either, so a bad message
        # leaves no half-applied, unlogged pose behind
        new_left = self._arm_pose(0, left) if left is not None else None
        new_right = self._arm_pose(1, right) if right is not None else None
        if new_left is not None:
            self.masters[0] = new_left
        if new_right is not None:
            self.masters[1] = new_right
        self.input_count += 1
        if client_ms is not None:
            self.skew_ms.append(time.time() * 1000.0 - float(client_ms))
        self._write({"t": self.session.tick,
                     "input": {"left": left, "right": right,
                               "client_ms": client_ms}})

    def _frame(self) -> dict:
        st = self.session.observed
        payload = {
            "tick": self.session.tick,
            "sim_time_s": self.session.sim_time,
            "observed_tick": st.tick,
            "left": _gripper_payload(st.left),
            "right": _gripper_payload(st.right),
            "rings": [{"center": list(r.center), "threaded": r.threaded,
                       "stretch": r.stretch} for r in st.rings],
            "pegs": [{"condition": int(p.condition)} for p in st.pegs],
            "hud": {"elapsed_s": self.session.sim_time,
                    "weighted_error": self.session.weighted_error,
                    "events": list(self.recent)},
            "complete": self.session.complete,
        }
        self._write({"t": self.session.tick, "frame": payload})
        return payload

    def initial_frame(self) -> dict:
        return self._frame()

    def advance_to(self, target_tick: int):
        """Step until target_tick; returns (outbound messages, done)."""
        out = []
        while self.session.tick < target_tick and not self._done():
            _, events = self.session.step(*self.masters)
            for ev in events:
                self.events.append(ev)
                payload = _event_payload(ev)
                self.recent.append(payload)
                self._write({"t": self.session.tick, "event": payload})
                out.append(("event", payload))
            if self.session.tick >= self.next_frame_tick:
                out.append(("frame", self._frame()))
                self.next_frame_tick = self.session.tick + self.frame_stride
        done = self._done()
        if done and self.session.tick + self.frame_stride != self.next_frame_tick:
            out.append(("frame", self._frame()))  # show the end state
            self.next_frame_tick = self.session.tick + self.frame_stride
        return out, done

    def _done(self) -> bool:
        return (self.session.complete
                or self.session.sim_time >= self.scenario.max_sim_s)

    def finish(self, aborted: bool = False) -> TrialRecord:
        """Close the trial and the log; live records carry seed 0."""
        self.finished = True
        record = TrialRecord(
            scenario=self.scenario.name, seed=0,
            completion_time=self.session.sim_time,
            timed_out=not self.session.complete,
            events=tuple(self.events),
            weighted_error=weighted_error(self.events),
            log_ref=str(self.log_path) if self.log_path else None)
        self._write({"t": self.session.tick, "aborted": aborted,
                     "trial_record": _record_to_dict(record)})
        if self._log is not None:
            self._log.close()
            self._log = None
        return record

    def transport_report(self) -> dict:
        report = {"inputs": self.input_count}
        if self.skew_ms:
            report["skew_ms"] = {  # includes clock offset; jitter is the signal
                "min": min(self.skew_ms),
                "mean": sum(self.skew_ms) / len(self.skew_ms),
                "max": max(self.skew_ms)}
        return report


@dataclass(frozen=True)
class ReplayResult:
    record: TrialRecord
    truncated: bool
    live_record: TrialRecord | None  # the record stored in the log, if any


def replay_session(path) -> ReplayResult:
    """Re-run a session log headlessly; inputs in, identical events out."""
    try:
        lines = Path(path).read_text().splitlines()
    except OSError as exc:
        raise ConfigError(f"cannot read session log {path}: {exc}") from None
    if not lines:
        raise ConfigError(f"{path}: empty session log")
    try:
        header = json.loads(lines[0])
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: bad header: {exc}") from None
    version = header.get("log")
    if version != PROTOCOL:
        raise ConfigError(f"{path}: log version {version!r} is not {PROTOCOL}")
    scenario = scenario_from_dict(header["scenario"])

    inputs = []
    live_record = None
    final_tick = 0
    for n, raw in enumerate(lines[1:], start=2):
        if not raw.strip():
            continue
        try:
            entry = json.loads(raw)
        except json.JSONDecodeError:
            break  # torn tail write: replay up to the last whole line
        tick = int(entry.get("t", 0))
        final_tick = max(final_tick, tick)
        if "input" in entry:
            inputs.append((tick, entry["input"]))
        elif "trial_record" in entry:
            live_record = record_from_dict(entry["trial_record"])

    truncated = live_record is None
    engine = LiveSession(scenario, log_path=None)
    idx = 0
    while engine.session.tick < final_tick and not engine._done():
        while idx < len(inputs) and inputs[idx][0] == engine.session.tick:
            data = inputs[idx][1]
            engine.apply_input(data.get("left"), data.get("right"))
            idx += 1
        engine.advance_to(engine.session.tick + 1)
    record = engine.finish()
    record = replace(record, log_ref=str(path))
    return ReplayResult(record=record, truncated=truncated,
                        live_record=live_record)


class _Connection:
    """Per-socket state machine; owns the engine and both pump tasks."""

    def __init__(self, ws, scenario: Scenario, record_dir, render_hz):
        self.ws = ws
        self.scenario = scenario
        self.record_dir = Path(record_dir) if record_dir else None
        self.render_hz = render_hz
        self.engine: LiveSession | None = None
        self.ticker: asyncio.Task | None = None
        self.greeted = False
        self.in_seq = -1
        self.out_seq = -1
        self.queue: deque = deque()
        self.wakeup = asyncio.Event()
        self.trial_count = 0

    # -- outbound --

    def send(self, kind: str, payload: dict, droppable: bool = False):
        if droppable:
            pending = sum(1 for k, _ in self.queue if k == "frame")
            if pending >= MAX_PENDING_FRAMES:
                for i, (k, _) in enumerate(self.queue):
                    if k == "frame":
                        del self.queue[i]
                        break
        self.queue.append((kind, payload))
        self.wakeup.set()

    async def pump_outbound(self):
        while True:
            await self.wakeup.wait()
            self.wakeup.clear()
            while self.queue:
                kind, payload = self.queue.popleft()
                self.out_seq += 1  # seq stamped at send so drops leave no gap
                await self.ws.send(json.dumps(
                    {"type": kind, "seq": self.out_seq, "payload": payload}))

    # -- trial lifecycle --

    def _log_path(self):
        if self.record_dir is None:
            return None
        self.trial_count += 1
        stamp = time.strftime("%Y%m%d-%H%M%S")
        return self.record_dir / f"session-{stamp}-{self.trial_count}.jsonl"

    def start_trial(self):
        self.engine = LiveSession(self.scenario, log_path=self._log_path(),
                                  render_hz=self.render_hz)
        self.send("start", {
            "scenario": scenario_to_dict(self.scenario),
            "fs_hz": self.engine.fs,
            "rt_ticks": self.engine.session.clock.one_way_samples * 2,
            "frame_stride": self.engine.frame_stride})
        self.send("frame", self.engine.initial_frame())
        self.ticker = asyncio.create_task(self.run_ticks(self.engine))
        return self.engine

    def abort_trial(self):
        """Stop the clock and save the partial log; keeps the connection."""
        engine, self.engine = self.engine, None
        if self.ticker is not None:
            self.ticker.cancel()
            self.ticker = None
        if engine is not None and not engine.finished:
            engine.finish(aborted=True)

    def reset_session(self):
        # spec'd recovery: whatever was in flight is abandoned and, if a
        # trial was live, a fresh one starts from the initial world state
        was_running = self.engine is not None
        self.abort_trial()
        if was_running:
            self.start_trial()
        return was_running

    async def run_ticks(self, engine: LiveSession):
        loop = asyncio.get_running_loop()
        origin = loop.time() - engine.session.tick * engine.dt
        interval = engine.frame_stride * engine.dt
        max_burst = int(MAX_BURST_S * engine.fs)
        while self.engine is engine:
            await asyncio.sleep(interval)
            if self.engine is not engine:
                break
            target = int((loop.time() - origin) * engine.fs)
            if target - engine.session.tick > max_burst:
                # stalled loop: drop the lost wall time instead of sprinting
                target = engine.session.tick + max_burst
                origin = loop.time() - target * engine.dt
            out, done = engine.advance_to(target)
            for kind, payload in out:
                self.send(kind, payload, droppable=(kind == "frame"))
            if done:
                record = engine.finish()
                payload = _record_to_dict(record)
                payload["transport"] = engine.transport_report()
                self.send("trial_done", payload)
                self.engine = None
                self.ticker = None
                break

    # -- inbound --

    def fail(self, message: str):
        self.send("error", {"message": message})
        self.reset_session()

    def handle(self, raw: str):
        try:
            msg = json.loads(raw)
        except json.JSONDecodeError as exc:
            self.fail(f"bad JSON: {exc}")
            return
        if not isinstance(msg, dict) or "type" not in msg:
            self.fail("message needs a type")
            return
        seq = msg.get("seq")
        if not isinstance(seq, int) or seq <= self.in_seq:
            self.fail(f"seq must increase, got {seq!r} after {self.in_seq}")
            return
        self.in_seq = seq
        kind = msg["type"]
        payload = msg.get("payload") or {}
        if not self.greeted and kind != "hello":
            self.fail("say hello first")
            return
        try:
            handler = getattr(self, f"on_{kind}", None)
            if handler is None:
                self.fail(f"unknown message type {kind!r}")
                return
            handler(payload)
        except ConfigError as exc:
            self.fail(str(exc))

    def on_hello(self, payload):
        if payload.get("protocol") != PROTOCOL:
            raise ConfigError(
                f"protocol {payload.get('protocol')!r} is not {PROTOCOL}")
        self.greeted = True
        self.send("hello", {"protocol": PROTOCOL,
                            "scenario": self.scenario.name,
                            "presets": list(PRESET_CONDITIONS)
                            + ["zero_delay_perfect"]})

    def on_configure(self, payload):
        if self.engine is not None:
            self.send("error", {"message": "cannot configure a running "
                                           "trial; reset first"})
            return
        sc = self.scenario
        if "scenario" in payload:
            sc = preset(str(payload["scenario"]))
        if "scaling" in payload:
            want = payload["scaling"]
            scaling = (scaling_from_dict(want) if isinstance(want, dict)
                       else preset(str(want)).scaling)
            name = sc.name if isinstance(want, dict) else str(want)
            if name != sc.name:
                name = f"{sc.name}+{name}"
            sc = replace(sc, scaling=scaling, name=name)
        if "delay_ms" in payload:
            delay_ms = float(payload["delay_ms"])
            if delay_ms < 0:
                raise ConfigError("delay_ms must be >= 0")
            sc = replace(sc, round_trip_s=delay_ms / 1000.0)
        self.scenario = sc
        self.send("configure", {
            "scenario": sc.name,
            "delay_ms": sc.round_trip_s * 1000.0,
            "scaling": scaling_to_kind(sc)})

    def on_start(self, payload):
        if self.engine is not None:
            self.send("error", {"message": "trial already running"})
            return
        self.start_trial()

    def on_reset(self, payload):
        running = self.reset_session()
        self.send("reset", {"running": running})

    def on_master_input(self, payload):
        if self.engine is None:
            return  # inputs between trials are not an error, just late
        self.engine.apply_input(payload.get("left"), payload.get("right"),
                                payload.get("client_ms"))


def scaling_to_kind(sc: Scenario) -> str:
    return type(sc.scaling).__name__.removesuffix("Scaling").lower()


class SessionServer:
    """One operator at a time; extra connections are turned away."""

    def __init__(self, scenario: Scenario | None = None,
                 host: str = "127.0.0.1", port: int = 0,
                 record_dir=None, render_hz: float = RENDER_HZ_DEFAULT):
        self.scenario = scenario if scenario is not None else preset("c02")
        self.host = host
        self.port = port
        self.record_dir = record_dir
        self.render_hz = render_hz
        self._server = None
        self._active: _Connection | None = None

    async def start(self):
        from websockets.asyncio.server import serve
        self._server = await serve(self._handle, self.host, self.port)
        self.port = self._server.sockets[0].getsockname()[1]
        return self

    async def stop(self):
        if self._server is not None:
            self._server.close()
            await self._server.wait_closed()
            self._server = None

    async def _handle(self, ws):
        if self._active is not None:
            await ws.send(json.dumps({"type": "error", "seq": 0, "payload": {
                "message": "server busy: one operator session at a time"}}))
            await ws.close()
            return
        conn = _Connection(ws, self.scenario, self.record_dir, self.render_hz)
        self._active = conn
        pump = asyncio.create_task(conn.pump_outbound())
        try:
            async for raw in ws:
                conn.handle(raw)
        except Exception:
            pass  # connection teardown is handled below either way
        finally:
            conn.abort_trial()  # disconnect mid-trial saves the partial log
            pump.cancel()
            self._active = None


async def serve_forever(scenario: Scenario | None = None,
                        host: str = "127.0.0.1", port: int = 8765,
                        record_dir=None,
                        render_hz: float = RENDER_HZ_DEFAULT,
                        ready=None):
    server = SessionServer(scenario, host, port, record_dir, render_hz)
    await server.start()
    if ready is not None:
        ready(server)
    try:
        await asyncio.Future()
    finally:
        await server.stop()
