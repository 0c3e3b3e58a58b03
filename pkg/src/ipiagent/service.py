"""Live interactive sessions over a bidirectional JSON/WebSocket protocol.

Wire messages are {"type", "seq", "payload"}; seq increases strictly per
direction and every server message references the client seq it answers
via "re". Message schemas are published under docs/schemas/. The protocol
core (SessionHost) is transport-free; the FastAPI layer only moves JSON.

Client -> server types: session_config, tick, utterance, frame_push.
Server -> client types: session_config, tick, answer, trigger, task_state,
gate_telemetry, error, frame_push (ack).
"""

from __future__ import annotations

import itertools
import logging
import uuid
from dataclasses import dataclass, field

from .backends import build_backends
from .config import BackendConfig, RuntimeOptions, backend_config_from_dict
from .errors import ConfigError, IPIError, ProtocolViolation, ValidationError
from .gating import GateThresholds
from .router import (
    INTENT_REACTIVE,
    OUTPUT_RESPONSE,
    OUTPUT_TASK_UPDATE,
    OUTPUT_TRIGGER,
    AgentRuntime,
)
from .timeline import (
    DirectoryFrameSource,
    PushableFrameSource,
    SyntheticFrameSource,
    Timeline,
)

logger = logging.getLogger(__name__)

CLIENT_TYPES = ("session_config", "tick", "utterance", "frame_push")


def _build_frame_source(spec: dict | None):
    spec = spec or {"kind": "push"}
    kind = spec.get("kind", "push")
    if kind == "push":
        return PushableFrameSource()
    if kind == "synthetic":
        return SyntheticFrameSource(length=spec.get("length"))
    if kind == "directory":
        return DirectoryFrameSource(spec["path"])
    raise ConfigError(f"unknown frame_source kind {kind!r}")


def _parse_thresholds(payload: dict | None) -> GateThresholds:
    payload = payload or {}
    try:
        return GateThresholds(
            theta_low=float(payload.get("theta_low", GateThresholds().theta_low)),
            theta_high=float(payload.get("theta_high", GateThresholds().theta_high)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid thresholds: {exc}") from exc


@dataclass
class SessionHost:
    """One session's protocol state machine: a strictly ordered message
    loop over the agent runtime. Sessions never share state."""

    session_id: str
    config_payload: dict
    runtime: AgentRuntime = field(init=False)
    timeline: Timeline = field(init=False)

    def __post_init__(self):
        payload = self.config_payload
        thresholds = _parse_thresholds(payload.get("thresholds"))
        backend_spec = payload.get("backend", {"mode": "scripted"})
        backend_config = backend_spec if isinstance(backend_spec, BackendConfig) \
            else backend_config_from_dict(backend_spec)
        options = RuntimeOptions.for_ablation(
            payload.get("ablation", "full"), thresholds=thresholds)
        if "window_capacity" in payload:
            options.window_capacity = int(payload["window_capacity"])
        backends = build_backends(backend_config)
        self.runtime = AgentRuntime(backends, options)
        self._source = _build_frame_source(payload.get("frame_source"))
        self.timeline = Timeline(source=self._source, events=[],
                                 capacity=options.window_capacity)
        self._server_seq = itertools.count(1)
        self._last_client_seq = 0
        self._event_counter = 0

    # -- message plumbing ------------------------------------------------------

    def _reply(self, msg_type: str, payload: dict, re: int | None) -> dict:
        message = {"type": msg_type, "seq": next(self._server_seq),
                   "payload": payload}
        if re is not None:
            message["re"] = re
        return message

    def _error(self, code: str, text: str, re: int | None) -> dict:
        return self._reply("error", {"code": code, "message": text}, re)

    def _task_state(self, re: int | None) -> dict:
        latest: dict[str, dict] = {}
        for entry in self.runtime.telemetry:
            latest[entry.task_id] = {"delta": entry.delta, "reason": entry.reason}
        tasks = []
        for task in self.runtime.memory.all_tasks():
            tele = latest.get(task.task_id, {})
            tasks.append({
                "task_id": task.task_id,
                "target": task.target,
                "revision": task.revision,
                "status": task.status,
                "created_at": task.created_at,
                "last_delta": tele.get("delta"),
                "last_reason": tele.get("reason"),
            })
        return self._reply("task_state", {"tasks": tasks}, re)

    def handle(self, message: dict) -> list[dict]:
        """Process one client message; always returns >= 1 response."""
        if not isinstance(message, dict) or "type" not in message:
            return [self._error("malformed", "messages need a 'type'", None)]
        msg_type = message.get("type")
        seq = message.get("seq")
        if not isinstance(seq, int):
            return [self._error("malformed", "messages need an integer 'seq'",
                                None)]
        if seq <= self._last_client_seq:
            return [self._error(
                "protocol",
                f"out-of-order seq {seq} (last was {self._last_client_seq})",
                seq)]
        self._last_client_seq = seq
        payload = message.get("payload") or {}
        try:
            if msg_type == "tick":
                return self._handle_tick(seq)
            if msg_type == "utterance":
                return self._handle_utterance(payload, seq)
            if msg_type == "frame_push":
                return self._handle_frame_push(payload, seq)
            if msg_type == "session_config":
                return self._handle_config_update(payload, seq)
            return [self._error("malformed", f"unknown type {msg_type!r}", seq)]
        except IPIError as exc:
            return [self._error("runtime", str(exc), seq)]

    def _handle_tick(self, seq: int) -> list[dict]:
        tick = self.timeline.current_tick + 1
        window, _ = self.timeline.advance(tick)
        before = len(self.runtime.telemetry)
        records = self.runtime.monitor_records(tick, window)
        responses = []
        task_changed = False
        for record in records:
            if record.output.kind == OUTPUT_TRIGGER:
                responses.append(self._reply("trigger", {
                    "task_id": record.output.task_id,
                    "tick": tick,
                    "text": record.output.text,
                    "reason": record.reason,
                }, seq))
                task_changed = True
        new_telemetry = self.runtime.telemetry[before:]
        if new_telemetry:
            responses.append(self._reply("gate_telemetry", {
                "tick": tick,
                "entries": [
                    {"task_id": t.task_id, "raw": t.raw, "delta": t.delta,
                     "final": t.final, "reason": t.reason}
                    for t in new_telemetry
                ],
            }, seq))
        if task_changed:
            responses.append(self._task_state(seq))
        responses.append(self._reply("tick", {
            "tick": tick, "outputs": len(records),
        }, seq))
        return responses

    def _handle_utterance(self, payload: dict, seq: int) -> list[dict]:
        text = payload.get("text", "")
        if not isinstance(text, str) or not text.strip():
            return [self._error("malformed", "utterance payload needs text", seq)]
        self._event_counter += 1
        event_id = payload.get("event_id") or f"live-{self._event_counter}"
        at = max(1, self.timeline.current_tick)
        intent = self.runtime.classify(text, at, event_id=event_id)
        if intent.kind == INTENT_REACTIVE and self.timeline.current_tick < 1:
            return [self._error("protocol",
                                "advance at least one tick before a reactive query",
                                seq)]
        window = self.timeline.window() if self.timeline.current_tick >= 1 else None
        record = self.runtime.dispatch_record(intent, text, at, window,
                                              event_id=event_id)
        responses = []
        if record.output.kind == OUTPUT_RESPONSE:
            responses.append(self._reply("answer", {
                "text": record.output.text, "event_id": event_id,
            }, seq))
        elif record.output.kind == OUTPUT_TASK_UPDATE:
            responses.append(self._task_state(seq))
        else:
            responses.append(self._error("runtime",
                                         record.error or "no action taken", seq))
        return responses

    def _handle_frame_push(self, payload: dict, seq: int) -> list[dict]:
        if not isinstance(self._source, PushableFrameSource):
            return [self._error("protocol",
                                "this session's frame source is not pushable", seq)]
        try:
            tick = int(payload["tick"])
            source = str(payload["source"])
        except (KeyError, TypeError, ValueError):
            return [self._error("malformed",
                                "frame_push payload needs tick and source", seq)]
        if tick <= self.timeline.current_tick:
            return [self._error("protocol",
                                f"cannot replace already-played tick {tick}", seq)]
        self._source.push(tick, source)
        return [self._reply("frame_push", {"accepted": True, "tick": tick}, seq)]

    def _handle_config_update(self, payload: dict, seq: int) -> list[dict]:
        if "thresholds" in payload:
            self.runtime.options.thresholds = _parse_thresholds(
                payload["thresholds"])
        return [self._reply("session_config", {
            "session_id": self.session_id,
            "accepted": True,
            "theta_low": self.runtime.options.thresholds.theta_low,
            "theta_high": self.runtime.options.thresholds.theta_high,
        }, seq)]

    # -- snapshots -------------------------------------------------------------

    def snapshot(self) -> dict:
        pushed = {}
        if isinstance(self._source, PushableFrameSource):
            pushed = dict(self._source._pushed)
        return {
            "session_id": self.session_id,
            "config": self.config_payload,
            "current_tick": self.timeline.current_tick,
            "last_client_seq": self._last_client_seq,
            "event_counter": self._event_counter,
            "runtime": self.runtime.snapshot(),
            "pushed_frames": {str(k): v for k, v in sorted(pushed.items())},
        }

    @classmethod
    def restore(cls, snapshot: dict) -> "SessionHost":
        host = cls(session_id=snapshot["session_id"],
                   config_payload=snapshot["config"])
        if isinstance(host._source, PushableFrameSource):
            for tick, source in snapshot["pushed_frames"].items():
                host._source.push(int(tick), source)
        for tick in range(1, snapshot["current_tick"] + 1):
            host.timeline.advance(tick)
        host.runtime.restore_state(snapshot["runtime"])
        host._last_client_seq = snapshot["last_client_seq"]
        host._event_counter = snapshot["event_counter"]
        return host


def open_session(config_payload: dict, *, session_id: str | None = None) -> SessionHost:
    """Validate the config and start a session in the monitoring loop.
    Invalid configs (e.g. theta_low > theta_high) are refused."""
    try:
        return SessionHost(session_id=session_id or uuid.uuid4().hex[:12],
                           config_payload=config_payload)
    except (ValidationError, ConfigError) as exc:
        raise ConfigError(f"session refused: {exc}") from exc


def create_app(default_config: dict | None = None, frames_dir: str | None = None):
    """FastAPI app exposing /session (WebSocket), /healthz, and snapshots."""
    from fastapi import FastAPI, WebSocket, WebSocketDisconnect
    from fastapi.responses import FileResponse, JSONResponse

    app = FastAPI(title="ipiagent session service")
    sessions: dict[str, SessionHost] = {}

    @app.get("/healthz")
    def healthz():
        from . import KERNEL_IMPLEMENTATION, __version__

        return {"status": "ok", "version": __version__,
                "kernel": KERNEL_IMPLEMENTATION, "sessions": len(sessions)}

    @app.get("/sessions/{session_id}/snapshot")
    def session_snapshot(session_id: str):
        host = sessions.get(session_id)
        if host is None:
            return JSONResponse({"error": "unknown session"}, status_code=404)
        return host.snapshot()

    if frames_dir:
        @app.get("/frames/{tick}")
        def frame(tick: int):
            source = DirectoryFrameSource(frames_dir)
            try:
                return FileResponse(source.frame(tick).source)
            except IPIError as exc:
                return JSONResponse({"error": str(exc)}, status_code=404)

    @app.websocket("/session")
    async def session_ws(ws: WebSocket):
        await ws.accept()
        host: SessionHost | None = None
        try:
            while True:
                message = await ws.receive_json()
                if host is None:
                    if message.get("type") != "session_config":
                        await ws.send_json({
                            "type": "error", "seq": 1,
                            "payload": {"code": "protocol",
                                        "message": "open with session_config first"}})
                        continue
                    payload = message.get("payload") or {}
                    resume_id = payload.get("session_id")
                    if resume_id and resume_id in sessions:
                        host = sessions[resume_id]
                        responses = [host._reply("session_config", {
                            "session_id": host.session_id, "accepted": True,
                            "resumed": True,
                        }, message.get("seq")), host._task_state(message.get("seq"))]
                    else:
                        if not payload and default_config:
                            payload = default_config
                        try:
                            host = open_session(payload)
                        except ConfigError as exc:
                            await ws.send_json({
                                "type": "error", "seq": 1,
                                "payload": {"code": "config", "message": str(exc)}})
                            await ws.close()
                            return
                        sessions[host.session_id] = host
                        host._last_client_seq = message.get("seq") or 0
                        responses = [host._reply("session_config", {
                            "session_id": host.session_id, "accepted": True,
                            "theta_low": host.runtime.options.thresholds.theta_low,
                            "theta_high": host.runtime.options.thresholds.theta_high,
                        }, message.get("seq"))]
                    for response in responses:
                        await ws.send_json(response)
                    continue
                for response in host.handle(message):
                    await ws.send_json(response)
        except WebSocketDisconnect:
            logger.info("session %s disconnected",
                        host.session_id if host else "<unopened>")

    return app
