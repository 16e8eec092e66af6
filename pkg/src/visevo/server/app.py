"""JSON-RPC 2.0 service over WebSocket (with push) and plain HTTP POST.

Methods: session.open, session.close, source.update, state.checkout,
view.tree, diff.get, params.set, image.get, view.expand.  Notifications
pushed to attached sockets: compile.succeeded, compile.failed, image.ready,
tree.changed.

A socket is attached to a session the first time it successfully issues a
request naming that sessionId, so a reconnecting client resumes push
delivery with any call (view.tree is the natural one).
"""

from __future__ import annotations

import asyncio
import base64
import contextlib
import json
import logging
import re
import threading
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, Request, WebSocket, WebSocketDisconnect
from fastapi.responses import JSONResponse, Response
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from ..diffs import diff_to_json
from ..errors import (
    InvalidPath,
    TypeMismatch,
    UnknownGroup,
    UnknownImage,
    UnknownRevision,
    UnknownSession,
    UnknownToolchain,
    VisevoError,
)
from ..scheduler import SchedulerConfig
from ..session import SessionEngine
from ..store import RevisionStore
from ..toolchain.base import ToolchainAdapter
from ..toolchain.external import load_toolchains
from ..toolchain.minivis import MinivisAdapter

log = logging.getLogger(__name__)

PARSE_ERROR = -32700
INVALID_REQUEST = -32600
METHOD_NOT_FOUND = -32601
INVALID_PARAMS = -32602
INTERNAL_ERROR = -32000

ERROR_CODES = {
    UnknownToolchain: -32001,
    UnknownSession: -32002,
    UnknownRevision: -32003,
    TypeMismatch: -32004,
    UnknownImage: -32005,
    UnknownGroup: -32006,
    InvalidPath: INVALID_PARAMS,
}

_STORE_NAME = re.compile(r"[A-Za-z0-9][A-Za-z0-9._-]*")


@dataclass(frozen=True)
class ServerConfig:
    host: str = "127.0.0.1"
    port: int = 8765
    toolchain_dir: str | None = None
    store_dir: str | None = None
    scheduler: SchedulerConfig = field(default_factory=SchedulerConfig)

    @classmethod
    def from_json(cls, data: dict) -> "ServerConfig":
        return cls(
            host=data.get("host", "127.0.0.1"),
            port=int(data.get("port", 8765)),
            toolchain_dir=data.get("toolchainDir"),
            store_dir=data.get("storeDir"),
            scheduler=SchedulerConfig.from_json(data),
        )


class SessionRegistry:
    """Owns toolchain adapters and the live sessions."""

    def __init__(self, config: ServerConfig):
        self.config = config
        self.toolchains: dict[str, ToolchainAdapter] = {
            "minivis": MinivisAdapter(),
        }
        if config.toolchain_dir:
            self.toolchains.update(load_toolchains(config.toolchain_dir))
        self._sessions: dict[str, SessionEngine] = {}
        self._lock = threading.Lock()

    def open(self, toolchain_id: str, width: int, height: int,
             store_name: str | None = None) -> SessionEngine:
        adapter = self.toolchains.get(toolchain_id)
        if adapter is None:
            raise UnknownToolchain(f"no toolchain {toolchain_id!r}")
        store = None
        if store_name is not None:
            if self.config.store_dir is None:
                raise ValueError("server has no store directory configured")
            if not _STORE_NAME.fullmatch(store_name):
                raise ValueError(f"invalid store name {store_name!r}")
            store = RevisionStore.open(Path(self.config.store_dir) / store_name)
        engine = SessionEngine(adapter, config=self.config.scheduler,
                               store=store, width=width, height=height,
                               threaded=True)
        with self._lock:
            self._sessions[engine.session_id] = engine
        return engine

    def get(self, session_id: str) -> SessionEngine:
        with self._lock:
            engine = self._sessions.get(session_id)
        if engine is None:
            raise UnknownSession(f"no session {session_id!r}")
        return engine

    def close(self, session_id: str) -> None:
        with self._lock:
            engine = self._sessions.pop(session_id, None)
        if engine is None:
            raise UnknownSession(f"no session {session_id!r}")
        engine.close()

    def close_all(self) -> None:
        with self._lock:
            engines = list(self._sessions.values())
            self._sessions.clear()
        for engine in engines:
            engine.close()

    def ids(self) -> list[str]:
        with self._lock:
            return list(self._sessions)


# -- request models ------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class OpenParams(_Strict):
    toolchainId: str
    width: int = Field(default=256, ge=1, le=4096)
    height: int = Field(default=256, ge=1, le=4096)
    store: str | None = None


class SessionParams(_Strict):
    sessionId: str


class UpdateParams(_Strict):
    sessionId: str
    files: dict[str, str]


class CheckoutParams(_Strict):
    sessionId: str
    revisionId: str


class DiffParams(_Strict):
    sessionId: str
    fromRev: str
    toRev: str
    direction: str = Field(default="forward", pattern="^(forward|backward)$")


class SetParams(_Strict):
    sessionId: str
    values: dict[str, object]


class ImageParams(_Strict):
    sessionId: str
    ref: str


class ExpandParams(_Strict):
    sessionId: str
    groupId: str
    expanded: bool


# -- method handlers -----------------------------------------------------
# each returns (result, sessionId-to-attach-or-None)


def _open(reg: SessionRegistry, p: OpenParams):
    engine = reg.open(p.toolchainId, p.width, p.height, p.store)
    return {"sessionId": engine.session_id}, engine.session_id


def _close(reg: SessionRegistry, p: SessionParams):
    reg.close(p.sessionId)
    return {"ok": True}, None


def _update(reg: SessionRegistry, p: UpdateParams):
    reg.get(p.sessionId).update_source(p.files)
    return {"ok": True}, p.sessionId


def _checkout(reg: SessionRegistry, p: CheckoutParams):
    files = reg.get(p.sessionId).checkout(p.revisionId)
    return {"files": files}, p.sessionId


def _tree(reg: SessionRegistry, p: SessionParams):
    return reg.get(p.sessionId).view_tree(), p.sessionId


def _diff(reg: SessionRegistry, p: DiffParams):
    diffs = reg.get(p.sessionId).get_diff(p.fromRev, p.toRev, p.direction)
    return {"diffs": [diff_to_json(d) for d in diffs]}, p.sessionId


def _set_params(reg: SessionRegistry, p: SetParams):
    generation = reg.get(p.sessionId).set_params(p.values)
    return {"generation": generation}, p.sessionId


def _image(reg: SessionRegistry, p: ImageParams):
    png = reg.get(p.sessionId).get_image(p.ref)
    return {"ref": p.ref, "png": base64.b64encode(png).decode("ascii")}, \
        p.sessionId


def _expand(reg: SessionRegistry, p: ExpandParams):
    reg.get(p.sessionId).expand_group(p.groupId, p.expanded)
    return {"ok": True}, p.sessionId


METHODS = {
    "session.open": (OpenParams, _open),
    "session.close": (SessionParams, _close),
    "source.update": (UpdateParams, _update),
    "state.checkout": (CheckoutParams, _checkout),
    "view.tree": (SessionParams, _tree),
    "diff.get": (DiffParams, _diff),
    "params.set": (SetParams, _set_params),
    "image.get": (ImageParams, _image),
    "view.expand": (ExpandParams, _expand),
}


# -- dispatch ------------------------------------------------------------


def dispatch(registry: SessionRegistry,
             message: object) -> tuple[dict | None, str | None]:
    """Handle one JSON-RPC request object.

    Returns (response, touchedSessionId); response is None for client
    notifications (requests without an id), which get no reply.
    """
    if not isinstance(message, dict):
        return _error_response(None, INVALID_REQUEST,
                               "request must be an object"), None
    has_id = "id" in message
    req_id = message.get("id")

    def fail(code: int, text: str):
        if not has_id:
            return None, None
        return _error_response(req_id, code, text), None

    if message.get("jsonrpc") != "2.0":
        return fail(INVALID_REQUEST, "jsonrpc must be \"2.0\"")
    method = message.get("method")
    if not isinstance(method, str):
        return fail(INVALID_REQUEST, "method must be a string")
    entry = METHODS.get(method)
    if entry is None:
        return fail(METHOD_NOT_FOUND, f"unknown method {method!r}")
    model, handler = entry
    raw_params = message.get("params", {})
    if not isinstance(raw_params, dict):
        return fail(INVALID_PARAMS, "params must be an object")
    try:
        params = model.model_validate(raw_params)
    except ValidationError as exc:
        first = exc.errors()[0]
        where = ".".join(str(p) for p in first["loc"]) or "params"
        return fail(INVALID_PARAMS, f"{where}: {first['msg']}")

    try:
        result, touched = handler(registry, params)
    except VisevoError as exc:
        code = next((c for t, c in ERROR_CODES.items()
                     if isinstance(exc, t)), INTERNAL_ERROR)
        return fail(code, str(exc))
    except ValueError as exc:
        return fail(INVALID_PARAMS, str(exc))
    except Exception as exc:
        log.exception("method %s failed", method)
        return fail(INTERNAL_ERROR, f"internal error: {exc}")

    if not has_id:
        return None, touched
    return {"jsonrpc": "2.0", "id": req_id, "result": result}, touched


def dispatch_text(registry: SessionRegistry,
                  raw: str) -> tuple[dict | None, str | None]:
    try:
        message = json.loads(raw)
    except (json.JSONDecodeError, UnicodeDecodeError):
        return _error_response(None, PARSE_ERROR, "invalid JSON"), None
    if isinstance(message, list):
        return _error_response(None, INVALID_REQUEST,
                               "batch requests not supported"), None
    return dispatch(registry, message)


def _error_response(req_id, code: int, text: str) -> dict:
    return {"jsonrpc": "2.0", "id": req_id,
            "error": {"code": code, "message": text}}


def notification(method: str, params: dict) -> dict:
    return {"jsonrpc": "2.0", "method": method, "params": params}


# -- app -----------------------------------------------------------------


def create_app(config: ServerConfig | None = None) -> FastAPI:
    config = config or ServerConfig()
    registry = SessionRegistry(config)

    @contextlib.asynccontextmanager
    async def lifespan(_app):
        yield
        registry.close_all()

    app = FastAPI(title="visevo", lifespan=lifespan)
    app.state.registry = registry

    @app.get("/health")
    async def health():
        return {"status": "ok", "sessions": len(registry.ids())}

    @app.get("/toolchains")
    async def toolchains():
        return {"toolchains": sorted(registry.toolchains)}

    @app.post("/rpc")
    async def rpc_post(request: Request):
        raw = await request.body()
        response, _ = dispatch_text(registry, raw.decode("utf-8", "replace"))
        if response is None:
            return Response(status_code=204)
        return JSONResponse(response)

    @app.websocket("/rpc")
    async def rpc_socket(ws: WebSocket):
        await ws.accept()
        loop = asyncio.get_running_loop()
        outbox: asyncio.Queue[str] = asyncio.Queue()
        attached: dict[str, tuple[SessionEngine, object]] = {}

        async def sender():
            while True:
                await ws.send_text(await outbox.get())

        send_task = asyncio.create_task(sender())

        def attach(session_id: str) -> None:
            if session_id in attached:
                return
            try:
                engine = registry.get(session_id)
            except UnknownSession:
                return

            def push(method: str, params: dict) -> None:
                text = json.dumps(notification(method, params))
                loop.call_soon_threadsafe(outbox.put_nowait, text)

            engine.subscribe(push)
            attached[session_id] = (engine, push)

        try:
            while True:
                raw = await ws.receive_text()
                response, touched = dispatch_text(registry, raw)
                if touched is not None:
                    attach(touched)
                if response is not None:
                    outbox.put_nowait(json.dumps(response))
        except WebSocketDisconnect:
            pass
        finally:
            send_task.cancel()
            with contextlib.suppress(asyncio.CancelledError):
                await send_task
            for engine, push in attached.values():
                engine.unsubscribe(push)

    return app
