"""HTTP face of the runtime: runs, failures, tips, freeze control.

All state lives in the backing stores (run directories, the failure queue
document, the knowledge base document). The service keeps only open handles,
so everything readable through the API is equally readable straight off disk,
and mutations land in the same files the library writes.
"""

from __future__ import annotations

import hmac
import json
import os
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Callable, Optional, Union

from fastapi import Depends, FastAPI, Header, Query, Response
from fastapi.encoders import jsonable_encoder
from fastapi.exceptions import RequestValidationError
from fastapi.middleware.cors import CORSMiddleware
from fastapi.responses import JSONResponse
from fastapi.routing import APIRouter

from .. import DATA_DIR, __version__
from ..akb.store import KnowledgeBase, TipNotFound
from ..akb.tips import DuplicateId, Frozen, InvalidTip, KnowledgeTip
from ..env.mock import MockSite
from ..llm.gateway import ENV_URL, gateway_from_env
from ..llm.stub import stub_from_file
from ..model import META_FILENAME, RUNNING, SCREENSHOT_DIRNAME, TRAJECTORY_FILENAME, RunConfig
from ..orchestrator import load_suite, run_task
from ..queue import EntryNotFound, FailureQueue, QueueUnavailable
from .schemas import (
    EventsPage,
    FreezeOut,
    HealthOut,
    LaunchAccepted,
    LaunchRequest,
    ResolveRequest,
    RunSummary,
    StatsOut,
    TipIn,
)

TOKEN_HEADER = "X-Auth-Token"


class BindFailure(Exception):
    """The configured listen address cannot be bound."""


class ApiError(Exception):
    """Carries the uniform error body: code, message, optional detail."""

    def __init__(self, status: int, code: str, message: str, detail=None):
        super().__init__(message)
        self.status = status
        self.code = code
        self.message = message
        self.detail = detail


def _store_error(exc: Exception) -> ApiError:
    if isinstance(exc, Frozen):
        return ApiError(409, "frozen", str(exc))
    if isinstance(exc, DuplicateId):
        return ApiError(409, "duplicate_id", f"tip {exc} already exists")
    if isinstance(exc, InvalidTip):
        return ApiError(422, "invalid_tip", str(exc))
    if isinstance(exc, TipNotFound):
        return ApiError(404, "not_found", f"no tip {exc}")
    if isinstance(exc, EntryNotFound):
        return ApiError(404, "not_found", f"no failure entry {exc}")
    if isinstance(exc, QueueUnavailable):
        return ApiError(503, "store_unavailable", str(exc))
    raise exc


@dataclass
class ServiceConfig:
    akb_path: Union[str, Path]
    queue_path: Union[str, Path]
    runs_root: Union[str, Path]
    suite_dir: Optional[Union[str, Path]] = None
    token: Optional[str] = None
    stub_rules: Optional[Union[str, Path]] = None
    client_factory: Optional[Callable[[], object]] = None
    semantic: Optional[Callable] = None


def create_app(cfg: ServiceConfig) -> FastAPI:
    kb = KnowledgeBase.load(cfg.akb_path)
    queue = FailureQueue(cfg.queue_path)
    runs_root = Path(cfg.runs_root)
    runs_root.mkdir(parents=True, exist_ok=True)
    suite_dir = Path(cfg.suite_dir) if cfg.suite_dir else DATA_DIR / "suite"

    tasks: dict[str, dict] = {}
    if (suite_dir / "suite.json").exists():
        tasks = {t["goal"].id: t for t in load_suite(suite_dir)["tasks"]}

    def make_client():
        if cfg.client_factory is not None:
            return cfg.client_factory()
        if cfg.stub_rules is not None:
            return stub_from_file(cfg.stub_rules)
        if os.environ.get(ENV_URL):
            return gateway_from_env()
        packaged = suite_dir / "stub_rules.json"
        if packaged.exists():
            return stub_from_file(packaged)
        raise ApiError(503, "model_unavailable", "no model endpoint or scripted rules configured")

    launch_lock = threading.Lock()

    def alloc_run_dir(base: str) -> tuple[str, Path]:
        with launch_lock:
            run_id, i = base, 2
            while (runs_root / run_id).exists():
                run_id = f"{base}-{i}"
                i += 1
            (runs_root / run_id).mkdir(parents=True)
            return run_id, runs_root / run_id

    # -- run directory reads ---------------------------------------------------

    def read_meta(run_dir: Path) -> dict:
        p = run_dir / META_FILENAME
        if not p.exists():
            return {}
        return json.loads(p.read_text(encoding="utf-8"))

    def read_events(run_dir: Path) -> list[dict]:
        p = run_dir / TRAJECTORY_FILENAME
        if not p.exists():
            return []
        out = []
        with open(p, encoding="utf-8") as fh:
            for line in fh:
                line = line.strip()
                if line:
                    out.append(json.loads(line))
        return out

    def run_summary(run_dir: Path) -> RunSummary:
        meta = read_meta(run_dir)
        if meta:
            return RunSummary(
                run_id=meta.get("run_id", run_dir.name),
                goal_id=meta.get("goal", {}).get("id", ""),
                status=meta.get("status", RUNNING),
                mode=meta.get("mode", ""),
                steps=meta.get("steps", 0),
                answer=meta.get("answer"),
            )
        # meta is written at completion; a bare trajectory means the run is live
        steps = sum(1 for ev in read_events(run_dir) if ev.get("phase") == "act")
        return RunSummary(run_id=run_dir.name, status=RUNNING, steps=steps)

    def require_run_dir(run_id: str) -> Path:
        run_dir = runs_root / run_id
        if "/" in run_id or "\\" in run_id or not run_dir.is_dir():
            raise ApiError(404, "not_found", f"no run {run_id}")
        return run_dir

    # -- app wiring ------------------------------------------------------------

    app = FastAPI(title="sitewise", version=__version__)
    app.state.kb = kb
    app.state.queue = queue
    app.state.config = cfg

    # auth is a bearer-style header, not cookies, so a wildcard origin is safe;
    # browser front ends run on their own origin and need the preflight answered
    app.add_middleware(
        CORSMiddleware,
        allow_origins=["*"],
        allow_methods=["*"],
        allow_headers=["*"],
    )

    @app.exception_handler(ApiError)
    async def _api_error(request, exc: ApiError):
        body = {"code": exc.code, "message": exc.message, "detail": exc.detail}
        return JSONResponse(status_code=exc.status, content=body)

    @app.exception_handler(RequestValidationError)
    async def _validation_error(request, exc: RequestValidationError):
        body = {
            "code": "validation_error",
            "message": "request validation failed",
            "detail": jsonable_encoder(exc.errors(), custom_encoder={Exception: str}),
        }
        return JSONResponse(status_code=422, content=body)

    @app.get("/health", response_model=HealthOut)
    async def health():
        return HealthOut(version=__version__)

    async def require_token(x_auth_token: Optional[str] = Header(None)):
        if cfg.token is None:
            return
        if x_auth_token is None or not hmac.compare_digest(x_auth_token, cfg.token):
            raise ApiError(401, "unauthorized", f"missing or invalid {TOKEN_HEADER} header")

    api = APIRouter(dependencies=[Depends(require_token)])

    # -- runs ------------------------------------------------------------------

    @api.get("/runs", response_model=list[RunSummary])
    async def list_runs():
        dirs = sorted(p for p in runs_root.iterdir() if p.is_dir() and (p / TRAJECTORY_FILENAME).exists())
        return [run_summary(d) for d in dirs]

    @api.get("/runs/{run_id}")
    async def get_run(run_id: str):
        run_dir = require_run_dir(run_id)
        meta = read_meta(run_dir)
        if meta:
            return meta
        return run_summary(run_dir).model_dump()

    @api.get("/runs/{run_id}/events", response_model=EventsPage)
    async def get_events(
        run_id: str,
        from_: int = Query(0, alias="from", ge=0),
        limit: int = Query(200, ge=1, le=1000),
    ):
        run_dir = require_run_dir(run_id)
        events = read_events(run_dir)
        page = events[from_ : from_ + limit]
        meta = read_meta(run_dir)
        return EventsPage(
            run_id=run_id,
            status=meta.get("status", RUNNING),
            next=from_ + len(page),
            total=len(events),
            events=page,
        )

    @api.get("/runs/{run_id}/screenshots/{shot_hash}")
    async def get_screenshot(run_id: str, shot_hash: str):
        run_dir = require_run_dir(run_id)
        if not all(c in "0123456789abcdef" for c in shot_hash):
            raise ApiError(404, "not_found", "no such screenshot")
        path = run_dir / SCREENSHOT_DIRNAME / f"{shot_hash}.png"
        if not path.exists():
            raise ApiError(404, "not_found", "no such screenshot")
        return Response(content=path.read_bytes(), media_type="image/png")

    @api.post("/runs", status_code=201)
    async def launch_run(body: LaunchRequest):
        task = tasks.get(body.task_id)
        if task is None:
            raise ApiError(404, "not_found", f"no task {body.task_id}")
        try:
            run_cfg = RunConfig(
                max_steps=body.max_steps if body.max_steps is not None else 30,
                ablation_mode=body.mode,
                akb_path=str(cfg.akb_path),
            )
        except ValueError as exc:
            raise ApiError(422, "invalid_mode", str(exc))
        client = make_client()
        run_id, run_dir = alloc_run_dir(f"{body.task_id}-{body.mode}")
        goal = task["goal"]

        def execute() -> dict:
            site = MockSite(task["spec"])
            result = run_task(
                goal, site, kb, run_cfg, client,
                semantic=cfg.semantic, record_dir=run_dir, run_id=run_id,
            )
            if result.verdict is not None:
                queue.enqueue(run_id, goal.id, result.verdict, run_dir=str(run_dir), answer=result.answer)
            return result.meta(goal, run_cfg)

        if body.wait:
            return execute()
        threading.Thread(target=execute, daemon=True).start()
        return JSONResponse(status_code=202, content=LaunchAccepted(run_id=run_id).model_dump())

    # -- failures --------------------------------------------------------------

    @api.get("/failures")
    async def list_failures(status: Optional[str] = Query(None, pattern="^(open|resolved)$")):
        try:
            return queue.list(status=status)
        except QueueUnavailable as exc:
            raise _store_error(exc)

    @api.get("/failures/{entry_id}")
    async def get_failure(entry_id: str):
        try:
            return queue.get(entry_id)
        except (EntryNotFound, QueueUnavailable) as exc:
            raise _store_error(exc)

    @api.post("/failures/{entry_id}/resolve")
    async def resolve_failure(entry_id: str, body: ResolveRequest):
        try:
            return queue.resolve(entry_id, tip_id=body.tip_id, note=body.note)
        except (EntryNotFound, QueueUnavailable) as exc:
            raise _store_error(exc)

    # -- tips ------------------------------------------------------------------

    @api.get("/tips")
    async def list_tips():
        return [kb.tips[tid].to_dict() for tid in sorted(kb.tips)]

    @api.get("/tips/{tip_id}")
    async def get_tip(tip_id: str):
        tip = kb.tips.get(tip_id)
        if tip is None:
            raise ApiError(404, "not_found", f"no tip {tip_id}")
        return tip.to_dict()

    @api.post("/tips", status_code=201)
    async def create_tip(body: TipIn):
        tip = KnowledgeTip.from_dict(body.to_doc())
        try:
            kb.add_tip(tip)
        except (Frozen, DuplicateId, InvalidTip) as exc:
            raise _store_error(exc)
        return tip.to_dict()

    @api.put("/tips/{tip_id}")
    async def update_tip(tip_id: str, body: TipIn):
        if body.id != tip_id:
            raise ApiError(422, "invalid_tip", f"body id {body.id!r} does not match path id {tip_id!r}")
        tip = KnowledgeTip.from_dict(body.to_doc())
        try:
            kb.update_tip(tip)
        except (Frozen, InvalidTip, TipNotFound) as exc:
            raise _store_error(exc)
        return tip.to_dict()

    @api.delete("/tips/{tip_id}", status_code=204)
    async def delete_tip(tip_id: str):
        try:
            kb.delete_tip(tip_id)
        except (Frozen, TipNotFound) as exc:
            raise _store_error(exc)
        return Response(status_code=204)

    # -- knowledge base controls ----------------------------------------------

    @api.post("/akb/freeze", response_model=FreezeOut)
    async def freeze():
        kb.freeze()
        return FreezeOut(frozen=True, tips=len(kb))

    @api.get("/akb/stats", response_model=StatsOut)
    async def stats():
        return StatsOut(frozen=kb.frozen, tips=len(kb), domains=kb.domain_counts())

    app.include_router(api)
    return app
