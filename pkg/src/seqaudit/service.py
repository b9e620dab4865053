"""Local HTTP service exposing calibration, evaluation, and live sessions.

Designs calibrate asynchronously (poll /designs/{id}/status); sessions are
append-only event logs folded through the procedure module, guarded by
optimistic sequence numbers. Restarting with the same state directory
restores every design and session exactly.
"""

from __future__ import annotations

import datetime
import json
import threading
import uuid
from dataclasses import dataclass, field
from pathlib import Path

from fastapi import FastAPI, HTTPException
from fastapi.responses import JSONResponse
from pydantic import BaseModel, Field

from . import calibration, data_io, evaluation, procedure
from .canonical import atomic_write_text, canonical_dumps

__all__ = ["create_app"]


class DesignRequest(BaseModel):
    n: int
    r: float
    theta_h: float
    theta_k: float
    alpha: float
    beta: float
    variant: str = "two_sided"
    t0: int = 1
    T: int | None = None
    m_reps: int = 10_000
    seed: int = 0
    backend: str = "monte_carlo"


class SessionRequest(BaseModel):
    design_id: str


class ObserveRequest(BaseModel):
    x: int
    expected_seq: int = Field(..., description="sequence number the client last saw")


class UndoRequest(BaseModel):
    expected_seq: int


@dataclass
class DesignRecord:
    design_id: str
    config: calibration.DesignConfig
    state: str = "pending"  # pending | ready | failed
    progress: float = 0.0
    schedule: calibration.BoundarySchedule | None = None
    error: str | None = None
    lock: threading.Lock = field(default_factory=threading.Lock)


@dataclass
class SessionRecord:
    session_id: str
    design_id: str
    session: procedure.SessionState
    seq: int = 0
    lock: threading.Lock = field(default_factory=threading.Lock)


class ServiceState:
    def __init__(self, state_dir: Path):
        self.state_dir = Path(state_dir)
        self.designs: dict[str, DesignRecord] = {}
        self.sessions: dict[str, SessionRecord] = {}
        self.registry_lock = threading.Lock()
        (self.state_dir / "designs").mkdir(parents=True, exist_ok=True)
        (self.state_dir / "sessions").mkdir(parents=True, exist_ok=True)

    # -- persistence ------------------------------------------------------

    def design_dir(self, design_id: str) -> Path:
        return self.state_dir / "designs" / design_id

    def session_dir(self, session_id: str) -> Path:
        return self.state_dir / "sessions" / session_id

    def restore(self) -> None:
        for ddir in sorted((self.state_dir / "designs").iterdir()):
            if not ddir.is_dir():
                continue
            config = data_io.load_config(ddir / "config.json")
            record = DesignRecord(design_id=ddir.name, config=config)
            schedule_path = ddir / "schedule.json"
            if schedule_path.exists():
                record.schedule = data_io.load_schedule(schedule_path)
                record.state = "ready"
                record.progress = 1.0
                self.designs[record.design_id] = record
            else:
                self.designs[record.design_id] = record
                self.start_calibration(record)
        for sdir in sorted((self.state_dir / "sessions").iterdir()):
            if not sdir.is_dir():
                continue
            meta = json.loads((sdir / "meta.json").read_text())
            design = self.designs.get(meta["design_id"])
            if design is None or design.schedule is None:
                continue
            session = procedure.new_session(design.schedule)
            seq = 0
            events_path = sdir / "events.jsonl"
            if events_path.exists():
                for line in events_path.read_text().splitlines():
                    event = json.loads(line)
                    if event["op"] == "observe":
                        session = procedure.observe(session, int(event["x"]))
                    elif event["op"] == "undo":
                        session = procedure.undo(session)
                    seq = event["seq"]
            self.sessions[sdir.name] = SessionRecord(
                session_id=sdir.name, design_id=meta["design_id"], session=session, seq=seq
            )

    def append_event(self, record: SessionRecord, event: dict) -> None:
        path = self.session_dir(record.session_id) / "events.jsonl"
        with open(path, "a", encoding="utf-8") as fh:
            fh.write(json.dumps(event, sort_keys=True) + "\n")

    # -- calibration ------------------------------------------------------

    def start_calibration(self, record: DesignRecord) -> None:
        def progress(done: int, total: int) -> None:
            record.progress = done / total if total else 1.0

        def work() -> None:
            record.state = "running"
            try:
                schedule = calibration.calibrate(record.config, progress=progress)
            except Exception as err:  # surfaced via /status
                record.state = "failed"
                record.error = str(err)
                return
            data_io.save_schedule(schedule, self.design_dir(record.design_id) / "schedule.json")
            record.schedule = schedule
            record.progress = 1.0
            record.state = "ready"

        threading.Thread(target=work, daemon=True).start()


def _design_view(record: DesignRecord) -> dict:
    doc = data_io.schedule_to_dict(record.schedule)
    doc["design_id"] = record.design_id
    return doc


def _session_view(state: ServiceState, record: SessionRecord) -> dict:
    session = record.session
    schedule = session.schedule
    stages = []
    s = 0
    for t, x in enumerate(session.history, start=1):
        s += x
        if t <= schedule.n - 1:
            low, high = schedule.stage_bounds(t)
        else:
            low, high = None, None
        stages.append({"t": t, "s": s, "lower": low, "upper": high})
    design = state.designs[record.design_id]
    return {
        "session_id": record.session_id,
        "design_id": record.design_id,
        "seq": record.seq,
        "t": session.t,
        "count": session.count,
        "p_hat": session.p_hat,
        "status": session.status,
        "decided_at": session.decided_at,
        "decision_source": session.decision_source,
        "stages": stages,
        "design": {
            "n": design.config.n,
            "r": design.config.r,
            "theta_h": design.config.theta_h,
            "theta_k": design.config.theta_k,
            "alpha": design.config.alpha,
            "beta": design.config.beta,
            "variant": design.config.variant,
            "min_stage": design.schedule.min_stage,
            "horizon": design.schedule.horizon,
        },
    }


def create_app(state_dir, ui_dir=None) -> FastAPI:
    state = ServiceState(Path(state_dir))
    state.restore()
    app = FastAPI(title="seqaudit service", version=data_io.TOOL_VERSION)
    app.state.service = state

    if ui_dir is not None:
        from fastapi.staticfiles import StaticFiles

        app.mount("/ui", StaticFiles(directory=ui_dir, html=True), name="ui")

    @app.post("/designs", status_code=202)
    def create_design(req: DesignRequest):
        try:
            config = data_io.config_from_dict(req.model_dump(exclude_none=True))
        except ValueError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        design_id = config.config_hash[:16]
        with state.registry_lock:
            existing = state.designs.get(design_id)
            if existing is None:
                record = DesignRecord(design_id=design_id, config=config)
                state.designs[design_id] = record
                ddir = state.design_dir(design_id)
                ddir.mkdir(parents=True, exist_ok=True)
                atomic_write_text(ddir / "config.json", canonical_dumps(config.to_dict()))
                state.start_calibration(record)
        return {"design_id": design_id}

    def _get_design(design_id: str) -> DesignRecord:
        record = state.designs.get(design_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown design {design_id!r}")
        return record

    @app.get("/designs/{design_id}/status")
    def design_status(design_id: str):
        record = _get_design(design_id)
        return {
            "design_id": design_id,
            "state": record.state,
            "progress": record.progress,
            "error": record.error,
        }

    @app.get("/designs/{design_id}")
    def design_detail(design_id: str):
        record = _get_design(design_id)
        if record.state in ("pending", "running"):
            return JSONResponse(
                status_code=202,
                content={"design_id": design_id, "state": record.state, "progress": record.progress},
            )
        if record.state == "failed":
            raise HTTPException(status_code=422, detail=record.error or "calibration failed")
        return _design_view(record)

    @app.get("/designs/{design_id}/oc")
    def design_oc(design_id: str, reps: int = 2000, seed: int = 1, grid: str = "all"):
        record = _get_design(design_id)
        if record.schedule is None:
            raise HTTPException(status_code=409, detail="design not ready")
        from .cli import CliError, parse_grid

        try:
            counts = parse_grid(grid, record.config.n)
        except CliError as err:
            raise HTTPException(status_code=422, detail=str(err)) from None
        points = evaluation.oc_curve(record.schedule, counts, reps, seed)
        return {
            "design_id": design_id,
            "reps": reps,
            "seed": seed,
            "points": [
                {
                    "m": pt.m,
                    "p": pt.p,
                    "accept_k_prob": pt.accept_k_prob,
                    "error_prob": pt.error_prob,
                    "expected_tau": pt.expected_tau,
                    "se_accept_k": pt.se_accept_k,
                    "se_error": pt.se_error,
                    "se_tau": pt.se_tau,
                    "region": pt.region,
                }
                for pt in points
            ],
        }

    @app.post("/sessions", status_code=201)
    def create_session(req: SessionRequest):
        record = _get_design(req.design_id)
        if record.schedule is None:
            raise HTTPException(status_code=409, detail="design not ready; poll its status first")
        session_id = uuid.uuid4().hex[:16]
        srecord = SessionRecord(
            session_id=session_id,
            design_id=req.design_id,
            session=procedure.new_session(record.schedule),
        )
        with state.registry_lock:
            state.sessions[session_id] = srecord
        sdir = state.session_dir(session_id)
        sdir.mkdir(parents=True, exist_ok=True)
        created_at = datetime.datetime.now(datetime.timezone.utc).isoformat()
        atomic_write_text(
            sdir / "meta.json",
            canonical_dumps({"design_id": req.design_id, "created_at": created_at}),
        )
        return _session_view(state, srecord)

    def _get_session(session_id: str) -> SessionRecord:
        record = state.sessions.get(session_id)
        if record is None:
            raise HTTPException(status_code=404, detail=f"unknown session {session_id!r}")
        return record

    @app.get("/sessions/{session_id}")
    def session_detail(session_id: str):
        return _session_view(state, _get_session(session_id))

    @app.post("/sessions/{session_id}/observe")
    def session_observe(session_id: str, req: ObserveRequest):
        record = _get_session(session_id)
        with record.lock:
            if req.expected_seq != record.seq:
                return JSONResponse(status_code=409, content=_session_view(state, record))
            try:
                record.session = procedure.observe(record.session, req.x)
            except procedure.SessionDecidedError as err:
                raise HTTPException(status_code=422, detail=f"session decided: {err}") from None
            except ValueError as err:
                raise HTTPException(status_code=422, detail=str(err)) from None
            record.seq += 1
            state.append_event(record, {"seq": record.seq, "op": "observe", "x": int(req.x)})
            return _session_view(state, record)

    @app.post("/sessions/{session_id}/undo")
    def session_undo(session_id: str, req: UndoRequest):
        record = _get_session(session_id)
        with record.lock:
            if req.expected_seq != record.seq:
                return JSONResponse(status_code=409, content=_session_view(state, record))
            try:
                record.session = procedure.undo(record.session)
            except ValueError as err:
                raise HTTPException(status_code=422, detail=str(err)) from None
            record.seq += 1
            state.append_event(record, {"seq": record.seq, "op": "undo"})
            return _session_view(state, record)

    @app.get("/sessions/{session_id}/export")
    def session_export(session_id: str):
        record = _get_session(session_id)
        return json.loads(canonical_dumps(data_io.session_to_dict(record.session)))

    return app
