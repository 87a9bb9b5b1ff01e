"""JSON-over-HTTP API binding the engine for the interactive UI."""
from __future__ import annotations

import json
from pathlib import Path

from fastapi import Body, FastAPI, Query, Request
from fastapi.responses import FileResponse, JSONResponse, PlainTextResponse

from .config import EngineConfig
from .errors import (
    FairdeskError,
    NotFoundError,
    StateError,
    ValidationError,
)
from .expr import ExprSyntaxError
from .report import build_report, render_text
from .store import JobRunner, SessionStore

API = "/api/v1"


def error_response(status: int, exc: FairdeskError, detail=None):
    return JSONResponse(
        status_code=status,
        content={"code": exc.code, "message": str(exc), "detail": detail})


def create_app(config: EngineConfig | None = None,
               store: SessionStore | None = None) -> FastAPI:
    config = config or EngineConfig()
    store = store or SessionStore(config)
    jobs = JobRunner()
    app = FastAPI(title="fairdesk", version="0.1.0")
    app.state.store = store
    app.state.jobs = jobs

    @app.exception_handler(FairdeskError)
    async def handle_engine_error(_request: Request, exc: FairdeskError):
        if isinstance(exc, ExprSyntaxError):
            return error_response(400, exc, {
                "offset": exc.offset, "expected": sorted(exc.expected)})
        if isinstance(exc, NotFoundError):
            return error_response(404, exc)
        if isinstance(exc, StateError):
            return error_response(409, exc)
        if isinstance(exc, ValidationError):
            return error_response(400, exc)
        return error_response(500, exc)

    def versioned(session, payload=None):
        body = {"session": session.id, "version": session.version}
        if payload:
            body.update(payload)
        return body

    # -- wizard ------------------------------------------------------------

    @app.post(API + "/sessions")
    def create_session(body: dict = Body(...)):
        session = store.create(body.get("role", "data_scientist"))
        store.persist(session)
        return versioned(session, {"role": session.role,
                                   "steps": session.steps()})

    @app.get(API + "/sessions/{sid}/wizard")
    def wizard_status(sid: str):
        session = store.get(sid)
        return versioned(session, {"role": session.role, "ready": session.ready,
                                   "steps": session.steps()})

    @app.put(API + "/sessions/{sid}/dataset")
    def set_dataset(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.set_dataset(synth=body.get("synth"), csv_text=body.get("csv"))
        store.persist(session)
        return versioned(session, {"steps": session.steps(),
                                   "overview_columns": len(session.table.schema),
                                   "rows": session.table.n_rows})

    @app.put(API + "/sessions/{sid}/target")
    def set_target(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.set_target(body["feature"], body["positive_label"])
        store.persist(session)
        return versioned(session, {"steps": session.steps()})

    @app.put(API + "/sessions/{sid}/model")
    def set_model(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.set_model(body.get("family", "logistic"), body.get("l2"))
        store.persist(session)
        return versioned(session, {"steps": session.steps()})

    @app.put(API + "/sessions/{sid}/sensitive")
    def set_sensitive(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.set_sensitive(body.get("features", {}))
        store.persist(session)
        return versioned(session, {"steps": session.steps()})

    @app.put(API + "/sessions/{sid}/metrics")
    def set_metrics(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.set_metrics(body.get("kinds", []))
        store.persist(session)
        return versioned(session, {"steps": session.steps()})

    # -- long computations as jobs ------------------------------------------

    @app.post(API + "/sessions/{sid}/graph/compute")
    def compute_graph(sid: str):
        session = store.get(sid)
        session._require_ready()
        job = jobs.submit("graph", session.compute_graph)
        return {"job": job.to_json()}

    @app.post(API + "/sessions/{sid}/model/train")
    def train_model(sid: str, body: dict = Body(default={})):
        session = store.get(sid)
        session._require_ready()
        seed = int(body.get("seed", 0))
        job = jobs.submit("train", lambda: session.train_model(seed))
        return {"job": job.to_json()}

    @app.get(API + "/jobs/{job_id}")
    def job_status(job_id: str):
        return {"job": jobs.get(job_id).to_json()}

    # -- reads ---------------------------------------------------------------

    @app.get(API + "/sessions/{sid}/overview")
    def overview(sid: str, view: str = "dataset"):
        return store.get(sid).overview(view)

    @app.get(API + "/sessions/{sid}/graph")
    def graph(sid: str, view: str = "dataset", drill: str | None = None):
        keep = None if drill is None else [f for f in drill.split(",") if f]
        return store.get(sid).graph_payload(view, keep)

    @app.get(API + "/sessions/{sid}/features/{feature}")
    def feature_info(sid: str, feature: str, view: str = "dataset"):
        return store.get(sid).feature_info(feature, view)

    @app.get(API + "/sessions/{sid}/relationship")
    def relationship(sid: str, src: str, dst: str, view: str = "dataset"):
        return store.get(sid).relationship_info(src, dst, view)

    @app.get(API + "/sessions/{sid}/combinations")
    def combinations(sid: str, view: str = "dataset"):
        session = store.get(sid)
        session._require_ready()
        return versioned(session, {"view": view,
                                   "cards": session.combination_cards(view)})

    @app.get(API + "/sessions/{sid}/dataset")
    def dataset_page(sid: str, view: str = "dataset",
                     filters: str | None = None,
                     sort: str | None = None,
                     dir: str = "asc",
                     page: int = Query(0, ge=0),
                     page_size: int = Query(25, ge=1, le=200)):
        parsed = []
        if filters:
            try:
                raw = json.loads(filters)
            except json.JSONDecodeError as exc:
                raise ValidationError(f"filters must be JSON: {exc}") from None
            for item in raw:
                parsed.append((item["feature"], item["value"]))
        return store.get(sid).dataset_page(view, parsed, sort, dir == "desc",
                                           page, page_size)

    @app.get(API + "/sessions/{sid}/applications/{row}")
    def application(sid: str, row: int, view: str = "dataset"):
        return store.get(sid).application_detail(row, view)

    @app.get(API + "/sessions/{sid}/scatter")
    def scatter_endpoint(sid: str, selected: int | None = None,
                         view: str = "dataset"):
        return store.get(sid).scatter_payload(selected, view)

    @app.get(API + "/sessions/{sid}/compare")
    def compare(sid: str, a: int, b: int):
        return store.get(sid).compare_payload(a, b)

    @app.get(API + "/sessions/{sid}/report")
    def report(sid: str, format: str = "json"):
        session = store.get(sid)
        document = build_report(session)
        if format == "text":
            return PlainTextResponse(render_text(document))
        return JSONResponse(content=json.loads(json.dumps(document, sort_keys=True)))

    # -- mutations -------------------------------------------------------------

    @app.post(API + "/sessions/{sid}/sensitive/toggle")
    def toggle_sensitive(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.toggle_sensitive(body["feature"], bool(body["value"]))
        store.persist(session)
        return versioned(session, {"sensitive": sorted(session.sensitive)})

    @app.post(API + "/sessions/{sid}/flags")
    def flag_unfair(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.flag_unfair(body["kind"], body["id"], bool(body["unfair"]))
        store.persist(session)
        return versioned(session, {
            "features": sorted(session.unfair_features),
            "subgroups": sorted(session.unfair_subgroups)})

    @app.post(API + "/sessions/{sid}/combinations")
    def add_combination(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        combo = session.add_combination(
            [(c["feature"], c["value"]) for c in body.get("constraints", [])])
        store.persist(session)
        return versioned(session, {"id": combo.id})

    @app.delete(API + "/sessions/{sid}/combinations/{combo_id}")
    def remove_combination(sid: str, combo_id: str):
        session = store.get(sid)
        session.remove_combination(combo_id)
        store.persist(session)
        return versioned(session)

    @app.post(API + "/sessions/{sid}/metrics/custom")
    def add_custom_metric(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        definition = session.add_custom_metric(body["name"], body["source_text"])
        store.persist(session)
        return versioned(session, {"custom_metric": definition.to_json()})

    @app.post(API + "/sessions/{sid}/select")
    def select_application(sid: str, body: dict = Body(...)):
        session = store.get(sid)
        session.select_application(int(body["row"]))
        store.persist(session)
        return versioned(session, {"selected": session.selected_application})

    _mount_ui(app)
    return app


def _mount_ui(app: FastAPI):
    """Serve the built front end when a frontend/ checkout sits next to the
    package or the working directory; API-only deployments just skip this."""
    for base in (Path.cwd() / "frontend",
                 Path(__file__).resolve().parent.parent.parent / "frontend"):
        if (base / "dist").is_dir() and (base / "index.html").is_file():
            from fastapi.staticfiles import StaticFiles

            @app.get("/")
            def index():
                return FileResponse(base / "index.html")

            @app.get("/style.css")
            def style():
                return FileResponse(base / "style.css")

            app.mount("/dist", StaticFiles(directory=base / "dist"), name="ui")
            break


def main(config_path: str | None = None):
    import uvicorn

    from .config import load_config

    config = load_config(config_path)
    store = SessionStore(config)
    store.restore_all()
    app = create_app(config, store)
    uvicorn.run(app, host="127.0.0.1", port=config.port)
