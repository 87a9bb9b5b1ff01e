"""Session registry with JSON snapshot persistence, and the background-job
runner used for graph learning and model training."""
from __future__ import annotations

import itertools
import json
import threading
import uuid
from pathlib import Path

from .config import EngineConfig
from .data import load_csv, synth_loans
from .errors import NotFoundError
from .expr import CustomMetricDef
from .session import Session
from .subgroups import Combination


class SessionStore:
    """In-memory sessions keyed by id; every mutation is snapshotted to
    data_dir so flags survive restarts. Uploaded CSVs are kept alongside."""

    def __init__(self, config: EngineConfig | None = None):
        self.config = config or EngineConfig()
        self._sessions: dict[str, Session] = {}
        self._lock = threading.Lock()
        self.root = Path(self.config.data_dir) / "sessions"

    def create(self, role: str) -> Session:
        session = Session(uuid.uuid4().hex[:12], role, self.config)
        with self._lock:
            self._sessions[session.id] = session
        return session

    def get(self, session_id: str) -> Session:
        try:
            return self._sessions[session_id]
        except KeyError:
            raise NotFoundError(f"unknown session {session_id!r}") from None

    def ids(self):
        return sorted(self._sessions)

    # -- persistence ---------------------------------------------------------

    def _dir(self, session: Session) -> Path:
        return self.root / session.id

    def persist(self, session: Session):
        folder = self._dir(session)
        folder.mkdir(parents=True, exist_ok=True)
        snapshot = session.snapshot()
        if session.dataset_source and "csv" in session.dataset_source:
            # uploaded data cannot be regenerated: keep its bytes
            from .data import export_csv
            csv_path = folder / "dataset.csv"
            if not csv_path.exists():
                csv_path.write_bytes(export_csv(session.table))
            snapshot["dataset_file"] = "dataset.csv"
        (folder / "session.json").write_text(
            json.dumps(snapshot, sort_keys=True, indent=2) + "\n")

    def restore_all(self):
        """Load every persisted session from disk (engine caches rebuild on
        demand)."""
        if not self.root.exists():
            return
        for folder in sorted(self.root.iterdir()):
            snapshot_file = folder / "session.json"
            if snapshot_file.is_file():
                session = self._restore(json.loads(snapshot_file.read_text()),
                                        folder)
                with self._lock:
                    self._sessions[session.id] = session

    def _restore(self, snap: dict, folder: Path) -> Session:
        session = Session(snap["id"], snap["role"], self.config)
        source = snap.get("dataset_source")
        if source:
            if "synth" in source:
                session.table = synth_loans(source["synth"]["seed"],
                                            source["synth"]["rows"])
            else:
                session.table = load_csv((folder / snap["dataset_file"]).read_bytes(),
                                         self.config.kind_threshold)
            session.dataset_source = source
            if snap.get("target"):
                base = session.table
                from .data import DataTable
                base = DataTable(base.schema, base.columns, base.n_rows)
                session.table = base.with_target(snap["target"],
                                                 snap["positive_label"])
        for c in snap.get("custom_metrics", []):
            definition = CustomMetricDef(c["name"], c["source_text"])
            from .expr import evaluate_column
            cells, _ = evaluate_column(definition.ast(), session.table,
                                       self.config.k_max)
            session.table = session.table.with_derived_column(c["name"], cells)
            session.custom_metrics.append(definition)
        session.model_config = snap.get("model_config")
        session.sensitive = snap.get("sensitive", {})
        session.chosen_metrics = snap.get("chosen_metrics", [])
        session.unfair_features = set(snap.get("unfair_features", []))
        session.unfair_subgroups = set(snap.get("unfair_subgroups", []))
        for card in snap.get("combinations", []):
            combo = Combination(tuple((c["feature"], c["value"])
                                      for c in card["constraints"]),
                                self.config.max_constraints)
            session.combinations[combo.id] = combo
        session.selected_application = snap.get("selected_application")
        session.split_seed = snap.get("split_seed")
        session._done_steps = set(snap.get("done_steps", []))
        session.version = snap.get("version", 0)
        return session


class Job:
    _counter = itertools.count(1)

    def __init__(self, kind: str):
        self.id = f"job-{next(Job._counter)}"
        self.kind = kind
        self.status = "queued"
        self.error: str | None = None

    def to_json(self) -> dict:
        return {"id": self.id, "kind": self.kind, "status": self.status,
                "error": self.error}


class JobRunner:
    """One worker thread per job; results are installed by the job function
    itself (sessions serialize their own mutations)."""

    def __init__(self):
        self._jobs: dict[str, Job] = {}
        self._lock = threading.Lock()

    def submit(self, kind: str, fn) -> Job:
        job = Job(kind)
        with self._lock:
            self._jobs[job.id] = job

        def run():
            job.status = "running"
            try:
                fn()
                job.status = "done"
            except Exception as exc:  # surfaced via the status endpoint
                job.status = "error"
                job.error = str(exc)

        thread = threading.Thread(target=run, daemon=True)
        thread.start()
        job._thread = thread
        return job

    def get(self, job_id: str) -> Job:
        try:
            return self._jobs[job_id]
        except KeyError:
            raise NotFoundError(f"unknown job {job_id!r}") from None

    def wait(self, job_id: str, timeout: float = 300.0):
        job = self.get(job_id)
        thread = getattr(job, "_thread", None)
        if thread is not None:
            thread.join(timeout)
        return job
