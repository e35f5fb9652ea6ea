"""HTTP service: project persistence, background jobs, exploration views.

Every project is a directory of files (no database): the ingested graph
payload, the model checkpoint, predictions, mined paths, summaries, and
enrichment results, plus one JSON record per job. Jobs for the same project
run one at a time; jobs across projects run concurrently. A restart marks
any queued or running job as failed and leaves all artifacts readable.
"""

from __future__ import annotations

import json
import logging
import re
import threading
import uuid
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Dict, List, Optional

from fastapi import Body, FastAPI, HTTPException, Query

from . import artifacts, graph as graphmod, pipeline
from .errors import CrosstrajError, NotFoundError, StateError, ValidationError

logger = logging.getLogger(__name__)

JOB_KINDS = ("train", "predict", "summarize", "enrich")
STAGE_ORDER = ("ingested", "trained", "predicted", "summarized")
_PREREQ = {"train": "ingested", "predict": "trained", "summarize": "predicted", "enrich": "summarized"}

GRAPH_FILE = "graph.json"
MODEL_FILE = "model.ckpt"
REPORT_FILE = "train_report.json"
PREDICTIONS_FILE = "predictions.json"
PATHS_FILE = "paths.json"
SELECTED_FILE = "selected_paths.json"
SUMMARIES_FILE = "summaries.json"


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _safe_name(text: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.>-]", "_", text)


@dataclass
class Job:
    job_id: str
    project_id: str
    kind: str
    params: dict
    status: str = "queued"  # queued | running | done | failed
    progress: float = 0.0
    result: Optional[dict] = None
    error: Optional[str] = None
    created_at: str = field(default_factory=_now)
    updated_at: str = field(default_factory=_now)

    def to_dict(self) -> dict:
        return asdict(self)


class ProjectStore:
    """File-backed projects under <root>/projects/<project_id>/."""

    def __init__(self, root: str | Path):
        self.root = Path(root)
        (self.root / "projects").mkdir(parents=True, exist_ok=True)
        self._locks: Dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def lock(self, project_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(project_id, threading.Lock())

    def project_dir(self, project_id: str) -> Path:
        return self.root / "projects" / project_id

    def list_ids(self) -> List[str]:
        return sorted(p.name for p in (self.root / "projects").iterdir() if p.is_dir())

    def create(self, dataset_root: str, params: Optional[dict] = None) -> dict:
        params = params or {}
        project_id = uuid.uuid4().hex[:12]
        pdir = self.project_dir(project_id)
        pdir.mkdir(parents=True)
        (pdir / "jobs").mkdir()
        try:
            ingest_info = pipeline.run_ingest(
                dataset_root,
                pdir / GRAPH_FILE,
                embeddings_path=params.get("embeddings_path"),
            )
        except (CrosstrajError, OSError) as exc:
            record = {
                "project_id": project_id,
                "dataset_root": str(dataset_root),
                "created_at": _now(),
                "updated_at": _now(),
                "state": {k: False for k in STAGE_ORDER},
                "artifacts": {},
                "params": params,
                "error": str(exc),
            }
            self._write(project_id, record)
            raise ValidationError(f"dataset failed ingest validation: {exc}") from None
        record = {
            "project_id": project_id,
            "dataset_root": str(dataset_root),
            "created_at": _now(),
            "updated_at": _now(),
            "state": {"ingested": True, "trained": False, "predicted": False, "summarized": False},
            "artifacts": {"graph": GRAPH_FILE},
            "params": params,
            "ingest": ingest_info,
        }
        self._write(project_id, record)
        return record

    def get(self, project_id: str) -> dict:
        path = self.project_dir(project_id) / "project.json"
        if not path.exists():
            raise NotFoundError(f"unknown project {project_id!r}")
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)

    def _write(self, project_id: str, record: dict) -> None:
        record["updated_at"] = _now()
        path = self.project_dir(project_id) / "project.json"
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(record, fh, indent=2, sort_keys=True)
            fh.write("\n")
        tmp.replace(path)

    def update(self, project_id: str, **changes) -> dict:
        with self.lock(project_id):
            record = self.get(project_id)
            state = record["state"]
            for key, value in changes.pop("state", {}).items():
                if state.get(key) and not value:
                    raise StateError(f"pipeline state {key!r} cannot regress")
                state[key] = value
            record["artifacts"].update(changes.pop("artifacts", {}))
            record.update(changes)
            self._write(project_id, record)
            return record

    def artifact_path(self, project_id: str, name: str) -> Path:
        return self.project_dir(project_id) / name


class JobManager:
    def __init__(self, store: ProjectStore, max_workers: int = 4):
        self.store = store
        self.executor = ThreadPoolExecutor(max_workers=max_workers, thread_name_prefix="crosstraj-job")
        self._run_locks: Dict[str, threading.Lock] = {}
        self._run_locks_guard = threading.Lock()
        self.recover()

    def _run_lock(self, project_id: str) -> threading.Lock:
        """Serializes job execution per project; distinct from the store's
        write lock, which job runners take briefly when committing state."""
        with self._run_locks_guard:
            return self._run_locks.setdefault(project_id, threading.Lock())

    # -- persistence --------------------------------------------------------

    def _job_path(self, project_id: str, job_id: str) -> Path:
        return self.store.project_dir(project_id) / "jobs" / f"{job_id}.json"

    def _save(self, job: Job) -> None:
        job.updated_at = _now()
        path = self._job_path(job.project_id, job.job_id)
        tmp = path.with_suffix(".json.tmp")
        with open(tmp, "w", encoding="utf-8") as fh:
            json.dump(job.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")
        tmp.replace(path)

    def get(self, job_id: str) -> Job:
        for project_id in self.store.list_ids():
            path = self._job_path(project_id, job_id)
            if path.exists():
                with open(path, "r", encoding="utf-8") as fh:
                    return Job(**json.load(fh))
        raise NotFoundError(f"unknown job {job_id!r}")

    def recover(self) -> None:
        """Mark jobs interrupted by a crash or restart as failed."""
        for project_id in self.store.list_ids():
            jobs_dir = self.store.project_dir(project_id) / "jobs"
            if not jobs_dir.is_dir():
                continue
            for path in jobs_dir.glob("*.json"):
                with open(path, "r", encoding="utf-8") as fh:
                    job = Job(**json.load(fh))
                if job.status in ("queued", "running"):
                    job.status = "failed"
                    job.error = "interrupted by service restart"
                    self._save(job)

    # -- submission ---------------------------------------------------------

    def submit(self, project_id: str, kind: str, params: Optional[dict] = None) -> Job:
        if kind not in JOB_KINDS:
            raise ValidationError(f"unknown job kind {kind!r}; expected one of {JOB_KINDS}")
        record = self.store.get(project_id)
        prereq = _PREREQ[kind]
        if not record["state"].get(prereq):
            raise StateError(f"job {kind!r} requires pipeline stage {prereq!r} to be done")
        job = Job(job_id=uuid.uuid4().hex[:12], project_id=project_id, kind=kind, params=params or {})
        self._save(job)
        self.executor.submit(self._run, job)
        return job

    # -- execution ----------------------------------------------------------

    def _run(self, job: Job) -> None:
        with self._run_lock(job.project_id):
            job.status = "running"
            job.progress = 0.0
            self._save(job)
            try:
                runner = getattr(self, f"_run_{job.kind}")
                job.result = runner(job)
                job.progress = 1.0
                job.status = "done"
            except Exception as exc:  # noqa: BLE001 - job errors become records
                logger.exception("job %s (%s) failed", job.job_id, job.kind)
                job.status = "failed"
                job.error = str(exc)
            self._save(job)

    def _project_paths(self, job: Job) -> dict:
        pdir = self.store.project_dir(job.project_id)
        return {
            "graph": pdir / GRAPH_FILE,
            "model": pdir / MODEL_FILE,
            "report": pdir / REPORT_FILE,
            "predictions": pdir / PREDICTIONS_FILE,
            "paths": pdir / PATHS_FILE,
            "summaries": pdir / SUMMARIES_FILE,
        }

    def _run_train(self, job: Job) -> dict:
        record = self.store.get(job.project_id)
        paths = self._project_paths(job)
        params = dict(job.params)
        edges_path = params.pop("edges_path", None) or str(
            Path(record["dataset_root"]) / "edges.tsv"
        )

        def on_epoch(done: int, total: int) -> None:
            job.progress = min(0.99, done / total)
            self._save(job)

        result = pipeline.run_train(
            paths["graph"],
            edges_path,
            paths["model"],
            report_out=paths["report"],
            config_overrides=params.pop("config", None),
            ablation=params.pop("ablation", "none"),
            seed=int(params.pop("seed", 0)),
            progress=on_epoch,
        )
        self.store.update(
            job.project_id,
            state={"trained": True},
            artifacts={"model": MODEL_FILE, "train_report": REPORT_FILE},
        )
        return result

    def _run_predict(self, job: Job) -> dict:
        paths = self._project_paths(job)
        threshold = job.params.get("threshold")
        result = pipeline.run_predict(
            paths["graph"], paths["model"], paths["predictions"],
            threshold=float(threshold) if threshold is not None else None,
        )
        self.store.update(
            job.project_id, state={"predicted": True}, artifacts={"predictions": PREDICTIONS_FILE}
        )
        return result

    def _run_summarize(self, job: Job) -> dict:
        paths = self._project_paths(job)
        params = job.params
        mine = pipeline.run_paths(
            paths["graph"],
            paths["predictions"],
            paths["paths"],
            max_len=params.get("max_len"),
            top_fraction=float(params.get("top_fraction", artifacts.TOP_FRACTION)),
        )
        job.progress = 0.5
        self._save(job)
        summary = pipeline.run_summarize(
            paths["graph"],
            paths["paths"],
            paths["summaries"],
            core_type=params.get("core"),
            path_ids=params.get("ids"),
        )
        self.store.update(
            job.project_id,
            state={"summarized": True},
            artifacts={"paths": PATHS_FILE, "summaries": SUMMARIES_FILE},
            core=params.get("core"),
        )
        return {**mine, **summary}

    def _run_enrich(self, job: Job) -> dict:
        record = self.store.get(job.project_id)
        paths = self._project_paths(job)
        trajectory_id = job.params.get("trajectory_id")
        if not trajectory_id:
            raise ValidationError("enrich job needs params.trajectory_id")
        obo = job.params.get("obo_path") or record["params"].get("obo_path") or str(
            Path(record["dataset_root"]) / "terms.obo"
        )
        gaf = job.params.get("gaf_path") or record["params"].get("gaf_path") or str(
            Path(record["dataset_root"]) / "annotations.gaf"
        )
        out_dir = self.store.project_dir(job.project_id) / "enrichment"
        out_dir.mkdir(exist_ok=True)
        out = out_dir / f"{_safe_name(trajectory_id)}.json"
        return pipeline.run_enrich(
            paths["graph"], paths["paths"], trajectory_id, obo, gaf, out,
            alpha=float(job.params.get("alpha", 0.05)),
        )


# ---------------------------------------------------------------------------
# View helpers


def _require_stage(record: dict, stage: str) -> None:
    if not record["state"].get(stage):
        raise StateError(f"view requires pipeline stage {stage!r} to be done")


def _merged_edges(store: ProjectStore, project_id: str):
    payload = artifacts.read_graph(store.artifact_path(project_id, GRAPH_FILE))
    edges, _ = artifacts.read_predictions(store.artifact_path(project_id, PREDICTIONS_FILE))
    g = graphmod.build_global_graph(payload.nodes)
    kept, _ = graphmod.filter_edges(g, edges)
    g.instance_edges = kept
    return payload, g, graphmod.merge_edges(g, kept)


def _all_paths(store: ProjectStore, project_id: str):
    paths, top_ids = artifacts.read_paths(store.artifact_path(project_id, PATHS_FILE))
    selected_file = store.artifact_path(project_id, SELECTED_FILE)
    if selected_file.exists():
        selected, _ = artifacts.read_paths(selected_file)
        known = {p.path_id for p in paths}
        paths = paths + [p for p in selected if p.path_id not in known]
    return paths, top_ids


# ---------------------------------------------------------------------------
# App


def create_app(data_dir: str | Path, ui_dir: Optional[str] = None) -> FastAPI:
    store = ProjectStore(data_dir)
    manager = JobManager(store)
    app = FastAPI(title="crosstraj service", version="1")
    app.state.store = store
    app.state.jobs = manager

    def _http(exc: Exception) -> HTTPException:
        if isinstance(exc, NotFoundError):
            return HTTPException(status_code=404, detail=str(exc))
        if isinstance(exc, StateError):
            return HTTPException(status_code=409, detail=str(exc))
        if isinstance(exc, CrosstrajError):
            return HTTPException(status_code=422, detail=str(exc))
        raise exc

    @app.post("/api/projects", status_code=201)
    def create_project(body: dict = Body(...)):
        dataset_root = body.get("dataset_root")
        if not dataset_root:
            raise HTTPException(status_code=422, detail="body needs dataset_root")
        params = {k: v for k, v in body.items() if k != "dataset_root"}
        try:
            return store.create(dataset_root, params)
        except CrosstrajError as exc:
            raise _http(exc) from None

    @app.get("/api/projects/{project_id}")
    def get_project(project_id: str):
        try:
            return store.get(project_id)
        except CrosstrajError as exc:
            raise _http(exc) from None

    @app.post("/api/projects/{project_id}/jobs", status_code=202)
    def submit_job(project_id: str, body: dict = Body(...)):
        kind = body.get("kind")
        try:
            job = manager.submit(project_id, kind, body.get("params") or {})
        except CrosstrajError as exc:
            raise _http(exc) from None
        return job.to_dict()

    @app.get("/api/jobs/{job_id}")
    def get_job(job_id: str):
        try:
            return manager.get(job_id).to_dict()
        except CrosstrajError as exc:
            raise _http(exc) from None

    @app.get("/api/projects/{project_id}/views/cells")
    def cells_view(project_id: str):
        try:
            record = store.get(project_id)
            _require_stage(record, "ingested")
            payload = artifacts.read_graph(store.artifact_path(project_id, GRAPH_FILE))
        except CrosstrajError as exc:
            raise _http(exc) from None
        return {
            "project_id": project_id,
            "cell_counts": payload.cell_counts,
            "types": sorted({n.cell_type for n in payload.nodes}),
        }

    @app.get("/api/projects/{project_id}/views/path-tree")
    def path_tree_view(project_id: str, core: str = Query(...), min_freq: int = Query(0, ge=0)):
        try:
            record = store.get(project_id)
            _require_stage(record, "predicted")
            payload, g, merged = _merged_edges(store, project_id)
            tree = graphmod.bfs_hierarchy(merged, core, min_freq=min_freq, known_types=g.cell_types)
        except CrosstrajError as exc:
            raise _http(exc) from None
        nodes = sorted(
            tree.nodes, key=lambda n: (n.relation, n.distance, -n.path_count, n.cell_type)
        )
        return {
            "project_id": project_id,
            "root": tree.root,
            "min_freq": min_freq,
            "nodes": [
                {
                    "cell_type": n.cell_type,
                    "relation": n.relation,
                    "distance": n.distance,
                    "path_count": n.path_count,
                }
                for n in nodes
            ],
            "edges": [
                {"src_type": e.src_type, "dst_type": e.dst_type, "weight": e.weight}
                for e in tree.edges
            ],
        }

    @app.post("/api/projects/{project_id}/paths")
    def select_paths(project_id: str, body: dict = Body(...)):
        sequences = body.get("sequences")
        if not isinstance(sequences, list) or not sequences:
            raise HTTPException(status_code=422, detail="body needs a non-empty 'sequences' list")
        try:
            record = store.get(project_id)
            _require_stage(record, "predicted")
            payload, g, merged = _merged_edges(store, project_id)
        except CrosstrajError as exc:
            raise _http(exc) from None

        results = []
        accepted: List[graphmod.DevPath] = []
        for seq in sequences:
            try:
                ok, broken = graphmod.validate_path_selection(merged, seq)
            except CrosstrajError as exc:
                results.append({"sequence": seq, "accepted": False, "reason": str(exc)})
                continue
            if not ok:
                results.append(
                    {
                        "sequence": seq,
                        "accepted": False,
                        "reason": "no merged edge for pair",
                        "broken_pair": list(broken),
                    }
                )
                continue
            instances = graphmod.enumerate_instances(g, seq)
            if not instances:
                results.append(
                    {"sequence": seq, "accepted": False, "reason": "no trajectory instances"}
                )
                continue
            path = graphmod.DevPath(
                type_sequence=tuple(seq), frequency=len(instances), trajectories=instances
            )
            accepted.append(path)
            results.append(
                {"sequence": seq, "accepted": True, "path_id": path.path_id, "frequency": path.frequency}
            )

        if accepted:
            with store.lock(project_id):
                selected_file = store.artifact_path(project_id, SELECTED_FILE)
                if selected_file.exists():
                    existing, _ = artifacts.read_paths(selected_file)
                else:
                    existing = []
                known = {p.path_id for p in existing}
                merged_paths = existing + [p for p in accepted if p.path_id not in known]
                merged_paths.sort(key=lambda p: (-p.frequency, p.type_sequence))
                artifacts.write_paths(merged_paths, [], selected_file)
        return {"project_id": project_id, "results": results}

    @app.get("/api/projects/{project_id}/views/path-summary")
    def path_summary_view(
        project_id: str, ids: Optional[str] = Query(None), core: Optional[str] = Query(None)
    ):
        try:
            record = store.get(project_id)
            _require_stage(record, "summarized")
            payload = artifacts.read_graph(store.artifact_path(project_id, GRAPH_FILE))
            paths, top_ids = _all_paths(store, project_id)
            wanted = [p for p in ids.split(",") if p] if ids else list(top_ids)
            core_type = core if core is not None else record.get("core")
            stored = artifacts.read_summaries(store.artifact_path(project_id, SUMMARIES_FILE))
            by_id = {row["id"]: row for row in stored["paths"]}
            rows = []
            for pid in wanted:
                if pid in by_id and stored.get("core") == core_type:
                    rows.append(by_id[pid])
                else:
                    rows.append(
                        artifacts.summarize_path(
                            payload, artifacts.find_path(paths, pid), core_type
                        )
                    )
        except CrosstrajError as exc:
            raise _http(exc) from None
        return {"project_id": project_id, "core": core_type, "paths": rows}

    @app.get("/api/projects/{project_id}/views/trajectories")
    def trajectories_view(project_id: str, path: str = Query(...)):
        try:
            record = store.get(project_id)
            _require_stage(record, "summarized")
            payload = artifacts.read_graph(store.artifact_path(project_id, GRAPH_FILE))
            paths, _ = _all_paths(store, project_id)
            dev_path = artifacts.find_path(paths, path)
            rows = artifacts.build_trajectory_rows(payload, dev_path)
        except CrosstrajError as exc:
            raise _http(exc) from None
        return {"project_id": project_id, **rows}

    @app.post("/api/projects/{project_id}/enrich", status_code=202)
    def enrich_endpoint(project_id: str, body: dict = Body(...)):
        trajectory_id = body.get("trajectory_id")
        if not trajectory_id:
            raise HTTPException(status_code=422, detail="body needs trajectory_id")
        try:
            job = manager.submit(project_id, "enrich", {**body, "trajectory_id": trajectory_id})
        except CrosstrajError as exc:
            raise _http(exc) from None
        return job.to_dict()

    @app.get("/api/projects/{project_id}/views/enrichment")
    def enrichment_view(project_id: str, trajectory: str = Query(...)):
        try:
            record = store.get(project_id)
            _require_stage(record, "summarized")
            out = store.project_dir(project_id) / "enrichment" / f"{_safe_name(trajectory)}.json"
            if not out.exists():
                raise NotFoundError(f"no enrichment computed for {trajectory!r}")
            payload = artifacts.read_enrichment(out)
        except CrosstrajError as exc:
            raise _http(exc) from None
        return {"project_id": project_id, **payload}

    if ui_dir:
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=ui_dir, html=True), name="ui")

    return app
