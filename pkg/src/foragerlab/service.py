"""HTTP face of the workbench.

Read endpoints are side-effect-free views over the store.  Mutations
(stage creation, key-organism marking, stage runs) serialize through
the store lock.  Long computations (stage runs, maps, profiles) run as
background worker processes that report progress through run records
in the store; the endpoints hand back 202 + a job id until the
artifacts exist.
"""

from __future__ import annotations

import json
import multiprocessing
import traceback
from pathlib import Path

from fastapi import FastAPI, HTTPException, Query, Response
from fastapi.responses import FileResponse, JSONResponse
from pydantic import BaseModel, Field

from foragerlab import __version__, analysis, rollout, stages
from foragerlab import genome as gen
from foragerlab.store import Store, UnknownOrganism, UnknownStage


# -- request / response models ---------------------------------------------------

class StageSummary(BaseModel):
    stage_id: str
    config: dict
    repeats_total: int
    repeats_done: int
    repeats_failed: int
    key_organism_id: str | None = None
    warnings: list[str] = Field(default_factory=list)


class RepeatRecord(BaseModel):
    stage_id: str
    repeat: int
    status: str
    best_organism_id: str | None = None
    best_w_bar: float | None = None
    sources_total: int | None = None
    error: str | None = None
    generations_logged: int = 0


class OrganismView(BaseModel):
    organism_id: str
    genome: dict
    blocks: int
    neurons: int
    joints: int
    valid: bool
    reasons: list[str] = Field(default_factory=list)


class KeyOrganismRequest(BaseModel):
    organism_id: str
    note: str = ""


class CreateStageRequest(BaseModel):
    from_stage: str | None = Field(default=None, alias="from")
    overrides: dict = Field(default_factory=dict)

    model_config = {"populate_by_name": True}


class StageCreated(BaseModel):
    stage_id: str
    config: dict
    warnings: list[str] = Field(default_factory=list)


class RunStageRequest(BaseModel):
    parallelism: int = 1


class JobStarted(BaseModel):
    job_id: str
    status: str = "running"


class JobProgress(BaseModel):
    job_id: str
    kind: str
    status: str
    completed: int = 0
    total: int = 0
    detail: str = ""
    artifacts: dict = Field(default_factory=dict)


class TrajectoryView(BaseModel):
    organism_id: str
    timer: float
    columns: list[str]
    rows: list[list[float]]
    targets: list[list[float]]
    absorptions: list[dict]
    sources_reached: int
    unstable: bool


class LineageView(BaseModel):
    records: list[dict]
    audit: list[dict]


# -- background jobs ---------------------------------------------------------------

def _job_update(store: Store, run_id: str, **changes) -> None:
    record = store.load_run(run_id)
    record.update(changes)
    store.save_run(run_id, record)


def _job_worker(store_root: str, run_id: str, spec: dict) -> None:
    """Runs in a forked process; all progress flows through run records."""
    store = Store(store_root)
    try:
        kind = spec["kind"]
        if kind == "stage":
            cfg = stages.config_from_dict(store.load_stage_config(spec["stage_id"]))

            def on_repeat(done, total):
                _job_update(store, run_id, completed=done, total=total)

            result = stages.run_stage(cfg, store,
                                      parallelism=spec.get("parallelism", 1),
                                      progress=on_repeat)
            _job_update(store, run_id, status="done",
                        completed=result.completed, total=cfg.repeats)
        elif kind in ("map", "conditional_map"):
            genome = store.load_organism(spec["organism_id"])
            organism = gen.develop(genome)
            report = gen.validate(organism)
            if not report.valid:
                raise ValueError(f"organism invalid: {','.join(report.reasons)}")

            def on_cell(done, total):
                if done % 25 == 0 or done == total:
                    _job_update(store, run_id, completed=done, total=total)

            if kind == "map":
                m = analysis.foraging_map(organism, spec["resolution"],
                                          timer=spec.get("timer", 30.0),
                                          progress=on_cell)
            else:
                m = analysis.conditional_map(organism, tuple(spec["cond"]),
                                             spec["resolution"],
                                             timer=spec.get("timer", 30.0),
                                             progress=on_cell)
            paths = analysis.render_map(m, store.analysis_dir, spec["organism_id"])
            _job_update(store, run_id, status="done", artifacts=paths)
        elif kind == "profile":
            genome = store.load_organism(spec["organism_id"])
            organism = gen.develop(genome)

            def on_trial(done, total):
                _job_update(store, run_id, completed=done, total=total)

            prof = analysis.foraging_profile(
                organism, trials=spec["trials"], k=spec["seq"],
                timer=spec.get("timer", 60.0), progress=on_trial)
            path = _profile_path(store, spec["organism_id"],
                                 spec["trials"], spec["seq"])
            path.write_text(json.dumps({
                "organism_id": spec["organism_id"],
                "trials": prof.trials,
                "seq": prof.k,
                "success_rate": prof.success_rate,
                "consecutive_ratios": prof.consecutive_ratios,
                "deepest": prof.deepest,
            }, indent=2, sort_keys=True), encoding="utf-8")
            _job_update(store, run_id, status="done",
                        artifacts={"profile": str(path)})
        else:
            raise ValueError(f"unknown job kind {kind!r}")
    except Exception as exc:
        _job_update(store, run_id, status="failed",
                    detail=f"{type(exc).__name__}: {exc}",
                    trace=traceback.format_exc())


def _profile_path(store: Store, organism_id: str, trials: int, seq: int) -> Path:
    return store.analysis_dir / f"{organism_id}_profile_{trials}_{seq}.json"


class JobRunner:
    """Launches worker processes and answers progress queries."""

    def __init__(self, store: Store):
        self.store = store
        self._by_key: dict[str, str] = {}

    def launch(self, key: str, spec: dict) -> str:
        existing = self._by_key.get(key)
        if existing is not None:
            try:
                if self.store.load_run(existing)["status"] == "running":
                    return existing
            except FileNotFoundError:
                pass
        run_id = self.store.next_run_id()
        self.store.save_run(run_id, {
            "job_id": run_id, "kind": spec["kind"], "status": "running",
            "completed": 0, "total": spec.get("total", 0),
            "detail": "", "artifacts": {}, "spec": spec,
        })
        proc = multiprocessing.Process(
            target=_job_worker, args=(str(self.store.root), run_id, spec),
            daemon=True)
        proc.start()
        self._by_key[key] = run_id
        return run_id

    def progress(self, run_id: str) -> dict:
        return self.store.load_run(run_id)


# -- app ----------------------------------------------------------------------------

def _stage_summary(store: Store, stage_id: str) -> StageSummary:
    cfg = store.load_stage_config(stage_id)
    results = store.list_repeat_results(stage_id)
    return StageSummary(
        stage_id=stage_id,
        config=cfg,
        repeats_total=cfg.get("repeats", 0),
        repeats_done=sum(1 for r in results if r.get("status") == "done"),
        repeats_failed=sum(1 for r in results if r.get("status") == "failed"),
        key_organism_id=store.key_organism_of(stage_id),
        warnings=stages.validate_config(stages.config_from_dict(cfg)),
    )


def create_app(store_root) -> FastAPI:
    store = Store(store_root)
    runner = JobRunner(store)
    app = FastAPI(title="foragerlab", version=__version__)
    app.state.store = store
    app.state.runner = runner

    @app.get("/")
    def root() -> dict:
        return {"name": "foragerlab", "version": __version__}

    # -- stages ------------------------------------------------------------------

    @app.get("/stages", response_model=list[StageSummary])
    def list_stages():
        return [_stage_summary(store, sid) for sid in store.list_stages()]

    @app.get("/stages/{stage_id}", response_model=StageSummary)
    def get_stage(stage_id: str):
        try:
            return _stage_summary(store, stage_id)
        except UnknownStage:
            raise HTTPException(404, f"unknown stage {stage_id}")

    @app.get("/stages/{stage_id}/repeats", response_model=list[RepeatRecord])
    def get_repeats(stage_id: str):
        try:
            cfg = store.load_stage_config(stage_id)
        except UnknownStage:
            raise HTTPException(404, f"unknown stage {stage_id}")
        out = []
        for rec in store.list_repeat_results(stage_id):
            rec = dict(rec)
            rec["generations_logged"] = len(
                store.read_run_log(stage_id, rec["repeat"]))
            out.append(RepeatRecord(**rec))
        return out

    @app.post("/stages", response_model=StageCreated)
    def create_stage(req: CreateStageRequest):
        if req.from_stage is None:
            cfg = stages.initial_stage_config(store.next_stage_id())
            if req.overrides:
                cfg = stages.config_from_dict({**cfg.to_dict(), **req.overrides})
            warnings = stages.validate_config(cfg)
        else:
            try:
                cfg, warnings = stages.derive_next_stage(
                    store, req.from_stage, req.overrides or None)
            except UnknownStage:
                raise HTTPException(404, f"unknown stage {req.from_stage}")
            except stages.NoKeyOrganism:
                raise HTTPException(409, f"stage {req.from_stage} has no key organism")
            except UnknownOrganism as exc:
                raise HTTPException(409, str(exc))
        store.save_stage_config(cfg.to_dict())
        return StageCreated(stage_id=cfg.stage_id, config=cfg.to_dict(),
                            warnings=warnings)

    @app.post("/stages/{stage_id}/run", status_code=202, response_model=JobStarted)
    def run_stage(stage_id: str, req: RunStageRequest | None = None):
        try:
            cfg = store.load_stage_config(stage_id)
        except UnknownStage:
            raise HTTPException(404, f"unknown stage {stage_id}")
        parallelism = req.parallelism if req else 1
        job = runner.launch(f"stage:{stage_id}", {
            "kind": "stage", "stage_id": stage_id,
            "parallelism": parallelism, "total": cfg.get("repeats", 0),
        })
        return JobStarted(job_id=job)

    @app.post("/stages/{stage_id}/key-organism")
    def mark_key(stage_id: str, req: KeyOrganismRequest):
        try:
            record = stages.mark_key_organism(store, stage_id,
                                              req.organism_id, req.note)
        except UnknownStage:
            raise HTTPException(404, f"unknown stage {stage_id}")
        except UnknownOrganism as exc:
            raise HTTPException(404, str(exc))
        return record

    # -- organisms ----------------------------------------------------------------

    @app.get("/organisms/{organism_id}", response_model=OrganismView)
    def get_organism(organism_id: str):
        try:
            genome = store.load_organism(organism_id)
        except UnknownOrganism:
            raise HTTPException(404, f"unknown organism {organism_id}")
        try:
            organism = gen.develop(genome)
            report = gen.validate(organism)
            joints = organism.joint_count
            valid, reasons = report.valid, report.reasons
        except gen.Degenerate as exc:
            joints, valid, reasons = 0, False, [f"Degenerate: {exc}"]
        return OrganismView(
            organism_id=organism_id,
            genome=gen.to_dict(genome),
            blocks=len(genome.blocks),
            neurons=len(genome.neurons),
            joints=joints,
            valid=valid,
            reasons=list(reasons),
        )

    @app.get("/organisms/{organism_id}/map")
    def get_map(organism_id: str,
                res: int = Query(default=11),
                cond: str | None = Query(default=None),
                timer: float = Query(default=30.0),
                format: str = Query(default="json")):
        if not store.has_organism(organism_id):
            raise HTTPException(404, f"unknown organism {organism_id}")
        cond_xy = None
        if cond:
            try:
                cx, cy = (float(v) for v in cond.split(","))
                cond_xy = (cx, cy)
            except ValueError:
                raise HTTPException(422, "cond must be 'x,y'")
        base = analysis.artifact_basename(organism_id, res, cond_xy)
        csv_path = store.analysis_dir / f"{base}.csv"
        png_path = store.analysis_dir / f"{base}.png"
        meta_path = store.analysis_dir / f"{base}.meta.json"
        if csv_path.exists() and png_path.exists():
            if format == "png":
                return FileResponse(png_path, media_type="image/png")
            if format == "csv":
                return Response(csv_path.read_text(encoding="utf-8"),
                                media_type="text/csv")
            m = analysis.load_map_csv(csv_path.read_text(encoding="utf-8"))
            meta = json.loads(meta_path.read_text(encoding="utf-8")) \
                if meta_path.exists() else {}
            return JSONResponse({
                "status": "done",
                "organism_id": organism_id,
                "resolution": m.resolution,
                "vmax": m.vmax,
                "speed": m.speed.tolist(),
                "reached": m.reached.astype(int).tolist(),
                "excluded": m.excluded.astype(int).tolist(),
                "meta": meta,
                "csv": str(csv_path),
                "png": str(png_path),
            })
        spec = {"kind": "conditional_map" if cond_xy else "map",
                "organism_id": organism_id, "resolution": res,
                "timer": timer, "total": res * res}
        if cond_xy:
            spec["cond"] = list(cond_xy)
        job = runner.launch(f"map:{base}", spec)
        return JSONResponse({"status": "pending", "job_id": job},
                            status_code=202)

    @app.get("/organisms/{organism_id}/profile")
    def get_profile(organism_id: str,
                    trials: int = Query(default=20),
                    seq: int = Query(default=10),
                    timer: float = Query(default=60.0)):
        if not store.has_organism(organism_id):
            raise HTTPException(404, f"unknown organism {organism_id}")
        path = _profile_path(store, organism_id, trials, seq)
        if path.exists():
            return JSONResponse({"status": "done",
                                 **json.loads(path.read_text(encoding="utf-8"))})
        job = runner.launch(f"profile:{organism_id}:{trials}:{seq}", {
            "kind": "profile", "organism_id": organism_id,
            "trials": trials, "seq": seq, "timer": timer, "total": trials,
        })
        return JSONResponse({"status": "pending", "job_id": job},
                            status_code=202)

    @app.get("/organisms/{organism_id}/trajectory", response_model=TrajectoryView)
    def get_trajectory(organism_id: str,
                       targets: str = Query(default="10,0"),
                       timer: float = Query(default=30.0)):
        try:
            genome = store.load_organism(organism_id)
        except UnknownOrganism:
            raise HTTPException(404, f"unknown organism {organism_id}")
        try:
            offsets = [tuple(float(v) for v in part.split(","))
                       for part in targets.split(";") if part]
            if any(len(o) != 2 for o in offsets) or not offsets:
                raise ValueError
        except ValueError:
            raise HTTPException(422, "targets must be 'x,y;x,y;...'")
        try:
            organism = gen.develop(genome)
        except gen.Degenerate as exc:
            raise HTTPException(409, f"organism does not develop: {exc}")
        report = gen.validate(organism)
        if not report.valid:
            raise HTTPException(409, f"organism invalid: {','.join(report.reasons)}")
        ep = rollout.run_episode(organism, offsets, timer)
        rows = [[float(r[0]), float(r[0]) * 0.02, r[1], r[2], r[3], r[4],
                 float(r[5])] for r in ep.world.trajectory]
        absorptions = [
            {"row": row, "target_index": i,
             "position": list(ep.world.trajectory[row][1:4])}
            for i, row in enumerate(ep.absorption_rows)
        ]
        return TrajectoryView(
            organism_id=organism_id,
            timer=timer,
            columns=["step", "t", "x", "y", "z", "distance", "target_index"],
            rows=rows,
            targets=[list(t) for t in ep.target_positions],
            absorptions=absorptions,
            sources_reached=ep.sources_reached,
            unstable=ep.unstable,
        )

    # -- lineage and jobs -----------------------------------------------------------

    @app.get("/lineage", response_model=LineageView)
    def get_lineage():
        return LineageView(records=store.active_lineage(),
                           audit=store.load_lineage())

    @app.get("/runs/{run_id}/progress", response_model=JobProgress)
    def run_progress(run_id: str):
        try:
            rec = runner.progress(run_id)
        except FileNotFoundError:
            raise HTTPException(404, f"unknown run {run_id}")
        return JobProgress(
            job_id=run_id, kind=rec.get("kind", ""),
            status=rec.get("status", ""), completed=rec.get("completed", 0),
            total=rec.get("total", 0), detail=rec.get("detail", ""),
            artifacts=rec.get("artifacts", {}),
        )

    return app


def serve(store_root, host: str = "127.0.0.1", port: int = 8600) -> None:
    """Blocking single-worker server."""
    import uvicorn
    uvicorn.run(create_app(store_root), host=host, port=port, log_level="info")
