"""Staged transfer: run repeats, pick a key organism, derive the next rung.

A stage is a batch of independent evolution runs differing only in
seed index.  The operator inspects the per-repeat best organisms, marks
one as the key organism, and derives the next stage from it; defaults
walk a fixed difficulty ladder (rising placement noise, then uniform
placement with harder fitness variants).  The system never picks the
key organism by itself.
"""

from __future__ import annotations

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, replace
from pathlib import Path

from foragerlab import ga, task
from foragerlab import rng as rngmod
from foragerlab.genome import genome_hash
from foragerlab.store import Store, UnknownOrganism


class NoKeyOrganism(Exception):
    pass


@dataclass(frozen=True)
class StageConfig:
    stage_id: str
    seed: str | None = None          # organism id; None seeds randomly
    repeats: int = 8
    generations: int = 40
    population_size: int = ga.DEFAULT_POPULATION
    uniform: bool = False
    noise_p: float = 0.001
    variant: str = "A"
    directions: int = 4
    timer: float = 30.0
    evals_per_individual: int = 4
    seq_len: int = task.SEQUENCE_LENGTH
    elite_count: int = 8
    tournament_size: int = 5
    rng_base_seed: int = 0

    def plan_spec(self) -> task.PlanSpec:
        return task.PlanSpec(
            directions=self.directions,
            uniform=self.uniform,
            noise_p=self.noise_p,
            variant=self.variant,
            timer=self.timer,
            seq_len=self.seq_len,
            evals=self.evals_per_individual,
        )

    def to_dict(self) -> dict:
        return asdict(self)


def config_from_dict(data: dict) -> StageConfig:
    fields = {f for f in StageConfig.__dataclass_fields__}
    return StageConfig(**{k: v for k, v in data.items() if k in fields})


def load_config_file(path) -> StageConfig:
    return config_from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


# Difficulty ladder, first rung to last.  Directed rungs evaluate once
# per compass direction; uniform rungs draw targets anywhere outside the
# exclusion disk and lean on the reaching count.
LADDER: tuple[dict, ...] = (
    {"uniform": False, "noise_p": 0.001, "variant": "A", "directions": 4,
     "timer": 30.0, "evals_per_individual": 4},
    {"uniform": False, "noise_p": 0.05, "variant": "A", "directions": 4,
     "timer": 30.0, "evals_per_individual": 4},
    {"uniform": False, "noise_p": 0.5, "variant": "A", "directions": 4,
     "timer": 30.0, "evals_per_individual": 4},
    {"uniform": True, "noise_p": 0.0, "variant": "B", "directions": 4,
     "timer": 60.0, "evals_per_individual": 4},
    {"uniform": True, "noise_p": 0.0, "variant": "C", "directions": 4,
     "timer": 60.0, "evals_per_individual": 6},
)

_LADDER_KEYS = ("uniform", "noise_p", "variant", "directions",
                "timer", "evals_per_individual")


def ladder_rung(cfg: StageConfig) -> int | None:
    """Index of the rung this config sits on, or None if off the ladder."""
    for i, rung in enumerate(LADDER):
        if all(getattr(cfg, k) == rung[k] for k in _LADDER_KEYS):
            return i
    return None


def validate_config(cfg: StageConfig) -> list[str]:
    """Warnings only; off-ladder configs run fine but get flagged."""
    warnings = []
    if cfg.repeats < 1:
        warnings.append("repeats < 1 will run nothing")
    if cfg.variant not in ("A", "B", "C"):
        warnings.append(f"unknown fitness variant {cfg.variant!r}")
    if ladder_rung(cfg) is None:
        warnings.append(
            "stage parameters are off the standard ladder "
            "(noise 0.001 -> 0.05 -> 0.5 -> uniform B -> uniform C)")
    return warnings


def initial_stage_config(stage_id: str, **overrides) -> StageConfig:
    cfg = StageConfig(stage_id=stage_id, seed=None, **LADDER[0])
    return replace(cfg, **overrides) if overrides else cfg


def derive_next_stage(store: Store, stage_id: str, overrides: dict | None = None,
                      new_stage_id: str | None = None) -> tuple[StageConfig, list[str]]:
    """Next stage seeded by this stage's key organism, one rung up the
    ladder (staying on the last rung once there); overrides apply last."""
    prev = config_from_dict(store.load_stage_config(stage_id))
    key = store.key_organism_of(stage_id)
    if key is None:
        raise NoKeyOrganism(stage_id)
    if not store.has_organism(key):
        raise UnknownOrganism(key)

    rung = ladder_rung(prev)
    next_rung = LADDER[min(rung + 1, len(LADDER) - 1)] if rung is not None else {}
    if new_stage_id is None:
        new_stage_id = store.next_stage_id()
    cfg = replace(
        prev,
        stage_id=new_stage_id,
        seed=key,
        rng_base_seed=rngmod.derive_seed(new_stage_id, prev.rng_base_seed) % (1 << 31),
        **next_rung,
    )
    if overrides:
        cfg = replace(cfg, **overrides)
    return cfg, validate_config(cfg)


# -- execution ------------------------------------------------------------------

@dataclass
class StageResult:
    stage_id: str
    repeats: list[dict]      # one record per repeat, status done or failed

    @property
    def completed(self) -> int:
        return sum(1 for r in self.repeats if r.get("status") == "done")


def run_config_for_repeat(cfg: StageConfig, store: Store, k: int) -> ga.RunConfig:
    seed_genome = store.load_organism(cfg.seed) if cfg.seed else None
    return ga.RunConfig(
        generations=cfg.generations,
        population_size=cfg.population_size,
        plan_spec=cfg.plan_spec(),
        seed_genome=seed_genome,
        rng_seed=cfg.rng_base_seed + k,
        elite_count=cfg.elite_count,
        tournament_size=cfg.tournament_size,
    )


def _execute_repeat(store_root: str, cfg_dict: dict, k: int) -> dict:
    """Worker entry: runs one repeat and writes its completion marker."""
    store = Store(store_root)
    cfg = config_from_dict(cfg_dict)
    try:
        run_cfg = run_config_for_repeat(cfg, store, k)
        result = ga.run_evolution(
            run_cfg, log_path=store.run_log_path(cfg.stage_id, k))
        from foragerlab.genome import save_genome
        save_genome(result.best_genome,
                    store.repeat_dir(cfg.stage_id, k) / "best_genome.json")
        store.save_organism(result.best_genome)
        record = {
            "stage_id": cfg.stage_id,
            "repeat": k,
            "status": "done",
            "best_organism_id": result.best_organism_id,
            "best_w_bar": result.best_breakdown.w_bar,
            "sources_total": result.best_breakdown.sources_total,
            "best_breakdown": result.best_breakdown.to_dict(),
            "generations": cfg.generations,
            "rng_seed": run_cfg.rng_seed,
        }
    except Exception as exc:  # recorded, stage completes with partial results
        record = {
            "stage_id": cfg.stage_id,
            "repeat": k,
            "status": "failed",
            "error": f"{type(exc).__name__}: {exc}",
        }
    store.write_repeat_result(cfg.stage_id, k, record)
    return record


def run_stage(cfg: StageConfig, store: Store, parallelism: int = 1,
              progress=None) -> StageResult:
    """Execute every repeat not already marked done; persist everything.

    Repeats differ only in rng seed (base + index), so a finished stage
    re-runs to byte-identical logs and genomes.  Failed repeats keep a
    failure marker; delete it to retry.
    """
    store.save_stage_config(cfg.to_dict())
    pending = [k for k in range(cfg.repeats)
               if not store.repeat_done(cfg.stage_id, k)]

    if parallelism > 1 and len(pending) > 1:
        with ProcessPoolExecutor(max_workers=parallelism) as pool:
            futures = {
                k: pool.submit(_execute_repeat, str(store.root), cfg.to_dict(), k)
                for k in pending
            }
            for i, k in enumerate(pending):
                futures[k].result()
                if progress is not None:
                    progress(i + 1, len(pending))
    else:
        for i, k in enumerate(pending):
            _execute_repeat(str(store.root), cfg.to_dict(), k)
            if progress is not None:
                progress(i + 1, len(pending))

    records = [store.load_repeat_result(cfg.stage_id, k)
               for k in range(cfg.repeats)
               if store.repeat_done(cfg.stage_id, k)]
    return StageResult(stage_id=cfg.stage_id, repeats=records)


# -- lineage --------------------------------------------------------------------

def mark_key_organism(store: Store, stage_id: str, organism_id: str,
                      note: str = "") -> dict:
    """Record the operator's pick for a stage.

    The organism must be one of the stage's repeat bests.  Marking again
    appends a superseding entry; the old one stays for audit.
    """
    cfg = config_from_dict(store.load_stage_config(stage_id))
    bests = {r.get("best_organism_id") for r in store.list_repeat_results(stage_id)}
    if organism_id not in bests:
        raise UnknownOrganism(
            f"{organism_id} is not a best organism of {stage_id}")
    if not store.has_organism(organism_id):
        raise UnknownOrganism(organism_id)

    previous = store.key_organism_of(stage_id)
    cumulative = cfg.generations
    if cfg.seed is not None:
        for rec in store.active_lineage():
            if rec["key_organism_id"] == cfg.seed:
                cumulative += rec["cumulative_generations"]
                break
    record = {
        "stage_id": stage_id,
        "key_organism_id": organism_id,
        "note": note,
        "repeats": cfg.repeats,
        "noise": "Uniform" if cfg.uniform else cfg.noise_p,
        "variant": cfg.variant,
        "cumulative_generations": cumulative,
        "seed": cfg.seed,
        "replaces": previous,
    }
    store.append_lineage(record)
    return record


def verify_lineage(store: Store) -> list[str]:
    """Integrity scan: every entry's seed must be the key organism of
    the stage it was derived from, and every key genome must load and
    hash back to its id."""
    problems = []
    for rec in store.active_lineage():
        oid = rec["key_organism_id"]
        if not store.has_organism(oid):
            problems.append(f"{rec['stage_id']}: missing genome {oid}")
            continue
        if genome_hash(store.load_organism(oid)) != oid:
            problems.append(f"{rec['stage_id']}: genome hash mismatch for {oid}")
        seed = rec.get("seed")
        if seed is not None:
            known = {r["key_organism_id"] for r in store.active_lineage()}
            if seed not in known and not store.has_organism(seed):
                problems.append(f"{rec['stage_id']}: unknown seed {seed}")
    return problems
