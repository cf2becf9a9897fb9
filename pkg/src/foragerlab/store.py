"""Flat-file experiment store.

Layout under one root directory:

    stages/<stage_id>/config.json
    stages/<stage_id>/repeats/<k>/run_log.jsonl
    stages/<stage_id>/repeats/<k>/best_genome.json
    stages/<stage_id>/repeats/<k>/result.json      (completion marker)
    organisms/<organism_id>.json
    lineage.json
    analysis/<artifact files>
    runs/<run_id>.json

Everything is plain JSON so runs diff cleanly and archive as-is.
result.json is written last, so its presence marks a finished repeat;
interrupted stages resume by skipping repeats that have one.
"""

from __future__ import annotations

import json
import os
import re
import threading
from pathlib import Path

from foragerlab import genome as gen


class UnknownOrganism(Exception):
    pass


class UnknownStage(Exception):
    pass


def _write_json(path: Path, payload) -> None:
    """Atomic-enough write: temp file in the same directory, then rename."""
    path.parent.mkdir(parents=True, exist_ok=True)
    tmp = path.with_suffix(path.suffix + ".tmp")
    tmp.write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n",
                   encoding="utf-8")
    os.replace(tmp, path)


def _read_json(path: Path):
    return json.loads(path.read_text(encoding="utf-8"))


class Store:
    """Single-operator store: concurrent reads, serialized writes."""

    def __init__(self, root):
        self.root = Path(root)
        self._lock = threading.RLock()
        for sub in ("stages", "organisms", "analysis", "runs"):
            (self.root / sub).mkdir(parents=True, exist_ok=True)

    # -- stages ---------------------------------------------------------------

    def stage_dir(self, stage_id: str) -> Path:
        return self.root / "stages" / stage_id

    def repeat_dir(self, stage_id: str, k: int) -> Path:
        return self.stage_dir(stage_id) / "repeats" / str(k)

    def list_stages(self) -> list[str]:
        base = self.root / "stages"
        return sorted(p.name for p in base.iterdir()
                      if p.is_dir() and (p / "config.json").exists())

    def next_stage_id(self) -> str:
        with self._lock:
            highest = 0
            for name in self.list_stages():
                m = re.fullmatch(r"stage-(\d+)", name)
                if m:
                    highest = max(highest, int(m.group(1)))
            return f"stage-{highest + 1:04d}"

    def save_stage_config(self, config_dict: dict) -> None:
        with self._lock:
            _write_json(self.stage_dir(config_dict["stage_id"]) / "config.json",
                        config_dict)

    def load_stage_config(self, stage_id: str) -> dict:
        path = self.stage_dir(stage_id) / "config.json"
        if not path.exists():
            raise UnknownStage(stage_id)
        return _read_json(path)

    # -- repeats --------------------------------------------------------------

    def repeat_done(self, stage_id: str, k: int) -> bool:
        return (self.repeat_dir(stage_id, k) / "result.json").exists()

    def write_repeat_result(self, stage_id: str, k: int, result: dict) -> None:
        with self._lock:
            _write_json(self.repeat_dir(stage_id, k) / "result.json", result)

    def load_repeat_result(self, stage_id: str, k: int) -> dict:
        path = self.repeat_dir(stage_id, k) / "result.json"
        if not path.exists():
            raise FileNotFoundError(path)
        return _read_json(path)

    def list_repeat_results(self, stage_id: str) -> list[dict]:
        out = []
        base = self.stage_dir(stage_id) / "repeats"
        if base.exists():
            for p in sorted(base.iterdir(), key=lambda p: int(p.name)
                            if p.name.isdigit() else 1 << 30):
                marker = p / "result.json"
                if marker.exists():
                    out.append(_read_json(marker))
        return out

    def run_log_path(self, stage_id: str, k: int) -> Path:
        return self.repeat_dir(stage_id, k) / "run_log.jsonl"

    def read_run_log(self, stage_id: str, k: int) -> list[dict]:
        path = self.run_log_path(stage_id, k)
        if not path.exists():
            return []
        return [json.loads(line) for line in
                path.read_text(encoding="utf-8").splitlines() if line]

    # -- organisms ------------------------------------------------------------

    def organism_path(self, organism_id: str) -> Path:
        return self.root / "organisms" / f"{organism_id}.json"

    def save_organism(self, genome: gen.Genome) -> str:
        organism_id = gen.genome_hash(genome)
        with self._lock:
            path = self.organism_path(organism_id)
            if not path.exists():
                gen.save_genome(genome, path)
        return organism_id

    def has_organism(self, organism_id: str) -> bool:
        return self.organism_path(organism_id).exists()

    def load_organism(self, organism_id: str) -> gen.Genome:
        path = self.organism_path(organism_id)
        if not path.exists():
            raise UnknownOrganism(organism_id)
        return gen.load_genome(path)

    # -- lineage --------------------------------------------------------------

    @property
    def lineage_path(self) -> Path:
        return self.root / "lineage.json"

    def load_lineage(self) -> list[dict]:
        if not self.lineage_path.exists():
            return []
        return _read_json(self.lineage_path)

    def append_lineage(self, record: dict) -> None:
        with self._lock:
            records = self.load_lineage()
            records.append(record)
            _write_json(self.lineage_path, records)

    def active_lineage(self) -> list[dict]:
        """Last entry per stage wins; earlier ones stay as the audit trail."""
        latest: dict[str, dict] = {}
        for rec in self.load_lineage():
            latest[rec["stage_id"]] = rec
        return [latest[sid] for sid in sorted(latest)]

    def key_organism_of(self, stage_id: str) -> str | None:
        for rec in self.active_lineage():
            if rec["stage_id"] == stage_id:
                return rec["key_organism_id"]
        return None

    # -- analysis artifacts ----------------------------------------------------

    @property
    def analysis_dir(self) -> Path:
        return self.root / "analysis"

    # -- background runs ---------------------------------------------------------

    def next_run_id(self) -> str:
        with self._lock:
            base = self.root / "runs"
            highest = 0
            for p in base.glob("run-*.json"):
                m = re.fullmatch(r"run-(\d+)", p.stem)
                if m:
                    highest = max(highest, int(m.group(1)))
            return f"run-{highest + 1:04d}"

    def save_run(self, run_id: str, record: dict) -> None:
        with self._lock:
            _write_json(self.root / "runs" / f"{run_id}.json", record)

    def load_run(self, run_id: str) -> dict:
        path = self.root / "runs" / f"{run_id}.json"
        if not path.exists():
            raise FileNotFoundError(run_id)
        return _read_json(path)
