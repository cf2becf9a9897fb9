"""Behavior analysis: foraging maps, conditional maps, success profiles.

A foraging map drops one target per grid cell (fresh world each time)
and records the mean approach speed toward it.  The conditional variant
first makes the organism earn a fixed first target, then measures the
second-leg map around the absorption point, exposing behavior that
depends on internal state.  Profiles measure how deep into a uniform
target sequence an organism gets, trial after trial.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from foragerlab import rng as rngmod
from foragerlab import rollout, task
from foragerlab.physics import params
from foragerlab.physics.world import create_world

MAP_EXTENT = 20.0           # meters, square, centered on the organism
MAP_EXCLUSION = 4.0         # two absorption radii
DEFAULT_RESOLUTIONS = (11, 101)


class FirstTargetMissed(Exception):
    """Conditional map asked for, but the first leg already fails."""


@dataclass
class ForagingMap:
    resolution: int
    spacing: float
    center: tuple            # world xy of the grid center
    speed: np.ndarray        # (res, res) signed m/s, + toward the target
    reached: np.ndarray      # (res, res) bool
    excluded: np.ndarray     # (res, res) bool
    conditional_on: tuple | None = None
    vmax: float = 0.0        # per-map normalization, set after compute
    notes: list = field(default_factory=list)

    @property
    def active_cells(self) -> int:
        return int((~self.excluded).sum())


def cell_position(row: int, col: int, resolution: int) -> tuple[float, float]:
    """Grid-local xy of a cell center; row 0 is the +y edge."""
    spacing = MAP_EXTENT / (resolution - 1)
    half = (resolution - 1) / 2.0
    return ((col - half) * spacing, (half - row) * spacing)


def excluded_cells(resolution: int) -> np.ndarray:
    """Mask of lattice points strictly inside the exclusion radius."""
    mask = np.zeros((resolution, resolution), dtype=bool)
    for r in range(resolution):
        for c in range(resolution):
            x, y = cell_position(r, c, resolution)
            if math.hypot(x, y) < MAP_EXCLUSION:
                mask[r, c] = True
    return mask


def _blank_map(resolution: int, center, conditional_on=None) -> ForagingMap:
    return ForagingMap(
        resolution=resolution,
        spacing=MAP_EXTENT / (resolution - 1),
        center=tuple(center),
        speed=np.zeros((resolution, resolution)),
        reached=np.zeros((resolution, resolution), dtype=bool),
        excluded=excluded_cells(resolution),
        conditional_on=conditional_on,
    )


def _cell_speed(series) -> float:
    """Net approach distance over elapsed time for one target's record."""
    if len(series) < 2:
        return 0.0
    elapsed = (len(series) - 1) * params.DT
    return (series[0] - series[-1]) / elapsed


def foraging_map(organism, resolution: int = 11, timer: float = 30.0,
                 world_factory=create_world, progress=None) -> ForagingMap:
    """One simulation per active cell, target at the cell center."""
    m = _blank_map(resolution, (0.0, 0.0))
    done = 0
    total = m.active_cells
    for r in range(resolution):
        for c in range(resolution):
            if m.excluded[r, c]:
                continue
            offset = cell_position(r, c, resolution)
            ep = rollout.run_episode(
                organism, [offset], timer,
                world_factory=world_factory, stop_after_last=True,
            )
            if ep.unstable:
                m.excluded[r, c] = True
                m.notes.append({"row": r, "col": c, "error": "Unstable"})
            else:
                m.speed[r, c] = _cell_speed(ep.series[0])
                m.reached[r, c] = ep.sources_reached >= 1
            done += 1
            if progress is not None:
                progress(done, total)
    m.vmax = float(np.abs(m.speed[~m.excluded]).max()) if m.active_cells else 0.0
    return m


def conditional_map(organism, first_target, resolution: int = 11,
                    timer: float = 30.0, world_factory=create_world,
                    progress=None) -> ForagingMap:
    """Second-target map, grid centered on the first absorption point.

    Both legs are re-simulated per cell (controller state carries over
    inside each episode), so the cost is about twice the plain map's.
    """
    first = (float(first_target[0]), float(first_target[1]))
    probe = rollout.run_episode(organism, [first], timer,
                                world_factory=world_factory,
                                stop_after_last=True)
    if probe.sources_reached < 1:
        raise FirstTargetMissed(f"first target {first} not reached")
    center = (probe.final_position[0], probe.final_position[1])

    m = _blank_map(resolution, center, conditional_on=first)
    done = 0
    total = m.active_cells
    for r in range(resolution):
        for c in range(resolution):
            if m.excluded[r, c]:
                continue
            offset = cell_position(r, c, resolution)
            ep = rollout.run_episode(
                organism, [first, offset], timer,
                world_factory=world_factory, stop_after_last=True,
            )
            if ep.unstable or len(ep.series) < 2:
                m.excluded[r, c] = True
                m.notes.append({"row": r, "col": c, "error":
                                "Unstable" if ep.unstable else "FirstTargetMissed"})
            else:
                m.speed[r, c] = _cell_speed(ep.series[1])
                m.reached[r, c] = ep.sources_reached >= 2
            done += 1
            if progress is not None:
                progress(done, total)
    m.vmax = float(np.abs(m.speed[~m.excluded]).max()) if m.active_cells else 0.0
    return m


# -- profiles -----------------------------------------------------------------

@dataclass
class ForagingProfile:
    trials: int
    k: int
    success_rate: list        # index s-1 holds P(reached >= s targets)
    consecutive_ratios: list  # rate(s+1)/rate(s), 0/0 read as 0
    deepest: list             # per trial


def success_ratios(rates) -> list:
    out = []
    for a, b in zip(rates, rates[1:]):
        out.append(0.0 if a == 0.0 else b / a)
    return out


def foraging_profile(organism, trials: int, k: int = 10, timer: float = 60.0,
                     rng_seed: int = 0, world_factory=create_world,
                     progress=None) -> ForagingProfile:
    """Repeatedly chase K uniformly drawn sequential targets; count how
    deep into the sequence each trial gets."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    deepest = []
    for trial in range(trials):
        rng = rngmod.stream(rng_seed, "profile", trial)
        offsets = [task.draw_uniform_offset(rng) for _ in range(k)]
        ep = rollout.run_episode(organism, offsets, timer,
                                 world_factory=world_factory,
                                 stop_after_last=True)
        deepest.append(ep.sources_reached)
        if progress is not None:
            progress(trial + 1, trials)
    rates = [sum(1 for d in deepest if d >= s) / trials for s in range(1, k + 1)]
    return ForagingProfile(
        trials=trials,
        k=k,
        success_rate=rates,
        consecutive_ratios=success_ratios(rates),
        deepest=deepest,
    )


# -- export -------------------------------------------------------------------

def cell_color(speed: float, vmax: float, excluded: bool) -> tuple[int, int, int]:
    """Diverging scale: brightness tracks |speed| relative to the map
    maximum; red means toward the target, blue away; excluded black."""
    if excluded or vmax <= 0.0:
        return (0, 0, 0)
    i = min(abs(speed) / vmax, 1.0)
    lift = int(round(160 * i * i))          # whitens the fast extreme
    main = int(round(255 * i))
    if speed >= 0.0:
        return (main, lift, lift)
    return (lift, lift, main)


def map_csv(m: ForagingMap) -> str:
    buf = io.StringIO()
    w = csv.writer(buf)
    w.writerow(["row", "col", "x", "y", "speed", "reached", "excluded"])
    for r in range(m.resolution):
        for c in range(m.resolution):
            x, y = cell_position(r, c, m.resolution)
            w.writerow([r, c, repr(x), repr(y), repr(float(m.speed[r, c])),
                        int(m.reached[r, c]), int(m.excluded[r, c])])
    return buf.getvalue()


def load_map_csv(text: str) -> ForagingMap:
    rows = list(csv.DictReader(io.StringIO(text)))
    resolution = int(math.isqrt(len(rows)))
    m = _blank_map(resolution, (0.0, 0.0))
    for row in rows:
        r, c = int(row["row"]), int(row["col"])
        m.speed[r, c] = float(row["speed"])
        m.reached[r, c] = bool(int(row["reached"]))
        m.excluded[r, c] = bool(int(row["excluded"]))
    m.vmax = float(np.abs(m.speed[~m.excluded]).max()) if m.active_cells else 0.0
    return m


def map_image(m: ForagingMap, cell_px: int | None = None):
    from PIL import Image
    if cell_px is None:
        cell_px = 40 if m.resolution <= 21 else 4
    img = Image.new("RGB", (m.resolution * cell_px, m.resolution * cell_px))
    px = img.load()
    for r in range(m.resolution):
        for c in range(m.resolution):
            color = cell_color(float(m.speed[r, c]), m.vmax, bool(m.excluded[r, c]))
            for dy in range(cell_px):
                for dx in range(cell_px):
                    px[c * cell_px + dx, r * cell_px + dy] = color
    return img


def artifact_basename(organism_id: str, resolution: int,
                      conditional_on=None) -> str:
    name = f"{organism_id}_map_{resolution}"
    if conditional_on is not None:
        cx, cy = conditional_on
        name += f"_cond_{cx:g}_{cy:g}"
    return name


def map_basename(organism_id: str, m: ForagingMap) -> str:
    return artifact_basename(organism_id, m.resolution, m.conditional_on)


def render_map(m: ForagingMap, out_dir, organism_id: str) -> dict:
    """Write the PNG, the CSV, and a JSON sidecar with the geometry and
    the normalization used; returns the three paths."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    base = map_basename(organism_id, m)
    csv_path = out / f"{base}.csv"
    png_path = out / f"{base}.png"
    meta_path = out / f"{base}.meta.json"
    csv_path.write_text(map_csv(m), encoding="utf-8")
    map_image(m).save(png_path)
    meta_path.write_text(json.dumps({
        "organism_id": organism_id,
        "resolution": m.resolution,
        "spacing": m.spacing,
        "center": list(m.center),
        "conditional_on": list(m.conditional_on) if m.conditional_on else None,
        "vmax": m.vmax,
        "active_cells": m.active_cells,
        "notes": m.notes,
    }, indent=2, sort_keys=True), encoding="utf-8")
    return {"csv": str(csv_path), "png": str(png_path), "meta": str(meta_path)}
