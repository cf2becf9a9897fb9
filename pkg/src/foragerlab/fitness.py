"""Scoring: per-target shaping rewards, episode scores, run aggregate.

All composition happens in log space where overflow is a real risk (the
reaching reward grows like e^(10 S) for long episodes), and every score
is non-negative by construction so the geometric-mean aggregate is well
defined.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

from foragerlab import rollout
from foragerlab.genome import (
    Degenerate,
    Genome,
    Organism,
    develop,
    validate,
)
from foragerlab.physics.world import SpawnOverlap, create_world

VARIANTS = ("A", "B", "C")

DELTA_FLOOR = -0.99     # one step may not cancel more than 99% of a factor
REACH_GAIN = 10.0       # weights reaching against per-step shaping


def approach_deltas(distances) -> list[float]:
    """Per-step change toward the target, positive when closing in."""
    return [distances[i - 1] - distances[i] for i in range(1, len(distances))]


def w_s(deltas) -> float:
    """Product of per-step approach factors for one target.  Empty -> 1."""
    total = 0.0
    for d in deltas:
        total += math.log1p(max(d, DELTA_FLOOR))
    return math.exp(total)


def w_s_halved(deltas, s: int) -> float:
    """Approach reward for the s-th target with per-step gains cut by 2^s."""
    scale = 2.0 ** s
    total = 0.0
    for d in deltas:
        total += math.log1p(max(d, DELTA_FLOOR) / scale)
    return math.exp(total)


def w_l(start_position, final_position) -> float:
    """Locomotion reward: horizontal displacement, saturating at 1 m."""
    dx = final_position[0] - start_position[0]
    dy = final_position[1] - start_position[1]
    return 100.0 * min(math.hypot(dx, dy), 1.0)


def w_r(sources: int, steps: int) -> float:
    """Reaching reward S * (1 + 10 S / T)^T, computed in log space."""
    if sources <= 0 or steps <= 0:
        return 0.0
    return math.exp(math.log(sources)
                    + steps * math.log1p(REACH_GAIN * sources / steps))


def compose(variant: str, series, start_position, final_position,
            sources: int, steps: int) -> float:
    """Score one evaluation step.

    series holds one per-target delta list for every target that
    appeared (an unreached final target contributes its partial run).
    """
    if variant == "C":
        return float(sources)
    if variant not in VARIANTS:
        raise ValueError(f"unknown fitness variant {variant!r}")
    log_prod = 0.0
    first = 2 if variant == "B" else 1
    for s, deltas in enumerate(series, start=1):
        if s < first:
            continue
        scale = 2.0 ** s
        for d in deltas:
            log_prod += math.log1p(max(d, DELTA_FLOOR) / scale)
    shaped = w_l(start_position, final_position) * math.exp(log_prod)
    return shaped + w_r(sources, steps)


def w_bar(scores) -> float:
    """Geometric mean of evaluation-step scores; any zero collapses to 0."""
    if not scores:
        return 0.0
    total = 0.0
    for w in scores:
        if w <= 0.0:
            return 0.0
        total += math.log(w)
    return math.exp(total / len(scores))


@dataclass
class StepScore:
    """One evaluation step's contributions, kept for inspection."""
    w: float
    w_l: float
    w_r: float
    w_s_values: list[float]
    sources_reached: int
    steps: int


@dataclass
class FitnessBreakdown:
    w_bar: float
    steps: list[StepScore] = field(default_factory=list)
    sources_total: int = 0
    valid: bool = True
    unstable: bool = False
    reasons: list[str] = field(default_factory=list)

    def to_dict(self) -> dict:
        return {
            "w_bar": self.w_bar,
            "sources_total": self.sources_total,
            "valid": self.valid,
            "unstable": self.unstable,
            "reasons": list(self.reasons),
            "steps": [
                {
                    "w": s.w, "w_l": s.w_l, "w_r": s.w_r,
                    "w_s": list(s.w_s_values),
                    "sources_reached": s.sources_reached,
                    "steps": s.steps,
                }
                for s in self.steps
            ],
        }


def zero_breakdown(reasons) -> FitnessBreakdown:
    return FitnessBreakdown(w_bar=0.0, valid=False, reasons=list(reasons))


def evaluate(organism: Organism, plan, world_factory=create_world) -> FitnessBreakdown:
    """Score one organism against a plan.

    Invalid organisms score 0 without simulation; an episode going
    unstable zeroes the whole evaluation and flags it.
    """
    report = validate(organism)
    if not report.valid:
        return zero_breakdown(report.reasons)

    scores: list[float] = []
    steps_out: list[StepScore] = []
    total_sources = 0
    for offsets in plan.steps:
        try:
            ep = rollout.run_episode(
                organism, offsets, plan.spec.timer,
                world_factory=world_factory,
            )
        except SpawnOverlap:
            return zero_breakdown(["InitialInterpenetration"])
        if ep.unstable:
            bd = zero_breakdown(["Unstable"])
            bd.unstable = True
            return bd
        series = [approach_deltas(dists) for dists in ep.series]
        w = compose(plan.spec.variant, series, ep.start_position,
                    ep.final_position, ep.sources_reached, ep.steps)
        scores.append(w)
        total_sources += ep.sources_reached
        steps_out.append(StepScore(
            w=w,
            w_l=w_l(ep.start_position, ep.final_position),
            w_r=w_r(ep.sources_reached, ep.steps),
            w_s_values=[w_s(d) for d in series],
            sources_reached=ep.sources_reached,
            steps=ep.steps,
        ))

    if plan.spec.variant == "C":
        aggregate = float(total_sources)
    else:
        aggregate = w_bar(scores)
    return FitnessBreakdown(
        w_bar=aggregate,
        steps=steps_out,
        sources_total=total_sources,
    )


def evaluate_genome(genome: Genome, plan, world_factory=create_world) -> FitnessBreakdown:
    """Develop then score; genomes that fail to develop score 0."""
    try:
        organism = develop(genome)
    except Degenerate as exc:
        return zero_breakdown([str(exc) or "Degenerate"])
    return evaluate(organism, plan, world_factory=world_factory)
