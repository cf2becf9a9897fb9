"""Food placement: where targets appear and in what order.

A plan is the full target schedule for evaluating one organism: a list
of evaluation steps, each holding a sequence of relative offsets.  The
first offset is measured from the organism's spawn position, later ones
from wherever the root was when the previous target was absorbed.

Directed stages place targets at evenly spaced compass angles around
the organism (front first) at a fixed base distance, jittered per target
by per-axis uniform noise.  Uniform stages draw every offset uniformly
over a 20 m x 20 m square with a 4 m exclusion disk around the origin.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field

from foragerlab import rng as rngmod

BASE_DISTANCE = 10.0
SEQUENCE_LENGTH = 3
UNIFORM_HALF_EXTENT = 10.0   # square spans [-10, +10] on each axis
EXCLUSION_RADIUS = 4.0


@dataclass(frozen=True)
class PlanSpec:
    """Plan-shaping parameters of a stage."""
    directions: int = 4          # evaluation steps in directed mode
    uniform: bool = False        # uniform draws replace compass angles
    noise_p: float = 0.001       # per-axis noise amplitude as fraction of base distance
    variant: str = "A"           # fitness composition variant
    timer: float = 30.0          # seconds allowed per target
    seq_len: int = SEQUENCE_LENGTH
    base_distance: float = BASE_DISTANCE
    evals: int = 4               # evaluation steps in uniform mode

    def step_count(self) -> int:
        return self.evals if self.uniform else self.directions


@dataclass(frozen=True)
class EvaluationPlan:
    steps: tuple          # per evaluation step: tuple of (dx, dy) offsets
    spec: PlanSpec
    rng_seed: int

    @property
    def digest(self) -> str:
        payload = {
            "steps": [[[x, y] for (x, y) in step] for step in self.steps],
            "variant": self.spec.variant,
            "timer": self.spec.timer,
        }
        canon = json.dumps(payload, sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(canon.encode("utf-8")).hexdigest()[:16]


def base_placements(directions: int) -> list[float]:
    """Evenly spaced placement angles, front (angle 0) first."""
    if directions < 1:
        raise ValueError("directions must be >= 1")
    return [2.0 * math.pi * k / directions for k in range(directions)]


def apply_noise(offset, delta: float, p: float, rng) -> tuple[float, float]:
    """Jitter an offset by per-axis uniform noise in [-p*delta, +p*delta]."""
    amp = p * delta
    return (offset[0] + rng.uniform(-amp, amp),
            offset[1] + rng.uniform(-amp, amp))


def draw_uniform_offset(rng) -> tuple[float, float]:
    """Uniform over the placement square minus the exclusion disk."""
    while True:
        x = rng.uniform(-UNIFORM_HALF_EXTENT, UNIFORM_HALF_EXTENT)
        y = rng.uniform(-UNIFORM_HALF_EXTENT, UNIFORM_HALF_EXTENT)
        if x * x + y * y >= EXCLUSION_RADIUS * EXCLUSION_RADIUS:
            return (x, y)


def make_plan(spec: PlanSpec, rng_seed: int) -> EvaluationPlan:
    """Draw the target schedule for one generation.

    Deterministic in (spec, rng_seed); every organism evaluated against
    the same plan sees identical targets.  With noise_p = 0 the plan does
    not depend on the seed at all.
    """
    rng = rngmod.stream(rng_seed, "plan")
    steps = []
    if spec.uniform:
        for _ in range(spec.evals):
            offs = tuple(draw_uniform_offset(rng) for _ in range(spec.seq_len))
            steps.append(offs)
    else:
        for angle in base_placements(spec.directions):
            base = (spec.base_distance * math.cos(angle),
                    spec.base_distance * math.sin(angle))
            offs = tuple(
                apply_noise(base, spec.base_distance, spec.noise_p, rng)
                for _ in range(spec.seq_len)
            )
            steps.append(offs)
    return EvaluationPlan(steps=tuple(steps), spec=spec, rng_seed=rng_seed)
