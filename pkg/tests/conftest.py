"""Shared fixtures: known-good genomes and cheap kinematic world stubs.

The stubs satisfy the same surface the episode runner drives on the real
physics world, so task/fitness/analysis semantics can be tested in
microseconds and against exactly scripted motion.
"""

from __future__ import annotations

import numpy as np
import pytest

from foragerlab import genome as gen
from foragerlab.physics import params

ABSORBED = 1
RAN_OUT = 0


def first_valid_genome(start_seed: int = 0) -> gen.Genome:
    for seed in range(start_seed, start_seed + 50):
        g = gen.random_genome(seed)
        try:
            organism = gen.develop(g)
        except gen.Degenerate:
            continue
        if gen.validate(organism).valid:
            return g
    raise RuntimeError("no valid random genome in seed window")


@pytest.fixture(scope="session")
def valid_genome() -> gen.Genome:
    return first_valid_genome()


@pytest.fixture(scope="session")
def valid_organism(valid_genome) -> gen.Organism:
    return gen.develop(valid_genome)


class KinematicStub:
    """World stand-in that walks straight at the target at fixed speed."""

    def __init__(self, organism, first_target, timer, speed=3.0):
        self.speed = speed
        self.pos0 = np.zeros(3)
        self.target = np.array([first_target[0], first_target[1], 0.0])
        self.timer_steps = int(round(timer / params.DT))
        self.steps_in_timer = 0
        self.step_index = 0
        self.target_index = 0
        self.trajectory = []
        self.origin = np.zeros(3)
        self.start_distances = [float(np.linalg.norm(self.target))]

    @property
    def root_position(self):
        return self.pos0.copy()

    def settle(self, controller):
        return True

    def run_with_controller(self, controller, max_steps, motors_on=True,
                            check_absorb=True, record=True):
        for s in range(int(max_steps)):
            d = self.target - self.pos0
            dist = float(np.linalg.norm(d))
            step = min(self.speed * params.DT, dist)
            if dist > 1e-12:
                self.pos0 += d / dist * step
            dist = float(np.linalg.norm(self.target - self.pos0))
            self.step_index += 1
            self.steps_in_timer += 1
            if record:
                self.trajectory.append(
                    (self.step_index, float(self.pos0[0]), float(self.pos0[1]),
                     float(self.pos0[2]), dist, self.target_index))
            if check_absorb and dist <= params.ABSORB_RADIUS:
                return ABSORBED, s + 1
        return RAN_OUT, int(max_steps)

    def advance_target(self, offset):
        self.target = self.pos0 + np.array([offset[0], offset[1], 0.0])
        self.target_index += 1
        self.steps_in_timer = 0
        self.start_distances.append(
            float(np.linalg.norm(self.target - self.pos0)))


class TeleportStub(KinematicStub):
    """Absorbs any target on its first step; idles when not absorbing.

    Gives exact closed-form fitness terms: each target's series is one
    step long and the episode runs the timer out after the last one.
    """

    def run_with_controller(self, controller, max_steps, motors_on=True,
                            check_absorb=True, record=True):
        if check_absorb and max_steps >= 1:
            self.pos0 = self.target.copy()
            self.step_index += 1
            self.steps_in_timer += 1
            if record:
                self.trajectory.append(
                    (self.step_index, float(self.pos0[0]), float(self.pos0[1]),
                     float(self.pos0[2]), 0.0, self.target_index))
            return ABSORBED, 1
        for s in range(int(max_steps)):
            self.step_index += 1
            self.steps_in_timer += 1
            if record:
                self.trajectory.append(
                    (self.step_index, float(self.pos0[0]), float(self.pos0[1]),
                     float(self.pos0[2]),
                     float(np.linalg.norm(self.target - self.pos0)),
                     self.target_index))
        return RAN_OUT, int(max_steps)


class UnstableStub(KinematicStub):
    """Falls over immediately: settle never completes."""

    def settle(self, controller):
        return False


@pytest.fixture
def kinematic_factory():
    return KinematicStub


@pytest.fixture
def teleport_factory():
    return TeleportStub
