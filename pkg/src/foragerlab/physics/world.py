"""World lifecycle around the solver kernels.

A world owns one organism's rigid bodies, the current food target and a
countdown timer.  It records the root position and the distance sensor
every step once settling is over; fitness and analysis read that
trajectory instead of poking at body state.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from foragerlab import controller as ctrl
from foragerlab.genome import Organism, spawn_pose
from foragerlab.physics import kernels, params


class SpawnOverlap(Exception):
    """Non-adjacent blocks interpenetrate at placement."""


@dataclass(frozen=True)
class AbsorptionEvent:
    target_index: int
    position: tuple[float, float, float]
    step_index: int


@dataclass(frozen=True)
class TimerExpired:
    step_index: int


class World:
    """One organism in one arena with one active target."""

    def __init__(self, organism: Organism, first_target, timer: float,
                 check_overlap: bool = True):
        self.organism = organism
        n = organism.n_blocks
        centers, quats = spawn_pose(organism)
        if check_overlap:
            from foragerlab.genome import initial_overlaps
            if initial_overlaps(organism, centers, quats):
                raise SpawnOverlap(organism.organism_id)

        self.pos = centers.astype(np.float64)
        self.quat = quats.astype(np.float64)
        self.vel = np.zeros((n, 3))
        self.omg = np.zeros((n, 3))
        self.mass = organism.masses.copy()
        self.inv_m = 1.0 / self.mass
        self.inv_ib = np.empty((n, 3))
        from foragerlab.physics.geometry import box_inv_inertia_diag
        for i in range(n):
            self.inv_ib[i] = box_inv_inertia_diag(self.mass[i], organism.half_extents[i])
        self.half = organism.half_extents.copy()
        self.collide = organism.collide.copy()

        self.jp = organism.joint_parent.copy()
        self.jc = organism.joint_child.copy()
        self.jap = organism.joint_anchor_p.copy()
        self.jac = organism.joint_anchor_c.copy()
        self.jax = organism.joint_axis_local.copy()
        self.jlo = organism.joint_lo.copy()
        self.jhi = organism.joint_hi.copy()
        self.jtorq = organism.joint_torque.copy()
        self.has_motor = (organism.motor_source >= 0)
        self.motor_source = organism.motor_source.copy()

        self.target = np.array([first_target[0], first_target[1],
                                first_target[2] if len(first_target) > 2 else 0.0])
        self.timer = float(timer)
        self.timer_steps = int(round(timer / params.DT))
        self.steps_in_timer = 0
        self.step_index = 0
        self.target_index = 0
        self.absorbed_count = 0
        self.unstable = False
        self.settled = False
        self.motors_enabled = True

        self.forward = np.array([1.0, 0.0])
        self.touch = np.zeros(n)
        self.sensors = np.zeros(organism.sensor_count)
        self._commands = np.zeros(organism.joint_count)
        kernels.compute_sensors(self.pos, self.quat, self.touch, self.jp, self.jc,
                                self.jax, self.target, self.forward, self.sensors)

        self.origin = self.pos[0].copy()      # set again after settling
        # trajectory rows: (step_index, x, y, z, distance, target_index)
        self.trajectory: list[tuple[int, float, float, float, float, int]] = []
        # distance to each target at the moment it appeared
        self.start_distances: list[float] = [float(self.sensors[-1])]

    # -- properties ----------------------------------------------------------

    @property
    def root_position(self) -> np.ndarray:
        return self.pos[0].copy()

    @property
    def timer_remaining(self) -> float:
        return (self.timer_steps - self.steps_in_timer) * params.DT

    def sensor_frame(self) -> ctrl.SensorFrame:
        n = self.organism.n_blocks
        m = self.organism.joint_count
        return ctrl.SensorFrame(
            contacts=self.sensors[:n].copy(),
            joint_angles=self.sensors[n:n + m].copy(),
            target_angle=float(self.sensors[n + m]),
            target_distance=float(self.sensors[n + m + 1]),
        )

    # -- stepping ------------------------------------------------------------

    def step(self, commands) -> tuple[ctrl.SensorFrame, list]:
        """Advance one step with explicit motor commands.

        Returns the new sensor frame and any events (absorption fires at
        most once per target; the timer event fires when the countdown
        for the current target ends).
        """
        events: list = []
        if self.unstable:
            return self.sensor_frame(), events
        cmds = np.asarray(commands, dtype=np.float64)
        rc = kernels.tick(self.pos, self.quat, self.vel, self.omg, self.inv_m,
                          self.inv_ib, self.half, self.collide,
                          self.jp, self.jc, self.jap, self.jac, self.jax,
                          self.jlo, self.jhi, self.jtorq, self.has_motor,
                          cmds, self.motors_enabled, params.DT, self.touch)
        kernels.compute_sensors(self.pos, self.quat, self.touch, self.jp, self.jc,
                                self.jax, self.target, self.forward, self.sensors)
        self.step_index += 1
        self.steps_in_timer += 1
        if self.settled:
            self._record_row()
        if rc == kernels.EXIT_UNSTABLE:
            self.unstable = True
            return self.sensor_frame(), events
        dist = float(self.sensors[-1])
        if dist <= params.ABSORB_RADIUS and self.absorbed_count == self.target_index:
            self.absorbed_count += 1
            events.append(AbsorptionEvent(
                target_index=self.target_index,
                position=tuple(self.pos[0]),
                step_index=self.step_index,
            ))
        if self.steps_in_timer == self.timer_steps:
            events.append(TimerExpired(step_index=self.step_index))
        return self.sensor_frame(), events

    def _record_row(self):
        self.trajectory.append((
            self.step_index,
            float(self.pos[0, 0]), float(self.pos[0, 1]), float(self.pos[0, 2]),
            float(self.sensors[-1]),
            self.target_index,
        ))

    def run_with_controller(self, controller: ctrl.Controller, max_steps: int,
                            motors_on: bool = True, check_absorb: bool = True,
                            record: bool = True) -> tuple[int, int]:
        """Fast span: controller and solver stepped together in the kernel.

        Semantically identical to calling controller.step + world.step in
        a loop.  Returns (exit_code, steps_done).
        """
        if self.unstable:
            return kernels.EXIT_UNSTABLE, 0
        max_steps = int(max_steps)
        rec_pos = np.empty((max_steps, 3))
        rec_dist = np.empty(max_steps)
        ctrl_t = np.array([controller.t])
        code, done = kernels.run_span(
            self.pos, self.quat, self.vel, self.omg, self.inv_m, self.inv_ib,
            self.half, self.collide,
            self.jp, self.jc, self.jap, self.jac, self.jax, self.jlo, self.jhi,
            self.jtorq, self.has_motor,
            controller.order, controller.codes, controller.params,
            controller.in_src, controller.in_idx, controller.in_w,
            controller.state, controller.values, controller.motor_source,
            ctrl_t, self.forward, self.sensors, self.touch,
            max_steps, motors_on, check_absorb, record,
            self.target, params.DT, params.ABSORB_RADIUS,
            rec_pos, rec_dist, self._commands,
        )
        controller.t = float(ctrl_t[0])
        if record:
            base = self.step_index
            for s in range(done):
                self.trajectory.append((
                    base + s + 1,
                    float(rec_pos[s, 0]), float(rec_pos[s, 1]), float(rec_pos[s, 2]),
                    float(rec_dist[s]),
                    self.target_index,
                ))
        self.step_index += done
        self.steps_in_timer += done
        if code == kernels.EXIT_UNSTABLE:
            self.unstable = True
        elif code == kernels.EXIT_ABSORBED:
            self.absorbed_count += 1
        return code, done

    def settle(self, controller: ctrl.Controller) -> bool:
        return settle_anticheat(self, controller)

    # -- target management ---------------------------------------------------

    def advance_target(self, offset) -> None:
        """Place the next target relative to the root's current position.

        The countdown restarts; controller and body state are untouched.
        """
        self.target = np.array([
            self.pos[0, 0] + offset[0],
            self.pos[0, 1] + offset[1],
            0.0,
        ])
        self.target_index += 1
        self.steps_in_timer = 0
        kernels.compute_sensors(self.pos, self.quat, self.touch, self.jp, self.jc,
                                self.jax, self.target, self.forward, self.sensors)
        self.start_distances.append(float(self.sensors[-1]))

    # -- trajectory export ----------------------------------------------------

    def trajectory_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["step", "t", "x", "y", "z", "distance", "target_index"])
        for row in self.trajectory:
            writer.writerow([row[0], f"{row[0] * params.DT:.2f}",
                             repr(row[1]), repr(row[2]), repr(row[3]),
                             repr(row[4]), row[5]])
        return buf.getvalue()

    def save_trajectory(self, path) -> None:
        Path(path).write_text(self.trajectory_csv(), encoding="utf-8")


def create_world(organism: Organism, first_target, timer: float) -> World:
    """Spawn the organism above the ground aimed at its first target.

    Raises SpawnOverlap when non-adjacent blocks interpenetrate at rest.
    """
    if timer <= 0:
        raise ValueError("timer must be positive")
    return World(organism, first_target, timer)


def settle_anticheat(world: World, controller: ctrl.Controller) -> bool:
    """Run the pre-evaluation settle: gravity drop with motors off, then
    motor on/off cycles so organisms relying on startup transients or
    falling over read as such.  Records nothing; the world's origin and
    the first target's start distance are re-measured afterwards.

    Returns False when the world went unstable while settling.
    """
    for motors_on, seconds in params.SETTLE_SCHEDULE:
        steps = int(round(seconds / params.DT))
        code, _ = world.run_with_controller(
            controller, steps, motors_on=motors_on,
            check_absorb=False, record=False,
        )
        if code == kernels.EXIT_UNSTABLE:
            return False
    world.settled = True
    world.steps_in_timer = 0
    world.origin = world.pos[0].copy()
    world.start_distances[0] = float(world.sensors[-1])
    return True


def step_world(world: World, commands) -> tuple[ctrl.SensorFrame, list]:
    return world.step(commands)
