"""One evaluation episode: settle, then chase a sequence of targets.

Shared by fitness scoring, foraging maps and profiles, and the
trajectory endpoint, so that every consumer sees identical semantics:
settling first, the countdown restarting per target, and (unless told
to stop) the simulation running on to timer expiry after the last
absorption.
"""

from __future__ import annotations

from dataclasses import dataclass

from foragerlab import controller as ctrl
from foragerlab.physics import kernels
from foragerlab.physics.world import create_world

RAN_OUT = kernels.EXIT_RAN_OUT
ABSORBED = kernels.EXIT_ABSORBED
UNSTABLE = kernels.EXIT_UNSTABLE


@dataclass
class EpisodeResult:
    """What one episode produced.

    series holds one distance list per target that appeared, starting at
    the distance when the target was placed and ending at its absorption
    row; an unreached target's list ends where the episode did.
    """
    series: list
    sources_reached: int
    steps: int
    start_position: tuple
    final_position: tuple
    unstable: bool
    world: object
    target_positions: list = None      # world xy per target that appeared
    absorption_rows: list = None       # trajectory row index of each absorption


def run_episode(organism, offsets, timer: float, world_factory=create_world,
                controller=None, record: bool = True,
                stop_after_last: bool = False) -> EpisodeResult:
    """Evaluate one target sequence.

    offsets: (dx, dy) pairs; the first is spawn-relative, each later one
    is measured from the root position at the previous absorption.
    stop_after_last ends the episode at the final absorption instead of
    simulating on to timer expiry (maps and profiles want the former,
    fitness the latter).
    """
    if not offsets:
        raise ValueError("need at least one target offset")
    world = world_factory(organism, (offsets[0][0], offsets[0][1], 0.0), timer)
    c = controller
    if c is None and organism is not None:
        c = ctrl.build(organism)

    if not world.settle(c):
        p = tuple(world.origin)
        return EpisodeResult([], 0, 0, p, p, True, world,
                             target_positions=[], absorption_rows=[])

    steps = 0
    k = 0
    absorbed_last = False
    went_unstable = False
    segment_ends: list[int] = []    # trajectory length at each absorption
    target_positions = [(float(world.target[0]), float(world.target[1]))]

    while world.steps_in_timer < world.timer_steps:
        code, done = world.run_with_controller(
            c, world.timer_steps - world.steps_in_timer,
            motors_on=True, check_absorb=not absorbed_last, record=record,
        )
        steps += done
        if code == UNSTABLE:
            went_unstable = True
            break
        if code == ABSORBED:
            segment_ends.append(len(world.trajectory))
            if k + 1 < len(offsets):
                k += 1
                world.advance_target(offsets[k])
                target_positions.append(
                    (float(world.target[0]), float(world.target[1])))
            else:
                absorbed_last = True
                if stop_after_last:
                    break

    series = []
    if record:
        bounds = [0] + segment_ends
        appeared = world.target_index + 1
        for s in range(appeared):
            begin = bounds[s]
            end = segment_ends[s] if s < len(segment_ends) else len(world.trajectory)
            dists = [world.start_distances[s]]
            dists.extend(row[4] for row in world.trajectory[begin:end])
            series.append(dists)

    p0 = tuple(world.origin)
    if world.trajectory:
        last = world.trajectory[-1]
        pf = (last[1], last[2], last[3])
    else:
        pf = tuple(world.root_position)
    return EpisodeResult(
        series=series,
        sources_reached=len(segment_ends),
        steps=steps,
        start_position=p0,
        final_position=pf,
        unstable=went_unstable,
        world=world,
        target_positions=target_positions,
        absorption_rows=[e - 1 for e in segment_ends],
    )
