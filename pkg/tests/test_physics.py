"""Rigid-body dynamics: ballistics, contacts, joints, events, determinism."""

import math

import numpy as np
import pytest

from foragerlab import controller as ctl
from foragerlab import genome as gen
from foragerlab.physics import geometry, kernels, params
from foragerlab.physics.world import SpawnOverlap, AbsorptionEvent, TimerExpired, create_world

DT = params.DT


def _single_block():
    g = gen.Genome(
        blocks=[gen.BlockGene(parent=-1, dims=[0.4, 0.3, 0.2],
                              joint_anchor=[0.5, 0.5], joint_axis=[0, 0, 1],
                              joint_limits=[-1.0, 1.0], max_torque=10.0)],
        neurons=[gen.NeuronGene("Constant", [0.0, 0, 0],
                                [gen.InputGene("const", 0, 0.0)] * 3)],
        wiring=[],
    )
    return gen.develop(g)


def _lowest_vertex(world):
    zmin = math.inf
    for i in range(world.pos.shape[0]):
        rot = geometry.quat_to_mat(world.quat[i])
        verts = geometry.box_vertices(world.pos[i], rot, world.half[i])
        zmin = min(zmin, float(verts[:, 2].min()))
    return zmin


def _energy(world):
    """Kinetic + rotational + gravitational potential, in joules."""
    e = 0.0
    for i in range(world.pos.shape[0]):
        m = world.mass[i]
        v2 = float(world.vel[i] @ world.vel[i])
        rot = geometry.quat_to_mat(world.quat[i])
        wb = rot.T @ world.omg[i]
        inertia = 1.0 / world.inv_ib[i]
        e += 0.5 * m * v2 + 0.5 * float(wb @ (inertia * wb))
        e += m * params.GRAVITY * float(world.pos[i, 2])
    return e


# -- ballistics ------------------------------------------------------------------

def test_free_fall_matches_analytic():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=30.0)
    world.pos[0, 2] += 5.0
    z0 = world.pos[0, 2]
    zeros = np.zeros(0)
    n = 45  # 0.9 s, stays clear of the ground
    for _ in range(n):
        world.step(zeros)
    t = n * DT
    drop = z0 - world.pos[0, 2]
    expect = 0.5 * params.GRAVITY * t * t
    assert abs(drop - expect) / expect < 0.02
    assert world.vel[0, 2] == pytest.approx(-params.GRAVITY * t, rel=1e-9)


def test_free_fall_no_lateral_drift():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=30.0)
    world.pos[0, 2] += 5.0
    x0, y0 = world.pos[0, 0], world.pos[0, 1]
    for _ in range(40):
        world.step(np.zeros(0))
    assert world.pos[0, 0] == x0
    assert world.pos[0, 1] == y0


# -- spawn and resting contact ------------------------------------------------------

def test_spawn_clearance():
    centers, quats = gen.spawn_pose(_single_block())
    zmin = math.inf
    organism = _single_block()
    for i in range(organism.n_blocks):
        rot = geometry.quat_to_mat(quats[i])
        verts = geometry.box_vertices(centers[i], rot, organism.half_extents[i])
        zmin = min(zmin, float(verts[:, 2].min()))
    assert zmin == pytest.approx(params.SPAWN_CLEARANCE, abs=1e-9)


def test_spawn_clearance_valid_organism(valid_organism):
    centers, quats = gen.spawn_pose(valid_organism)
    zmin = math.inf
    for i in range(valid_organism.n_blocks):
        rot = geometry.quat_to_mat(quats[i])
        verts = geometry.box_vertices(centers[i], rot,
                                      valid_organism.half_extents[i])
        zmin = min(zmin, float(verts[:, 2].min()))
    assert zmin == pytest.approx(params.SPAWN_CLEARANCE, abs=1e-9)


def test_resting_penetration_stays_under_a_millimeter():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=30.0)
    for _ in range(150):  # drop 1 cm, then rest for ~3 s
        world.step(np.zeros(0))
        assert _lowest_vertex(world) >= -1e-3


def test_settled_organism_penetration(valid_organism):
    world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    c = ctl.build(valid_organism)
    assert world.settle(c)
    for _ in range(100):
        cmd = ctl.step(c, world.sensor_frame())
        world.step(cmd)
        assert _lowest_vertex(world) >= -1e-3


def test_energy_never_injected_with_motors_off(valid_organism):
    world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    c = ctl.build(valid_organism)
    assert world.settle(c)
    world.run_with_controller(c, 100, motors_on=False, check_absorb=False,
                              record=False)
    e0 = _energy(world)
    scale = max(abs(e0), 1.0)
    for _ in range(3):  # three one-second windows
        before = _energy(world)
        world.run_with_controller(c, 50, motors_on=False, check_absorb=False,
                                  record=False)
        after = _energy(world)
        assert after - before <= 0.01 * scale


# -- determinism ------------------------------------------------------------------------

def test_two_worlds_bit_identical(valid_organism):
    results = []
    for _ in range(2):
        world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
        c = ctl.build(valid_organism)
        assert world.settle(c)
        world.run_with_controller(c, 300, check_absorb=False)
        results.append((world.pos.copy(), world.quat.copy(),
                        world.vel.copy(), world.omg.copy(),
                        list(world.trajectory)))
    a, b = results
    for x, y in zip(a[:4], b[:4]):
        assert (x == y).all()
    assert a[4] == b[4]


def test_span_equivalent_to_manual_stepping(valid_organism):
    wa = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    ca = ctl.build(valid_organism)
    wb = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    cb = ctl.build(valid_organism)
    assert wa.settle(ca) and wb.settle(cb)

    wa.run_with_controller(ca, 120, check_absorb=False)
    for _ in range(120):
        cmd = ctl.step(cb, wb.sensor_frame())
        wb.step(cmd)

    assert (wa.pos == wb.pos).all()
    assert (wa.quat == wb.quat).all()
    assert (wa.vel == wb.vel).all()
    assert (wa.omg == wb.omg).all()
    assert ca.t == cb.t
    assert (ca.state == cb.state).all()


# -- settling ------------------------------------------------------------------------------

def test_settle_schedule_length(valid_organism):
    world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    c = ctl.build(valid_organism)
    assert world.settle(c)
    total = sum(sec for _, sec in params.SETTLE_SCHEDULE)
    assert world.step_index == int(round(total / DT))
    assert world.settled
    assert world.steps_in_timer == 0
    assert world.trajectory == []


def test_settle_remeasures_origin_and_distance(valid_organism):
    world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    c = ctl.build(valid_organism)
    assert world.settle(c)
    assert (world.origin == world.pos[0]).all()
    d = math.dist(world.pos[0], world.target)
    assert world.start_distances[0] == pytest.approx(d, abs=1e-9)


# -- events and targets ---------------------------------------------------------------------

def test_absorption_event_fires_once():
    organism = _single_block()
    world = create_world(organism, (0.1, 0.0), timer=30.0)
    frame, events = world.step(np.zeros(0))
    assert [type(e) for e in events] == [AbsorptionEvent]
    assert world.absorbed_count == 1
    _, events = world.step(np.zeros(0))
    assert events == []


def test_timer_expiry_event():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=0.4)
    assert world.timer_steps == 20
    for k in range(1, 21):
        _, events = world.step(np.zeros(0))
        if k < 20:
            assert events == []
        else:
            assert [type(e) for e in events] == [TimerExpired]


def test_advance_target_restarts_countdown():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=1.0)
    for _ in range(30):
        world.step(np.zeros(0))
    world.advance_target((5.0, 5.0))
    assert world.steps_in_timer == 0
    assert world.target_index == 1
    assert world.target[0] == pytest.approx(world.pos[0, 0] + 5.0)
    assert world.target[1] == pytest.approx(world.pos[0, 1] + 5.0)
    assert world.target[2] == 0.0
    assert len(world.start_distances) == 2
    d = math.dist(world.pos[0], world.target)
    assert world.start_distances[1] == pytest.approx(d, abs=1e-9)


def test_distance_sensor_is_3d_and_angle_signed():
    organism = _single_block()
    world = create_world(organism, (3.0, 0.0), timer=30.0)
    frame = world.sensor_frame()
    z = world.pos[0, 2]
    assert frame.target_distance == pytest.approx(math.hypot(3.0, z), abs=1e-9)
    assert frame.target_angle == pytest.approx(0.0, abs=1e-9)

    left = create_world(organism, (0.0, 3.0), timer=30.0)
    right = create_world(organism, (0.0, -3.0), timer=30.0)
    assert left.sensor_frame().target_angle == pytest.approx(math.pi / 2)
    assert right.sensor_frame().target_angle == pytest.approx(-math.pi / 2)


def test_contact_sensor_reports_touch():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=30.0)
    assert world.sensor_frame().contacts[0] == 0.0  # spawned 1 cm clear
    for _ in range(50):
        world.step(np.zeros(0))
    assert world.sensor_frame().contacts[0] == 1.0


def test_instability_flag_sticks():
    organism = _single_block()
    world = create_world(organism, (10.0, 0.0), timer=30.0)
    world.vel[0, :] = 1e9
    world.step(np.zeros(0))
    assert world.unstable
    p = world.pos.copy()
    world.step(np.zeros(0))  # no further integration
    assert (world.pos == p).all()


def test_timer_validation():
    with pytest.raises(ValueError):
        create_world(_single_block(), (10.0, 0.0), timer=0.0)


def test_spawn_overlap_raises():
    # root with two children on the same anchor: the siblings overlap
    blocks = [gen.BlockGene(parent=-1, dims=[0.4, 0.3, 0.2],
                            joint_anchor=[0.5, 0.5], joint_axis=[0, 0, 1],
                            joint_limits=[-1.0, 1.0], max_torque=10.0)]
    for _ in range(2):
        blocks.append(gen.BlockGene(parent=0, dims=[0.4, 0.3, 0.2],
                                    joint_anchor=[0.5, 0.5],
                                    joint_axis=[0, 0, 1],
                                    joint_limits=[-1.0, 1.0], max_torque=10.0))
    g = gen.Genome(blocks=blocks,
                   neurons=[gen.NeuronGene("Constant", [0.0, 0, 0],
                                           [gen.InputGene("const", 0, 0.0)] * 3)],
                   wiring=[])
    organism = gen.develop(g)
    assert gen.validate(organism).reasons.count("InitialInterpenetration") == 1
    with pytest.raises(SpawnOverlap):
        create_world(organism, (10.0, 0.0), timer=30.0)


# -- hinge joints ------------------------------------------------------------------------------

def _two_block_world(timer=30.0):
    blocks = [gen.BlockGene(parent=-1, dims=[0.4, 0.3, 0.2],
                            joint_anchor=[0.5, 0.5], joint_axis=[0, 0, 1],
                            joint_limits=[-1.0, 1.0], max_torque=50.0),
              gen.BlockGene(parent=0, dims=[0.4, 0.3, 0.2],
                            joint_anchor=[0.5, 0.5], joint_axis=[0, 0, 1],
                            joint_limits=[-1.0, 1.0], max_torque=50.0)]
    neurons = [gen.NeuronGene("Constant", [1.0, 0, 0],
                              [gen.InputGene("const", 0, 0.0)] * 3)]
    g = gen.Genome(blocks=blocks, neurons=neurons,
                   wiring=[gen.ConnectionGene(source=0, target=0)])
    organism = gen.develop(g)
    return create_world(organism, (10.0, 0.0), timer=timer), organism


def test_joint_anchors_stay_coincident():
    world, organism = _two_block_world()
    c = ctl.build(organism)
    world.settle(c)
    world.run_with_controller(c, 100, check_absorb=False)
    rp = geometry.quat_to_mat(world.quat[0])
    rc = geometry.quat_to_mat(world.quat[1])
    ap = world.pos[0] + rp @ organism.joint_anchor_p[0]
    ac = world.pos[1] + rc @ organism.joint_anchor_c[0]
    assert np.linalg.norm(ap - ac) < 2e-3


def test_motor_drives_joint_toward_command():
    # fresh spawn: rest angle 0, constant command +1
    world, organism = _two_block_world()
    c = ctl.build(organism)
    a0 = world.sensor_frame().joint_angles[0]
    assert a0 == pytest.approx(0.0, abs=1e-6)
    world.run_with_controller(c, 25, check_absorb=False)
    a1 = world.sensor_frame().joint_angles[0]
    assert a1 > a0 + 0.05


def test_joint_limits_hold():
    world, organism = _two_block_world()
    c = ctl.build(organism)
    world.settle(c)
    world.run_with_controller(c, 500, check_absorb=False)  # push at the stop
    angle = world.sensor_frame().joint_angles[0]
    assert angle <= organism.joint_hi[0] + 0.02


# -- trajectory export ---------------------------------------------------------------------------

def test_trajectory_csv_round_trip(valid_organism, tmp_path):
    import csv

    world = create_world(valid_organism, (10.0, 0.0), timer=30.0)
    c = ctl.build(valid_organism)
    world.settle(c)
    world.run_with_controller(c, 50, check_absorb=False)
    path = tmp_path / "traj.csv"
    world.save_trajectory(path)

    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    assert rows[0] == ["step", "t", "x", "y", "z", "distance", "target_index"]
    assert len(rows) == 51
    got = [(int(r[0]), float(r[2]), float(r[3]), float(r[4]), float(r[5]), int(r[6]))
           for r in rows[1:]]
    assert got == world.trajectory  # repr floats round-trip exactly
