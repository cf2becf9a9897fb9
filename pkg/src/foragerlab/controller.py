"""Recurrent typed neural controllers.

A controller evaluates every node once per step in a fixed order:
topological where the wiring is acyclic, so feed-forward inputs see
fresh values, while feedback edges read the value from the previous
step.  All node outputs and states are kept finite by clamping, and the
motor command for each joint is the wired neuron's output clamped to
[-1, 1].
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from foragerlab.genome import KIND_CODES, KINDS, Organism
from foragerlab.physics.jit import njit

VALUE_CLAMP = 1.0e6

SRC_SENSOR = 0
SRC_NEURON = 1
SRC_CONST = 2
_SRC_CODES = {"sensor": SRC_SENSOR, "neuron": SRC_NEURON, "const": SRC_CONST}


@njit
def _clamp_finite(v):
    if math.isnan(v):
        return 0.0
    if v > VALUE_CLAMP:
        return VALUE_CLAMP
    if v < -VALUE_CLAMP:
        return -VALUE_CLAMP
    return v


@njit
def eval_node(code, x0, x1, x2, p0, p1, p2, state, t, dt):
    """Evaluate one node; returns (value, new_state).

    Inputs arrive already weighted.  Codes follow the order of the kind
    table in the genome module.
    """
    value = 0.0
    new_state = state
    if code == 0:      # Sum
        value = x0 + x1 + x2
    elif code == 1:    # Product
        value = x0 * x1 * x2
    elif code == 2:    # Divide
        value = x0 / x1 if abs(x1) > 1e-6 else 0.0
    elif code == 3:    # SumThreshold
        value = 1.0 if (x0 + x1 + x2) > p0 else 0.0
    elif code == 4:    # GreaterThan
        value = 1.0 if x0 > x1 else 0.0
    elif code == 5:    # SignOf
        if x0 > 0.0:
            value = abs(x1)
        elif x0 < 0.0:
            value = -abs(x1)
        else:
            value = 0.0
    elif code == 6:    # Min
        value = min(x0, min(x1, x2))
    elif code == 7:    # Max
        value = max(x0, max(x1, x2))
    elif code == 8:    # Abs
        value = abs(x0)
    elif code == 9:    # If
        value = x1 if x0 > 0.0 else x2
    elif code == 10:   # Interpolate
        w = x2
        if w < 0.0:
            w = 0.0
        elif w > 1.0:
            w = 1.0
        value = x0 + w * (x1 - x0)
    elif code == 11:   # Sin
        value = math.sin(x0)
    elif code == 12:   # Cos
        value = math.cos(x0)
    elif code == 13:   # Atan
        value = math.atan(x0)
    elif code == 14:   # Log
        value = math.log(abs(x0) + 1e-9)
    elif code == 15:   # Exp
        e = x0
        if e > 30.0:
            e = 30.0
        elif e < -30.0:
            e = -30.0
        value = math.exp(e)
    elif code == 16:   # Sigmoid
        e = x0
        if e > 30.0:
            e = 30.0
        elif e < -30.0:
            e = -30.0
        value = 1.0 / (1.0 + math.exp(-e))
    elif code == 17:   # Integrate
        new_state = state + x0 * dt
        value = new_state
    elif code == 18:   # Differentiate
        value = (x0 - state) / dt
        new_state = x0
    elif code == 19:   # Smooth
        new_state = state + p0 * (x0 - state)
        value = new_state
    elif code == 20:   # Memory
        value = state
        if x1 > 0.0:
            new_state = x0
    elif code == 21:   # Wave
        value = math.sin(2.0 * math.pi * p0 * t + p1)
    elif code == 22:   # Saw
        u = p0 * t + p1
        value = (u - math.floor(u)) * 2.0 - 1.0
    else:              # Constant
        value = p0
    return _clamp_finite(value), _clamp_finite(new_state)


@njit
def controller_tick(order, codes, pars, in_src, in_idx, in_w,
                    state, values, sensors, t, dt):
    """Advance every node once, in evaluation order, in place."""
    x = np.empty(3)
    for oi in range(order.shape[0]):
        i = order[oi]
        for s in range(3):
            src = in_src[i, s]
            if src == 0:
                raw = sensors[in_idx[i, s]]
            elif src == 1:
                raw = values[in_idx[i, s]]
            else:
                raw = 1.0
            x[s] = _clamp_finite(in_w[i, s] * raw)
        v, ns = eval_node(codes[i], x[0], x[1], x[2],
                          pars[i, 0], pars[i, 1], pars[i, 2],
                          state[i], t, dt)
        values[i] = v
        state[i] = ns


@njit
def motor_commands(values, motor_source, out):
    for j in range(motor_source.shape[0]):
        s = motor_source[j]
        if s < 0:
            out[j] = 0.0
        else:
            v = values[s]
            if v > 1.0:
                v = 1.0
            elif v < -1.0:
                v = -1.0
            out[j] = v
    return out


@dataclass
class SensorFrame:
    """Snapshot of what the organism senses at one step."""
    contacts: np.ndarray       # (n_blocks,) 1.0 while touching anything
    joint_angles: np.ndarray   # (n_joints,) radians
    target_angle: float        # signed, about vertical, from the root's forward
    target_distance: float     # root center to target

    def flat(self) -> np.ndarray:
        out = np.empty(len(self.contacts) + len(self.joint_angles) + 2)
        k = len(self.contacts)
        out[:k] = self.contacts
        out[k:k + len(self.joint_angles)] = self.joint_angles
        out[-2] = self.target_angle
        out[-1] = self.target_distance
        return out


@dataclass
class Controller:
    order: np.ndarray        # evaluation order over node indices
    codes: np.ndarray        # (k,) kind codes
    params: np.ndarray       # (k, 3)
    in_src: np.ndarray       # (k, 3) source codes
    in_idx: np.ndarray       # (k, 3)
    in_w: np.ndarray         # (k, 3)
    motor_source: np.ndarray  # (m,)
    n_sensors: int
    state: np.ndarray = field(default=None)
    values: np.ndarray = field(default=None)
    t: float = 0.0

    def __post_init__(self):
        k = len(self.codes)
        if self.state is None:
            self.state = np.zeros(k)
        if self.values is None:
            self.values = np.zeros(k)


def _evaluation_order(genome) -> np.ndarray:
    """Topological order over neuron -> neuron edges; cycles fall back to
    genome order and their back edges read previous-step values."""
    k = len(genome.neurons)
    indegree = [0] * k
    dependents: list[list[int]] = [[] for _ in range(k)]
    for i, node in enumerate(genome.neurons):
        for inp in node.inputs:
            if inp.src == "neuron" and inp.index != i:
                indegree[i] += 1
                dependents[inp.index].append(i)
    order = []
    placed = [False] * k
    ready = [i for i in range(k) if indegree[i] == 0]
    while ready:
        nxt = []
        for i in ready:
            if placed[i]:
                continue
            placed[i] = True
            order.append(i)
            for d in dependents[i]:
                indegree[d] -= 1
                if indegree[d] == 0:
                    nxt.append(d)
        ready = sorted(nxt)
    for i in range(k):
        if not placed[i]:
            order.append(i)
    return np.asarray(order, dtype=np.int64)


def build(organism: Organism) -> Controller:
    genome = organism.genome
    k = len(genome.neurons)
    codes = np.empty(k, dtype=np.int64)
    pars = np.zeros((k, 3))
    in_src = np.zeros((k, 3), dtype=np.int64)
    in_idx = np.zeros((k, 3), dtype=np.int64)
    in_w = np.zeros((k, 3))
    for i, node in enumerate(genome.neurons):
        codes[i] = KIND_CODES[node.kind]
        pars[i, :] = node.params
        for s, inp in enumerate(node.inputs):
            in_src[i, s] = _SRC_CODES[inp.src]
            in_idx[i, s] = inp.index
            in_w[i, s] = inp.weight
    return Controller(
        order=_evaluation_order(genome),
        codes=codes,
        params=pars,
        in_src=in_src,
        in_idx=in_idx,
        in_w=in_w,
        motor_source=organism.motor_source.copy(),
        n_sensors=organism.sensor_count,
    )


def step(controller: Controller, frame: SensorFrame, dt: float = 0.02) -> np.ndarray:
    """One control step: returns desired-velocity commands in [-1, 1] per joint."""
    sensors = frame.flat()
    controller_tick(controller.order, controller.codes, controller.params,
                    controller.in_src, controller.in_idx, controller.in_w,
                    controller.state, controller.values, sensors,
                    controller.t, dt)
    controller.t += dt
    out = np.empty(len(controller.motor_source))
    return motor_commands(controller.values, controller.motor_source, out)


def reset(controller: Controller) -> None:
    """Return to the initial condition: zero state, zero outputs, t = 0."""
    controller.state[:] = 0.0
    controller.values[:] = 0.0
    controller.t = 0.0


def eval_kind(kind: str | int, inputs, params, state: float, t: float,
              dt: float = 0.02) -> tuple[float, float]:
    """Public scalar view of the node table, mainly for tests and tools.

    ``inputs`` are up to three already-weighted values; missing slots
    read as 0.
    """
    code = KIND_CODES[kind] if isinstance(kind, str) else int(kind)
    x = [0.0, 0.0, 0.0]
    for i, v in enumerate(inputs[:3]):
        x[i] = float(v)
    p = [0.0, 0.0, 0.0]
    for i, v in enumerate(params[:3]):
        p[i] = float(v)
    return eval_node(code, x[0], x[1], x[2], p[0], p[1], p[2],
                     float(state), float(t), float(dt))
