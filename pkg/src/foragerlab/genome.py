"""Genomes for block-bodied foragers and their development into body plans.

A genome has three gene lists.  Block genes form a tree of rigid boxes:
block 0 is the root and every other block attaches to the +x face of its
parent through a motorised hinge.  Neuron genes describe a recurrent
typed network; wiring genes route neuron outputs to joint motors.

Everything here is deterministic: the same seed produces the same genome,
mutation walks sites in a fixed order, and development is a pure function
of the genome.
"""

from __future__ import annotations

import copy
import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from foragerlab import rng as rngmod
from foragerlab.physics import geometry, params

SCHEMA_VERSION = 1

# The 24 neuron kinds. Order is part of the serialization contract.
KINDS = (
    "Sum", "Product", "Divide", "SumThreshold", "GreaterThan", "SignOf",
    "Min", "Max", "Abs", "If", "Interpolate", "Sin", "Cos", "Atan",
    "Log", "Exp", "Sigmoid", "Integrate", "Differentiate", "Smooth",
    "Memory", "Wave", "Saw", "Constant",
)
KIND_CODES = {name: i for i, name in enumerate(KINDS)}

# Kinds whose output depends on persistent state or elapsed time.
STATEFUL_KINDS = frozenset(
    {"Integrate", "Differentiate", "Smooth", "Memory", "Wave", "Saw"}
)

INPUT_SOURCES = ("sensor", "neuron", "const")

# Legal scalar ranges; mutation jitters with sigma = 10% of the range width.
DIM_RANGE = (0.05, 2.0)
ANCHOR_RANGE = (0.0, 1.0)
LIMIT_RANGE = (-math.pi, math.pi)
TORQUE_RANGE = (1.0, 100.0)
PARAM_RANGE = (-2.0, 2.0)
WEIGHT_RANGE = (-2.0, 2.0)

SITES_PER_BLOCK = 12   # dims 3 + anchor 2 + axis 3 + limits 2 + torque 1 + parent 1
SITES_PER_NEURON = 10  # kind 1 + params 3 + inputs 3 * (ref 1 + weight 1)
SITES_PER_WIRE = 2     # source 1 + target 1

# Validity failure reasons.
ONLY_ONE_BLOCK = "OnlyOneBlock"
MOTORS_DISCONNECTED = "MotorsDisconnected"
SENSORS_DISCONNECTED = "SensorsDisconnected"
INITIAL_INTERPENETRATION = "InitialInterpenetration"
UNSTABLE = "Unstable"


class Degenerate(Exception):
    """Raised when a genome cannot be produced or developed."""


@dataclass(frozen=True)
class GenomeLimits:
    max_blocks: int = 8
    max_neurons: int = 32


@dataclass
class InputGene:
    """One input slot of a neuron: a weighted reference to a signal source.

    src is "sensor", "neuron" or "const".  A const source reads 1.0, so
    its weighted value is simply the weight.
    """
    src: str
    index: int
    weight: float


@dataclass
class NeuronGene:
    kind: str
    params: list[float]       # exactly 3 scalars
    inputs: list[InputGene]   # exactly 3 slots


@dataclass
class BlockGene:
    parent: int               # -1 for the root block
    dims: list[float]         # full extents in meters, each in DIM_RANGE
    joint_anchor: list[float]  # (u, v) on the parent's +x face, in [0, 1]^2
    joint_axis: list[float]   # hinge axis, unit vector in the parent frame
    joint_limits: list[float]  # (lo, hi) radians, lo < hi
    max_torque: float


@dataclass
class ConnectionGene:
    source: int  # neuron index
    target: int  # joint index (joint i attaches block i+1 to its parent)


@dataclass
class Genome:
    blocks: list[BlockGene]
    neurons: list[NeuronGene]
    wiring: list[ConnectionGene]
    schema_version: int = SCHEMA_VERSION

    @property
    def joint_count(self) -> int:
        return max(0, len(self.blocks) - 1)

    @property
    def sensor_count(self) -> int:
        # one contact sensor per block, one angle sensor per joint,
        # plus target angle and target distance on the root
        return len(self.blocks) + self.joint_count + 2


def sites(genome: Genome) -> int:
    """Number of independently mutable sites."""
    return (
        SITES_PER_BLOCK * len(genome.blocks)
        + SITES_PER_NEURON * len(genome.neurons)
        + SITES_PER_WIRE * len(genome.wiring)
    )


# ---------------------------------------------------------------------------
# Structural invariants
# ---------------------------------------------------------------------------

def check_genome(genome: Genome) -> None:
    """Raise ValueError if structural invariants are broken."""
    blocks = genome.blocks
    if not blocks:
        raise ValueError("genome has no blocks")
    if blocks[0].parent != -1:
        raise ValueError("block 0 must be the root (parent -1)")
    for i, b in enumerate(blocks):
        if i > 0 and not (0 <= b.parent < i):
            raise ValueError(f"block {i} parent {b.parent} out of range")
        if len(b.dims) != 3 or len(b.joint_anchor) != 2 or len(b.joint_axis) != 3:
            raise ValueError(f"block {i} has malformed fields")
        for d in b.dims:
            if not (DIM_RANGE[0] <= d <= DIM_RANGE[1]):
                raise ValueError(f"block {i} extent {d} outside {DIM_RANGE}")
        for a in b.joint_anchor:
            if not (0.0 <= a <= 1.0):
                raise ValueError(f"block {i} anchor {a} outside [0, 1]")
        lo, hi = b.joint_limits
        if not (LIMIT_RANGE[0] <= lo < hi <= LIMIT_RANGE[1]):
            raise ValueError(f"block {i} joint limits ({lo}, {hi}) invalid")
        norm = math.sqrt(sum(c * c for c in b.joint_axis))
        if abs(norm - 1.0) > 1e-6:
            raise ValueError(f"block {i} joint axis not unit length")
        if not (TORQUE_RANGE[0] <= b.max_torque <= TORQUE_RANGE[1]):
            raise ValueError(f"block {i} torque {b.max_torque} outside range")
    n_sensors = genome.sensor_count
    n_neurons = len(genome.neurons)
    for i, n in enumerate(genome.neurons):
        if n.kind not in KIND_CODES:
            raise ValueError(f"neuron {i} unknown kind {n.kind!r}")
        if len(n.params) != 3 or len(n.inputs) != 3:
            raise ValueError(f"neuron {i} has malformed fields")
        for inp in n.inputs:
            if inp.src not in INPUT_SOURCES:
                raise ValueError(f"neuron {i} bad input source {inp.src!r}")
            if inp.src == "sensor" and not (0 <= inp.index < n_sensors):
                raise ValueError(f"neuron {i} sensor index {inp.index} unresolvable")
            if inp.src == "neuron" and not (0 <= inp.index < n_neurons):
                raise ValueError(f"neuron {i} neuron index {inp.index} unresolvable")
    n_joints = genome.joint_count
    for i, w in enumerate(genome.wiring):
        if not (0 <= w.source < n_neurons):
            raise ValueError(f"wire {i} source {w.source} unresolvable")
        if not (0 <= w.target < n_joints):
            raise ValueError(f"wire {i} target {w.target} unresolvable")


# ---------------------------------------------------------------------------
# Random construction
# ---------------------------------------------------------------------------

def _random_unit_vector(rng) -> list[float]:
    while True:
        v = [rng.gauss(0.0, 1.0) for _ in range(3)]
        norm = math.sqrt(sum(c * c for c in v))
        if norm > 1e-6:
            return [c / norm for c in v]


def random_genome(rng_seed: int, limits: GenomeLimits = GenomeLimits()) -> Genome:
    """Draw a structurally valid genome.

    Block and neuron counts are drawn so that the mutable site count lands
    in the low hundreds, which keeps the expected number of mutation
    events per offspring at the default 1% rate in single digits.
    """
    rng = rngmod.stream(rng_seed, "genome")
    for _ in range(100):
        n_blocks = rng.randint(2, limits.max_blocks)
        n_neurons = rng.randint(8, limits.max_neurons)
        blocks = []
        for i in range(n_blocks):
            lo = rng.uniform(-math.pi, -0.1)
            hi = rng.uniform(0.1, math.pi)
            blocks.append(BlockGene(
                parent=-1 if i == 0 else rng.randint(0, i - 1),
                dims=[rng.uniform(0.1, 0.8) for _ in range(3)],
                joint_anchor=[rng.random(), rng.random()],
                joint_axis=_random_unit_vector(rng),
                joint_limits=[lo, hi],
                max_torque=rng.uniform(5.0, 50.0),
            ))
        n_sensors = n_blocks + (n_blocks - 1) + 2
        neurons = []
        for _ in range(n_neurons):
            inputs = []
            for _ in range(3):
                roll = rng.random()
                if roll < 0.4:
                    inputs.append(InputGene("sensor", rng.randrange(n_sensors),
                                            rng.uniform(-1.0, 1.0)))
                elif roll < 0.8:
                    inputs.append(InputGene("neuron", rng.randrange(n_neurons),
                                            rng.uniform(-1.0, 1.0)))
                else:
                    inputs.append(InputGene("const", 0, rng.uniform(-1.0, 1.0)))
            neurons.append(NeuronGene(
                kind=KINDS[rng.randrange(len(KINDS))],
                params=[rng.uniform(-1.0, 1.0) for _ in range(3)],
                inputs=inputs,
            ))
        wiring = []
        for j in range(n_blocks - 1):
            if rng.random() < 0.9:
                wiring.append(ConnectionGene(rng.randrange(n_neurons), j))
        genome = Genome(blocks=blocks, neurons=neurons, wiring=wiring)
        try:
            check_genome(genome)
        except ValueError:
            continue
        return genome
    raise Degenerate("could not draw a structurally valid genome")


# ---------------------------------------------------------------------------
# Mutation
# ---------------------------------------------------------------------------

def _jitter(rng, value: float, lo: float, hi: float) -> float:
    sigma = 0.1 * (hi - lo)
    return min(max(value + rng.gauss(0.0, sigma), lo), hi)


def mutate_report(genome: Genome, rng_seed: int, rate: float = 0.01) -> tuple[Genome, int]:
    """Mutate and also report how many sites were hit.

    Each site is visited in a fixed order and resampled independently
    with probability ``rate``.  Scalars get clamped Gaussian jitter with
    sigma at 10% of the legal range; categorical sites are re-drawn
    uniformly from their legal values (possibly landing on the old one).
    """
    g = copy.deepcopy(genome)
    rng = rngmod.stream(rng_seed, "mutate")
    events = 0
    n_neurons = len(g.neurons)
    n_joints = g.joint_count
    n_sensors = g.sensor_count

    for i, b in enumerate(g.blocks):
        for k in range(3):
            if rng.random() < rate:
                events += 1
                b.dims[k] = _jitter(rng, b.dims[k], *DIM_RANGE)
        for k in range(2):
            if rng.random() < rate:
                events += 1
                b.joint_anchor[k] = _jitter(rng, b.joint_anchor[k], *ANCHOR_RANGE)
        axis_hit = False
        for k in range(3):
            if rng.random() < rate:
                events += 1
                axis_hit = True
                b.joint_axis[k] = min(max(b.joint_axis[k] + rng.gauss(0.0, 0.2), -1.0), 1.0)
        if axis_hit:
            norm = math.sqrt(sum(c * c for c in b.joint_axis))
            if norm > 1e-6:
                b.joint_axis = [c / norm for c in b.joint_axis]
            else:
                b.joint_axis = list(genome.blocks[i].joint_axis)
        if rng.random() < rate:
            events += 1
            lo = _jitter(rng, b.joint_limits[0], *LIMIT_RANGE)
            b.joint_limits[0] = min(lo, b.joint_limits[1] - params.JOINT_LIMIT_EPS)
        if rng.random() < rate:
            events += 1
            hi = _jitter(rng, b.joint_limits[1], *LIMIT_RANGE)
            b.joint_limits[1] = max(hi, b.joint_limits[0] + params.JOINT_LIMIT_EPS)
        if rng.random() < rate:
            events += 1
            b.max_torque = _jitter(rng, b.max_torque, *TORQUE_RANGE)
        if rng.random() < rate:
            events += 1
            # the root's parent has a single legal value, so this is a no-op
            if i > 0:
                b.parent = rng.randrange(i)

    for n in g.neurons:
        if rng.random() < rate:
            events += 1
            n.kind = KINDS[rng.randrange(len(KINDS))]
        for k in range(3):
            if rng.random() < rate:
                events += 1
                n.params[k] = _jitter(rng, n.params[k], *PARAM_RANGE)
        for inp in n.inputs:
            if rng.random() < rate:
                events += 1
                src = INPUT_SOURCES[rng.randrange(3)]
                inp.src = src
                if src == "sensor":
                    inp.index = rng.randrange(n_sensors)
                elif src == "neuron":
                    inp.index = rng.randrange(n_neurons)
                else:
                    inp.index = 0
            if rng.random() < rate:
                events += 1
                inp.weight = _jitter(rng, inp.weight, *WEIGHT_RANGE)

    for w in g.wiring:
        if rng.random() < rate:
            events += 1
            w.source = rng.randrange(n_neurons)
        if rng.random() < rate:
            events += 1
            if n_joints > 0:
                w.target = rng.randrange(n_joints)

    check_genome(g)
    return g, events


def mutate(genome: Genome, rng_seed: int, rate: float = 0.01) -> Genome:
    return mutate_report(genome, rng_seed, rate)[0]


# ---------------------------------------------------------------------------
# Recombination
# ---------------------------------------------------------------------------

def recombine(a: Genome, b: Genome, rng_seed: int) -> Genome:
    """Single-point crossover per gene list, followed by reference repair.

    Lists are aligned by index, so the child inherits b's list lengths.
    Block parents orphaned by the cut are reattached to the nearest valid
    ancestor; neuron and wiring references are clamped into range.
    """
    rng = rngmod.stream(rng_seed, "recombine")

    def cross(xs, ys):
        k = rng.randint(0, min(len(xs), len(ys)))
        return copy.deepcopy(xs[:k]) + copy.deepcopy(ys[k:])

    blocks = cross(a.blocks, b.blocks)
    neurons = cross(a.neurons, b.neurons)
    wiring = cross(a.wiring, b.wiring)

    for i, blk in enumerate(blocks):
        if i == 0:
            blk.parent = -1
        elif not (0 <= blk.parent < i):
            blk.parent = min(max(blk.parent, 0), i - 1)

    child = Genome(blocks=blocks, neurons=neurons, wiring=wiring)
    n_sensors = child.sensor_count
    n_neurons = len(neurons)
    n_joints = child.joint_count
    for n in neurons:
        for inp in n.inputs:
            if inp.src == "sensor":
                inp.index = min(max(inp.index, 0), n_sensors - 1)
            elif inp.src == "neuron":
                inp.index = min(max(inp.index, 0), n_neurons - 1)
    if n_joints == 0:
        child.wiring = []
    else:
        for w in child.wiring:
            w.source = min(max(w.source, 0), n_neurons - 1)
            w.target = min(max(w.target, 0), n_joints - 1)
    check_genome(child)
    return child


# ---------------------------------------------------------------------------
# Serialization
# ---------------------------------------------------------------------------

def to_dict(genome: Genome) -> dict:
    return {
        "schema_version": genome.schema_version,
        "blocks": [
            {
                "parent": b.parent,
                "dims": list(b.dims),
                "joint_anchor": list(b.joint_anchor),
                "joint_axis": list(b.joint_axis),
                "joint_limits": list(b.joint_limits),
                "max_torque": b.max_torque,
            }
            for b in genome.blocks
        ],
        "neurons": [
            {
                "kind": n.kind,
                "params": list(n.params),
                "inputs": [
                    {"src": i.src, "index": i.index, "weight": i.weight}
                    for i in n.inputs
                ],
            }
            for n in genome.neurons
        ],
        "wiring": [{"source": w.source, "target": w.target} for w in genome.wiring],
    }


def from_dict(data: dict) -> Genome:
    version = data.get("schema_version")
    if version != SCHEMA_VERSION:
        raise ValueError(f"unsupported genome schema version {version!r}")
    genome = Genome(
        blocks=[
            BlockGene(
                parent=b["parent"],
                dims=list(b["dims"]),
                joint_anchor=list(b["joint_anchor"]),
                joint_axis=list(b["joint_axis"]),
                joint_limits=list(b["joint_limits"]),
                max_torque=b["max_torque"],
            )
            for b in data["blocks"]
        ],
        neurons=[
            NeuronGene(
                kind=n["kind"],
                params=list(n["params"]),
                inputs=[InputGene(i["src"], i["index"], i["weight"]) for i in n["inputs"]],
            )
            for n in data["neurons"]
        ],
        wiring=[ConnectionGene(w["source"], w["target"]) for w in data["wiring"]],
        schema_version=version,
    )
    check_genome(genome)
    return genome


def save_genome(genome: Genome, path: str | Path) -> None:
    Path(path).write_text(json.dumps(to_dict(genome), indent=2) + "\n", encoding="utf-8")


def load_genome(path: str | Path) -> Genome:
    return from_dict(json.loads(Path(path).read_text(encoding="utf-8")))


def genome_hash(genome: Genome) -> str:
    """Content hash; doubles as the organism identifier."""
    canonical = json.dumps(to_dict(genome), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()[:16]


# ---------------------------------------------------------------------------
# Development
# ---------------------------------------------------------------------------

@dataclass
class Organism:
    """Developed body plan: world-frame rest pose plus joint and sensor layout.

    The rest pose is centered on the root block before any spawn shift.
    Sensor order: one contact flag per block, one angle per joint, then
    target angle and target distance measured at the root.
    """
    genome: Genome
    organism_id: str
    n_blocks: int
    half_extents: np.ndarray     # (n, 3)
    masses: np.ndarray           # (n,)
    rest_centers: np.ndarray     # (n, 3)
    rest_quats: np.ndarray       # (n, 4)
    parents: np.ndarray          # (n,) int, -1 for root
    joint_parent: np.ndarray     # (m,) int
    joint_child: np.ndarray      # (m,) int
    joint_anchor_p: np.ndarray   # (m, 3) parent-local
    joint_anchor_c: np.ndarray   # (m, 3) child-local
    joint_axis_local: np.ndarray  # (m, 3) same coords in both frames at rest
    joint_lo: np.ndarray         # (m,)
    joint_hi: np.ndarray         # (m,)
    joint_torque: np.ndarray     # (m,)
    rest_angles: np.ndarray      # (m,) initial hinge angle (0 clamped into limits)
    collide: np.ndarray          # (n, n) uint8, 0 for self and joined pairs
    motor_source: np.ndarray     # (m,) int neuron index or -1

    @property
    def joint_count(self) -> int:
        return len(self.joint_parent)

    @property
    def sensor_count(self) -> int:
        return self.n_blocks + self.joint_count + 2


def develop(genome: Genome) -> Organism:
    """Grow the genome into a rigid-body plan.

    Each child block hangs off its parent's +x face: the gene anchor picks
    a point on that face, the child's -x face center meets it, and the
    hinge rotates the child about the gene axis.  Rest hinge angle is zero
    clamped into the joint limits.
    """
    check_genome(genome)
    blocks = genome.blocks
    n = len(blocks)
    half = np.empty((n, 3))
    masses = np.empty(n)
    centers = np.zeros((n, 3))
    quats = np.zeros((n, 4))
    parents = np.empty(n, dtype=np.int64)

    for i, b in enumerate(blocks):
        for d in b.dims:
            if d <= 0.0:
                raise Degenerate(f"block {i} has non-positive extent")
        half[i] = np.asarray(b.dims, dtype=np.float64) / 2.0
        volume = b.dims[0] * b.dims[1] * b.dims[2]
        masses[i] = params.DENSITY * volume
        parents[i] = b.parent

    quats[0] = (1.0, 0.0, 0.0, 0.0)

    m = n - 1
    j_parent = np.empty(m, dtype=np.int64)
    j_child = np.empty(m, dtype=np.int64)
    anchor_p = np.empty((m, 3))
    anchor_c = np.empty((m, 3))
    axis_local = np.empty((m, 3))
    lo = np.empty(m)
    hi = np.empty(m)
    torque = np.empty(m)
    rest_angles = np.empty(m)

    for i in range(1, n):
        b = blocks[i]
        p = b.parent
        j = i - 1
        rot_p = geometry.quat_to_mat(quats[p])
        u, v = b.joint_anchor
        local_anchor = np.array([
            half[p][0],
            (u - 0.5) * blocks[p].dims[1],
            (v - 0.5) * blocks[p].dims[2],
        ])
        anchor_world = centers[p] + geometry.mat_vec(rot_p, local_anchor)
        axis = np.asarray(b.joint_axis, dtype=np.float64)
        norm = float(np.linalg.norm(axis))
        if norm < 1e-9:
            raise Degenerate(f"block {i} joint axis degenerate")
        axis = axis / norm
        axis_world = geometry.mat_vec(rot_p, axis)

        theta0 = min(max(0.0, b.joint_limits[0]), b.joint_limits[1])
        spin = geometry.quat_from_axis_angle(axis_world, theta0)
        quats[i] = geometry.quat_normalize(geometry.quat_mul(spin, quats[p]))
        rot_c = geometry.quat_to_mat(quats[i])
        centers[i] = anchor_world + geometry.mat_vec(rot_c, np.array([half[i][0], 0.0, 0.0]))

        j_parent[j] = p
        j_child[j] = i
        anchor_p[j] = local_anchor
        # child-local anchor is its -x face center by construction
        anchor_c[j] = (-half[i][0], 0.0, 0.0)
        axis_local[j] = axis
        lo[j] = b.joint_limits[0]
        hi[j] = b.joint_limits[1]
        torque[j] = b.max_torque
        rest_angles[j] = theta0

    collide = np.ones((n, n), dtype=np.uint8)
    np.fill_diagonal(collide, 0)
    for j in range(m):
        collide[j_parent[j], j_child[j]] = 0
        collide[j_child[j], j_parent[j]] = 0

    motor_source = np.full(m, -1, dtype=np.int64)
    for w in genome.wiring:
        motor_source[w.target] = w.source  # later genes override earlier ones

    return Organism(
        genome=genome,
        organism_id=genome_hash(genome),
        n_blocks=n,
        half_extents=half,
        masses=masses,
        rest_centers=centers,
        rest_quats=quats,
        parents=parents,
        joint_parent=j_parent,
        joint_child=j_child,
        joint_anchor_p=anchor_p,
        joint_anchor_c=anchor_c,
        joint_axis_local=axis_local,
        joint_lo=lo,
        joint_hi=hi,
        joint_torque=torque,
        rest_angles=rest_angles,
        collide=collide,
        motor_source=motor_source,
    )


# ---------------------------------------------------------------------------
# Validity
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ValidityReport:
    valid: bool
    reasons: tuple[str, ...] = ()


def _sensor_feeds_motor_path(organism: Organism) -> bool:
    """Does any sensor reach a neuron that (transitively) drives a motor?"""
    neurons = organism.genome.neurons
    sources = {int(s) for s in organism.motor_source if s >= 0}
    if not sources:
        return False
    # Walk input edges backwards from the motor-driving neurons.
    on_path = set()
    stack = list(sources)
    while stack:
        idx = stack.pop()
        if idx in on_path:
            continue
        on_path.add(idx)
        for inp in neurons[idx].inputs:
            if inp.src == "neuron" and inp.index not in on_path:
                stack.append(inp.index)
    return any(
        inp.src == "sensor"
        for idx in on_path
        for inp in neurons[idx].inputs
    )


def spawn_pose(organism: Organism) -> tuple[np.ndarray, np.ndarray]:
    """Rest pose shifted so the lowest vertex clears the ground."""
    centers = organism.rest_centers.copy()
    quats = organism.rest_quats.copy()
    min_z = math.inf
    for i in range(organism.n_blocks):
        rot = geometry.quat_to_mat(quats[i])
        verts = geometry.box_vertices(centers[i], rot, organism.half_extents[i])
        min_z = min(min_z, float(verts[:, 2].min()))
    centers[:, 2] += params.SPAWN_CLEARANCE - min_z
    return centers, quats


def initial_overlaps(organism: Organism, centers=None, quats=None) -> list[tuple[int, int]]:
    """Non-adjacent block pairs that interpenetrate at the given pose."""
    if centers is None or quats is None:
        centers, quats = spawn_pose(organism)
    rots = [geometry.quat_to_mat(quats[i]) for i in range(organism.n_blocks)]
    hits = []
    for i in range(organism.n_blocks):
        for j in range(i + 1, organism.n_blocks):
            if not organism.collide[i, j]:
                continue
            if geometry.obb_overlap(centers[i], rots[i], organism.half_extents[i],
                                    centers[j], rots[j], organism.half_extents[j]):
                hits.append((i, j))
    return hits


def validate(organism: Organism, world_probe=None) -> ValidityReport:
    """Structural and placement checks that gate evaluation.

    ``world_probe`` may supply an alternative spawn pose as a callable
    organism -> (centers, quats); by default the standard spawn is used.
    The Unstable reason is attached later by evaluation when a simulation
    diverges, never here.
    """
    reasons = []
    if organism.n_blocks <= 1:
        reasons.append(ONLY_ONE_BLOCK)
    if organism.joint_count == 0 or all(s < 0 for s in organism.motor_source):
        reasons.append(MOTORS_DISCONNECTED)
    elif not _sensor_feeds_motor_path(organism):
        reasons.append(SENSORS_DISCONNECTED)
    if organism.n_blocks > 1:
        if world_probe is not None:
            centers, quats = world_probe(organism)
        else:
            centers, quats = spawn_pose(organism)
        if initial_overlaps(organism, centers, quats):
            reasons.append(INITIAL_INTERPENETRATION)
    return ValidityReport(valid=not reasons, reasons=tuple(reasons))
