"""Generation loop: evaluate everyone, keep 20%, refill by clone or cross.

Selection runs three methods in a fixed order (elite, roulette,
tournament).  An individual picked by one method is off the table for
the later ones, but a single method may pick the same individual more
than once.  Survivors enter the next generation unchanged and are
re-scored there, because each generation draws a fresh target plan and
rankings move with it.
"""

from __future__ import annotations

import copy
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

from foragerlab import fitness as fit
from foragerlab import rng as rngmod
from foragerlab import task
from foragerlab.genome import (
    Genome,
    GenomeLimits,
    genome_hash,
    mutate,
    random_genome,
    recombine,
)
from foragerlab.physics.world import create_world

DEFAULT_POPULATION = 200
SURVIVAL_FRACTION = 0.20
CLONE_PROBABILITY = 0.30
MUTATION_RATE = 0.01


class DegeneratePool(Exception):
    """A selection method has nobody left to pick from."""


@dataclass(frozen=True)
class SelectionConfig:
    elite_count: int = 8
    roulette_count: int = 16
    tournament_count: int = 16
    tournament_size: int = 5

    @property
    def survivor_count(self) -> int:
        return self.elite_count + self.roulette_count + self.tournament_count

    @staticmethod
    def for_population(n: int, elite_count: int = 8,
                       tournament_size: int = 5) -> "SelectionConfig":
        """Split ceil(20% of n): elites first, remainder halved between
        roulette and tournament (roulette gets the odd one)."""
        survivors = math.ceil(n * SURVIVAL_FRACTION)
        elite = min(elite_count, survivors)
        rest = survivors - elite
        return SelectionConfig(
            elite_count=elite,
            roulette_count=(rest + 1) // 2,
            tournament_count=rest // 2,
            tournament_size=tournament_size,
        )


@dataclass
class Member:
    genome: Genome
    breakdown: fit.FitnessBreakdown | None = None

    @property
    def evaluated(self) -> bool:
        return self.breakdown is not None

    @property
    def w_bar(self) -> float:
        if self.breakdown is None:
            raise ValueError("member not evaluated")
        return self.breakdown.w_bar


@dataclass
class Population:
    members: list[Member]
    generation: int = 0

    @property
    def size(self) -> int:
        return len(self.members)


def initial_population(n: int, run_seed: int,
                       seed_genome: Genome | None = None,
                       limits: GenomeLimits = GenomeLimits()) -> Population:
    """Fresh population: exact clones of a seed genome, or random draws."""
    if seed_genome is not None:
        members = [Member(copy.deepcopy(seed_genome)) for _ in range(n)]
    else:
        members = [
            Member(random_genome(rngmod.derive_seed(run_seed, "init", i), limits))
            for i in range(n)
        ]
    return Population(members=members, generation=0)


@dataclass
class SelectionResult:
    genomes: list[Genome]                  # ordered: elite, roulette, tournament
    elite_indices: list[int]               # population slots, unique
    roulette_indices: list[int]            # may repeat within the list
    tournament_indices: list[int]          # may repeat within the list


def _ranked_indices(pop: Population) -> list[int]:
    keyed = [
        (-pop.members[i].w_bar, genome_hash(pop.members[i].genome), i)
        for i in range(pop.size)
    ]
    keyed.sort()
    return [i for (_, _, i) in keyed]


def select_survivors(pop: Population, cfg: SelectionConfig, rng) -> SelectionResult:
    """Pick the survivor multiset.  Requires a fully evaluated population."""
    for m in pop.members:
        if not m.evaluated:
            raise ValueError("select_survivors needs an evaluated population")

    ranked = _ranked_indices(pop)
    elites = ranked[:cfg.elite_count]
    taken = set(elites)

    pool = [i for i in range(pop.size) if i not in taken]
    roulette: list[int] = []
    if cfg.roulette_count > 0:
        if not pool:
            raise DegeneratePool("roulette pool empty")
        weights = [pop.members[i].w_bar for i in pool]
        total = sum(weights)
        if total <= 0.0:
            weights = [1.0] * len(pool)
            total = float(len(pool))
        for _ in range(cfg.roulette_count):
            r = rng.random() * total
            acc = 0.0
            pick = pool[-1]
            for i, w in zip(pool, weights):
                acc += w
                if r < acc:
                    pick = i
                    break
            roulette.append(pick)
    taken.update(roulette)

    pool = [i for i in range(pop.size) if i not in taken]
    tournament: list[int] = []
    if cfg.tournament_count > 0:
        if not pool:
            raise DegeneratePool("tournament pool empty")
        for _ in range(cfg.tournament_count):
            best = None
            best_key = None
            for _ in range(cfg.tournament_size):
                i = pool[rng.randrange(len(pool))]
                key = (-pop.members[i].w_bar, genome_hash(pop.members[i].genome))
                if best is None or key < best_key:
                    best, best_key = i, key
            tournament.append(best)

    order = elites + roulette + tournament
    return SelectionResult(
        genomes=[copy.deepcopy(pop.members[i].genome) for i in order],
        elite_indices=list(elites),
        roulette_indices=roulette,
        tournament_indices=tournament,
    )


def reproduce(survivors: list[Genome], n: int, rng,
              report: list | None = None) -> list[Member]:
    """Survivors pass through untouched; vacant slots get mutated
    clones (p = 0.3) or mutated recombinations of two distinct parents.

    report, when given, collects "clone"/"recombine" per offspring.
    """
    if not survivors:
        raise ValueError("reproduce needs at least one survivor")
    members = [Member(copy.deepcopy(g)) for g in survivors]
    for _ in range(n - len(survivors)):
        cloned = rng.random() < CLONE_PROBABILITY or len(survivors) == 1
        if cloned:
            child = copy.deepcopy(survivors[rng.randrange(len(survivors))])
        else:
            a = rng.randrange(len(survivors))
            b = rng.randrange(len(survivors) - 1)
            if b >= a:
                b += 1
            child = recombine(survivors[a], survivors[b], rng.getrandbits(63))
        child = mutate(child, rng.getrandbits(63), MUTATION_RATE)
        members.append(Member(child))
        if report is not None:
            report.append("clone" if cloned else "recombine")
    return members


def evaluate_population(pop: Population, plan, evaluator) -> None:
    for m in pop.members:
        if m.breakdown is None:
            m.breakdown = evaluator(m.genome, plan)


def generation_record(pop: Population, plan) -> dict:
    best = min(range(pop.size),
               key=lambda i: (-pop.members[i].w_bar,
                              genome_hash(pop.members[i].genome)))
    mean = sum(m.w_bar for m in pop.members) / pop.size
    return {
        "generation": pop.generation,
        "best_w_bar": pop.members[best].w_bar,
        "mean_w_bar": mean,
        "best_organism_id": genome_hash(pop.members[best].genome),
        "plan_digest": plan.digest,
    }


def run_generation(pop: Population, plan, cfg: SelectionConfig, rng,
                   evaluator) -> tuple[Population, dict]:
    """Evaluate what needs evaluating, log, then select and refill."""
    evaluate_population(pop, plan, evaluator)
    record = generation_record(pop, plan)
    picks = select_survivors(pop, cfg, rng)
    members = reproduce(picks.genomes, pop.size, rng)
    return Population(members=members, generation=pop.generation + 1), record


@dataclass(frozen=True)
class RunConfig:
    generations: int
    population_size: int = DEFAULT_POPULATION
    plan_spec: task.PlanSpec = field(default_factory=task.PlanSpec)
    seed_genome: Genome | None = None
    rng_seed: int = 0
    elite_count: int = 8
    tournament_size: int = 5
    limits: GenomeLimits = field(default_factory=GenomeLimits)


@dataclass
class RunResult:
    population: Population        # final generation, evaluated
    log: list[dict]
    best_genome: Genome
    best_breakdown: fit.FitnessBreakdown
    best_organism_id: str


def make_evaluator(world_factory=create_world):
    def evaluator(genome, plan):
        return fit.evaluate_genome(genome, plan, world_factory=world_factory)
    return evaluator


def run_evolution(config: RunConfig, world_factory=create_world,
                  evaluator=None, log_path=None, progress=None) -> RunResult:
    """Run G selection rounds (G+1 evaluation phases including the
    initial population).  Deterministic in config alone; the log and the
    best genome serialize byte-identically across re-runs.
    """
    if evaluator is None:
        evaluator = make_evaluator(world_factory)
    cfg = SelectionConfig.for_population(
        config.population_size, config.elite_count, config.tournament_size)

    log: list[dict] = []
    sink = None
    if log_path is not None:
        Path(log_path).parent.mkdir(parents=True, exist_ok=True)
        sink = open(log_path, "w", encoding="utf-8")

    def emit(record):
        log.append(record)
        if sink is not None:
            sink.write(json.dumps(record, sort_keys=True) + "\n")
            sink.flush()
        if progress is not None:
            progress(record["generation"], config.generations, record)

    try:
        pop = initial_population(config.population_size, config.rng_seed,
                                 config.seed_genome, config.limits)
        for g in range(config.generations + 1):
            plan = task.make_plan(config.plan_spec,
                                  rngmod.derive_seed(config.rng_seed, "plan", g))
            if g < config.generations:
                rng = rngmod.stream(config.rng_seed, "gen", g)
                pop, record = run_generation(pop, plan, cfg, rng, evaluator)
            else:
                evaluate_population(pop, plan, evaluator)
                record = generation_record(pop, plan)
            emit(record)
    finally:
        if sink is not None:
            sink.close()

    best_i = min(range(pop.size),
                 key=lambda i: (-pop.members[i].w_bar,
                                genome_hash(pop.members[i].genome)))
    best = pop.members[best_i]
    return RunResult(
        population=pop,
        log=log,
        best_genome=best.genome,
        best_breakdown=best.breakdown,
        best_organism_id=genome_hash(best.genome),
    )
