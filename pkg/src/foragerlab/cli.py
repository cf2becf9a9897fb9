"""Command line entry points.

Thin wrappers: each command parses arguments, calls the same core
operations the HTTP service uses, and prints where the artifacts went.
Nothing here owns logic worth testing beyond argument plumbing.
"""

from __future__ import annotations

import json
from pathlib import Path

import click

from foragerlab import analysis, service, stages
from foragerlab import genome as gen
from foragerlab.store import Store


@click.group()
def main() -> None:
    """Workbench for evolving and inspecting virtual foragers."""


@main.command()
@click.option("--config", "config_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Stage config JSON.")
@click.option("--repeats", type=int, default=None, help="Override repeat count.")
@click.option("--seed", type=int, default=None, help="Override rng base seed.")
@click.option("--out", "out_dir", default="forager-store", show_default=True,
              help="Store directory for logs, genomes and results.")
@click.option("--parallelism", type=int, default=1, show_default=True)
def evolve(config_path, repeats, seed, out_dir, parallelism) -> None:
    """Run every repeat of a stage config and persist the results."""
    cfg = stages.load_config_file(config_path)
    overrides = {}
    if repeats is not None:
        overrides["repeats"] = repeats
    if seed is not None:
        overrides["rng_base_seed"] = seed
    if overrides:
        from dataclasses import replace
        cfg = replace(cfg, **overrides)
    for warning in stages.validate_config(cfg):
        click.echo(f"warning: {warning}", err=True)

    store = Store(out_dir)
    result = stages.run_stage(
        cfg, store, parallelism=parallelism,
        progress=lambda done, total: click.echo(f"repeat {done}/{total} finished",
                                                err=True))
    for rec in result.repeats:
        if rec["status"] == "done":
            click.echo(f"repeat {rec['repeat']}: best {rec['best_organism_id']} "
                       f"w_bar={rec['best_w_bar']:.6g}")
        else:
            click.echo(f"repeat {rec['repeat']}: FAILED {rec['error']}")
    click.echo(f"stage {cfg.stage_id}: {result.completed}/{cfg.repeats} repeats done "
               f"in {store.stage_dir(cfg.stage_id)}")


def _load_organism_file(path: str):
    genome = gen.load_genome(path)
    organism = gen.develop(genome)
    report = gen.validate(organism)
    if not report.valid:
        raise click.ClickException(
            f"organism is invalid: {', '.join(report.reasons)}")
    return genome, organism


@main.command("map")
@click.option("--organism", "organism_path", required=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Genome JSON file.")
@click.option("--res", type=int, default=11, show_default=True,
              help="Grid resolution (11 or 101 for the standard maps).")
@click.option("--cond", default=None,
              help="First-target X,Y for a conditional map.")
@click.option("--timer", type=float, default=30.0, show_default=True)
@click.option("--out", "out_dir", default=".", show_default=True)
def map_cmd(organism_path, res, cond, timer, out_dir) -> None:
    """Compute a foraging map and write PNG + CSV next to each other."""
    genome, organism = _load_organism_file(organism_path)
    organism_id = gen.genome_hash(genome)

    def tick(done, total):
        if done % 25 == 0 or done == total:
            click.echo(f"cells {done}/{total}", err=True)

    if cond:
        try:
            cx, cy = (float(v) for v in cond.split(","))
        except ValueError:
            raise click.ClickException("--cond expects 'x,y'")
        m = analysis.conditional_map(organism, (cx, cy), res, timer=timer,
                                     progress=tick)
    else:
        m = analysis.foraging_map(organism, res, timer=timer, progress=tick)
    paths = analysis.render_map(m, out_dir, organism_id)
    for kind, path in sorted(paths.items()):
        click.echo(f"{kind}: {path}")


@main.command()
@click.option("--organism", "organism_path", required=True,
              type=click.Path(exists=True, dir_okay=False))
@click.option("--trials", type=int, required=True)
@click.option("--seq", type=int, default=10, show_default=True)
@click.option("--timer", type=float, default=60.0, show_default=True)
@click.option("--rng-seed", type=int, default=0, show_default=True)
def profile(organism_path, trials, seq, timer, rng_seed) -> None:
    """Success-rate-by-sequence-depth statistics, printed as JSON."""
    genome, organism = _load_organism_file(organism_path)
    prof = analysis.foraging_profile(organism, trials=trials, k=seq,
                                     timer=timer, rng_seed=rng_seed)
    click.echo(json.dumps({
        "organism_id": gen.genome_hash(genome),
        "trials": prof.trials,
        "seq": prof.k,
        "success_rate": prof.success_rate,
        "consecutive_ratios": prof.consecutive_ratios,
    }, indent=2))


@main.group()
def stage() -> None:
    """Stage bookkeeping on a store directory."""


@stage.command("init")
@click.option("--store", "store_dir", default="forager-store", show_default=True)
@click.option("--repeats", type=int, default=8, show_default=True)
@click.option("--generations", type=int, default=40, show_default=True)
@click.option("--population", type=int, default=200, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True,
              help="rng base seed")
def stage_init(store_dir, repeats, generations, population, seed) -> None:
    """Create the first stage config (random seeds, lowest noise rung)."""
    store = Store(store_dir)
    cfg = stages.initial_stage_config(
        store.next_stage_id(), repeats=repeats, generations=generations,
        population_size=population, rng_base_seed=seed)
    store.save_stage_config(cfg.to_dict())
    click.echo(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))


@stage.command("next")
@click.option("--from", "from_stage", required=True, help="Stage to derive from.")
@click.option("--store", "store_dir", default="forager-store", show_default=True)
@click.option("--noise", type=float, default=None,
              help="Override placement noise fraction.")
@click.option("--uniform", is_flag=True, default=False,
              help="Override to uniform placement.")
@click.option("--variant", type=click.Choice(["A", "B", "C"]), default=None)
@click.option("--repeats", type=int, default=None)
@click.option("--generations", type=int, default=None)
def stage_next(from_stage, store_dir, noise, uniform, variant,
               repeats, generations) -> None:
    """Derive the next stage from a marked key organism."""
    store = Store(store_dir)
    overrides: dict = {}
    if noise is not None:
        overrides["noise_p"] = noise
        overrides["uniform"] = False
    if uniform:
        overrides["uniform"] = True
    if variant is not None:
        overrides["variant"] = variant
    if repeats is not None:
        overrides["repeats"] = repeats
    if generations is not None:
        overrides["generations"] = generations
    try:
        cfg, warnings = stages.derive_next_stage(store, from_stage,
                                                 overrides or None)
    except stages.NoKeyOrganism:
        raise click.ClickException(f"stage {from_stage} has no key organism yet")
    store.save_stage_config(cfg.to_dict())
    for warning in warnings:
        click.echo(f"warning: {warning}", err=True)
    click.echo(json.dumps(cfg.to_dict(), indent=2, sort_keys=True))


@stage.command("run")
@click.option("--stage", "stage_id", required=True)
@click.option("--store", "store_dir", default="forager-store", show_default=True)
@click.option("--parallelism", type=int, default=1, show_default=True)
def stage_run(stage_id, store_dir, parallelism) -> None:
    """Execute a stored stage config (resumes finished repeats)."""
    store = Store(store_dir)
    cfg = stages.config_from_dict(store.load_stage_config(stage_id))
    result = stages.run_stage(
        cfg, store, parallelism=parallelism,
        progress=lambda done, total: click.echo(f"repeat {done}/{total} finished",
                                                err=True))
    click.echo(f"{result.completed}/{cfg.repeats} repeats done")


@stage.command("mark")
@click.option("--stage", "stage_id", required=True)
@click.option("--organism", "organism_id", required=True)
@click.option("--note", default="")
@click.option("--store", "store_dir", default="forager-store", show_default=True)
def stage_mark(stage_id, organism_id, note, store_dir) -> None:
    """Mark a stage's key organism (must be one of its repeat bests)."""
    store = Store(store_dir)
    record = stages.mark_key_organism(store, stage_id, organism_id, note)
    click.echo(json.dumps(record, indent=2, sort_keys=True))


@main.command()
@click.option("--port", type=int, default=8600, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--store", "store_dir", default="forager-store", show_default=True)
def serve(port, host, store_dir) -> None:
    """Serve the HTTP API over a store directory."""
    Store(store_dir)     # materialize the layout before binding the port
    service.serve(store_dir, host=host, port=port)


if __name__ == "__main__":
    main()
