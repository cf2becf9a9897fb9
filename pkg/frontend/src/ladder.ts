/**
 * Client-side mirror of the server's stage difficulty ladder, used to
 * pre-fill the launcher form before anything is POSTed. The server
 * applies the same ladder when deriving a stage, so the preview and the
 * created config agree; the authoritative copy lives in the backend.
 */
import { StageConfig } from "./api.js";

export interface RungParams {
  uniform: boolean;
  noise_p: number;
  variant: string;
  directions: number;
  timer: number;
  evals_per_individual: number;
}

export const LADDER: readonly RungParams[] = [
  { uniform: false, noise_p: 0.001, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: false, noise_p: 0.05, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: false, noise_p: 0.5, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: true, noise_p: 0.0, variant: "B", directions: 4, timer: 60.0, evals_per_individual: 4 },
  { uniform: true, noise_p: 0.0, variant: "C", directions: 4, timer: 60.0, evals_per_individual: 6 },
];

const RUNG_KEYS = ["uniform", "noise_p", "variant", "directions", "timer", "evals_per_individual"] as const;

export function ladderRung(cfg: StageConfig): number | null {
  for (let i = 0; i < LADDER.length; i++) {
    const rung = LADDER[i] as unknown as Record<string, unknown>;
    if (RUNG_KEYS.every((k) => cfg[k] === rung[k])) return i;
  }
  return null;
}

/** Fields the launcher form exposes; everything else is server business. */
export interface LauncherFields {
  repeats: number;
  generations: number;
  population_size: number;
  seq_len: number;
  uniform: boolean;
  noise_p: number;
  variant: string;
  directions: number;
  timer: number;
  evals_per_individual: number;
}

export interface LauncherDefaults {
  fields: LauncherFields;
  rung: number | null;
  nextRung: number | null;
  offLadder: boolean;
}

/**
 * Defaults for a stage derived from `cfg`: one rung harder when the
 * config sits on the ladder, unchanged (operator's problem) when it
 * does not. The last rung repeats itself.
 */
export function launcherDefaults(cfg: StageConfig): LauncherDefaults {
  const rung = ladderRung(cfg);
  const base: LauncherFields = {
    repeats: cfg.repeats,
    generations: cfg.generations,
    population_size: cfg.population_size,
    seq_len: cfg.seq_len,
    uniform: cfg.uniform,
    noise_p: cfg.noise_p,
    variant: cfg.variant,
    directions: cfg.directions,
    timer: cfg.timer,
    evals_per_individual: cfg.evals_per_individual,
  };
  if (rung === null) {
    return { fields: base, rung, nextRung: null, offLadder: true };
  }
  const nextRung = Math.min(rung + 1, LADDER.length - 1);
  return {
    fields: { ...base, ...LADDER[nextRung] },
    rung,
    nextRung,
    offLadder: false,
  };
}

/** Form fields -> POST /stages overrides payload. */
export function fieldsToOverrides(fields: LauncherFields): Record<string, unknown> {
  return { ...fields };
}
