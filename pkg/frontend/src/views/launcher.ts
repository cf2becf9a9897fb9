/**
 * Stage launcher: derive the next stage from a marked stage, tweak the
 * pre-filled parameters, create it and start its repeats. Disabled until
 * the source stage has a key organism, because the derived stage needs a
 * seed genome.
 */
import { CockpitApi, JobStarted, StageCreated, StageSummary } from "../api.js";
import { esc, shortId } from "../format.js";
import { LauncherDefaults, LauncherFields, fieldsToOverrides, launcherDefaults } from "../ladder.js";

export interface LauncherState {
  fromStage: StageSummary;
  enabled: boolean;
  hint: string;
  defaults: LauncherDefaults;
}

export function launcherState(fromStage: StageSummary): LauncherState {
  const defaults = launcherDefaults(fromStage.config);
  if (!fromStage.key_organism_id) {
    return {
      fromStage,
      enabled: false,
      hint: "Mark a key organism in the repeat table first; the next stage is seeded from it.",
      defaults,
    };
  }
  const hint = defaults.offLadder
    ? "Config is off the standard ladder; parameters carry over unchanged."
    : `Pre-filled one rung up the noise ladder (rung ${defaults.rung} to ${defaults.nextRung}).`;
  return { fromStage, enabled: true, hint, defaults };
}

function numberField(name: string, label: string, value: number, step = "any"): string {
  return `
    <label class="field">
      <span>${esc(label)}</span>
      <input name="${esc(name)}" type="number" step="${esc(step)}" value="${value}">
    </label>`;
}

export function renderLauncher(state: LauncherState): string {
  const f = state.defaults.fields;
  const seed = state.fromStage.key_organism_id;
  if (!state.enabled) {
    return `
      <div class="launcher launcher-disabled">
        <button disabled>launch next stage</button>
        <p class="hint">${esc(state.hint)}</p>
      </div>`;
  }
  return `
    <form class="launcher" data-from="${esc(state.fromStage.stage_id)}">
      <p class="hint">${esc(state.hint)} Seed: <code>${esc(shortId(seed ?? ""))}</code></p>
      <div class="field-grid">
        ${numberField("repeats", "repeats", f.repeats, "1")}
        ${numberField("generations", "generations", f.generations, "1")}
        ${numberField("population_size", "population", f.population_size, "1")}
        ${numberField("seq_len", "targets per episode", f.seq_len, "1")}
        ${numberField("noise_p", "noise p", f.noise_p)}
        ${numberField("directions", "directions", f.directions, "1")}
        ${numberField("timer", "timer (s)", f.timer)}
        ${numberField("evals_per_individual", "evals per individual", f.evals_per_individual, "1")}
        <label class="field">
          <span>uniform placement</span>
          <input name="uniform" type="checkbox" ${f.uniform ? "checked" : ""}>
        </label>
        <label class="field">
          <span>fitness variant</span>
          <select name="variant">
            ${["A", "B", "C"].map((v) => `<option value="${v}" ${v === f.variant ? "selected" : ""}>${v}</option>`).join("")}
          </select>
        </label>
        ${numberField("parallelism", "parallelism", 1, "1")}
      </div>
      <button type="submit">derive and run</button>
      <p class="launcher-error failed" hidden></p>
    </form>`;
}

/** Read the form back into typed fields. */
export function fieldsFromForm(data: Record<string, string | boolean>, base: LauncherFields): LauncherFields {
  const num = (name: keyof LauncherFields) => {
    const raw = data[name];
    const v = typeof raw === "string" ? Number(raw) : NaN;
    return Number.isFinite(v) ? v : (base[name] as number);
  };
  return {
    repeats: num("repeats"),
    generations: num("generations"),
    population_size: num("population_size"),
    seq_len: num("seq_len"),
    noise_p: num("noise_p"),
    directions: num("directions"),
    timer: num("timer"),
    evals_per_individual: num("evals_per_individual"),
    uniform: data.uniform === true || data.uniform === "on" || data.uniform === "true",
    variant: typeof data.variant === "string" ? data.variant : base.variant,
  };
}

export interface LaunchResult {
  created: StageCreated;
  job: JobStarted;
}

/** POST /stages then POST /stages/{id}/run; both results go to the caller. */
export async function submitLauncher(
  api: CockpitApi,
  fromStageId: string,
  fields: LauncherFields,
  parallelism = 1,
): Promise<LaunchResult> {
  const created = await api.createStage(fromStageId, fieldsToOverrides(fields));
  const job = await api.runStage(created.stage_id, parallelism);
  return { created, job };
}
