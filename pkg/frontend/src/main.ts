/**
 * Browser entry point: a hash router over three pages (stage browser,
 * stage detail, organism inspector). Each navigation refetches from the
 * API, so reloading or sharing a URL reconstructs the same view; nothing
 * is cached client-side.
 */
import { ApiError, ApiUnreachable, CockpitApi, MapResult, StageSummary } from "./api.js";
import { esc, fmtFitness, noiseLabel } from "./format.js";
import { ensureMap, ensureProfile, waitForJob } from "./jobs.js";
import { Playback, drawFrame } from "./playback.js";
import { RepeatSortKey, loadBrowser, renderBreadcrumb, renderRepeatTable, renderStageList } from "./views/browser.js";
import { renderMapPanel, renderOrganismHeader, renderPlaybackShell, renderProfileChart } from "./views/inspector.js";
import { fieldsFromForm, launcherState, renderLauncher, submitLauncher } from "./views/launcher.js";
import { renderShell } from "./views/shell.js";

function apiBase(): string {
  const fromQuery = new URLSearchParams(window.location.search).get("api");
  if (fromQuery) {
    window.localStorage.setItem("cockpit-api", fromQuery);
    return fromQuery;
  }
  return window.localStorage.getItem("cockpit-api") ?? "/api";
}

const api = new CockpitApi(apiBase());
const app = () => document.getElementById("app") as HTMLElement;

function showError(err: unknown): void {
  const msg =
    err instanceof ApiUnreachable
      ? "API unreachable. Is the service running?"
      : err instanceof ApiError
        ? `${err.status}: ${err.message}`
        : String(err);
  app().innerHTML = renderShell("error", `<div class="banner banner-error">${esc(msg)}</div>`);
}

// -- stage browser -------------------------------------------------------------

async function pageBrowser(): Promise<void> {
  const state = await loadBrowser(api);
  const body = `
    <div class="actions"><button id="new-stage">new rung-zero stage</button></div>
    ${renderStageList(state)}`;
  app().innerHTML = renderShell("stage browser", body, state.offline);
  document.getElementById("new-stage")?.addEventListener("click", async () => {
    try {
      const created = await api.createStage(null);
      window.location.hash = `#/stages/${created.stage_id}`;
    } catch (err) {
      showError(err);
    }
  });
}

// -- stage detail ----------------------------------------------------------------

async function pageStage(stageId: string, sortKey: RepeatSortKey = "w_bar"): Promise<void> {
  let stage: StageSummary;
  try {
    stage = await api.getStage(stageId);
  } catch (err) {
    showError(err);
    return;
  }
  const [repeats, lineage] = await Promise.all([api.listRepeats(stageId), api.getLineage()]);
  const cfg = stage.config;
  const warn = stage.warnings.length
    ? `<div class="banner">${esc(stage.warnings.join(" | "))}</div>`
    : "";
  const body = `
    ${renderBreadcrumb(lineage.records, stageId)}
    ${warn}
    <p>
      noise ${esc(noiseLabel(cfg))}, variant ${esc(cfg.variant)},
      ${cfg.generations} generations, population ${cfg.population_size},
      ${cfg.directions} directions, timer ${cfg.timer} s.
      Key organism: <code>${esc(stage.key_organism_id ?? "unmarked")}</code>
    </p>
    <div class="actions">
      <button id="run-stage">run repeats</button>
      <span id="run-progress" class="muted"></span>
    </div>
    <section id="repeats">${renderRepeatTable(repeats, sortKey)}</section>
    <h3>next stage</h3>
    <section id="launcher">${renderLauncher(launcherState(stage))}</section>`;
  app().innerHTML = renderShell(stageId, body);

  document.getElementById("run-stage")?.addEventListener("click", async () => {
    const progress = document.getElementById("run-progress") as HTMLElement;
    try {
      const job = await api.runStage(stageId);
      progress.textContent = "running";
      await waitForJob(api, job.job_id, {
        onProgress: (p) => {
          progress.textContent = `${p.completed}/${p.total} repeats`;
        },
      });
    } catch (err) {
      progress.textContent = String(err);
      return;
    }
    void pageStage(stageId, sortKey);
  });

  const repeatsEl = document.getElementById("repeats") as HTMLElement;
  repeatsEl.addEventListener("click", async (ev) => {
    const target = ev.target as HTMLElement;
    const sort = target.closest("[data-sort]")?.getAttribute("data-sort");
    if (sort) {
      void pageStage(stageId, sort as RepeatSortKey);
      return;
    }
    const mark = target.closest("[data-mark]")?.getAttribute("data-mark");
    if (mark) {
      try {
        await api.markKeyOrganism(stageId, mark);
      } catch (err) {
        showError(err);
        return;
      }
      void pageStage(stageId, sortKey);
    }
  });

  const form = document.querySelector<HTMLFormElement>("#launcher form.launcher");
  form?.addEventListener("submit", async (ev) => {
    ev.preventDefault();
    const errorEl = form.querySelector<HTMLElement>(".launcher-error") as HTMLElement;
    const data: Record<string, string | boolean> = {};
    new FormData(form).forEach((value, name) => {
      data[name] = typeof value === "string" ? value : false;
    });
    data.uniform = form.querySelector<HTMLInputElement>("input[name=uniform]")?.checked ?? false;
    const defaults = launcherState(stage).defaults.fields;
    const parallelism = Number(data.parallelism ?? 1) || 1;
    try {
      const { created } = await submitLauncher(api, stageId, fieldsFromForm(data, defaults), parallelism);
      window.location.hash = `#/stages/${created.stage_id}`;
    } catch (err) {
      errorEl.hidden = false;
      errorEl.textContent = err instanceof ApiError ? err.message : String(err);
    }
  });
}

// -- organism inspector ------------------------------------------------------------

async function pageOrganism(organismId: string): Promise<void> {
  let view;
  try {
    view = await api.getOrganism(organismId);
  } catch (err) {
    showError(err);
    return;
  }
  const condTarget: [number, number] = [10, 0];
  const body = `
    ${renderOrganismHeader(view)}
    <div class="map-row">
      <div id="map-plain">${renderMapPanel("foraging map", null, "")}</div>
      <div id="map-cond">${renderMapPanel("conditional map", null, "")}</div>
    </div>
    <h3>foraging profile</h3>
    <div id="profile"><div class="pending">computing profile</div></div>
    <h3>trajectory</h3>
    <div id="trajectory"><div class="pending">simulating</div></div>`;
  app().innerHTML = renderShell(organismId.slice(0, 16), body);
  if (!view.valid) return;

  const fillMap = async (el: string, title: string, cond: [number, number] | null) => {
    const host = document.getElementById(el) as HTMLElement;
    const opts = { res: 11, cond };
    try {
      const result: MapResult = await ensureMap(api, organismId, opts);
      host.innerHTML = renderMapPanel(title, result, api.mapPngUrl(organismId, opts));
    } catch (err) {
      host.innerHTML = `<div class="banner banner-error">${esc(String(err))}</div>`;
    }
  };
  void fillMap("map-plain", "foraging map", null);
  void fillMap("map-cond", `conditional map (first target ${condTarget.join(",")})`, condTarget);

  void (async () => {
    const host = document.getElementById("profile") as HTMLElement;
    try {
      const profile = await ensureProfile(api, organismId);
      if (profile.status === "done") host.innerHTML = renderProfileChart(profile);
    } catch (err) {
      host.innerHTML = `<div class="banner banner-error">${esc(String(err))}</div>`;
    }
  })();

  void (async () => {
    const host = document.getElementById("trajectory") as HTMLElement;
    let traj;
    try {
      traj = await api.getTrajectory(organismId);
    } catch (err) {
      host.innerHTML = `<div class="banner banner-error">${esc(String(err))}</div>`;
      return;
    }
    host.innerHTML =
      renderPlaybackShell(traj.rows.length) +
      `<p class="muted">${traj.sources_reached} of ${traj.targets.length} targets reached,
        best distance ${fmtFitness(Math.min(...traj.rows.map((r) => r[5])))} m</p>`;
    const canvas = document.getElementById("traj-canvas") as HTMLCanvasElement;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    const pb = new Playback(traj);
    const scrub = document.getElementById("traj-scrub") as HTMLInputElement;
    const time = document.getElementById("traj-time") as HTMLElement;
    const paint = () => {
      drawFrame(ctx, pb, pb.current, canvas.width, canvas.height);
      scrub.value = String(pb.current);
      time.textContent = `${pb.frame(pb.current).t.toFixed(2)} s`;
    };
    paint();
    scrub.addEventListener("input", () => {
      pb.seek(Number(scrub.value));
      paint();
    });
    const playBtn = document.getElementById("traj-play") as HTMLButtonElement;
    let timer: number | undefined;
    playBtn.addEventListener("click", () => {
      if (pb.playing) {
        pb.playing = false;
        playBtn.textContent = "play";
        window.clearInterval(timer);
        return;
      }
      pb.playing = true;
      playBtn.textContent = "pause";
      if (pb.current >= pb.frameCount - 1) pb.seek(0);
      timer = window.setInterval(() => {
        // 4 sim frames per tick keeps playback near real time
        if (!pb.advance(4)) {
          window.clearInterval(timer);
          playBtn.textContent = "play";
        }
        paint();
      }, 80);
    });
  })();
}

// -- router -----------------------------------------------------------------------

async function route(): Promise<void> {
  const hash = window.location.hash.replace(/^#\/?/, "");
  const [head, id] = hash.split("/");
  try {
    if (head === "stages" && id) await pageStage(id);
    else if (head === "organisms" && id) await pageOrganism(id);
    else await pageBrowser();
  } catch (err) {
    showError(err);
  }
}

window.addEventListener("hashchange", () => void route());
void route();
