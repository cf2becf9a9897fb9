/**
 * Stage browser: every stage in the store with repeat progress, plus a
 * per-stage repeat table sortable by best fitness. All state comes from
 * GET endpoints; a reload rebuilds the identical view.
 */
import { ApiUnreachable, CockpitApi, LineageRecord, RepeatRecord, StageSummary } from "../api.js";
import { esc, fmtFitness, noiseLabel, shortId } from "../format.js";

export interface BrowserState {
  stages: StageSummary[];
  lineage: LineageRecord[];
  offline: boolean;
}

export async function loadBrowser(api: CockpitApi): Promise<BrowserState> {
  try {
    const [stages, lineage] = await Promise.all([api.listStages(), api.getLineage()]);
    return { stages, lineage: lineage.records, offline: false };
  } catch (err) {
    if (err instanceof ApiUnreachable) {
      return { stages: [], lineage: [], offline: true };
    }
    throw err;
  }
}

export type RepeatSortKey = "w_bar" | "sources" | "repeat";

/** Stable descending sort; repeats without a result sink to the bottom. */
export function sortRepeats(records: RepeatRecord[], key: RepeatSortKey): RepeatRecord[] {
  if (key === "repeat") return [...records].sort((a, b) => a.repeat - b.repeat);
  const value = (r: RepeatRecord) => (key === "w_bar" ? r.best_w_bar : r.sources_total);
  return [...records].sort((a, b) => {
    const va = value(a);
    const vb = value(b);
    if (va === null && vb === null) return 0;
    if (va === null) return 1;
    if (vb === null) return -1;
    return vb - va;
  });
}

export function renderStageList(state: BrowserState): string {
  if (state.offline) {
    return `<div class="banner banner-error">API unreachable. Is the service running?</div>`;
  }
  if (state.stages.length === 0) {
    return `
      <div class="empty-state">
        <p>No stages yet.</p>
        <p>Create the first one with <code>foragerlab stage init</code>
           or the button above, then run its repeats.</p>
      </div>`;
  }
  const rows = state.stages
    .map((s) => {
      const cfg = s.config;
      const key = s.key_organism_id
        ? `<a href="#/organisms/${esc(s.key_organism_id)}">${esc(shortId(s.key_organism_id))}</a>`
        : `<span class="muted">unmarked</span>`;
      return `
        <tr data-stage="${esc(s.stage_id)}">
          <td><a href="#/stages/${esc(s.stage_id)}">${esc(s.stage_id)}</a></td>
          <td>${s.repeats_done}/${s.repeats_total}${s.repeats_failed ? ` <span class="failed">(${s.repeats_failed} failed)</span>` : ""}</td>
          <td>${esc(noiseLabel(cfg))}</td>
          <td>${esc(cfg.variant)}</td>
          <td>${cfg.generations}</td>
          <td>${cfg.population_size}</td>
          <td>${key}</td>
        </tr>`;
    })
    .join("");
  return `
    <table class="stage-table">
      <thead>
        <tr><th>stage</th><th>repeats</th><th>noise</th><th>variant</th>
            <th>generations</th><th>population</th><th>key organism</th></tr>
      </thead>
      <tbody>${rows}</tbody>
    </table>`;
}

export function renderRepeatTable(records: RepeatRecord[], sortKey: RepeatSortKey = "w_bar"): string {
  if (records.length === 0) {
    return `<div class="empty-state"><p>No repeats finished yet.</p></div>`;
  }
  const rows = sortRepeats(records, sortKey)
    .map((r) => {
      const best = r.best_organism_id
        ? `<a href="#/organisms/${esc(r.best_organism_id)}">${esc(shortId(r.best_organism_id))}</a>`
        : `<span class="muted">-</span>`;
      const status =
        r.status === "failed" ? `<span class="failed">${esc(r.error ?? "failed")}</span>` : esc(r.status);
      return `
        <tr data-repeat="${r.repeat}" data-organism="${esc(r.best_organism_id ?? "")}">
          <td>${r.repeat}</td>
          <td>${status}</td>
          <td>${fmtFitness(r.best_w_bar)}</td>
          <td>${r.sources_total ?? "-"}</td>
          <td>${r.generations_logged}</td>
          <td>${best}</td>
          <td><button class="mark-btn" data-mark="${esc(r.best_organism_id ?? "")}"
                      ${r.best_organism_id ? "" : "disabled"}>mark key</button></td>
        </tr>`;
    })
    .join("");
  return `
    <table class="repeat-table">
      <thead>
        <tr><th data-sort="repeat">#</th><th>status</th><th data-sort="w_bar">best W&#772;</th>
            <th data-sort="sources">sources</th><th>generations</th><th>organism</th><th></th></tr>
      </thead>
      <tbody>${rows}</tbody>
    </table>`;
}

/** Seed chain for a stage, oldest first, ending at the stage itself. */
export function lineageChain(lineage: LineageRecord[], stageId: string): LineageRecord[] {
  const byStage = new Map(lineage.map((r) => [r.stage_id, r]));
  const byKey = new Map(lineage.map((r) => [r.key_organism_id, r]));
  const chain: LineageRecord[] = [];
  let cursor = byStage.get(stageId) ?? null;
  const seen = new Set<string>();
  while (cursor && !seen.has(cursor.stage_id)) {
    seen.add(cursor.stage_id);
    chain.unshift(cursor);
    cursor = cursor.seed ? (byKey.get(cursor.seed) ?? null) : null;
  }
  return chain;
}

export function renderBreadcrumb(lineage: LineageRecord[], stageId: string): string {
  const chain = lineageChain(lineage, stageId);
  if (chain.length === 0) {
    return `<nav class="breadcrumb"><span>${esc(stageId)}</span></nav>`;
  }
  const parts = chain.map(
    (r) =>
      `<a href="#/stages/${esc(r.stage_id)}" title="key ${esc(shortId(r.key_organism_id))}, ` +
      `${r.cumulative_generations} generations total">${esc(r.stage_id)}</a>`,
  );
  if (chain[chain.length - 1].stage_id !== stageId) {
    parts.push(`<span>${esc(stageId)}</span>`);
  }
  return `<nav class="breadcrumb">${parts.join(" &rsaquo; ")}</nav>`;
}
