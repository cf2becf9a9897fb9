/**
 * Organism inspector: competence maps (plain and conditional, side by
 * side), foraging profile bars, and trajectory playback. Map and profile
 * artifacts are computed server-side on first request, so each panel has
 * a pending state that polls until the artifacts exist.
 */
import { MapResult, OrganismView, ProfileData } from "../api.js";
import { esc, shortId } from "../format.js";

export function renderOrganismHeader(view: OrganismView): string {
  const validity = view.valid
    ? `<span class="ok">valid</span>`
    : `<span class="failed">invalid: ${esc(view.reasons.join(", "))}</span>`;
  return `
    <header class="organism-header">
      <h2><code>${esc(shortId(view.organism_id, 16))}</code></h2>
      <p>${view.blocks} blocks, ${view.joints} joints, ${view.neurons} neurons. ${validity}</p>
    </header>`;
}

export function renderMapPanel(title: string, result: MapResult | null, pngUrl: string): string {
  if (result === null) {
    return `<figure class="map-panel"><figcaption>${esc(title)}</figcaption>
      <div class="pending">loading</div></figure>`;
  }
  if (result.status === "pending") {
    return `<figure class="map-panel" data-job="${esc(result.job_id)}">
      <figcaption>${esc(title)}</figcaption>
      <div class="pending">computing map (job ${esc(result.job_id)})</div></figure>`;
  }
  return `<figure class="map-panel">
      <figcaption>${esc(title)} (res ${result.resolution}, vmax ${result.vmax.toPrecision(3)})</figcaption>
      <img src="${esc(pngUrl)}" alt="${esc(title)}" width="300" height="300">
    </figure>`;
}

/**
 * Success-rate bars as inline SVG. One bar per target index; the ratio
 * row underneath shows how much of the previous rate survives each step.
 */
export function renderProfileChart(profile: ProfileData): string {
  const n = profile.success_rate.length;
  if (n === 0) return `<div class="empty-state"><p>empty profile</p></div>`;
  const barW = 34;
  const gap = 10;
  const h = 120;
  const width = n * (barW + gap) + gap;
  const bars = profile.success_rate
    .map((rate, i) => {
      const bh = Math.round(rate * (h - 20));
      const x = gap + i * (barW + gap);
      return (
        `<rect x="${x}" y="${h - bh}" width="${barW}" height="${bh}" fill="#4f8bc9"></rect>` +
        `<text x="${x + barW / 2}" y="${h + 14}" text-anchor="middle" font-size="11">${i + 1}</text>` +
        `<text x="${x + barW / 2}" y="${h - bh - 4}" text-anchor="middle" font-size="10">${rate.toFixed(2)}</text>`
      );
    })
    .join("");
  const ratios = profile.consecutive_ratios.map((r) => r.toFixed(2)).join(", ");
  return `
    <div class="profile-chart">
      <svg viewBox="0 0 ${width} ${h + 20}" width="${width}" height="${h + 20}"
           role="img" aria-label="success rate by target index">${bars}</svg>
      <p class="muted">consecutive ratios: ${esc(ratios || "-")}
         (${profile.trials} trials, ${profile.k} targets)</p>
    </div>`;
}

export function renderPlaybackShell(frameCount: number): string {
  return `
    <div class="playback">
      <canvas id="traj-canvas" width="520" height="420"></canvas>
      <div class="playback-controls">
        <button id="traj-play">play</button>
        <input id="traj-scrub" type="range" min="0" max="${Math.max(0, frameCount - 1)}" value="0">
        <span id="traj-time" class="muted">0.00 s</span>
      </div>
    </div>`;
}
