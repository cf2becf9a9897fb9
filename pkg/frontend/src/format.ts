export function esc(value: unknown): string {
  return String(value)
    .replaceAll("&", "&amp;")
    .replaceAll("<", "&lt;")
    .replaceAll(">", "&gt;")
    .replaceAll('"', "&quot;");
}

export function fmtFitness(w: number | null): string {
  if (w === null) return "-";
  if (w === 0) return "0";
  const abs = Math.abs(w);
  if (abs >= 1e5 || abs < 1e-3) return w.toExponential(3);
  return w.toPrecision(5);
}

/** Noise column label: the uniform regime hides noise_p entirely. */
export function noiseLabel(cfg: { uniform: boolean; noise_p: number }): string {
  return cfg.uniform ? "Uniform" : `p=${cfg.noise_p}`;
}

export function shortId(id: string, n = 12): string {
  return id.length <= n ? id : id.slice(0, n);
}
