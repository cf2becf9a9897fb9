/**
 * Typed client for the foragerlab HTTP API.
 *
 * Every response is validated with zod before it reaches a view, so a
 * backend drift shows up as a loud parse error instead of NaN in a table.
 * HTTP failures become ApiError (status + detail extracted from the
 * body), connection failures become ApiUnreachable so the shell can show
 * a banner instead of a stack trace.
 */
import { z } from "zod";

export const StageConfigSchema = z
  .object({
    stage_id: z.string(),
    seed: z.string().nullable().optional(),
    repeats: z.number(),
    generations: z.number(),
    population_size: z.number(),
    uniform: z.boolean(),
    noise_p: z.number(),
    variant: z.string(),
    directions: z.number(),
    timer: z.number(),
    evals_per_individual: z.number(),
    seq_len: z.number(),
    rng_base_seed: z.number(),
  })
  .loose();
export type StageConfig = z.infer<typeof StageConfigSchema>;

export const StageSummarySchema = z.object({
  stage_id: z.string(),
  config: StageConfigSchema,
  repeats_total: z.number(),
  repeats_done: z.number(),
  repeats_failed: z.number(),
  key_organism_id: z.string().nullable(),
  warnings: z.array(z.string()),
});
export type StageSummary = z.infer<typeof StageSummarySchema>;

export const RepeatRecordSchema = z.object({
  stage_id: z.string(),
  repeat: z.number(),
  status: z.string(),
  best_organism_id: z.string().nullable(),
  best_w_bar: z.number().nullable(),
  sources_total: z.number().nullable(),
  error: z.string().nullable(),
  generations_logged: z.number(),
});
export type RepeatRecord = z.infer<typeof RepeatRecordSchema>;

export const OrganismViewSchema = z.object({
  organism_id: z.string(),
  genome: z.record(z.string(), z.unknown()),
  blocks: z.number(),
  neurons: z.number(),
  joints: z.number(),
  valid: z.boolean(),
  reasons: z.array(z.string()),
});
export type OrganismView = z.infer<typeof OrganismViewSchema>;

export const StageCreatedSchema = z.object({
  stage_id: z.string(),
  config: StageConfigSchema,
  warnings: z.array(z.string()),
});
export type StageCreated = z.infer<typeof StageCreatedSchema>;

export const JobStartedSchema = z.object({
  job_id: z.string(),
  status: z.string(),
});
export type JobStarted = z.infer<typeof JobStartedSchema>;

export const JobProgressSchema = z.object({
  job_id: z.string(),
  kind: z.string(),
  status: z.string(),
  completed: z.number(),
  total: z.number(),
  detail: z.string(),
  artifacts: z.record(z.string(), z.unknown()),
});
export type JobProgress = z.infer<typeof JobProgressSchema>;

/** noise is the per-axis fraction, or the string "Uniform" above the ladder. */
export const LineageRecordSchema = z
  .object({
    stage_id: z.string(),
    key_organism_id: z.string(),
    note: z.string(),
    repeats: z.number(),
    noise: z.union([z.number(), z.string()]),
    variant: z.string(),
    cumulative_generations: z.number(),
    seed: z.string().nullable(),
    replaces: z.string().nullable(),
  })
  .loose();
export type LineageRecord = z.infer<typeof LineageRecordSchema>;

export const LineageViewSchema = z.object({
  records: z.array(LineageRecordSchema),
  audit: z.array(LineageRecordSchema),
});
export type LineageView = z.infer<typeof LineageViewSchema>;

export const TrajectoryViewSchema = z.object({
  organism_id: z.string(),
  timer: z.number(),
  columns: z.array(z.string()),
  rows: z.array(z.array(z.number())),
  targets: z.array(z.array(z.number())),
  absorptions: z.array(
    z.object({
      row: z.number(),
      target_index: z.number(),
      position: z.array(z.number()),
    }),
  ),
  sources_reached: z.number(),
  unstable: z.boolean(),
});
export type TrajectoryView = z.infer<typeof TrajectoryViewSchema>;

const PendingSchema = z.object({
  status: z.literal("pending"),
  job_id: z.string(),
});

export const MapDataSchema = z.object({
  status: z.literal("done"),
  organism_id: z.string(),
  resolution: z.number(),
  vmax: z.number(),
  speed: z.array(z.array(z.number())),
  reached: z.array(z.array(z.number())),
  excluded: z.array(z.array(z.number())),
  meta: z.record(z.string(), z.unknown()),
  csv: z.string(),
  png: z.string(),
});
export type MapData = z.infer<typeof MapDataSchema>;
export type MapResult = MapData | z.infer<typeof PendingSchema>;

export const ProfileDataSchema = z
  .object({
    status: z.literal("done"),
    trials: z.number(),
    k: z.number(),
    success_rate: z.array(z.number()),
    consecutive_ratios: z.array(z.number()),
    deepest: z.array(z.number()),
  })
  .loose();
export type ProfileData = z.infer<typeof ProfileDataSchema>;
export type ProfileResult = ProfileData | z.infer<typeof PendingSchema>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
    this.name = "ApiError";
  }
}

export class ApiUnreachable extends Error {
  constructor(baseUrl: string) {
    super(`API not reachable at ${baseUrl}`);
    this.name = "ApiUnreachable";
  }
}

/** Pull a human-readable message out of a FastAPI error body. */
function extractDetail(body: unknown, fallback: string): string {
  if (body && typeof body === "object" && "detail" in body) {
    const detail = (body as { detail: unknown }).detail;
    if (typeof detail === "string") return detail;
    if (Array.isArray(detail)) {
      return detail
        .map((d) => (d && typeof d === "object" && "msg" in d ? String(d.msg) : JSON.stringify(d)))
        .join("; ");
    }
  }
  return fallback;
}

export interface MapOptions {
  res?: number;
  cond?: [number, number] | null;
  timer?: number;
}

export interface ProfileOptions {
  trials?: number;
  seq?: number;
  timer?: number;
}

export interface TrajectoryOptions {
  targets?: [number, number][];
  timer?: number;
}

export class CockpitApi {
  constructor(
    readonly baseUrl: string,
    private readonly timeoutMs = 15000,
  ) {}

  private async request(path: string, init?: RequestInit): Promise<unknown> {
    const controller = new AbortController();
    const timer = setTimeout(() => controller.abort(), this.timeoutMs);
    let response: Response;
    try {
      response = await fetch(this.baseUrl + path, {
        ...init,
        signal: controller.signal,
      });
    } catch {
      throw new ApiUnreachable(this.baseUrl);
    } finally {
      clearTimeout(timer);
    }
    let body: unknown = null;
    const text = await response.text();
    if (text) {
      try {
        body = JSON.parse(text);
      } catch {
        body = text;
      }
    }
    if (!response.ok && response.status !== 202) {
      throw new ApiError(response.status, extractDetail(body, `HTTP ${response.status} on ${path}`));
    }
    return body;
  }

  private post(path: string, payload: unknown): Promise<unknown> {
    return this.request(path, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(payload),
    });
  }

  async ping(): Promise<{ name: string; version: string }> {
    const body = await this.request("/");
    return z.object({ name: z.string(), version: z.string() }).loose().parse(body);
  }

  async listStages(): Promise<StageSummary[]> {
    return z.array(StageSummarySchema).parse(await this.request("/stages"));
  }

  async getStage(stageId: string): Promise<StageSummary> {
    return StageSummarySchema.parse(await this.request(`/stages/${stageId}`));
  }

  async listRepeats(stageId: string): Promise<RepeatRecord[]> {
    return z.array(RepeatRecordSchema).parse(await this.request(`/stages/${stageId}/repeats`));
  }

  /** POST /stages; omit `from` for a fresh rung-zero stage. */
  async createStage(from: string | null, overrides: Record<string, unknown> = {}): Promise<StageCreated> {
    const payload: Record<string, unknown> = { overrides };
    if (from !== null) payload.from = from;
    return StageCreatedSchema.parse(await this.post("/stages", payload));
  }

  async runStage(stageId: string, parallelism = 1): Promise<JobStarted> {
    return JobStartedSchema.parse(await this.post(`/stages/${stageId}/run`, { parallelism }));
  }

  async markKeyOrganism(stageId: string, organismId: string, note = ""): Promise<LineageRecord> {
    return LineageRecordSchema.parse(
      await this.post(`/stages/${stageId}/key-organism`, {
        organism_id: organismId,
        note,
      }),
    );
  }

  async getOrganism(organismId: string): Promise<OrganismView> {
    return OrganismViewSchema.parse(await this.request(`/organisms/${organismId}`));
  }

  async getLineage(): Promise<LineageView> {
    return LineageViewSchema.parse(await this.request("/lineage"));
  }

  async runProgress(jobId: string): Promise<JobProgress> {
    return JobProgressSchema.parse(await this.request(`/runs/${jobId}/progress`));
  }

  mapQuery(opts: MapOptions): string {
    const params = new URLSearchParams();
    if (opts.res !== undefined) params.set("res", String(opts.res));
    if (opts.cond) params.set("cond", `${opts.cond[0]},${opts.cond[1]}`);
    if (opts.timer !== undefined) params.set("timer", String(opts.timer));
    const qs = params.toString();
    return qs ? `?${qs}` : "";
  }

  /** 200 -> parsed grid, 202 -> pending job to poll. */
  async getMap(organismId: string, opts: MapOptions = {}): Promise<MapResult> {
    const body = await this.request(`/organisms/${organismId}/map${this.mapQuery(opts)}`);
    return z.union([MapDataSchema, PendingSchema]).parse(body);
  }

  /** URL for an <img> tag; only valid once the map artifacts exist. */
  mapPngUrl(organismId: string, opts: MapOptions = {}): string {
    const qs = this.mapQuery({ ...opts });
    const sep = qs ? "&" : "?";
    return `${this.baseUrl}/organisms/${organismId}/map${qs}${sep}format=png`;
  }

  async getProfile(organismId: string, opts: ProfileOptions = {}): Promise<ProfileResult> {
    const params = new URLSearchParams();
    if (opts.trials !== undefined) params.set("trials", String(opts.trials));
    if (opts.seq !== undefined) params.set("seq", String(opts.seq));
    if (opts.timer !== undefined) params.set("timer", String(opts.timer));
    const qs = params.toString();
    const body = await this.request(`/organisms/${organismId}/profile${qs ? `?${qs}` : ""}`);
    return z.union([ProfileDataSchema, PendingSchema]).parse(body);
  }

  async getTrajectory(organismId: string, opts: TrajectoryOptions = {}): Promise<TrajectoryView> {
    const params = new URLSearchParams();
    if (opts.targets) params.set("targets", opts.targets.map(([x, y]) => `${x},${y}`).join(";"));
    if (opts.timer !== undefined) params.set("timer", String(opts.timer));
    const qs = params.toString();
    const body = await this.request(`/organisms/${organismId}/trajectory${qs ? `?${qs}` : ""}`);
    return TrajectoryViewSchema.parse(body);
  }
}
