/**
 * In-memory stand-in for the workbench API, faithful to the endpoint
 * contract (paths, status codes, body shapes) but with canned data and
 * jobs that advance one step per progress poll. State survives across
 * client instances, which is what the reload tests lean on.
 */
import http from "node:http";
import { AddressInfo } from "node:net";

export interface FixtureStage {
  stage_id: string;
  config: Record<string, unknown>;
  repeats: Record<string, unknown>[];
  key_organism_id: string | null;
  warnings: string[];
}

interface FixtureJob {
  job_id: string;
  kind: string;
  status: string;
  completed: number;
  total: number;
  detail: string;
  artifacts: Record<string, unknown>;
  onDone?: () => void;
}

export interface FixtureState {
  stages: Map<string, FixtureStage>;
  organisms: Map<string, Record<string, unknown>>;
  lineage: Record<string, unknown>[];
  jobs: Map<string, FixtureJob>;
  mapsDone: Set<string>;
  profilesDone: Set<string>;
  nextStage: number;
  nextJob: number;
}

const RUNGS = [
  { uniform: false, noise_p: 0.001, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: false, noise_p: 0.05, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: false, noise_p: 0.5, variant: "A", directions: 4, timer: 30.0, evals_per_individual: 4 },
  { uniform: true, noise_p: 0.0, variant: "B", directions: 4, timer: 60.0, evals_per_individual: 4 },
  { uniform: true, noise_p: 0.0, variant: "C", directions: 4, timer: 60.0, evals_per_individual: 6 },
];
const RUNG_KEYS = ["uniform", "noise_p", "variant", "directions", "timer", "evals_per_individual"];

function rungOf(cfg: Record<string, unknown>): number | null {
  for (let i = 0; i < RUNGS.length; i++) {
    const rung = RUNGS[i] as Record<string, unknown>;
    if (RUNG_KEYS.every((k) => cfg[k] === rung[k])) return i;
  }
  return null;
}

export function stageConfig(stageId: string, rung: number, overrides: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    stage_id: stageId,
    seed: null,
    repeats: 3,
    generations: 40,
    population_size: 200,
    seq_len: 10,
    elite_count: 8,
    tournament_size: 5,
    rng_base_seed: 1000 + rung,
    ...RUNGS[rung],
    ...overrides,
  };
}

export function organism(id: string, extra: Record<string, unknown> = {}): Record<string, unknown> {
  return {
    organism_id: id,
    genome: { blocks: [], neurons: [], wires: [] },
    blocks: 3,
    neurons: 9,
    joints: 2,
    valid: true,
    reasons: [],
    ...extra,
  };
}

function repeat(stageId: string, k: number, best: string | null, wBar: number | null, sources: number | null): Record<string, unknown> {
  return {
    stage_id: stageId,
    repeat: k,
    status: best ? "done" : "pending",
    best_organism_id: best,
    best_w_bar: wBar,
    sources_total: sources,
    error: null,
    generations_logged: best ? 41 : 0,
  };
}

export function emptyState(): FixtureState {
  return {
    stages: new Map(),
    organisms: new Map(),
    lineage: [],
    jobs: new Map(),
    mapsDone: new Set(),
    profilesDone: new Set(),
    nextStage: 1,
    nextJob: 1,
  };
}

/** Three stages at rungs 0..2; the first has three finished repeats. */
export function seededState(): FixtureState {
  const state = emptyState();
  for (const id of ["org-aaa", "org-bbb", "org-ccc", "org-ddd", "org-eee"]) {
    state.organisms.set(id, organism(id));
  }
  state.stages.set("stage-0001", {
    stage_id: "stage-0001",
    config: stageConfig("stage-0001", 0),
    repeats: [
      repeat("stage-0001", 0, "org-aaa", 2.5, 5),
      repeat("stage-0001", 1, "org-bbb", 3.75, 7),
      repeat("stage-0001", 2, "org-ccc", 1.25, 3),
    ],
    key_organism_id: null,
    warnings: [],
  });
  state.stages.set("stage-0002", {
    stage_id: "stage-0002",
    config: stageConfig("stage-0002", 1),
    repeats: [repeat("stage-0002", 0, "org-ddd", 0.8, 2), repeat("stage-0002", 1, null, null, null)],
    key_organism_id: null,
    warnings: [],
  });
  state.stages.set("stage-0003", {
    stage_id: "stage-0003",
    config: stageConfig("stage-0003", 2),
    repeats: [],
    key_organism_id: null,
    warnings: [],
  });
  state.nextStage = 4;
  return state;
}

function summary(stage: FixtureStage): Record<string, unknown> {
  const done = stage.repeats.filter((r) => r.status === "done").length;
  const failed = stage.repeats.filter((r) => r.status === "failed").length;
  return {
    stage_id: stage.stage_id,
    config: stage.config,
    repeats_total: Number(stage.config.repeats ?? stage.repeats.length),
    repeats_done: done,
    repeats_failed: failed,
    key_organism_id: stage.key_organism_id,
    warnings: stage.warnings,
  };
}

function trajectoryBody(organismId: string): Record<string, unknown> {
  const rows: number[][] = [];
  // straight crawl toward (10, 0): 40 steps, absorbed at row 30
  for (let i = 0; i < 40; i++) {
    const x = i * 0.3;
    const target = i < 30 ? 0 : 1;
    const distance = target === 0 ? Math.abs(10 - x) : Math.hypot(10 - x, 10);
    rows.push([i, i * 0.02, x, 0.0, 0.4, distance, target]);
  }
  return {
    organism_id: organismId,
    timer: 30.0,
    columns: ["step", "t", "x", "y", "z", "distance", "target_index"],
    rows,
    targets: [
      [10, 0],
      [10, 10],
    ],
    absorptions: [{ row: 30, target_index: 0, position: [9.0, 0.0, 0.4] }],
    sources_reached: 1,
    unstable: false,
  };
}

function mapBody(organismId: string, res: number): Record<string, unknown> {
  const grid = (fill: (r: number, c: number) => number) =>
    Array.from({ length: res }, (_, r) => Array.from({ length: res }, (_, c) => fill(r, c)));
  const half = (res - 1) / 2;
  const cell = 20.0 / (res - 1);
  const excluded = grid((r, c) => (Math.hypot((c - half) * cell, (half - r) * cell) < 4.0 ? 1 : 0));
  return {
    status: "done",
    organism_id: organismId,
    resolution: res,
    vmax: 0.5,
    speed: grid(() => 0.25),
    reached: grid(() => 1),
    excluded,
    meta: { cell_size: cell },
    csv: `/fake/${organismId}_map_${res}.csv`,
    png: `/fake/${organismId}_map_${res}.png`,
  };
}

function profileBody(trials: number, seq: number): Record<string, unknown> {
  const rates = Array.from({ length: seq }, (_, i) => Math.max(0, 1 - 0.18 * i));
  const ratios = rates.slice(1).map((r, i) => (rates[i] > 0 ? r / rates[i] : 0));
  return {
    status: "done",
    trials,
    k: seq,
    success_rate: rates,
    consecutive_ratios: ratios,
    deepest: Array.from({ length: trials }, (_, i) => Math.min(seq, (i % 3) + 1)),
  };
}

export interface Fixture {
  baseUrl: string;
  state: FixtureState;
  close(): Promise<void>;
}

export async function startFixture(state: FixtureState = seededState()): Promise<Fixture> {
  const server = http.createServer((req, res) => {
    const chunks: Buffer[] = [];
    req.on("data", (c) => chunks.push(c));
    req.on("end", () => {
      const url = new URL(req.url ?? "/", "http://localhost");
      let payload: Record<string, unknown> = {};
      if (chunks.length) {
        try {
          payload = JSON.parse(Buffer.concat(chunks).toString("utf-8"));
        } catch {
          payload = {};
        }
      }
      const [code, body] = handle(state, req.method ?? "GET", url, payload);
      res.writeHead(code, { "content-type": "application/json" });
      res.end(JSON.stringify(body));
    });
  });
  await new Promise<void>((resolve) => server.listen(0, "127.0.0.1", resolve));
  const port = (server.address() as AddressInfo).port;
  return {
    baseUrl: `http://127.0.0.1:${port}`,
    state,
    close: () =>
      new Promise((resolve, reject) => server.close((err) => (err ? reject(err) : resolve()))),
  };
}

function startJob(state: FixtureState, kind: string, total: number, onDone?: () => void): FixtureJob {
  const job: FixtureJob = {
    job_id: `run-${String(state.nextJob++).padStart(4, "0")}`,
    kind,
    status: "running",
    completed: 0,
    total,
    detail: "",
    artifacts: {},
    onDone,
  };
  state.jobs.set(job.job_id, job);
  return job;
}

function deriveStage(state: FixtureState, from: FixtureStage, overrides: Record<string, unknown>): [number, Record<string, unknown>] {
  if (!from.key_organism_id) {
    return [409, { detail: `stage ${from.stage_id} has no key organism` }];
  }
  const stageId = `stage-${String(state.nextStage++).padStart(4, "0")}`;
  const rung = rungOf(from.config);
  const nextRung = rung === null ? {} : RUNGS[Math.min(rung + 1, RUNGS.length - 1)];
  const config = {
    ...from.config,
    stage_id: stageId,
    seed: from.key_organism_id,
    rng_base_seed: 7000 + state.nextStage,
    ...nextRung,
    ...overrides,
  };
  const stage: FixtureStage = { stage_id: stageId, config, repeats: [], key_organism_id: null, warnings: [] };
  state.stages.set(stageId, stage);
  return [200, { stage_id: stageId, config, warnings: rungOf(config) === null ? ["off ladder"] : [] }];
}

function markKey(state: FixtureState, stage: FixtureStage, organismId: string, note: string): [number, Record<string, unknown>] {
  const bests = new Set(stage.repeats.map((r) => r.best_organism_id));
  if (!bests.has(organismId) || !state.organisms.has(organismId)) {
    return [404, { detail: `${organismId} is not a best organism of ${stage.stage_id}` }];
  }
  const cfg = stage.config;
  let cumulative = Number(cfg.generations);
  const active = lastPerStage(state.lineage);
  if (cfg.seed) {
    const parent = active.find((r) => r.key_organism_id === cfg.seed);
    if (parent) cumulative += Number(parent.cumulative_generations);
  }
  const record: Record<string, unknown> = {
    stage_id: stage.stage_id,
    key_organism_id: organismId,
    note,
    repeats: Number(cfg.repeats),
    noise: cfg.uniform ? "Uniform" : Number(cfg.noise_p),
    variant: cfg.variant,
    cumulative_generations: cumulative,
    seed: cfg.seed ?? null,
    replaces: stage.key_organism_id,
  };
  state.lineage.push(record);
  stage.key_organism_id = organismId;
  return [200, record];
}

function lastPerStage(records: Record<string, unknown>[]): Record<string, unknown>[] {
  const byStage = new Map<string, Record<string, unknown>>();
  for (const r of records) byStage.set(String(r.stage_id), r);
  return [...byStage.keys()].sort().map((k) => byStage.get(k)!);
}

function handle(
  state: FixtureState,
  method: string,
  url: URL,
  payload: Record<string, unknown>,
): [number, unknown] {
  const parts = url.pathname.split("/").filter(Boolean);

  if (method === "GET" && parts.length === 0) {
    return [200, { name: "foragerlab", version: "fixture" }];
  }

  if (parts[0] === "stages") {
    if (method === "GET" && parts.length === 1) {
      return [200, [...state.stages.values()].map(summary)];
    }
    if (method === "POST" && parts.length === 1) {
      const overrides = (payload.overrides as Record<string, unknown>) ?? {};
      const fromId = payload.from as string | undefined;
      if (!fromId) {
        const stageId = `stage-${String(state.nextStage++).padStart(4, "0")}`;
        const config = stageConfig(stageId, 0, overrides);
        state.stages.set(stageId, { stage_id: stageId, config, repeats: [], key_organism_id: null, warnings: [] });
        return [200, { stage_id: stageId, config, warnings: [] }];
      }
      const from = state.stages.get(fromId);
      if (!from) return [404, { detail: `unknown stage ${fromId}` }];
      return deriveStage(state, from, overrides);
    }
    const stage = state.stages.get(parts[1]);
    if (!stage) return [404, { detail: `unknown stage ${parts[1]}` }];
    if (method === "GET" && parts.length === 2) return [200, summary(stage)];
    if (method === "GET" && parts[2] === "repeats") return [200, stage.repeats];
    if (method === "POST" && parts[2] === "run") {
      const total = Number(stage.config.repeats);
      const job = startJob(state, "stage", total, () => {
        stage.repeats = Array.from({ length: total }, (_, k) =>
          repeat(stage.stage_id, k, `org-${stage.stage_id}-${k}`, 1 + k, 2 + k),
        );
        for (const r of stage.repeats) {
          state.organisms.set(String(r.best_organism_id), organism(String(r.best_organism_id)));
        }
      });
      return [202, { job_id: job.job_id, status: "running" }];
    }
    if (method === "POST" && parts[2] === "key-organism") {
      return markKey(state, stage, String(payload.organism_id ?? ""), String(payload.note ?? ""));
    }
  }

  if (parts[0] === "organisms" && parts.length >= 2) {
    const org = state.organisms.get(parts[1]);
    if (!org) return [404, { detail: `unknown organism ${parts[1]}` }];
    if (parts.length === 2) return [200, org];
    if (parts[2] === "trajectory") return [200, trajectoryBody(parts[1])];
    if (parts[2] === "map") {
      const res = Number(url.searchParams.get("res") ?? "11");
      const key = `${parts[1]}:${res}:${url.searchParams.get("cond") ?? ""}`;
      if (state.mapsDone.has(key)) return [200, mapBody(parts[1], res)];
      const job = startJob(state, "map", res * res, () => state.mapsDone.add(key));
      return [202, { status: "pending", job_id: job.job_id }];
    }
    if (parts[2] === "profile") {
      const trials = Number(url.searchParams.get("trials") ?? "20");
      const seq = Number(url.searchParams.get("seq") ?? "10");
      const key = `${parts[1]}:${trials}:${seq}`;
      if (state.profilesDone.has(key)) return [200, profileBody(trials, seq)];
      const job = startJob(state, "profile", trials, () => state.profilesDone.add(key));
      return [202, { status: "pending", job_id: job.job_id }];
    }
  }

  if (method === "GET" && parts[0] === "lineage") {
    return [200, { records: lastPerStage(state.lineage), audit: state.lineage }];
  }

  if (method === "GET" && parts[0] === "runs" && parts[2] === "progress") {
    const job = state.jobs.get(parts[1]);
    if (!job) return [404, { detail: `unknown run ${parts[1]}` }];
    if (job.status === "running" && job.total > 0) {
      // fixed progress per poll keeps tests deterministic and quick
      const step = Math.max(1, Math.ceil(job.total / 4));
      job.completed = Math.min(job.completed + step, job.total);
      if (job.completed >= job.total) {
        job.status = "done";
        job.onDone?.();
      }
    }
    return [
      200,
      {
        job_id: job.job_id,
        kind: job.kind,
        status: job.status,
        completed: job.completed,
        total: job.total,
        detail: job.detail,
        artifacts: job.artifacts,
      },
    ];
  }

  return [404, { detail: `no route for ${method} ${url.pathname}` }];
}
