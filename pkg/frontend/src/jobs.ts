import { ApiUnreachable, CockpitApi, JobProgress, MapOptions, MapResult, ProfileOptions, ProfileResult } from "./api.js";

export interface PollOptions {
  intervalMs?: number;
  timeoutMs?: number;
  onProgress?: (progress: JobProgress) => void;
}

export class JobFailed extends Error {
  constructor(readonly progress: JobProgress) {
    super(progress.detail || `job ${progress.job_id} failed`);
    this.name = "JobFailed";
  }
}

/**
 * Poll /runs/{id}/progress until the job leaves the running state.
 * Resolves with the final progress record, rejects with JobFailed on a
 * failed job and with Error("job poll timeout") when the deadline hits.
 * A transient connection drop is tolerated; polling just tries again.
 */
export function waitForJob(api: CockpitApi, jobId: string, opts: PollOptions = {}): Promise<JobProgress> {
  const intervalMs = opts.intervalMs ?? 750;
  const timeoutMs = opts.timeoutMs ?? 10 * 60 * 1000;
  const deadline = Date.now() + timeoutMs;

  return new Promise((resolve, reject) => {
    let inFlight = false;
    const timer = setInterval(async () => {
      if (inFlight) return;
      inFlight = true;
      try {
        const progress = await api.runProgress(jobId);
        opts.onProgress?.(progress);
        if (progress.status === "done") {
          clearInterval(timer);
          resolve(progress);
        } else if (progress.status === "failed") {
          clearInterval(timer);
          reject(new JobFailed(progress));
        } else if (Date.now() > deadline) {
          clearInterval(timer);
          reject(new Error("job poll timeout"));
        }
      } catch (err) {
        if (err instanceof ApiUnreachable && Date.now() <= deadline) {
          // keep polling, the service may come back
        } else {
          clearInterval(timer);
          reject(err instanceof Error ? err : new Error(String(err)));
        }
      } finally {
        inFlight = false;
      }
    }, intervalMs);
  });
}

/** Fetch a map, waiting out the 202 compute phase if needed. */
export async function ensureMap(
  api: CockpitApi,
  organismId: string,
  opts: MapOptions = {},
  poll: PollOptions = {},
): Promise<MapResult> {
  const first = await api.getMap(organismId, opts);
  if (first.status === "done") return first;
  await waitForJob(api, first.job_id, poll);
  return api.getMap(organismId, opts);
}

/** Fetch a foraging profile, waiting out the 202 compute phase if needed. */
export async function ensureProfile(
  api: CockpitApi,
  organismId: string,
  opts: ProfileOptions = {},
  poll: PollOptions = {},
): Promise<ProfileResult> {
  const first = await api.getProfile(organismId, opts);
  if (first.status === "done") return first;
  await waitForJob(api, first.job_id, poll);
  return api.getProfile(organismId, opts);
}
